"""
Osservabili calcolate dagli snapshot: burden globali e regionali di Aβ e tau,
indice di malattia A per vertice, regione e cervello intero.
Le parcelle hanno tutte lo stesso volume, quindi le medie sono aritmetiche.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from .aggregation import N_COMPARTMENTS
from .connectome_io import RegionTable
from .engine import SimState
from .errors import ConfigError
from .neuron_health import malfunction_mean

# una serie "ha un picco" se il valore finale scende sotto questa frazione del massimo
PEAK_DROP = 0.9

ABETA_COLUMNS = tuple(f"u{i}" for i in range(1, N_COMPARTMENTS + 1))
TAU_COLUMNS = tuple(f"tau{i}" for i in range(1, N_COMPARTMENTS + 1))


def global_burden(field: np.ndarray) -> np.ndarray:
    return np.asarray(field, dtype=float).mean(axis=0)


def _regional_mean(values: np.ndarray, table: RegionTable) -> np.ndarray:
    sizes = table.sizes
    if np.any(sizes == 0):
        empty = table.names[int(np.flatnonzero(sizes == 0)[0])]
        raise ConfigError(f"region {empty!r} has no vertices")
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        return np.bincount(table.index, weights=values, minlength=table.num_regions) / sizes
    sums = np.zeros((table.num_regions, values.shape[1]))
    np.add.at(sums, table.index, values)
    return sums / sizes[:, None]


def regional_burden(field: np.ndarray, table: RegionTable) -> np.ndarray:
    """Medie per regione, forma (l, 5)."""
    return _regional_mean(field, table)


def disease_indices(
    f: np.ndarray, table: RegionTable
) -> tuple[np.ndarray, np.ndarray, float]:
    per_vertex = malfunction_mean(f)
    return per_vertex, _regional_mean(per_vertex, table), float(per_vertex.mean())


@dataclass(frozen=True, eq=False)
class TimeSeriesRecord:
    times: np.ndarray
    abeta: np.ndarray  # (T, 5)
    tau: np.ndarray  # (T, 5)
    disease: np.ndarray  # (T,)
    region_names: tuple[str, ...]
    abeta_regional: np.ndarray  # (T, l, 5)
    tau_regional: np.ndarray  # (T, l, 5)
    disease_regional: np.ndarray  # (T, l)

    def __post_init__(self) -> None:
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("time stamps must be strictly increasing")

    def region_index(self, name: str) -> int:
        return self.region_names.index(name)


def build_record(snapshots: Sequence[SimState], table: RegionTable) -> TimeSeriesRecord:
    times, ab, ta, dis, ab_r, ta_r, dis_r = ([] for _ in range(7))
    for snap in snapshots:
        times.append(snap.t)
        ab.append(global_burden(snap.u))
        ta.append(global_burden(snap.tau))
        _, region_a, global_a = disease_indices(snap.f, table)
        dis.append(global_a)
        ab_r.append(regional_burden(snap.u, table))
        ta_r.append(regional_burden(snap.tau, table))
        dis_r.append(region_a)
    return TimeSeriesRecord(
        times=np.array(times),
        abeta=np.array(ab),
        tau=np.array(ta),
        disease=np.array(dis),
        region_names=table.names,
        abeta_regional=np.array(ab_r),
        tau_regional=np.array(ta_r),
        disease_regional=np.array(dis_r),
    )


def to_frame(record: TimeSeriesRecord) -> pd.DataFrame:
    """time, u1..u5, tau1..tau5, A, poi blocchi `<regione>/<grandezza>`."""
    columns: dict[str, np.ndarray] = {"time": record.times}
    for i, name in enumerate(ABETA_COLUMNS):
        columns[name] = record.abeta[:, i]
    for i, name in enumerate(TAU_COLUMNS):
        columns[name] = record.tau[:, i]
    columns["A"] = record.disease
    for j, region in enumerate(record.region_names):
        for i, name in enumerate(ABETA_COLUMNS):
            columns[f"{region}/{name}"] = record.abeta_regional[:, j, i]
        for i, name in enumerate(TAU_COLUMNS):
            columns[f"{region}/{name}"] = record.tau_regional[:, j, i]
        columns[f"{region}/A"] = record.disease_regional[:, j]
    return pd.DataFrame(columns)


def to_csv_text(record: TimeSeriesRecord) -> str:
    buf = io.StringIO()
    to_frame(record).to_csv(buf, index=False, float_format="%.17g", lineterminator="\n")
    return buf.getvalue()


def has_interior_peak(times: np.ndarray, series: np.ndarray, drop: float = PEAK_DROP) -> bool:
    """Massimo strettamente interno a (0, t_end) e valore finale <= drop * massimo."""
    k = int(np.argmax(series))
    peak = float(series[k])
    return 0 < k < len(times) - 1 and peak > 0 and float(series[-1]) <= drop * peak


def peak_time(times: np.ndarray, series: np.ndarray) -> float:
    return float(times[int(np.argmax(series))])


def seed_regions(names: Sequence[str], seed_labels: Sequence[str] = ("entorhinal",)) -> list[int]:
    needles = [s.lower() for s in seed_labels]
    return [j for j, n in enumerate(names) if any(s in n.lower() for s in needles)]


def rank_regions(record: TimeSeriesRecord) -> list[tuple[str, float]]:
    """Regioni per danno finale A_R decrescente (a parita', per nome)."""
    final = record.disease_regional[-1]
    pairs = [(name, float(final[j])) for j, name in enumerate(record.region_names)]
    return sorted(pairs, key=lambda p: (-p[1], p[0]))

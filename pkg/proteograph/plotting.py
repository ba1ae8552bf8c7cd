"""
Figure SVG delle osservabili. Si usa solo l'API a oggetti di matplotlib
(nessuno stato globale di pyplot), quindi le funzioni sono sicure nei worker.
"""

from __future__ import annotations

import io
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

from matplotlib import rcParams  # noqa: E402
from matplotlib.axes import Axes  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from .observables import TimeSeriesRecord, seed_regions  # noqa: E402

# id deterministici negli SVG e testo come <text>: file piccoli e riproducibili
rcParams["svg.hashsalt"] = "proteograph"
rcParams["svg.fonttype"] = "none"
rcParams["path.simplify"] = True

COMPARTMENT_NAMES = ("monomers", "dimers", "short oligomers", "long oligomers")
# oltre questo numero di regioni la legenda non entra nel pannello
LEGEND_MAX_REGIONS = 12


def render_svg(fig: Figure) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def _finish(ax: Axes, title: str, log_y: bool) -> None:
    ax.set_title(title, fontsize=9)
    ax.set_xlabel("t")
    ax.grid(True, alpha=0.3)
    if log_y:
        ax.set_yscale("log", nonpositive="mask")


def global_figure(record: TimeSeriesRecord, *, log_y: bool = False, title: str = "") -> Figure:
    """Righe Aβ / tau; colonne monomeri, oligomeri, placche o grovigli."""
    fig = Figure(figsize=(12, 6.5), layout="constrained")
    axes = fig.subplots(2, 3)
    t = record.times
    for row, (name, data, top) in enumerate(
        (("Aβ", record.abeta, "plaques"), ("τ", record.tau, "tangles"))
    ):
        ax = axes[row, 0]
        ax.plot(t, data[:, 0], color="C0")
        _finish(ax, f"{name} {COMPARTMENT_NAMES[0]}", log_y)
        ax = axes[row, 1]
        for i in range(1, 4):
            ax.plot(t, data[:, i], color=f"C{i}", label=COMPARTMENT_NAMES[i])
        ax.legend(fontsize=7)
        _finish(ax, f"{name} oligomers", log_y)
        ax = axes[row, 2]
        ax.plot(t, data[:, 4], color="C4")
        _finish(ax, f"{name} {top}", log_y)
    if title:
        fig.suptitle(title)
    return fig


def _region_lines(
    ax: Axes,
    times: Sequence[float],
    series,
    names: Sequence[str],
    seed_idx: Sequence[int],
) -> None:
    for j, name in enumerate(names):
        dashed = j in seed_idx
        ax.plot(
            times,
            series[:, j],
            linestyle="--" if dashed else "-",
            linewidth=1.6 if dashed else 0.9,
            color=f"C{j % 10}",
            label=name,
        )
    if len(names) <= LEGEND_MAX_REGIONS:
        ax.legend(fontsize=6, ncol=2)


def regional_figure(
    record: TimeSeriesRecord,
    *,
    seed_labels: Sequence[str] = ("entorhinal",),
    log_y: bool = False,
    title: str = "",
) -> Figure:
    """Una curva per regione; le regioni entorinali sono tratteggiate."""
    fig = Figure(figsize=(12, 6.5), layout="constrained")
    axes = fig.subplots(2, 3)
    t = record.times
    names = record.region_names
    seed_idx = seed_regions(names, seed_labels)
    for row, (name, data, top) in enumerate(
        (("Aβ", record.abeta_regional, "plaques"), ("τ", record.tau_regional, "tangles"))
    ):
        panels = (
            (data[:, :, 0], f"{name} monomers"),
            (data[:, :, 1:4].sum(axis=2), f"{name} oligomers (2-4)"),
            (data[:, :, 4], f"{name} {top}"),
        )
        for col, (series, label) in enumerate(panels):
            ax = axes[row, col]
            _region_lines(ax, t, series, names, seed_idx)
            _finish(ax, label, log_y)
    if title:
        fig.suptitle(title)
    return fig


def disease_figure(
    record: TimeSeriesRecord,
    *,
    seed_labels: Sequence[str] = ("entorhinal",),
    log_y: bool = False,
    title: str = "",
) -> Figure:
    """A_R(t) per regione a sinistra, A(t) globale a destra."""
    fig = Figure(figsize=(11, 4.5), layout="constrained")
    left, right = fig.subplots(1, 2)
    seed_idx = seed_regions(record.region_names, seed_labels)
    _region_lines(left, record.times, record.disease_regional, record.region_names, seed_idx)
    _finish(left, "A_R(t)", log_y)
    right.plot(record.times, record.disease, color="k")
    _finish(right, "A(t)", log_y)
    if title:
        fig.suptitle(title)
    return fig


def sweep_overlay_figure(
    records: Mapping[str, TimeSeriesRecord], *, log_y: bool = False
) -> Figure:
    """A(t) di tutti i casi sullo stesso grafico."""
    fig = Figure(figsize=(7, 4.5), layout="constrained")
    ax = fig.subplots()
    for k, (case, record) in enumerate(sorted(records.items())):
        ax.plot(record.times, record.disease, color=f"C{k}", label=f"case {case}")
    ax.legend(fontsize=8)
    _finish(ax, "A(t)", log_y)
    return fig


def sweep_regions_figure(
    records: Mapping[str, TimeSeriesRecord],
    *,
    seed_labels: Sequence[str] = ("entorhinal",),
    log_y: bool = False,
) -> Figure:
    """Un pannello A_R(t) per caso, stessa scala verticale."""
    cases = sorted(records)
    fig = Figure(figsize=(4.2 * len(cases), 4.2), layout="constrained")
    axes = fig.subplots(1, len(cases), sharey=True, squeeze=False)[0]
    for ax, case in zip(axes, cases):
        record = records[case]
        seed_idx = seed_regions(record.region_names, seed_labels)
        _region_lines(ax, record.times, record.disease_regional, record.region_names, seed_idx)
        _finish(ax, f"case {case}: A_R(t)", log_y)
    return fig

"""
Caricamento dei connettomi (GraphML stile braingraph.org, coppie di CSV),
tabella delle regioni, seed set e generatore sintetico per i test.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import networkx as nx
import numpy as np
import pandas as pd
from scipy import sparse

from .config import Settings, get_settings
from .errors import GraphError, GraphParseError
from .graph_core import BrainGraph, build_proximity_weights
from .schemas import GraphSource

logger = logging.getLogger(__name__)

_PARCEL_INDEX = re.compile(r"[_.\-]\d+$")
_TOKEN_SPLIT = re.compile(r"[_.\-]")
_HEMISPHERE_TOKENS = {"lh", "rh", "l", "r", "left", "right"}

NODE_COLUMNS = ("id", "label", "x", "y", "z")
EDGE_COLUMNS = ("src", "dst", "weight")

# Nomi stile Desikan per il generatore; i primi due diventano entorhinal_L / _R
SYNTHETIC_REGION_NAMES = (
    "entorhinal",
    "hippocampus",
    "amygdala",
    "temporalpole",
    "parahippocampal",
    "insula",
    "isthmuscingulate",
    "precuneus",
    "superiorfrontal",
    "lateraloccipital",
    "postcentral",
    "fusiform",
)


def region_key(label: str, merge_hemispheres: bool = False) -> str:
    """Label di parcella -> nome della regione (senza indice di parcella)."""
    key = _PARCEL_INDEX.sub("", label.strip())
    if merge_hemispheres:
        tokens = [
            t for t in _TOKEN_SPLIT.split(key) if t and t.lower() not in _HEMISPHERE_TOKENS
        ]
        key = "_".join(tokens) or key
    return key


@dataclass(frozen=True, eq=False)
class RegionTable:
    """Partizione {R_1, ..., R_l} dei vertici, nell'ordine di prima apparizione."""

    names: tuple[str, ...]
    index: np.ndarray

    def __post_init__(self) -> None:
        if not self.names:
            raise GraphError("region table is empty")
        if len(set(self.names)) != len(self.names):
            raise GraphError("region names must be unique")
        idx = np.asarray(self.index, dtype=int)
        if idx.size and (idx.min() < 0 or idx.max() >= len(self.names)):
            raise GraphError("region index out of range")
        object.__setattr__(self, "index", idx)

    @classmethod
    def from_labels(cls, region_labels: Sequence[str]) -> "RegionTable":
        names: dict[str, int] = {}
        index = np.empty(len(region_labels), dtype=int)
        for m, name in enumerate(region_labels):
            index[m] = names.setdefault(name, len(names))
        return cls(tuple(names), index)

    @property
    def num_regions(self) -> int:
        return len(self.names)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.index, minlength=self.num_regions)

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.index == j)

    def matching(self, needle: str) -> list[int]:
        """Indici delle regioni il cui nome contiene `needle` (case-insensitive)."""
        needle = needle.lower()
        return [j for j, n in enumerate(self.names) if needle in n.lower()]


def region_table(graph: BrainGraph) -> RegionTable:
    return RegionTable.from_labels(graph.region_labels)


def detect_seed(labels: Sequence[str], seed_labels: Sequence[str]) -> np.ndarray:
    needles = [s.lower() for s in seed_labels]
    return np.array(
        [m for m, lab in enumerate(labels) if any(n in lab.lower() for n in needles)],
        dtype=int,
    )


def _assemble(
    coords: np.ndarray,
    labels: list[str],
    conn: sparse.csr_matrix,
    source: str,
    *,
    cutoff_radius: float | None,
    decay_scale: float | None,
    merge_hemispheres: bool,
    seed_labels: Sequence[str],
) -> BrainGraph:
    prox = build_proximity_weights(coords, cutoff_radius, decay_scale, labels)
    seed = detect_seed(labels, seed_labels)
    graph = BrainGraph(
        coordinates=coords,
        labels=tuple(labels),
        region_labels=tuple(region_key(lab, merge_hemispheres) for lab in labels),
        conn_weights=conn,
        prox_weights=prox,
        seed_set=seed,
        source=source,
    )
    logger.info(
        "Graph %s loaded: N=%d conn_edges=%d prox_edges=%d seed=%d regions=%d",
        source,
        graph.num_vertices,
        graph.num_edges("connectivity"),
        graph.num_edges("proximity"),
        graph.seed_set.size,
        len(set(graph.region_labels)),
    )
    if graph.seed_set.size == 0:
        logger.warning("Graph %s has an empty seed set (labels %s)", source, seed_labels)
    return graph


def _symmetric(n: int, rows: np.ndarray, cols: np.ndarray, w: np.ndarray) -> sparse.csr_matrix:
    """Archi non orientati -> matrice simmetrica; i duplicati si sommano."""
    mat = sparse.coo_matrix(
        (np.concatenate([w, w]), (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(n, n),
    ).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def load_graphml(
    path: str | Path,
    *,
    cutoff_radius: float | None = None,
    decay_scale: float | None = None,
    merge_hemispheres: bool = False,
    settings: Settings | None = None,
) -> BrainGraph:
    settings = settings or get_settings()
    try:
        g = nx.read_graphml(str(path))
    except (nx.NetworkXError, ValueError, SyntaxError) as exc:
        raise GraphParseError(f"cannot parse GraphML {path}: {exc}") from exc
    if g.is_directed():
        logger.warning("GraphML %s is directed; treating edges as undirected", path)
        g = g.to_undirected()

    node_ids = list(g.nodes)
    pos = {nid: m for m, nid in enumerate(node_ids)}
    keys = (settings.graphml_x_key, settings.graphml_y_key, settings.graphml_z_key)
    coords = np.empty((len(node_ids), 3))
    labels: list[str] = []
    for m, nid in enumerate(node_ids):
        data = g.nodes[nid]
        if settings.graphml_label_key not in data:
            raise GraphParseError(
                f"node {nid} is missing attribute {settings.graphml_label_key!r}"
            )
        labels.append(str(data[settings.graphml_label_key]))
        for k, key in enumerate(keys):
            if key not in data:
                raise GraphParseError(f"node {nid} is missing attribute {key!r}")
            try:
                coords[m, k] = float(data[key])
            except (TypeError, ValueError) as exc:
                raise GraphParseError(
                    f"node {nid}: attribute {key!r} is not numeric ({data[key]!r})"
                ) from exc

    rows, cols, weights = [], [], []
    for u, v, data in g.edges(data=True):
        edge = data.get("id", f"{u}-{v}")
        if settings.graphml_weight_key not in data:
            raise GraphParseError(
                f"edge {edge} is missing attribute {settings.graphml_weight_key!r}"
            )
        raw = data[settings.graphml_weight_key]
        try:
            w = float(raw)
        except (TypeError, ValueError) as exc:
            raise GraphParseError(f"edge {edge}: weight {raw!r} is not numeric") from exc
        if not np.isfinite(w) or w < 0:
            raise GraphParseError(f"edge {edge}: weight {raw!r} must be finite and >= 0")
        if u == v:
            logger.warning("Dropping self-loop on node %s", u)
            continue
        rows.append(pos[u])
        cols.append(pos[v])
        weights.append(w)

    conn = _symmetric(
        len(node_ids), np.array(rows, dtype=int), np.array(cols, dtype=int), np.array(weights)
    )
    return _assemble(
        coords,
        labels,
        conn,
        f"graphml:{path}",
        cutoff_radius=cutoff_radius,
        decay_scale=decay_scale,
        merge_hemispheres=merge_hemispheres,
        seed_labels=settings.seed_labels,
    )


def _read_table(path: str | Path, columns: Sequence[str]) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise GraphParseError(f"cannot read {path}: {exc}") from exc
    df.columns = [c.strip() for c in df.columns]
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise GraphParseError(f"{path}: missing column(s) {', '.join(missing)}")
    return df


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return np.nan


def _numeric(df: pd.DataFrame, column: str, path: str | Path) -> np.ndarray:
    # float() rilegge esattamente il testo %.17g, pd.to_numeric no
    values = df[column].str.strip().map(_parse_float)
    bad = np.flatnonzero(values.isna().to_numpy())
    if bad.size:
        # riga 1 = header
        row = int(bad[0]) + 2
        raise GraphParseError(
            f"{path} row {row}: {column} {df[column].iloc[bad[0]]!r} is not numeric"
        )
    return values.to_numpy(dtype=float)


def load_edge_csv(
    nodes_path: str | Path,
    edges_path: str | Path,
    *,
    cutoff_radius: float | None = None,
    decay_scale: float | None = None,
    merge_hemispheres: bool = False,
    settings: Settings | None = None,
) -> BrainGraph:
    settings = settings or get_settings()
    nodes = _read_table(nodes_path, NODE_COLUMNS)
    edges = _read_table(edges_path, EDGE_COLUMNS)

    ids = nodes["id"].str.strip().tolist()
    if len(set(ids)) != len(ids):
        raise GraphParseError(f"{nodes_path}: duplicate node ids")
    pos = {nid: m for m, nid in enumerate(ids)}
    coords = np.column_stack([_numeric(nodes, c, nodes_path) for c in ("x", "y", "z")])
    labels = nodes["label"].str.strip().tolist()

    weights = _numeric(edges, "weight", edges_path)
    rows = np.empty(len(edges), dtype=int)
    cols = np.empty(len(edges), dtype=int)
    keep = np.ones(len(edges), dtype=bool)
    for k, (src, dst) in enumerate(zip(edges["src"].str.strip(), edges["dst"].str.strip())):
        row = k + 2
        for end in (src, dst):
            if end not in pos:
                raise GraphParseError(
                    f"{edges_path} row {row}: edge endpoint {end!r} is not a node"
                )
        if weights[k] < 0 or not np.isfinite(weights[k]):
            raise GraphParseError(
                f"{edges_path} row {row}: weight {weights[k]!r} must be finite and >= 0"
            )
        rows[k], cols[k] = pos[src], pos[dst]
        if rows[k] == cols[k]:
            logger.warning("%s row %d: dropping self-loop on node %s", edges_path, row, src)
            keep[k] = False

    conn = _symmetric(len(ids), rows[keep], cols[keep], weights[keep])
    return _assemble(
        coords,
        labels,
        conn,
        f"csv:{nodes_path},{edges_path}",
        cutoff_radius=cutoff_radius,
        decay_scale=decay_scale,
        merge_hemispheres=merge_hemispheres,
        seed_labels=settings.seed_labels,
    )


def export_edge_csv(graph: BrainGraph, nodes_path: str | Path, edges_path: str | Path) -> None:
    """Scrive la coppia nodes/edges leggibile da `load_edge_csv` (17 cifre significative)."""
    nodes = pd.DataFrame(
        {
            "id": np.arange(graph.num_vertices),
            "label": list(graph.labels),
            "x": graph.coordinates[:, 0],
            "y": graph.coordinates[:, 1],
            "z": graph.coordinates[:, 2],
        }
    )
    upper = sparse.triu(graph.conn_weights, k=1).tocoo()
    order = np.lexsort((upper.col, upper.row))
    edges = pd.DataFrame(
        {"src": upper.row[order], "dst": upper.col[order], "weight": upper.data[order]}
    )
    nodes.to_csv(nodes_path, index=False, float_format="%.17g", encoding="utf-8")
    edges.to_csv(edges_path, index=False, float_format="%.17g", encoding="utf-8")


def is_connected(weights: sparse.spmatrix) -> bool:
    g = nx.from_scipy_sparse_array(sparse.csr_array(weights))
    return g.number_of_nodes() > 0 and nx.is_connected(g)


def _synthetic_region_names(num_regions: int) -> list[str]:
    names = [f"{n}_{h}" for n in SYNTHETIC_REGION_NAMES for h in ("L", "R")]
    k = 0
    while len(names) < num_regions:
        names.extend([f"region{k:02d}_L", f"region{k:02d}_R"])
        k += 1
    return names[:num_regions]


def _fibonacci_sphere(k: int) -> np.ndarray:
    i = np.arange(k) + 0.5
    z = 1.0 - 2.0 * i / k
    r = np.sqrt(1.0 - z**2)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def generate_synthetic(
    num_vertices: int,
    num_regions: int,
    rng_seed: int,
    *,
    cutoff_radius: float | None = None,
    decay_scale: float | None = None,
    merge_hemispheres: bool = False,
    seed_labels: Sequence[str] = ("entorhinal",),
) -> BrainGraph:
    """
    Cluster gaussiani (uno per regione) su una sfera unitaria.
    Connettivita' completa dentro le regioni, pochi archi deboli verso le regioni
    vicine e un anello tra regioni consecutive, quindi il grafo e' connesso.
    """
    if num_regions < 3 or num_vertices < num_regions:
        raise ValueError(
            f"need num_vertices >= num_regions >= 3, got {num_vertices}, {num_regions}"
        )
    rng = np.random.default_rng(rng_seed)
    names = _synthetic_region_names(num_regions)
    centers = _fibonacci_sphere(num_regions)
    center_d = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=-1)
    np.fill_diagonal(center_d, np.inf)
    spread = 0.25 * float(center_d.min())

    counts = np.full(num_regions, num_vertices // num_regions)
    counts[: num_vertices % num_regions] += 1
    region_of = np.repeat(np.arange(num_regions), counts)
    coords = centers[region_of] + rng.normal(0.0, spread, size=(num_vertices, 3))
    labels = [f"{names[r]}_{k}" for r, c in zip(range(num_regions), counts) for k in range(c)]
    members = [np.flatnonzero(region_of == r) for r in range(num_regions)]

    rows: list[int] = []
    cols: list[int] = []
    weights: list[float] = []
    for idx in members:
        for a in range(idx.size):
            for b in range(a + 1, idx.size):
                rows.append(int(idx[a]))
                cols.append(int(idx[b]))
                weights.append(float(rng.uniform(0.5, 1.5)))

    n_near = min(3, num_regions - 1)
    region_pairs: set[tuple[int, int]] = set()
    for r in range(num_regions):
        for s in np.argsort(center_d[r])[:n_near]:
            region_pairs.add((min(r, int(s)), max(r, int(s))))
        s = (r + 1) % num_regions
        region_pairs.add((min(r, s), max(r, s)))
    for r, s in sorted(region_pairs):
        n_links = max(1, int(round(0.2 * min(counts[r], counts[s]))))
        for _ in range(n_links):
            rows.append(int(rng.choice(members[r])))
            cols.append(int(rng.choice(members[s])))
            weights.append(float(rng.uniform(0.05, 0.3)))

    conn = _symmetric(
        num_vertices, np.array(rows, dtype=int), np.array(cols, dtype=int), np.array(weights)
    )
    return _assemble(
        coords,
        labels,
        conn,
        f"synthetic:N={num_vertices},regions={num_regions},seed={rng_seed}",
        cutoff_radius=cutoff_radius,
        decay_scale=decay_scale,
        merge_hemispheres=merge_hemispheres,
        seed_labels=seed_labels,
    )


def load_graph(source: GraphSource, settings: Settings | None = None) -> BrainGraph:
    """Dispatch sulla sorgente descritta nello scenario."""
    settings = settings or get_settings()
    logger.info("Loading graph %s", source.describe())
    common = dict(
        cutoff_radius=source.cutoff_radius,
        decay_scale=source.decay_scale,
        merge_hemispheres=source.merge_hemispheres,
    )
    if source.kind == "graphml":
        return load_graphml(settings.resolve_graph_path(source.path), settings=settings, **common)
    if source.kind == "csv":
        return load_edge_csv(
            settings.resolve_graph_path(source.nodes_path),
            settings.resolve_graph_path(source.edges_path),
            settings=settings,
            **common,
        )
    return generate_synthetic(
        source.num_vertices,
        source.num_regions,
        source.rng_seed,
        seed_labels=settings.seed_labels,
        **common,
    )

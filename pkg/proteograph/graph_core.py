"""
Modello dati del grafo cerebrale e Laplaciano pesato.

Due famiglie di pesi sugli stessi vertici:
- connectivity (w^E): fibre di sostanza bianca, trasporta tau;
- proximity (w^F): vicinanza nel parenchima, trasporta Aβ.

Il Laplaciano e' quello normalizzato sui gradi pesati,
    (Δg)_m = (1/π_m) Σ_j (g_m - g_j) w_mj,
semidefinito positivo: il segno meno della diffusione sta nelle equazioni.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Sequence

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .errors import GraphError, IsolatedVertexError

logger = logging.getLogger(__name__)

WeightFamily = Literal["connectivity", "proximity"]

# Percentile delle distanze a coppie usato come raggio di default
DEFAULT_CUTOFF_PERCENTILE = 10.0
SYMMETRY_TOL = 1e-12


def weighted_degrees(
    weights: sparse.spmatrix,
    family: WeightFamily = "connectivity",
    labels: Sequence[str] | None = None,
) -> np.ndarray:
    """Somme di riga π_m; errore se un vertice e' isolato."""
    pi = np.asarray(sparse.csr_matrix(weights).sum(axis=1), dtype=float).ravel()
    isolated = np.flatnonzero(pi <= 0.0)
    if isolated.size:
        m = int(isolated[0])
        raise IsolatedVertexError(m, family, labels[m] if labels is not None else None)
    return pi


class LaplacianOperator:
    """
    Laplaciano applicato senza matrice densa: le liste di adiacenza sono
    le righe CSR ordinate. Immutabile dopo la costruzione.
    """

    def __init__(
        self,
        weights: sparse.spmatrix,
        family: WeightFamily = "connectivity",
        labels: Sequence[str] | None = None,
    ) -> None:
        w = sparse.csr_matrix(weights, dtype=float, copy=True)
        w.eliminate_zeros()
        w.sort_indices()
        self.family = family
        self.num_vertices = w.shape[0]
        self.degrees = weighted_degrees(w, family, labels)
        self._rows = np.repeat(np.arange(self.num_vertices), np.diff(w.indptr))
        self._cols = w.indices.copy()
        self._w = w.data.copy()
        # ogni riga ha almeno un vicino (π > 0), quindi reduceat e' ben definito
        self._starts = w.indptr[:-1].copy()
        for arr in (self.degrees, self._rows, self._cols, self._w, self._starts):
            arr.setflags(write=False)

    @property
    def num_edges(self) -> int:
        return self._w.size // 2

    def apply(self, g: np.ndarray) -> np.ndarray:
        """
        g di forma (N,) oppure (N, k): ogni colonna e' una funzione sui vertici.
        Le differenze sono calcolate arco per arco, quindi g costante da' 0 esatto.
        """
        g = np.asarray(g, dtype=float)
        if g.shape[0] != self.num_vertices:
            raise ValueError(
                f"vertex function has length {g.shape[0]}, expected {self.num_vertices}"
            )
        diff = g[self._rows] - g[self._cols]
        if g.ndim == 1:
            contrib = diff * self._w
            return np.add.reduceat(contrib, self._starts) / self.degrees
        contrib = diff * self._w[:, None]
        return np.add.reduceat(contrib, self._starts, axis=0) / self.degrees[:, None]


def apply_laplacian(op: LaplacianOperator, g: np.ndarray) -> np.ndarray:
    return op.apply(g)


def default_cutoff(coordinates: np.ndarray) -> float:
    """
    10° percentile delle distanze a coppie, ma mai sotto la massima distanza
    dal vicino piu' prossimo (altrimenti qualche vertice resterebbe isolato).
    """
    coords = np.asarray(coordinates, dtype=float)
    if coords.shape[0] < 2:
        raise GraphError("need at least two vertices to build proximity weights")
    dists = pdist(coords)
    dists = dists[dists > 0]
    if dists.size == 0:
        raise GraphError("all vertex coordinates coincide")
    pct = float(np.percentile(dists, DEFAULT_CUTOFF_PERCENTILE))
    nn, _ = cKDTree(coords).query(coords, k=2)
    nearest = float(np.max(nn[:, 1]))
    return max(pct, nearest)


def build_proximity_weights(
    coordinates: np.ndarray,
    cutoff_radius: float | None = None,
    decay_scale: float | None = None,
    labels: Sequence[str] | None = None,
) -> sparse.csr_matrix:
    """
    Kernel gaussiano con taglio netto:
        w_ij = exp(-|x_i - x_j|^2 / decay_scale^2)  se 0 < |x_i - x_j| <= cutoff_radius.
    Senza argomenti: cutoff da `default_cutoff`, decay_scale = cutoff / 2.
    """
    coords = np.asarray(coordinates, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != 3:
        raise GraphError(f"coordinates must have shape (N, 3), got {coords.shape}")
    if not np.all(np.isfinite(coords)):
        bad = int(np.flatnonzero(~np.isfinite(coords).all(axis=1))[0])
        raise GraphError(f"vertex {bad} has non-finite coordinates")
    if cutoff_radius is None:
        cutoff_radius = default_cutoff(coords)
    if decay_scale is None:
        decay_scale = cutoff_radius / 2.0
    if cutoff_radius <= 0 or decay_scale <= 0:
        raise ValueError("cutoff_radius and decay_scale must be positive")

    n = coords.shape[0]
    pairs = cKDTree(coords).query_pairs(r=cutoff_radius, output_type="ndarray")
    if pairs.size:
        d2 = np.sum((coords[pairs[:, 0]] - coords[pairs[:, 1]]) ** 2, axis=1)
        keep = d2 > 0.0
        pairs, d2 = pairs[keep], d2[keep]
        w = np.exp(-d2 / decay_scale**2)
    else:
        pairs = np.empty((0, 2), dtype=int)
        w = np.empty(0)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    mat = sparse.csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(n, n))
    mat.sort_indices()
    weighted_degrees(mat, "proximity", labels)
    logger.debug(
        "Proximity weights: cutoff=%.4g decay=%.4g edges=%d",
        cutoff_radius,
        decay_scale,
        pairs.shape[0],
    )
    return mat


def _check_weights(w: sparse.csr_matrix, n: int, family: WeightFamily) -> None:
    if w.shape != (n, n):
        raise GraphError(f"{family} weights have shape {w.shape}, expected {(n, n)}")
    if w.nnz and (not np.all(np.isfinite(w.data)) or w.data.min() < 0):
        raise GraphError(f"{family} weights must be finite and nonnegative")
    if np.any(w.diagonal() != 0):
        raise GraphError(f"{family} weights must have a zero diagonal")
    asym = abs(w - w.T)
    if asym.nnz and asym.max() > SYMMETRY_TOL * max(1.0, abs(w).max()):
        raise GraphError(f"{family} weights are not symmetric")


@dataclass(frozen=True, eq=False)
class BrainGraph:
    """
    Vertici (parcelle) con coordinate, label anatomica e regione,
    piu' le due famiglie di pesi. Immutabile; i Laplaciani sono calcolati una volta.
    """

    coordinates: np.ndarray
    labels: tuple[str, ...]
    region_labels: tuple[str, ...]
    conn_weights: sparse.csr_matrix
    prox_weights: sparse.csr_matrix
    seed_set: np.ndarray
    source: str = "memory"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "coordinates", np.array(self.coordinates, dtype=float, copy=True)
        )
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "region_labels", tuple(self.region_labels))
        n = self.coordinates.shape[0]
        if n < 1:
            raise GraphError("graph has no vertices")
        if len(self.labels) != n or len(self.region_labels) != n:
            raise GraphError("labels and region labels must have one entry per vertex")
        object.__setattr__(self, "conn_weights", sparse.csr_matrix(self.conn_weights))
        object.__setattr__(self, "prox_weights", sparse.csr_matrix(self.prox_weights))
        _check_weights(self.conn_weights, n, "connectivity")
        _check_weights(self.prox_weights, n, "proximity")
        weighted_degrees(self.conn_weights, "connectivity", self.labels)
        weighted_degrees(self.prox_weights, "proximity", self.labels)
        seed = np.unique(np.asarray(self.seed_set, dtype=int))
        if seed.size and (seed[0] < 0 or seed[-1] >= n):
            raise GraphError("seed_set contains out-of-range vertices")
        object.__setattr__(self, "seed_set", seed)
        self.coordinates.setflags(write=False)
        self.seed_set.setflags(write=False)

    @property
    def num_vertices(self) -> int:
        return self.coordinates.shape[0]

    def num_edges(self, family: WeightFamily) -> int:
        w = self.conn_weights if family == "connectivity" else self.prox_weights
        return w.nnz // 2

    @cached_property
    def conn_laplacian(self) -> LaplacianOperator:
        return LaplacianOperator(self.conn_weights, "connectivity", self.labels)

    @cached_property
    def prox_laplacian(self) -> LaplacianOperator:
        return LaplacianOperator(self.prox_weights, "proximity", self.labels)

    def laplacian(self, family: WeightFamily) -> LaplacianOperator:
        return self.conn_laplacian if family == "connectivity" else self.prox_laplacian

    def seed_mask(self) -> np.ndarray:
        mask = np.zeros(self.num_vertices, dtype=bool)
        mask[self.seed_set] = True
        return mask

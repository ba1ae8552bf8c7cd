"""
Densita' di malfunzionamento f(x_m, a, t) su una griglia uniforme di M celle in [0, 1].

f e' un array (N, M) di medie di cella (oppure (M,) per un solo vertice);
la massa Σ_k f_k Δa vale 1 per ogni vertice e si conserva.
Trasporto ∂_t f + ∂_a (v f) = 0 con upwind conservativo del prim'ordine:
v >= 0 ovunque, nessun flusso entrante in a = 0 e nessun flusso uscente in a = 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import ndtr

from .errors import StepSizeError
from .schemas import DeteriorationParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HealthGrid:
    m: int

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ValueError(f"health grid needs at least 2 cells, got {self.m}")

    @property
    def da(self) -> float:
        return 1.0 / self.m

    @cached_property
    def centers(self) -> np.ndarray:
        return (np.arange(self.m) + 0.5) * self.da

    @cached_property
    def faces(self) -> np.ndarray:
        return np.arange(self.m + 1) * self.da

    @cached_property
    def face_kernel(self) -> np.ndarray:
        """K[p, k] = (b_k - a_p)^+ Δa sulle facce: quadratura del punto medio."""
        return peer_kernel(self.faces, self.centers, self.da)


@lru_cache(maxsize=16)
def health_grid(m: int) -> HealthGrid:
    return HealthGrid(m)


def _grid_of(f: np.ndarray) -> HealthGrid:
    return health_grid(int(np.shape(f)[-1]))


def peer_kernel(a: np.ndarray, centers: np.ndarray, da: float) -> np.ndarray:
    return np.maximum(centers[None, :] - np.asarray(a, dtype=float)[:, None], 0.0) * da


def healthy_density(grid: HealthGrid, a0: float, sigma_a: float) -> np.ndarray:
    """
    Gaussiana troncata a [0, 1] (media a0, deviazione sigma_a), come medie
    esatte di cella, rinormalizzata a massa 1 sulla griglia.
    """
    cdf = ndtr((grid.faces - a0) / sigma_a)
    mass = np.diff(cdf)
    total = mass.sum()
    if total <= 0:
        raise ValueError(f"healthy density has no mass on [0, 1] (a0={a0}, sigma_a={sigma_a})")
    return mass / (total * grid.da)


def mass(f: np.ndarray) -> np.ndarray:
    return np.sum(f, axis=-1) * _grid_of(f).da


def toxic_load(
    u: np.ndarray, tau: np.ndarray, params: DeteriorationParams
) -> np.ndarray:
    """
    C_S (Σ_{i=2..4} u_i - Ū_Aβ)^+ + C_T (Σ_{i=1..5} τ_i - Ū_τ)^+ :
    per tau contano tutti i compartimenti, grovigli inclusi.
    """
    u = np.asarray(u, dtype=float)
    tau = np.asarray(tau, dtype=float)
    abeta = np.maximum(u[..., 1:4].sum(axis=-1) - params.u_bar_abeta, 0.0)
    tangles = np.maximum(tau.sum(axis=-1) - params.u_bar_tau, 0.0)
    return params.c_s * abeta + params.c_t * tangles


def deterioration_rate(
    f: np.ndarray,
    u: np.ndarray,
    tau: np.ndarray,
    a: np.ndarray,
    params: DeteriorationParams,
    kernel: np.ndarray | None = None,
) -> np.ndarray:
    """
    v[f](a) = C_𝒢 ∫ (b - a)^+ f db + (1 - a) * toxic_load(u, τ).

    f (M,) con u, τ (5,) oppure f (N, M) con u, τ (N, 5); `a` sono le posizioni
    di valutazione. Risultato (P,) o (N, P), sempre >= 0.
    """
    f = np.asarray(f, dtype=float)
    a = np.asarray(a, dtype=float)
    grid = _grid_of(f)
    if kernel is None:
        kernel = peer_kernel(a, grid.centers, grid.da)
    peer = params.c_g * (f @ kernel.T)
    toxic = toxic_load(u, tau, params)
    return peer + (1.0 - a) * np.asarray(toxic)[..., None]


def face_velocities(
    f: np.ndarray, u: np.ndarray, tau: np.ndarray, params: DeteriorationParams
) -> np.ndarray:
    """v sulle M+1 facce; v(1) = 0 esattamente."""
    grid = _grid_of(f)
    v = deterioration_rate(f, u, tau, grid.faces, params, kernel=grid.face_kernel)
    if logger.isEnabledFor(logging.DEBUG):
        assert np.all(v >= 0.0), f"negative deterioration velocity {float(v.min()):.3g}"
    return v


def amyloid_source(f: np.ndarray, params: DeteriorationParams) -> np.ndarray:
    """F(f) = C_F ∫ (μ0 + a)(1 - a) f da: i neuroni morti non producono Aβ."""
    grid = _grid_of(f)
    a = grid.centers
    weights = (params.mu0 + a) * (1.0 - a) * grid.da
    return params.c_f * (np.asarray(f, dtype=float) @ weights)


def malfunction_mean(f: np.ndarray) -> np.ndarray:
    """A = ∫ a f da, in [0, 1] per densita' di massa unitaria."""
    grid = _grid_of(f)
    return np.asarray(f, dtype=float) @ (grid.centers * grid.da)


def transport_divergence(f: np.ndarray, v: np.ndarray) -> np.ndarray:
    """
    -(F_{k+1/2} - F_{k-1/2}) / Δa con flusso upwind F_{k+1/2} = v_{k+1/2} f_k.
    I flussi di bordo sono nulli: la massa si conserva a meno dell'arrotondamento.
    """
    f = np.asarray(f, dtype=float)
    grid = _grid_of(f)
    flux = np.zeros(f.shape[:-1] + (grid.m + 1,))
    flux[..., 1:-1] = v[..., 1:-1] * f[..., :-1]
    return -(flux[..., 1:] - flux[..., :-1]) / grid.da


def cfl_number(v: np.ndarray, dt: float, m: int) -> float:
    vmax = float(np.max(v)) if np.size(v) else 0.0
    return dt * vmax * m


def transport_step(
    f: np.ndarray, v: np.ndarray, dt: float, cfl_max: float = 0.9
) -> np.ndarray:
    """Passo di Eulero esplicito dello schema upwind; errore se CFL > cfl_max."""
    grid = _grid_of(f)
    cfl = cfl_number(v, dt, grid.m)
    if cfl > cfl_max:
        raise StepSizeError(f"CFL {cfl:.4g} exceeds {cfl_max} with dt={dt:.4g}")
    return np.asarray(f, dtype=float) + dt * transport_divergence(f, v)

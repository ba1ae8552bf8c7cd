"""
Smoluchowski troncato a 5 compartimenti per Aβ (diffusione su Γ) e tau (su G).

Un ProteinField e' un array (N, 5): colonna 0 monomeri, 1 dimeri, 2 oligomeri
corti, 3 oligomeri lunghi, 4 placche/grovigli. Concentrazioni adimensionali.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import StateCorruptionError
from .graph_core import LaplacianOperator
from .schemas import AggregationParams

N_COMPARTMENTS = 5

# Valori in [-NEGATIVE_FLOOR, 0) vengono azzerati, sotto si rifiuta il passo
NEGATIVE_FLOOR = 1e-12

ProteinField = np.ndarray


def check_finite(name: str, arr: np.ndarray) -> None:
    """StateCorruptionError sul primo NaN/Inf, con vertice e componente."""
    if np.isfinite(arr).all():
        return
    bad = np.argwhere(~np.isfinite(arr))[0]
    vertex = int(bad[0])
    component = int(bad[1]) if bad.size > 1 else 0
    raise StateCorruptionError(name, vertex, component)


def seed_profile(t: float, lambda_seed: float) -> float:
    """s(t) = (t/λ) exp(-t/λ); il mascheramento sui vertici lo fa il chiamante."""
    if t < 0:
        raise ValueError(f"seed profile needs t >= 0, got {t}")
    x = t / lambda_seed
    return x * math.exp(-x)


def coalescence_terms(conc: np.ndarray, rate: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Guadagno e perdita per coalescenza binaria, conc di forma (5,) o (N, 5).

    gain_i = (rate/2) Σ_{j<i} c_j c_{i-j}                       per i = 2..4
    gain_5 = (rate/2) Σ_{j,k<5, j+k>=5} c_j c_k    (somma ordinata)
    loss_i = rate c_i Σ_{j=1..5} c_j                            per i = 1..4
    """
    conc = np.asarray(conc, dtype=float)
    c1, c2, c3, c4 = (conc[..., k] for k in range(4))
    half = 0.5 * rate
    gain = np.zeros_like(conc)
    gain[..., 1] = half * c1 * c1
    gain[..., 2] = half * 2.0 * c1 * c2
    gain[..., 3] = half * (2.0 * c1 * c3 + c2 * c2)
    gain[..., 4] = half * (
        2.0 * c1 * c4 + 2.0 * c2 * c3 + 2.0 * c2 * c4 + c3 * c3 + 2.0 * c3 * c4 + c4 * c4
    )
    # il totale include le placche: attaccarsi a una placca toglie l'oligomero
    total = conc.sum(axis=-1)
    loss = np.zeros_like(conc)
    loss[..., :4] = rate * conc[..., :4] * total[..., None]
    return gain, loss


def abeta_rhs(
    u: ProteinField,
    f_source: np.ndarray,
    params: AggregationParams,
    laplacian: LaplacianOperator,
) -> ProteinField:
    """
    ε du_i/dt = -d_i Δ_Γ u_i + gain_i - loss_i - σ_i u_i (+ F(f) per i = 1);
    le placche non diffondono e non vengono rimosse.
    """
    check_finite("abeta", u)
    check_finite("amyloid_source", np.atleast_2d(np.asarray(f_source)).T)
    gain, loss = coalescence_terms(u, params.alpha)
    du = gain - loss
    du[:, :4] -= np.asarray(params.d) * laplacian.apply(u[:, :4])
    du[:, :4] -= np.asarray(params.sigma) * u[:, :4]
    du[:, 0] += f_source
    return du / params.epsilon


def tau_coupling(u: ProteinField, params: AggregationParams) -> np.ndarray:
    """C_τ (Σ_{i=2..4} u_i - Ū)^+ per vertice."""
    oligomers = u[:, 1:4].sum(axis=1)
    return params.c_tau * np.maximum(oligomers - params.u_bar, 0.0)


def tau_rhs(
    tau: ProteinField,
    u: ProteinField,
    t: float,
    params: AggregationParams,
    laplacian: LaplacianOperator,
    seed_mask: np.ndarray,
) -> ProteinField:
    """
    dτ_i/dt = -d_i Δ_G τ_i + gain_i - loss_i, piu' per i = 1 il seeding
    c s(t) sui vertici seed e l'accoppiamento con gli oligomeri di Aβ.
    """
    check_finite("tau", tau)
    check_finite("abeta", u)
    gain, loss = coalescence_terms(tau, params.gamma)
    dtau = gain - loss
    dtau[:, :4] -= np.asarray(params.d) * laplacian.apply(tau[:, :4])
    seeding = params.c_seed * seed_profile(t, params.lambda_seed)
    dtau[:, 0] += seeding * seed_mask + tau_coupling(u, params)
    return dtau

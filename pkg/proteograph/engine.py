"""
Accoppiamento aggregazione + salute neuronale e integrazione RK4 esplicita.

Il passo e' limitato dalla CFL del trasporto e da una stima della rigidita'
della parte di reazione-diffusione; se dopo il passo compaiono valori sotto
-1e-12 o la CFL risulta violata, il passo viene ripetuto con dt/2.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .aggregation import NEGATIVE_FLOOR, abeta_rhs, check_finite, tau_rhs
from .errors import NegativeStateError, StepSizeError, StiffnessError
from .graph_core import BrainGraph
from .neuron_health import (
    amyloid_source,
    cfl_number,
    face_velocities,
    transport_divergence,
)
from .schemas import AggregationParams, DeteriorationParams, IntegratorConfig, ScenarioConfig

logger = logging.getLogger(__name__)

# RK4 e' stabile sull'asse reale fino a |λ dt| ≈ 2.785
RK4_REAL_STABILITY = 2.5
# raddoppio del dt di prova dopo questi passi accettati di fila
GROWTH_STREAK = 8
# da qui in poi i dimezzamenti consecutivi finiscono nei WARNING
REPEATED_HALVINGS = 3


@dataclass
class SimState:
    t: float
    u: np.ndarray
    tau: np.ndarray
    f: np.ndarray
    step: int = 0
    clamp_count: int = 0

    def copy(self) -> "SimState":
        return replace(self, u=self.u.copy(), tau=self.tau.copy(), f=self.f.copy())


@dataclass(frozen=True)
class StateRates:
    du: np.ndarray
    dtau: np.ndarray
    df: np.ndarray


@dataclass
class SimulationResult:
    final: SimState
    snapshots: list[SimState]
    steps: int = 0
    rejected_steps: int = 0
    wall_time_s: float = 0.0
    dt_history: list[float] = field(default_factory=list, repr=False)


class CoupledModel:
    """Sistema completo (u, τ, f) su un grafo fissato; senza stato mutabile."""

    def __init__(
        self,
        graph: BrainGraph,
        aggregation: AggregationParams,
        deterioration: DeteriorationParams,
    ) -> None:
        self.graph = graph
        self.aggregation = aggregation
        self.deterioration = deterioration
        self.seed_mask = graph.seed_mask().astype(float)
        self._prox = graph.prox_laplacian
        self._conn = graph.conn_laplacian
        self._dmax = max(aggregation.d)
        self._smax = max(aggregation.sigma)

    @classmethod
    def from_config(cls, graph: BrainGraph, config: ScenarioConfig) -> "CoupledModel":
        return cls(graph, config.aggregation, config.deterioration)

    def rates(self, t: float, u: np.ndarray, tau: np.ndarray, f: np.ndarray) -> StateRates:
        # ordine: F(f), Aβ, τ (legge u corrente), v[f], divergenza del flusso
        source = amyloid_source(f, self.deterioration)
        du = abeta_rhs(u, source, self.aggregation, self._prox)
        dtau = tau_rhs(tau, u, t, self.aggregation, self._conn, self.seed_mask)
        check_finite("health", f)
        v = face_velocities(f, u, tau, self.deterioration)
        df = transport_divergence(f, v)
        return StateRates(du, dtau, df)

    def max_velocity(self, u: np.ndarray, tau: np.ndarray, f: np.ndarray) -> float:
        return float(np.max(face_velocities(f, u, tau, self.deterioration)))

    def stiffness_bound(self, u: np.ndarray, tau: np.ndarray) -> float:
        """Stima alla Gershgorin del raggio spettrale dello jacobiano di reazione-diffusione."""
        p = self.aggregation
        s_u = float(np.max(u.sum(axis=1)))
        s_tau = float(np.max(tau.sum(axis=1)))
        lam_u = (2.0 * self._dmax + self._smax + 3.0 * p.alpha * s_u) / p.epsilon
        lam_tau = 2.0 * self._dmax + 3.0 * p.gamma * s_tau
        return max(lam_u, lam_tau)


def coupled_rhs(model: CoupledModel, state: SimState) -> StateRates:
    return model.rates(state.t, state.u, state.tau, state.f)


def _rk4(model: CoupledModel, state: SimState, dt: float) -> tuple[np.ndarray, ...]:
    t, y = state.t, (state.u, state.tau, state.f)

    def stage(base: tuple[np.ndarray, ...], k: StateRates, h: float) -> tuple[np.ndarray, ...]:
        return (base[0] + h * k.du, base[1] + h * k.dtau, base[2] + h * k.df)

    k1 = model.rates(t, *y)
    k2 = model.rates(t + 0.5 * dt, *stage(y, k1, 0.5 * dt))
    k3 = model.rates(t + 0.5 * dt, *stage(y, k2, 0.5 * dt))
    k4 = model.rates(t + dt, *stage(y, k3, dt))
    w = dt / 6.0
    return (
        y[0] + w * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du),
        y[1] + w * (k1.dtau + 2.0 * k2.dtau + 2.0 * k3.dtau + k4.dtau),
        y[2] + w * (k1.df + 2.0 * k2.df + 2.0 * k3.df + k4.df),
    )


def snapshot_times(config: IntegratorConfig) -> list[float]:
    """Istanti di output dopo t = 0; l'ultimo e' sempre t_end."""
    n = int(np.floor(config.t_end / config.snapshot_interval + 1e-9))
    times = [k * config.snapshot_interval for k in range(1, n + 1)]
    times = [s for s in times if s < config.t_end * (1.0 - 1e-12)]
    times.append(config.t_end)
    return times


def _clamp(arrays: tuple[np.ndarray, ...]) -> int:
    count = 0
    for arr in arrays:
        neg = arr < 0.0
        n = int(np.count_nonzero(neg))
        if n:
            arr[neg] = 0.0
            count += n
    return count


def _min_value(arrays: tuple[np.ndarray, ...]) -> float:
    return min(float(arr.min()) for arr in arrays)


def advance(
    model: CoupledModel, state: SimState, config: IntegratorConfig
) -> SimulationResult:
    """
    Integra da state.t a t_end. Gli snapshot includono t = 0 e t = t_end;
    lo stato di ingresso non viene modificato.
    """
    started = time.perf_counter()
    m = state.f.shape[1]
    adaptive = config.mode == "adaptive"
    current = state.copy()
    result = SimulationResult(final=current, snapshots=[current.copy()])
    dt = config.dt_init
    streak = 0
    halvings = 0
    clamped_since_snapshot = 0

    for target in snapshot_times(config):
        if target <= current.t:
            continue
        while current.t < target:
            remaining = target - current.t
            vmax = model.max_velocity(current.u, current.tau, current.f)
            if adaptive:
                dt_try = min(dt, config.dt_max)
                if vmax > 0:
                    dt_try = min(dt_try, config.cfl_max / (vmax * m))
                dt_try = min(
                    dt_try, RK4_REAL_STABILITY / model.stiffness_bound(current.u, current.tau)
                )
                if dt_try < config.dt_min and dt_try < remaining:
                    raise StiffnessError(
                        f"stable step {dt_try:.3g} is below dt_min={config.dt_min:.3g} at "
                        f"t={current.t:.6g}; lower dt_min or use a larger epsilon"
                    )
            else:
                dt_try = config.dt_init
            landing = dt_try >= remaining * (1.0 - 1e-9)
            if landing:
                dt_try = remaining
            if not adaptive and cfl_number(vmax, dt_try, m) > config.cfl_max:
                raise StepSizeError(
                    f"CFL {cfl_number(vmax, dt_try, m):.4g} exceeds {config.cfl_max} "
                    f"with dt={dt_try:.4g} at t={current.t:.6g}"
                )

            u, tau, f = _rk4(model, current, dt_try)
            for name, arr in (("abeta", u), ("tau", tau), ("health", f)):
                check_finite(name, arr)
            new_t = target if landing else current.t + dt_try
            lowest = _min_value((u, tau, f))
            cfl_after = cfl_number(model.max_velocity(u, tau, f), dt_try, m)
            if lowest < -NEGATIVE_FLOOR or cfl_after > config.cfl_max:
                if not adaptive:
                    if lowest < -NEGATIVE_FLOOR:
                        raise NegativeStateError(
                            f"value {lowest:.3g} below -{NEGATIVE_FLOOR:g} at t={new_t:.6g} "
                            f"with fixed dt={dt_try:.4g}"
                        )
                    raise StepSizeError(
                        f"CFL {cfl_after:.4g} exceeds {config.cfl_max} after the step "
                        f"at t={new_t:.6g}"
                    )
                result.rejected_steps += 1
                streak = 0
                dt = dt_try / 2.0
                halvings += 1
                logger.debug(
                    "Step rejected at t=%.6g (min=%.3g, cfl=%.3g); dt -> %.3g",
                    current.t,
                    lowest,
                    cfl_after,
                    dt,
                )
                if halvings >= REPEATED_HALVINGS:
                    logger.warning(
                        "Step halved %d times in a row at t=%.6g (dt=%.3g)",
                        halvings,
                        current.t,
                        dt,
                    )
                if dt < config.dt_min:
                    raise StiffnessError(
                        f"step size fell below dt_min={config.dt_min:.3g} at "
                        f"t={current.t:.6g}; lower dt_min or use a larger epsilon"
                    )
                continue

            clamped = _clamp((u, tau, f))
            if clamped:
                logger.debug("Clamped %d tiny negative values at t=%.6g", clamped, new_t)
                clamped_since_snapshot += clamped
            current = SimState(
                t=new_t,
                u=u,
                tau=tau,
                f=f,
                step=current.step + 1,
                clamp_count=current.clamp_count + clamped,
            )
            result.steps += 1
            result.dt_history.append(dt_try)
            halvings = 0
            if adaptive and not landing:
                streak += 1
                if streak >= GROWTH_STREAK:
                    dt = min(2.0 * dt, config.dt_max)
                    streak = 0
        if clamped_since_snapshot:
            logger.warning(
                "Clamped %d tiny negative values before snapshot t=%.6g",
                clamped_since_snapshot,
                current.t,
            )
            clamped_since_snapshot = 0
        result.snapshots.append(current.copy())

    result.final = current
    result.wall_time_s = time.perf_counter() - started
    if current.clamp_count:
        logger.info("Clamped %d tiny negative values during the run", current.clamp_count)
    logger.debug(
        "advance: %d steps, %d rejected, %.2fs",
        result.steps,
        result.rejected_steps,
        result.wall_time_s,
    )
    return result

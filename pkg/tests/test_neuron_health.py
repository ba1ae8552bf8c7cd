import logging

import numpy as np
import pytest

from proteograph.errors import StepSizeError
from proteograph.neuron_health import (
    HealthGrid,
    amyloid_source,
    deterioration_rate,
    face_velocities,
    health_grid,
    healthy_density,
    malfunction_mean,
    mass,
    toxic_load,
    transport_divergence,
    transport_step,
)
from proteograph.schemas import DeteriorationParams


@pytest.mark.parametrize("m", [32, 64, 256])
def test_healthy_density_has_unit_mass(m):
    f0 = healthy_density(health_grid(m), 0.01, 0.005)
    assert float(mass(f0)) == pytest.approx(1.0, abs=1e-12)
    assert np.all(f0 >= 0)
    # concentrata vicino ad a = 0
    assert malfunction_mean(f0) < 0.05


def test_grid_geometry():
    grid = HealthGrid(4)
    assert grid.da == 0.25
    np.testing.assert_allclose(grid.centers, [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose(grid.faces, [0.0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ValueError):
        HealthGrid(1)


def test_face_velocity_vanishes_at_death_and_is_nonnegative():
    params = DeteriorationParams(c_s=1.0, c_t=1.0)
    rng = np.random.default_rng(0)
    f = rng.uniform(size=(5, 16))
    f /= mass(f)[:, None]
    u = rng.uniform(size=(5, 5))
    tau = rng.uniform(size=(5, 5))
    v = face_velocities(f, u, tau, params)
    assert v.shape == (5, 17)
    assert np.all(v[:, -1] == 0.0)
    assert np.all(v >= 0.0)


def test_deterioration_rate_without_proteins_is_peer_term_only():
    params = DeteriorationParams(c_g=0.5)
    grid = health_grid(8)
    f = np.zeros(8)
    f[6] = 1.0 / grid.da
    v = deterioration_rate(f, np.zeros(5), np.zeros(5), np.array([0.0, 0.5, 0.9]), params)
    c6 = grid.centers[6]
    np.testing.assert_allclose(v, [0.5 * c6, 0.5 * (c6 - 0.5), 0.0])


def test_toxic_load_counts_every_tau_compartment():
    params = DeteriorationParams(c_s=2.0, c_t=3.0, u_bar_abeta=0.1, u_bar_tau=0.1)
    # solo grovigli: contano lo stesso
    tau = np.array([0.0, 0.0, 0.0, 0.0, 0.5])
    # monomeri e placche di Aβ non sono tossici
    u = np.array([5.0, 0.0, 0.0, 0.0, 5.0])
    assert float(toxic_load(u, tau, params)) == pytest.approx(3.0 * 0.4)
    u = np.array([0.0, 0.1, 0.1, 0.1, 0.0])
    assert float(toxic_load(u, np.zeros(5), params)) == pytest.approx(2.0 * 0.2)


def test_amyloid_source_of_a_single_cell():
    params = DeteriorationParams(c_f=10.0, mu0=0.01)
    grid = health_grid(10)
    for k in (0, 4, 9):
        f = np.zeros(10)
        f[k] = 1.0 / grid.da
        c = grid.centers[k]
        assert float(amyloid_source(f, params)) == pytest.approx(10.0 * (0.01 + c) * (1 - c))
        assert float(malfunction_mean(f)) == pytest.approx(c)


def test_divergence_conserves_mass():
    rng = np.random.default_rng(4)
    f = rng.uniform(size=(3, 20))
    v = rng.uniform(size=(3, 21))
    df = transport_divergence(f, v)
    np.testing.assert_allclose(df.sum(axis=1) / 20, 0.0, atol=1e-14)


def test_transport_step_checks_cfl():
    f = np.ones(10)
    v = np.full(11, 1.0)
    with pytest.raises(StepSizeError, match="CFL"):
        transport_step(f, v, dt=0.1, cfl_max=0.9)
    out = transport_step(f, v, dt=0.05)
    assert float(mass(out)) == pytest.approx(1.0, abs=1e-14)


def _bump(a: np.ndarray) -> np.ndarray:
    return np.exp(-(((a - 0.4) / 0.1) ** 2))


def test_upwind_transport_converges_at_first_order():
    speed, t_end = 0.1, 1.0
    errors = []
    sizes = [80, 160, 320, 640]
    for m in sizes:
        grid = health_grid(m)
        f = _bump(grid.centers)
        v = np.full(m + 1, speed)
        dt = 0.5 * grid.da / speed
        steps = int(round(t_end / dt))
        for _ in range(steps):
            f = transport_step(f, v, dt)
        exact = _bump(grid.centers - speed * t_end)
        errors.append(float(np.sum(np.abs(f - exact)) * grid.da))
    slope = -np.polyfit(np.log(sizes), np.log(errors), 1)[0]
    assert slope >= 0.8


def test_uniform_density_without_proteins():
    params = DeteriorationParams()
    grid = health_grid(64)
    f = np.ones(64)
    v = face_velocities(f, np.zeros(5), np.zeros(5), params)
    # C_𝒢 ∫_a^1 (b - a) db, esatto sulle facce
    np.testing.assert_allclose(v, 0.1 * (1.0 - grid.faces) ** 2 / 2, rtol=1e-12, atol=1e-15)
    assert v[0] == pytest.approx(0.05)
    assert float(amyloid_source(f, params)) == pytest.approx(1.7167, abs=1e-3)
    assert float(malfunction_mean(f)) == pytest.approx(0.5, abs=1e-12)


def test_quadratures_converge_on_smooth_density():
    params = DeteriorationParams(c_f=10.0, mu0=0.01)
    e = np.e
    exact_mean = 1.0 / (e - 1.0)
    exact_source = params.c_f / (e - 1.0) * (params.mu0 * (e - 2.0) + 1.0 - (e - 2.0))
    errors = {}
    for m in (32, 256):
        grid = health_grid(m)
        f = np.exp(grid.centers) / (e - 1.0)
        errors[m] = (
            abs(float(malfunction_mean(f)) - exact_mean),
            abs(float(amyloid_source(f, params)) - exact_source),
        )
    for i in range(2):
        slope = np.log(errors[32][i] / errors[256][i]) / np.log(8.0)
        assert slope >= 0.9


def test_negative_velocity_fails_only_with_debug_logging(caplog):
    f = -np.ones(8)
    with caplog.at_level(logging.INFO, logger="proteograph.neuron_health"):
        v = face_velocities(f, np.zeros(5), np.zeros(5), DeteriorationParams())
    assert v.min() < 0.0
    with caplog.at_level(logging.DEBUG, logger="proteograph.neuron_health"):
        with pytest.raises(AssertionError, match="negative deterioration velocity"):
            face_velocities(f, np.zeros(5), np.zeros(5), DeteriorationParams())

import math

import numpy as np
import pytest

from proteograph.aggregation import (
    abeta_rhs,
    check_finite,
    coalescence_terms,
    seed_profile,
    tau_coupling,
    tau_rhs,
)
from proteograph.errors import StateCorruptionError
from proteograph.scenarios import preset
from proteograph.schemas import AggregationParams


def test_coalescence_on_unit_concentrations():
    gain, loss = coalescence_terms(np.ones(5), 2.0)
    # gain_5 conta le 10 coppie ordinate (j, k) con j, k <= 4 e j + k >= 5
    np.testing.assert_allclose(gain, [0.0, 1.0, 2.0, 3.0, 10.0])
    np.testing.assert_allclose(loss, [10.0, 10.0, 10.0, 10.0, 0.0])


def test_coalescence_vectorizes_over_vertices():
    rng = np.random.default_rng(0)
    conc = rng.uniform(size=(6, 5))
    gain, loss = coalescence_terms(conc, 3.0)
    for x in range(6):
        g, lo = coalescence_terms(conc[x], 3.0)
        np.testing.assert_allclose(gain[x], g, rtol=1e-15)
        np.testing.assert_allclose(loss[x], lo, rtol=1e-15)


def test_zero_rate_has_no_coalescence():
    gain, loss = coalescence_terms(np.full((4, 5), 0.3), 0.0)
    assert not gain.any() and not loss.any()


def test_seed_profile_shape():
    assert seed_profile(0.0, 10.0) == 0.0
    assert seed_profile(10.0, 10.0) == pytest.approx(math.exp(-1.0))
    assert seed_profile(5.0, 10.0) < seed_profile(10.0, 10.0) > seed_profile(20.0, 10.0)
    with pytest.raises(ValueError):
        seed_profile(-1.0, 10.0)


def test_abeta_clearance_on_uniform_field(triangle):
    params = AggregationParams(alpha=0.0)
    u = np.tile([0.2, 0.1, 0.05, 0.02, 0.7], (3, 1))
    du = abeta_rhs(u, np.zeros(3), params, triangle.prox_laplacian)
    expected = -np.asarray(params.sigma) * u[0, :4] / params.epsilon
    for x in range(3):
        np.testing.assert_allclose(du[x, :4], expected, rtol=1e-14)
        # le placche non diffondono e non vengono rimosse
        assert du[x, 4] == 0.0


def test_abeta_source_feeds_monomers_only(triangle):
    params = AggregationParams(alpha=0.0)
    du = abeta_rhs(np.zeros((3, 5)), np.array([1.0, 2.0, 3.0]), params, triangle.prox_laplacian)
    np.testing.assert_allclose(du[:, 0], np.array([1.0, 2.0, 3.0]) / params.epsilon)
    assert not du[:, 1:].any()


def test_tau_coupling_threshold():
    params = AggregationParams(c_tau=10.0, u_bar=0.01)
    u = np.array([[0.5, 0.002, 0.002, 0.002, 9.0], [0.0, 0.01, 0.01, 0.01, 0.0]])
    np.testing.assert_allclose(tau_coupling(u, params), [0.0, 0.2])


def test_tau_is_not_produced_in_case_a(triangle):
    params = preset("A").aggregation
    u = np.tile([0.3, 0.2, 0.2, 0.2, 1.0], (3, 1))
    dtau = tau_rhs(np.zeros((3, 5)), u, 7.0, params, triangle.conn_laplacian, triangle.seed_mask())
    assert np.all(dtau == 0.0)


def test_tau_seeding_only_on_seed_vertices(triangle):
    params = preset("B").aggregation
    dtau = tau_rhs(
        np.zeros((3, 5)), np.zeros((3, 5)), 10.0, params, triangle.conn_laplacian, triangle.seed_mask()
    )
    assert dtau[0, 0] == pytest.approx(params.c_seed * math.exp(-1.0))
    assert np.all(dtau[1:] == 0.0)
    assert np.all(dtau[0, 1:] == 0.0)


def test_nan_is_reported_with_position(triangle):
    u = np.zeros((3, 5))
    u[2, 3] = np.nan
    with pytest.raises(StateCorruptionError) as info:
        abeta_rhs(u, np.zeros(3), AggregationParams(), triangle.prox_laplacian)
    assert (info.value.field, info.value.vertex, info.value.component) == ("abeta", 2, 3)


def test_check_finite_accepts_clean_arrays():
    check_finite("tau", np.zeros((2, 5)))

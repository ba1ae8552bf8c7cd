"""
Proprieta' di accettazione: oracolo, conservazione, forma delle curve,
leadership della corteccia entorinale e ordinamento dei casi.
"""

import numpy as np
import pytest

from oracle import naive_rhs
from proteograph.connectome_io import generate_synthetic, region_table
from proteograph.engine import CoupledModel, advance
from proteograph.neuron_health import mass
from proteograph.observables import build_record, has_interior_peak, peak_time, seed_regions
from proteograph.scenarios import initial_state, preset
from proteograph.schemas import HealthGridConfig, IntegratorConfig


def test_oracle_on_three_vertex_graph():
    graph = generate_synthetic(3, 3, 0)
    config = preset("C").model_copy(update={"health": HealthGridConfig(grid_m=8)})
    model = CoupledModel.from_config(graph, config)
    state = initial_state(config, graph)
    rng = np.random.default_rng(3)
    state.u += rng.uniform(0, 0.05, size=state.u.shape)
    state.tau += rng.uniform(0, 0.05, size=state.tau.shape)
    state.t = 4.0
    rates = model.rates(state.t, state.u, state.tau, state.f)
    reference = naive_rhs(graph, config, state.t, state.u, state.tau, state.f)
    for got, ref in zip((rates.du, rates.dtau, rates.df), reference):
        np.testing.assert_allclose(got, ref, rtol=1e-13, atol=1e-13 * np.max(np.abs(ref)))


def _fixed_run(graph, config, dt, steps):
    cfg = config.model_copy(
        update={
            "integrator": IntegratorConfig(
                mode="fixed",
                dt_init=dt,
                dt_max=dt,
                dt_min=min(dt, 1e-7),
                t_end=dt * steps,
                snapshot_interval=dt * steps / 10,
            )
        }
    )
    result = advance(CoupledModel.from_config(graph, cfg), initial_state(cfg, graph), cfg.integrator)
    return build_record(result.snapshots, region_table(graph))


# riferimento a dt/100: 100000 passi RK4, quindi nella suite lenta
@pytest.mark.parametrize("refine", [20, pytest.param(100, marks=pytest.mark.slow)])
def test_fixed_step_run_matches_fine_reference(refine):
    graph = generate_synthetic(3, 3, 0)
    config = preset("C").model_copy(update={"health": HealthGridConfig(grid_m=8)})
    dt = 0.002
    coarse = _fixed_run(graph, config, dt, 1000)
    fine = _fixed_run(graph, config, dt / refine, 1000 * refine)
    np.testing.assert_allclose(coarse.times, fine.times, rtol=1e-9)
    for got, ref in (
        (coarse.abeta, fine.abeta),
        (coarse.tau, fine.tau),
        (coarse.disease[:, None], fine.disease[:, None]),
    ):
        for k in range(ref.shape[1]):
            scale = float(np.max(np.abs(ref[:, k])))
            if scale == 0.0:
                assert not got[:, k].any()
                continue
            assert float(np.max(np.abs(got[:, k] - ref[:, k]))) <= 1e-4 * scale


@pytest.mark.slow
def test_conservation_and_positivity_case_c(acceptance_graph):
    config = preset("C")
    result = advance(
        CoupledModel.from_config(acceptance_graph, config),
        initial_state(config, acceptance_graph),
        config.integrator,
    )
    prev = None
    for snap in result.snapshots:
        np.testing.assert_allclose(mass(snap.f), 1.0, atol=1e-6)
        for arr in (snap.u, snap.tau, snap.f):
            assert arr.min() >= -1e-12
        record = build_record([snap], region_table(acceptance_graph))
        current = (record.abeta[0, 4], record.tau[0, 4], record.disease[0])
        if prev is not None:
            assert all(c >= p - 1e-10 for c, p in zip(current, prev))
        prev = current


@pytest.mark.slow
def test_curve_shapes_case_c(case_runs):
    record = case_runs["C"].record
    t = record.times

    # τ: monomeri in testa, picco interno e ordine dei picchi per taglia
    assert has_interior_peak(t, record.tau[:, 0])
    tau_peaks = [peak_time(t, record.tau[:, i]) for i in range(4)]
    assert tau_peaks == sorted(tau_peaks)

    # Aβ: gli oligomeri hanno il picco nel transitorio iniziale (scala ε),
    # i monomeri seguono F(f) e crescono finche' il danno medio resta sotto 1/2
    for i in range(1, 4):
        assert peak_time(t, record.abeta[:, i]) <= 1.0
    assert peak_time(t, record.abeta[:, 0]) == t[-1]
    assert record.abeta[-1, 0] > record.abeta[1, 0]

    # placche e grovigli arrivano a un plateau
    for series in (record.abeta, record.tau):
        assert series[-1, 4] >= 0.98 * series[:, 4].max()


@pytest.mark.slow
def test_entorhinal_cortex_leads(case_runs):
    record = case_runs["C"].record
    seeds = seed_regions(record.region_names)
    others = [j for j in range(len(record.region_names)) if j not in seeds]
    window = (record.times >= 5.0) & (record.times <= 25.0)
    lead = record.disease_regional[window][:, seeds].min(axis=1)
    rest = record.disease_regional[window][:, others].max(axis=1)
    assert np.all(lead >= rest)
    tangles = record.tau_regional[-1, :, 4]
    assert tangles[seeds].min() > tangles[others].max()


@pytest.mark.slow
def test_case_ordering(case_runs):
    final = {case: float(run.record.disease[-1]) for case, run in case_runs.items()}
    assert final["C"] >= final["D"]
    worst_ab = max(final["A"], final["B"])
    assert final["D"] >= 1.01 * worst_ab
    assert worst_ab >= 1.01 * final["E"]

    def seed_damage(case):
        record = case_runs[case].record
        return float(record.disease_regional[-1, seed_regions(record.region_names)].mean())

    assert seed_damage("B") > seed_damage("A")


@pytest.mark.slow
def test_case_mechanics_exact_zeros(case_runs):
    assert not case_runs["A"].record.tau.any()
    assert not case_runs["E"].record.abeta[:, 1:].any()

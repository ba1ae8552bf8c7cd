from __future__ import annotations

import numpy as np
import pytest
from scipy import sparse

from proteograph.config import Settings
from proteograph.connectome_io import generate_synthetic
from proteograph.graph_core import BrainGraph, build_proximity_weights
from proteograph.scenarios import CASES, preset
from proteograph.schemas import GraphSource, IntegratorConfig
from proteograph.services import simulate_case


def make_triangle() -> BrainGraph:
    """Tre vertici, il primo entorinale; pesi diversi per rompere le simmetrie."""
    coords = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.3, 0.8, 0.0]])
    conn = sparse.csr_matrix(
        np.array([[0.0, 2.0, 0.5], [2.0, 0.0, 1.0], [0.5, 1.0, 0.0]])
    )
    prox = build_proximity_weights(coords, cutoff_radius=2.0, decay_scale=1.0)
    return BrainGraph(
        coordinates=coords,
        labels=("entorhinal_L_0", "hippocampus_L_0", "amygdala_L_0"),
        region_labels=("entorhinal_L", "hippocampus_L", "amygdala_L"),
        conn_weights=conn,
        prox_weights=prox,
        seed_set=np.array([0]),
        source="triangle",
    )


@pytest.fixture
def triangle() -> BrainGraph:
    return make_triangle()


@pytest.fixture(scope="session")
def small_graph() -> BrainGraph:
    return generate_synthetic(30, 6, 3)


@pytest.fixture
def settings(tmp_path) -> Settings:
    return Settings(data=tmp_path, output_dir=tmp_path / "runs")


@pytest.fixture(scope="session")
def acceptance_graph() -> BrainGraph:
    return generate_synthetic(100, 10, 7)


@pytest.fixture(scope="session")
def case_runs(acceptance_graph):
    """Casi A-E fino a t = 50 sul grafo sintetico N = 100, calcolati una volta sola."""
    runs = {}
    for case in CASES:
        config = preset(case).model_copy(
            update={
                "graph": GraphSource(num_vertices=100, num_regions=10, rng_seed=7),
                "integrator": IntegratorConfig(),
            }
        )
        runs[case] = simulate_case(config, acceptance_graph)
    return runs

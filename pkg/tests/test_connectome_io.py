import numpy as np
import pytest

from proteograph.connectome_io import (
    RegionTable,
    detect_seed,
    export_edge_csv,
    generate_synthetic,
    is_connected,
    load_edge_csv,
    load_graph,
    load_graphml,
    region_key,
    region_table,
)
from proteograph.errors import GraphError, GraphParseError
from proteograph.schemas import GraphSource

GRAPHML = """<?xml version="1.0" encoding="UTF-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <key id="d0" for="node" attr.name="dn_name" attr.type="string"/>
  <key id="d1" for="node" attr.name="dn_position_x" attr.type="double"/>
  <key id="d2" for="node" attr.name="dn_position_y" attr.type="double"/>
  <key id="d3" for="node" attr.name="dn_position_z" attr.type="double"/>
  <key id="d4" for="edge" attr.name="number_of_fibers" attr.type="string"/>
  <graph edgedefault="undirected">
    <node id="n0"><data key="d0">lh.entorhinal_1</data><data key="d1">0</data><data key="d2">0</data><data key="d3">0</data></node>
    <node id="n1"><data key="d0">lh.entorhinal_2</data><data key="d1">1</data><data key="d2">0</data><data key="d3">0</data></node>
    <node id="n2"><data key="d0">lh.precuneus_1</data><data key="d1">0</data><data key="d2">1</data><data key="d3">0</data></node>
    <node id="n3"><data key="d0">rh.precuneus_1</data><data key="d1">1</data><data key="d2">1</data><data key="d3">0</data></node>
    <edge id="e0" source="n0" target="n1"><data key="d4">{w01}</data></edge>
    <edge id="e1" source="n1" target="n2"><data key="d4">3</data></edge>
    <edge id="e2" source="n2" target="n3"><data key="d4">2</data></edge>
    <edge id="e3" source="n3" target="n0"><data key="d4">1</data></edge>
    <edge id="e4" source="n2" target="n2"><data key="d4">7</data></edge>
  </graph>
</graphml>
"""


def _write_graphml(tmp_path, w01="5"):
    path = tmp_path / "brain.graphml"
    path.write_text(GRAPHML.format(w01=w01), encoding="utf-8")
    return path


@pytest.mark.parametrize(
    "label, merge, expected",
    [
        ("entorhinal_L_3", False, "entorhinal_L"),
        ("entorhinal_L_3", True, "entorhinal"),
        ("lh.precuneus.12", False, "lh.precuneus"),
        ("lh.precuneus.12", True, "precuneus"),
        ("ctx-rh-insula", True, "ctx_insula"),
        ("Left-Hippocampus", False, "Left-Hippocampus"),
    ],
)
def test_region_key(label, merge, expected):
    assert region_key(label, merge) == expected


def test_region_table_keeps_first_appearance_order():
    table = RegionTable.from_labels(["b", "a", "b", "c", "a"])
    assert table.names == ("b", "a", "c")
    assert table.sizes.tolist() == [2, 2, 1]
    assert table.members(1).tolist() == [1, 4]
    assert RegionTable.from_labels(["entorhinal_L", "x", "Entorhinal_R"]).matching("ENTORHINAL") == [0, 2]


def test_region_table_rejects_duplicates():
    with pytest.raises(GraphError):
        RegionTable(("a", "a"), np.array([0, 1]))


def test_detect_seed_is_case_insensitive():
    assert detect_seed(["lh.Entorhinal_1", "x", "ENTORHINAL"], ["entorhinal"]).tolist() == [0, 2]


def test_load_graphml(tmp_path, settings):
    graph = load_graphml(_write_graphml(tmp_path), settings=settings)
    assert graph.num_vertices == 4
    assert graph.labels[0] == "lh.entorhinal_1"
    assert graph.seed_set.tolist() == [0, 1]
    conn = graph.conn_weights.toarray()
    assert conn[0, 1] == conn[1, 0] == 5.0
    # il self-loop e' stato scartato
    assert conn[2, 2] == 0.0
    assert graph.num_edges("connectivity") == 4
    assert region_table(graph).names == ("lh.entorhinal", "lh.precuneus", "rh.precuneus")


def test_load_graphml_merges_hemispheres(tmp_path, settings):
    graph = load_graphml(_write_graphml(tmp_path), merge_hemispheres=True, settings=settings)
    assert region_table(graph).names == ("entorhinal", "precuneus")


def test_graphml_non_numeric_weight_names_edge(tmp_path, settings):
    with pytest.raises(GraphParseError, match="e0"):
        load_graphml(_write_graphml(tmp_path, w01="abc"), settings=settings)


def test_graphml_missing_attribute(tmp_path, settings):
    path = tmp_path / "broken.graphml"
    path.write_text(
        GRAPHML.format(w01="5").replace('<data key="d1">1</data>', "", 1), encoding="utf-8"
    )
    with pytest.raises(GraphParseError, match="n1.*dn_position_x"):
        load_graphml(path, settings=settings)


def test_graphml_unparsable_file(tmp_path, settings):
    path = tmp_path / "garbage.graphml"
    path.write_text("<graphml><graph", encoding="utf-8")
    with pytest.raises(GraphParseError):
        load_graphml(path, settings=settings)


def _write_csv(tmp_path, edges: str):
    nodes = tmp_path / "nodes.csv"
    nodes.write_text(
        "id,label,x,y,z\n"
        "a,entorhinal_L_0,0,0,0\n"
        "b,hippocampus_L_0,1,0,0\n"
        "c,amygdala_L_0,0,1,0\n",
        encoding="utf-8",
    )
    edge_path = tmp_path / "edges.csv"
    edge_path.write_text("src,dst,weight\n" + edges, encoding="utf-8")
    return nodes, edge_path


def test_load_edge_csv_sums_duplicates(tmp_path, settings):
    nodes, edges = _write_csv(tmp_path, "a,b,1.5\nb,a,0.5\nb,c,1\nc,a,2\n")
    graph = load_edge_csv(nodes, edges, settings=settings)
    conn = graph.conn_weights.toarray()
    assert conn[0, 1] == conn[1, 0] == 2.0
    assert graph.seed_set.tolist() == [0]


def test_load_edge_csv_dangling_endpoint_names_row(tmp_path, settings):
    nodes, edges = _write_csv(tmp_path, "a,b,1\nb,zz,1\n")
    with pytest.raises(GraphParseError, match="row 3.*'zz'"):
        load_edge_csv(nodes, edges, settings=settings)


def test_load_edge_csv_negative_weight(tmp_path, settings):
    nodes, edges = _write_csv(tmp_path, "a,b,1\nb,c,-2\nc,a,1\n")
    with pytest.raises(GraphParseError, match="row 3"):
        load_edge_csv(nodes, edges, settings=settings)


def test_load_edge_csv_non_numeric_weight(tmp_path, settings):
    nodes, edges = _write_csv(tmp_path, "a,b,1\nb,c,many\n")
    with pytest.raises(GraphParseError, match="row 3: weight 'many'"):
        load_edge_csv(nodes, edges, settings=settings)


def test_export_and_reload_csv_is_exact(tmp_path, small_graph, settings):
    nodes, edges = tmp_path / "n.csv", tmp_path / "e.csv"
    export_edge_csv(small_graph, nodes, edges)
    again = load_edge_csv(nodes, edges, settings=settings)
    assert again.labels == small_graph.labels
    np.testing.assert_array_equal(again.coordinates, small_graph.coordinates)
    assert (again.conn_weights != small_graph.conn_weights).nnz == 0


def test_synthetic_graph_is_deterministic_and_connected():
    g1 = generate_synthetic(40, 8, 5)
    g2 = generate_synthetic(40, 8, 5)
    assert (g1.conn_weights != g2.conn_weights).nnz == 0
    np.testing.assert_array_equal(g1.coordinates, g2.coordinates)
    assert is_connected(g1.conn_weights)
    table = region_table(g1)
    assert table.num_regions == 8
    assert table.names[:2] == ("entorhinal_L", "entorhinal_R")
    assert all(g1.labels[v].startswith("entorhinal") for v in g1.seed_set)
    assert g1.seed_set.size == table.sizes[:2].sum()


def test_synthetic_graph_changes_with_seed():
    g1 = generate_synthetic(40, 8, 5)
    g2 = generate_synthetic(40, 8, 6)
    assert not np.array_equal(g1.coordinates, g2.coordinates)


def test_synthetic_graph_rejects_tiny_inputs():
    with pytest.raises(ValueError):
        generate_synthetic(10, 2, 0)
    with pytest.raises(ValueError):
        generate_synthetic(4, 5, 0)


def test_load_graph_dispatch(tmp_path, settings):
    graph = load_graph(GraphSource(num_vertices=20, num_regions=4, rng_seed=1), settings)
    assert graph.num_vertices == 20
    _write_graphml(tmp_path)
    # path relativo: risolto rispetto a PROTEOGRAPH_DATA (qui tmp_path)
    graph = load_graph(GraphSource(kind="graphml", path="brain.graphml"), settings)
    assert graph.num_vertices == 4


@pytest.mark.parametrize("seed", [0, 1, 2, 11])
def test_smallest_synthetic_graph(seed):
    graph = generate_synthetic(3, 3, seed)
    table = region_table(graph)
    assert table.num_regions == 3
    assert list(table.sizes) == [1, 1, 1]
    # un arco per ogni coppia di regioni
    assert graph.conn_weights.nnz == 6
    assert is_connected(graph.conn_weights)
    assert list(graph.seed_set) == [0, 1]

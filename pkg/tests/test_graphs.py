import numpy as np
import pytest

from cubekit.graphs import (
    DisconnectedGraphError,
    GraphError,
    UnitGraph,
    all_pairs_distances,
    are_isomorphic,
    complete_bipartite_graph,
    cycle_graph,
    grid_graph,
    hypercube_graph,
    path_graph,
    random_tree,
    spider_graph,
    star_graph,
    verify_isomorphism,
)
from helpers import oracle_all_dists


def test_path_distance():
    d = all_pairs_distances(path_graph(3))
    assert d[0, 2] == 2 and d[2, 0] == 2 and d[1, 1] == 0


def test_single_vertex():
    d = all_pairs_distances(UnitGraph(1, ()))
    assert d.shape == (1, 1) and d[0, 0] == 0


def test_cube_antipodal_matches_bfs_oracle():
    g = hypercube_graph(3)
    d = all_pairs_distances(g)
    oracle = oracle_all_dists(g.n, g.edges)
    assert (d == np.array(oracle)).all()
    assert d[0, 7] == 3


def test_distance_matrix_symmetric_zero_diagonal():
    for g in [grid_graph(3, 4), cycle_graph(7), spider_graph(3, 2)]:
        d = all_pairs_distances(g)
        assert (d == d.T).all()
        assert (np.diag(d) == 0).all()


def test_disconnected_raises_with_witness():
    g = UnitGraph(4, ((0, 1), (2, 3)))
    with pytest.raises(DisconnectedGraphError) as exc:
        all_pairs_distances(g)
    assert {exc.value.u, exc.value.v} <= {0, 1, 2, 3}


def test_rejects_loops_and_multi_edges():
    with pytest.raises(GraphError):
        UnitGraph(2, ((0, 0),))
    with pytest.raises(GraphError):
        UnitGraph(2, ((0, 1), (1, 0)))
    with pytest.raises(GraphError):
        UnitGraph(2, ((0, 2),))


def test_fixture_shapes():
    assert len(grid_graph(3, 3).edges) == 12
    assert hypercube_graph(4).n == 16
    assert len(hypercube_graph(4).edges) == 32
    assert star_graph(5).degree(0) == 5
    assert complete_bipartite_graph(2, 3).n == 5
    assert spider_graph(3, 4).n == 13
    rng = np.random.default_rng(0)
    t = random_tree(30, rng)
    assert t.is_tree()


def test_induced_subgraph():
    g = grid_graph(3, 3)
    sub, index = g.induced_subgraph([0, 1, 2, 5])
    assert sub.n == 4
    assert len(sub.edges) == 3
    assert index[5] == 3


def test_json_roundtrip():
    g = grid_graph(2, 4)
    assert UnitGraph.from_dict(g.to_dict()) == g
    labelled = UnitGraph(2, ((0, 1),), labels=("a", "b"))
    assert UnitGraph.from_dict(labelled.to_dict()) == labelled


def test_isomorphism():
    assert are_isomorphic(cycle_graph(4), hypercube_graph(2))
    assert not are_isomorphic(path_graph(4), star_graph(3))
    assert are_isomorphic(grid_graph(3, 5), grid_graph(5, 3))
    mapping = {v: v for v in range(6)}
    assert verify_isomorphism(cycle_graph(6), cycle_graph(6), mapping)
    assert not verify_isomorphism(path_graph(3), path_graph(3), {0: 0, 1: 1, 2: 1})

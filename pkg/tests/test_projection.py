from fractions import Fraction

import numpy as np
import pytest

from cubekit.fixtures import (
    chain_system,
    p1_violation_system,
    random_axes_system,
    tripod_system,
    two_piece_system,
)
from cubekit.graphs import path_graph, spider_graph
from cubekit.projection import (
    ProjectionError,
    ProjectionSystem,
    QuasitreeParameterError,
    axes_in_tree_system,
    build_quasitree,
    check_bbf_distance_formula,
    fit_lower_threshold,
    flat_distance,
    flat_projection,
    flat_sum,
    piece_embedding_check,
    verify_projection_axioms,
)


# --- axiom verification ---------------------------------------------------


def test_two_pieces_theta_is_max_diameter():
    pieces = (path_graph(6), path_graph(6))
    proj = {(0, 1): frozenset([1, 3]), (1, 0): frozenset([0])}
    rep = verify_projection_axioms(ProjectionSystem(pieces, proj, 2))
    assert rep.p0_max == 2
    assert rep.theta_min == 2  # no triples, so (P1) is vacuous
    assert rep.ok and not rep.p1_violations


def test_missing_projection_entry():
    with pytest.raises(ProjectionError, match="missing"):
        ProjectionSystem((path_graph(2), path_graph(2)), {(0, 1): frozenset([0])}, 0)


def test_axes_in_tree_axioms_pass():
    s = random_axes_system(120, 5, seed=2)
    rep = verify_projection_axioms(s)
    assert rep.ok
    assert rep.theta_min == s.theta


def test_p1_violation_flagged():
    s = p1_violation_system()
    rep = verify_projection_axioms(s)
    assert not rep.ok
    assert rep.p1_violations
    # the violating triple names piece 0 and piece 1 as loud middles
    mids = {t[1] for t in rep.p1_violations} | {t[2] for t in rep.p1_violations}
    assert 0 in mids and 1 in mids
    assert rep.theta_min == 10


def test_p2_census_reported():
    rep = verify_projection_axioms(chain_system(12))
    assert rep.p2_counts[(0, 2)] == 1  # piece B is loud for the pair (A, C)


def test_p1_second_largest_consequence():
    s = random_axes_system(80, 4, seed=3)
    rep = verify_projection_axioms(s)
    for i in range(s.count):
        for j in range(i + 1, s.count):
            for l in range(j + 1, s.count):
                vals = sorted(
                    [s.dpi(i, j, l), s.dpi(j, i, l), s.dpi(l, i, j)], reverse=True
                )
                assert vals[1] <= s.theta


# --- axes fixtures -----------------------------------------------------------


def test_disjoint_edges_of_spider():
    tree = spider_graph(2, 2)
    s = axes_in_tree_system(tree, [[1, 2], [3, 4]])
    assert s.proj[(0, 1)] == frozenset([0])  # the center-adjacent vertex
    assert s.proj[(1, 0)] == frozenset([0])
    assert s.theta == 0


def test_tripod_projections_are_center():
    s = tripod_system(4)
    assert s.theta == 0
    for (i, j), sub in s.proj.items():
        assert sub == frozenset([0])


def test_axes_rejects_bad_input():
    from cubekit.graphs import cycle_graph

    tree = spider_graph(2, 2)
    with pytest.raises(ProjectionError, match="tree"):
        axes_in_tree_system(cycle_graph(4), [[0, 1], [2, 3]])
    with pytest.raises(ProjectionError, match="geodesic|adjacent"):
        axes_in_tree_system(tree, [[1, 0, 2], [2, 4]])
    with pytest.raises(ProjectionError, match="coincide"):
        axes_in_tree_system(tree, [[1, 2], [2, 1]])


# --- quasitree assembly --------------------------------------------------------


def test_two_piece_single_attachment():
    s = two_piece_system(5, 7, 2, 3)
    q = build_quasitree(s, K=1, L=1)
    assert q.attachments == ((0, 1),)
    assert q.connected
    # the L-edge joins the two projection points
    assert q.dist(q.global_id(0, 2), q.global_id(1, 3)) == 1


def test_tripod_all_attached():
    s = tripod_system(3)
    q = build_quasitree(s, K=5, L=1)
    assert q.attachments == ((0, 1), (0, 2), (1, 2))
    # leaf of piece 0 to leaf of piece 1: 3 along, 1 across, 3 along
    assert q.dist(q.global_id(0, 3), q.global_id(1, 3)) == 7


def test_chain_gate_blocks_far_pair():
    s = chain_system(12)
    q = build_quasitree(s, K=5, L=1)
    assert (0, 2) not in q.attachments
    assert (0, 1) in q.attachments and (1, 2) in q.attachments
    # the A -> C route runs through B
    d = q.dist(q.global_id(0, 0), q.global_id(2, 0))
    assert d == 1 + 12 + 1


def test_refuses_k_below_theta():
    s = p1_violation_system()  # declared theta = 1
    with pytest.raises(QuasitreeParameterError):
        build_quasitree(s, K=0, L=1)


def test_edges_monotone_in_k():
    s = chain_system(9)
    q_small = build_quasitree(s, K=2, L=1)
    q_big = build_quasitree(s, K=20, L=1)
    assert set(q_small.attachments) <= set(q_big.attachments)


def test_fractional_length():
    s = two_piece_system(4, 4)
    q = build_quasitree(s, K=1, L=Fraction(3, 2))
    assert q.dist(q.global_id(0, 0), q.global_id(1, 0)) == Fraction(3, 2)


# --- flat projections and distances -------------------------------------------


@pytest.fixture(scope="module")
def tripod_q():
    return build_quasitree(tripod_system(4), K=5, L=1)


def test_flat_projection_identity(tripod_q):
    x = tripod_q.global_id(0, 2)
    assert flat_projection(tripod_q, 0, x) == frozenset([x])


def test_flat_projection_table(tripod_q):
    x = tripod_q.global_id(1, 3)
    assert flat_projection(tripod_q, 0, x) == frozenset(
        tripod_q.global_id(0, v) for v in tripod_q.system.proj[(0, 1)]
    )


def test_flat_projection_domain_checks(tripod_q):
    with pytest.raises(ProjectionError):
        flat_projection(tripod_q, 9, 0)
    with pytest.raises(ProjectionError):
        flat_projection(tripod_q, 0, 10**6)


def test_flat_distance_cases(tripod_q):
    a = tripod_q.global_id(0, 1)
    b = tripod_q.global_id(0, 4)
    assert flat_distance(tripod_q, 0, a, a) == 0
    assert flat_distance(tripod_q, 0, a, b) == 3  # within-piece distance
    c = tripod_q.global_id(1, 2)
    d = tripod_q.global_id(2, 2)
    # both project to the center of piece 0
    assert flat_distance(tripod_q, 0, c, d) == 0


def test_flat_distance_symmetric_triangle(tripod_q):
    rng = np.random.default_rng(12)
    theta = tripod_q.system.theta
    for _ in range(40):
        x, y, z = (int(v) for v in rng.integers(0, tripod_q.n, size=3))
        for U in range(3):
            dxy = flat_distance(tripod_q, U, x, y)
            assert dxy == flat_distance(tripod_q, U, y, x)
            assert flat_distance(tripod_q, U, x, x) == 0
            assert dxy <= (
                flat_distance(tripod_q, U, x, z)
                + flat_distance(tripod_q, U, z, y)
                + 2 * theta
            )


# --- the distance formula -------------------------------------------------------


def test_df_trivial_diagonal(tripod_q):
    rep = check_bbf_distance_formula(tripod_q, Kprime=6, samples=[(0, 0)])
    assert rep.all_lower_ok and rep.all_upper_ok
    assert rep.samples[0].true_distance == 0


def test_df_two_piece():
    s = two_piece_system(9, 9, 4, 4)
    q = build_quasitree(s, K=1, L=1)
    pairs = [(a, b) for a in range(q.n) for b in range(q.n)]
    rep = check_bbf_distance_formula(q, Kprime=2, samples=pairs)
    assert rep.all_lower_ok and rep.all_upper_ok


def test_df_axes_in_tree_random_pairs():
    s = random_axes_system(150, 6, seed=4)
    q = build_quasitree(s, K=max(4 * s.theta + 2, 4), L=1)
    rng = np.random.default_rng(13)
    pairs = [(int(a), int(b)) for a, b in rng.integers(0, q.n, size=(60, 2))]
    kprime = fit_lower_threshold(q, pairs)
    assert kprime is not None and q.K < kprime <= 20 * q.K
    rep = check_bbf_distance_formula(q, Kprime=kprime, samples=pairs)
    assert rep.all_lower_ok and rep.all_upper_ok
    assert rep.max_lower_ratio <= 2


def test_df_rejects_bad_kprime(tripod_q):
    with pytest.raises(ProjectionError):
        check_bbf_distance_formula(tripod_q, Kprime=tripod_q.K, samples=[(0, 1)])


def test_flat_sum_threshold():
    s = chain_system(12)
    q = build_quasitree(s, K=5, L=1)
    a = q.global_id(0, 0)
    c = q.global_id(2, 0)
    # only the middle piece exceeds the threshold for the far pair
    assert flat_sum(q, a, c, 6) == 12


# --- piece embeddings ------------------------------------------------------------


def test_single_piece_embedding():
    s = ProjectionSystem((path_graph(5),), {}, 0)
    q = build_quasitree(s, K=0, L=1)
    rep = piece_embedding_check(q, 0)
    assert rep.isometric and rep.totally_geodesic


def test_two_piece_embedding_large_l():
    s = two_piece_system(6, 6, 2, 2)
    q = build_quasitree(s, K=1, L=4)
    for U in (0, 1):
        rep = piece_embedding_check(q, U)
        assert rep.isometric and rep.totally_geodesic


def test_tripod_embedding(tripod_q):
    for U in range(3):
        rep = piece_embedding_check(tripod_q, U)
        assert rep.isometric and rep.totally_geodesic


# --- serialization -----------------------------------------------------------------


def test_system_json_roundtrip():
    s = tripod_system(3)
    assert ProjectionSystem.from_dict(s.to_dict()).proj == s.proj


def test_quasitree_json_roundtrip(tripod_q):
    import json

    d = tripod_q.to_dict()
    blob = json.dumps(d, sort_keys=True)
    from cubekit.projection import QuasiTreeSpace

    q2 = QuasiTreeSpace.from_dict(json.loads(blob))
    assert q2.edges == tripod_q.edges
    assert q2.attachments == tripod_q.attachments

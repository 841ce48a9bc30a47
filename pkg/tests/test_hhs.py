import dataclasses
import itertools

import numpy as np
import pytest

from cubekit.fixtures import (
    identity_instance,
    product_of_lines,
    spider_with_axes,
    tree_with_axes,
)
from cubekit.graphs import grid_graph, path_graph
from cubekit.hhs import (
    REL_ORTH,
    REL_TRANS,
    Domain,
    HHSInstance,
    InstanceError,
    OrderNotTotalError,
    check_consistent_tuple,
    distance_formula_fit,
    find_bbf_colouring,
    hhs_median,
    is_hierarchically_quasiconvex,
    is_hierarchy_path,
    is_unparametrised_quasigeodesic,
    product_region,
    projection_sum,
    relevant_domains,
    theta_hull,
    validate_instance,
)
from helpers import grid_v, lex_geodesic, oracle_unparam_qg


@pytest.fixture(scope="module")
def grid9():
    return product_of_lines(9)


@pytest.fixture(scope="module")
def spider():
    return spider_with_axes(6, 8)


# --- validation ---------------------------------------------------------------


def test_product_of_lines_valid_with_e_zero(grid9):
    diag = validate_instance(grid9)
    assert diag.ok and diag.E_min == 0 and grid9.E == 0


def test_missing_rho_diagnosed(spider):
    broken = []
    for d in spider.domains:
        if d.id == "axis0":
            broken.append(dataclasses.replace(d, rho={}))
        else:
            broken.append(d)
    h = HHSInstance(spider.ambient, tuple(broken), spider.E)
    diag = validate_instance(h)
    assert not diag.ok
    bad = [f for f in diag.findings if f.check == "rho-presence" and not f.ok]
    assert bad and bad[0].witness == ("axis0", "axis1")


def test_tree_with_axes_valid_measured():
    h = tree_with_axes(40, 3, seed=11)
    diag = validate_instance(h)
    assert diag.ok
    assert diag.E_min == h.E > 0  # includes nested shadow diameters


def test_axes_only_variant_small_e():
    h = tree_with_axes(40, 3, seed=11, include_tree_domain=False)
    assert h.E <= 2
    assert validate_instance(h).ok


# --- consistency ----------------------------------------------------------------


def test_vertex_tuples_consistent(spider):
    for x in [0, 5, 20, 48]:
        b = {d.id: d.pi[x] for d in spider.domains}
        ok, pair, value = check_consistent_tuple(spider, b, spider.E)
        assert ok and value <= spider.E


def test_constructed_violation(spider):
    # far ends of two different axes: both far from the mutual rho points
    b = {d.id: frozenset([d.space.n - 1]) for d in spider.domains}
    ok, pair, value = check_consistent_tuple(spider, b, spider.E)
    assert not ok and value > 0
    assert set(pair) <= {d.id for d in spider.domains}


def test_single_domain_vacuous():
    h = identity_instance(path_graph(6))
    b = {"whole": frozenset([0])}
    ok, pair, value = check_consistent_tuple(h, b, 0)
    assert ok and value == 0


def test_tuple_shape_checks(spider):
    with pytest.raises(InstanceError):
        check_consistent_tuple(spider, {"axis0": frozenset([0])}, 1)
    full = {d.id: frozenset([0, d.space.n - 1]) for d in spider.domains}
    with pytest.raises(InstanceError, match="diameter"):
        check_consistent_tuple(spider, full, 1)


# --- relevant domains -------------------------------------------------------------


def test_relevant_empty_for_equal_points(grid9):
    assert relevant_domains(grid9, 3, 3, 2) == []


def test_relevant_single_coordinate(grid9):
    x = grid_v(0, 0, 9)
    y = grid_v(0, 8, 9)  # same row, 8 columns apart
    assert relevant_domains(grid9, x, y, 5) == ["x"]


def test_relevant_in_path_order(spider):
    # leaf of leg 0 (axis0) to leaf of leg 2 (axis1): axis0 precedes axis1
    leaf0, leaf2 = 8, 24
    assert relevant_domains(spider, leaf0, leaf2, 4) == ["axis0", "axis1"]
    assert relevant_domains(spider, leaf2, leaf0, 4) == ["axis1", "axis0"]


def test_relevant_order_invariants(spider):
    leaf0, leaf2 = 8, 24
    rel = relevant_domains(spider, leaf0, leaf2, 4)
    U, V = (spider.by_id[i] for i in rel)
    assert spider.d_U_to_set(U, leaf2, spider.rho_of(V, U)) <= spider.E
    # consistency forces the mirrored inequality at the other end
    assert spider.d_U_to_set(V, leaf0, spider.rho_of(U, V)) <= spider.E


def test_relevant_threshold_guard(grid9):
    h = dataclasses.replace(grid9, E=1)
    with pytest.raises(InstanceError, match="below"):
        relevant_domains(h, 0, 1, 5)


# --- distance formula ---------------------------------------------------------------


def test_df_product_of_lines_constants(grid9):
    s = 3
    pairs = list(itertools.combinations(range(0, 81, 5), 2))
    fit = distance_formula_fit(grid9, s, pairs)
    D = grid9.dist
    # the paper-shaped constants A=2, B=2s suffice on the grid ...
    for (x, y), d, total in fit.samples:
        assert d <= 2 * total + 2 * s
        assert total / 2 - 2 * s <= d
    # ... and the canonical fit is no worse
    assert fit.A <= 2
    assert fit.B <= 2 * s


def test_df_identity_instance():
    h = identity_instance(path_graph(30))
    pairs = [(0, 29), (0, 1), (3, 3), (5, 9), (0, 4)]
    fit = distance_formula_fit(h, 4, pairs)
    assert fit.A == 1 and fit.B == 4


def test_df_spider_finite(spider):
    rng = np.random.default_rng(21)
    pairs = [(int(a), int(b)) for a, b in rng.integers(0, spider.n, size=(100, 2))]
    fit = distance_formula_fit(spider, 2, pairs)
    assert fit.A >= 1 and fit.B >= 0
    for (x, y), d, total in fit.samples:
        assert total / fit.A - fit.B <= d <= fit.A * total + fit.B


# --- quasigeodesics ---------------------------------------------------------------


def test_geodesic_is_unparam_qg():
    g = path_graph(12)
    path = list(range(12))
    for D in (1, 2, 5):
        assert is_unparametrised_quasigeodesic(g, path, D)


def test_constant_path_is_qg():
    g = path_graph(5)
    assert is_unparametrised_quasigeodesic(g, [2] * 9, 1)


def test_backtracking_fails_small_d():
    g = path_graph(30)
    # out 20, back 12, out again: backtracks across more than 2*D*D for D=2
    path = list(range(21)) + list(range(19, 7, -1)) + list(range(9, 30))
    assert not is_unparametrised_quasigeodesic(g, path, 2)
    assert is_unparametrised_quasigeodesic(g, path, 13)


def test_qg_agrees_with_exhaustive_oracle():
    g = grid_graph(3, 4)
    Dm = g.distance_matrix
    dist = lambda u, v: int(Dm[u, v])
    rng = np.random.default_rng(22)
    for _ in range(25):
        walk = [int(rng.integers(0, g.n))]
        for _ in range(int(rng.integers(2, 9))):
            walk.append(int(rng.choice(g.neighbors(walk[-1]))))
        for D in (1, 2):
            assert is_unparametrised_quasigeodesic(g, walk, D) == oracle_unparam_qg(
                dist, walk, D
            )


def test_empty_path_rejected():
    with pytest.raises(InstanceError):
        is_unparametrised_quasigeodesic(path_graph(3), [], 1)


# --- hierarchy paths ---------------------------------------------------------------


def test_staircase_is_hierarchy_path(grid9):
    path = [grid_v(0, 0, 9)]
    for i in range(1, 9):
        path.append(grid_v(i - 1, i, 9))
        path.append(grid_v(i, i, 9))
    ok, bad = is_hierarchy_path(grid9, path, 2)
    assert ok and bad is None


def test_coordinate_redo_fails(grid9):
    # walk a row out 6, back 6, out again: the row shadow backtracks
    row = [grid_v(0, c, 9) for c in list(range(7)) + list(range(5, -1, -1)) + list(range(1, 9))]
    ok, bad = is_hierarchy_path(grid9, row, 2)
    assert not ok and bad == "x"


def test_identity_instance_any_geodesic():
    h = identity_instance(grid_graph(4, 4))
    path = lex_geodesic(h.ambient, 0, 15)
    ok, bad = is_hierarchy_path(h, path, 1)
    assert ok


def test_non_quasigeodesic_input_rejected(grid9):
    with pytest.raises(InstanceError, match="ambient"):
        is_hierarchy_path(grid9, [0, 80], 1)


# --- product regions and hulls ---------------------------------------------------------


def test_product_region_whole_grid(grid9):
    assert product_region(grid9, "x") == frozenset(range(81))


def test_product_region_spider(spider):
    pr = product_region(spider, "axis0")
    # direct filter oracle
    expected = set()
    for x in range(spider.n):
        ok = True
        for other in ("axis1", "axis2"):
            V = spider.by_id[other]
            rho = spider.by_id["axis0"].rho[other]
            if spider.d_U_to_set(V, x, rho) > spider.E:
                ok = False
        if ok:
            expected.add(x)
    assert pr == frozenset(expected)
    assert pr  # nonempty on a healthy fixture


def test_product_region_empty_is_reported():
    # rho points placed far from every projection: the region dries up
    line = path_graph(9)
    pi = tuple(frozenset([v]) for v in range(9))
    a = Domain("a", line, pi, {"b": REL_TRANS}, {"b": frozenset([8])})
    b = Domain("b", line, pi, {"a": REL_TRANS}, {"a": frozenset([8])})
    h = HHSInstance(path_graph(9), (a, b), E=0)
    assert product_region(h, "a") == frozenset([8])
    h0 = HHSInstance(
        path_graph(9),
        (
            dataclasses.replace(a, rho={"b": frozenset([0])}),
            dataclasses.replace(b, rho={"a": frozenset([8])}),
        ),
        E=0,
    )
    # pi never sits at both ends at once: empty region, reported not raised
    region = product_region(h0, "a")
    assert region == frozenset([0])


def test_theta_hull_contains_set(grid9):
    for theta in (0, 1):
        hull = theta_hull(grid9, [7, 33], theta)
        assert {7, 33} <= hull


def test_theta_hull_opposite_corners(grid9):
    hull = theta_hull(grid9, [grid_v(0, 0, 9), grid_v(8, 8, 9)], 0)
    assert hull == frozenset(range(81))


def test_theta_hull_tree_leaves(spider):
    hull = theta_hull(spider, [8, 24], 0)
    # per-domain filter oracle
    expected = set()
    for x in range(spider.n):
        ok = True
        for dom in spider.domains:
            proj = sorted(dom.pi[8] | dom.pi[24])
            D = dom.dist
            hull_mask = set()
            for a in proj:
                for b in proj:
                    for v in range(dom.space.n):
                        if D[a, v] + D[v, b] == D[a, b]:
                            hull_mask.add(v)
            if min(D[p, sorted(hull_mask)].min() for p in dom.pi[x]) > 0:
                ok = False
        if ok:
            expected.add(x)
    assert hull == frozenset(expected)


def test_theta_hull_monotone(spider):
    h0 = theta_hull(spider, [8, 40], 0)
    h1 = theta_hull(spider, [8, 40], 1)
    assert h0 <= h1


# --- hierarchical quasiconvexity ----------------------------------------------------------


def test_whole_set_hqc(grid9):
    rep = is_hierarchically_quasiconvex(grid9, range(81), 0, {0: 0})
    assert rep.ok


def test_row_hqc(grid9):
    row = [grid_v(4, c, 9) for c in range(9)]
    rep = is_hierarchically_quasiconvex(grid9, row, 0, {0: 0, 2: 2})
    assert rep.ok


def test_two_far_rows_fail_realization(grid9):
    rows = [grid_v(0, c, 9) for c in range(9)] + [grid_v(8, c, 9) for c in range(9)]
    rep = is_hierarchically_quasiconvex(grid9, rows, 0, {0: 1})
    assert not rep.realization_ok
    kappa, x, d = rep.realization_witness
    assert d > 1  # a middle-row vertex projects into both shadows but is far


# --- colourings -------------------------------------------------------------------------


def test_colouring_all_transverse(spider):
    col = find_bbf_colouring(spider)
    assert col.chi == 1


def test_colouring_product(grid9):
    col = find_bbf_colouring(grid9)
    assert col.chi == 2


def test_colouring_tree_with_axes():
    h = tree_with_axes(40, 3, seed=11)
    col = find_bbf_colouring(h)
    assert col.chi == 2
    classes = {frozenset(c) for c in col.classes}
    assert frozenset(["tree"]) in classes
    assert frozenset(["axis0", "axis1", "axis2"]) in classes


# --- coarse medians ------------------------------------------------------------------------


def test_median_absorption(grid9):
    m, defect = hhs_median(grid9, 5, 5, 60)
    assert m == 5 and defect == 0


def test_median_grid_coordinatewise(grid9):
    x, y, z = grid_v(0, 0, 9), grid_v(2, 6, 9), grid_v(7, 3, 9)
    m, defect = hhs_median(grid9, x, y, z)
    assert defect == 0
    assert m == grid_v(2, 3, 9)  # coordinate-wise medians


def test_median_spider_defect_bounded(spider):
    rng = np.random.default_rng(23)
    for _ in range(25):
        x, y, z = (int(v) for v in rng.integers(0, spider.n, size=3))
        m, defect = hhs_median(spider, x, y, z)
        assert defect <= spider.E


def test_median_permutation_invariant(grid9):
    rng = np.random.default_rng(24)
    for _ in range(20):
        x, y, z = (int(v) for v in rng.integers(0, 81, size=3))
        base = hhs_median(grid9, x, y, z)[0]
        for p in itertools.permutations((x, y, z)):
            assert hhs_median(grid9, *p)[0] == base


# --- serialization ---------------------------------------------------------------------------


def test_instance_json_roundtrip(spider):
    d = spider.to_dict()
    h2 = HHSInstance.from_dict(d)
    assert h2.to_dict() == d
    assert h2.E == spider.E
    assert [x.id for x in h2.domains] == [x.id for x in spider.domains]


def test_projection_sum_matches_manual(grid9):
    x, y = grid_v(0, 0, 9), grid_v(5, 7, 9)
    assert projection_sum(grid9, x, y, 6) == 7
    assert projection_sum(grid9, x, y, 3) == 12

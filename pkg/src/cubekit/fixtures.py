"""Seeded fixture generators: hierarchical instances over grids, trees and
spiders, plus small projection systems used across tests and the demos.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .graphs import UnitGraph, grid_graph, path_graph, random_tree, spider_graph
from .hhs import (
    REL_CONTAINS,
    REL_NESTED,
    REL_ORTH,
    REL_TRANS,
    Domain,
    HHSInstance,
    validate_instance,
)
from .projection import ProjectionSystem, axes_in_tree_system, verify_projection_axioms


def rng_from_seed(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))


def _with_measured_E(h: HHSInstance) -> HHSInstance:
    diag = validate_instance(h)
    return dataclasses.replace(h, E=int(diag.E_min))


def product_of_lines(n: int) -> HHSInstance:
    """n x n grid as the product of its two coordinate lines; E = 0."""
    ambient = grid_graph(n, n)
    line = path_graph(n)
    pi_col = tuple(frozenset([v % n]) for v in range(n * n))
    pi_row = tuple(frozenset([v // n]) for v in range(n * n))
    dx = Domain(id="x", space=line, pi=pi_col, rel={"y": REL_ORTH}, rho={})
    dy = Domain(id="y", space=line, pi=pi_row, rel={"x": REL_ORTH}, rho={})
    return _with_measured_E(HHSInstance(ambient=ambient, domains=(dx, dy), E=0))


def identity_instance(g: UnitGraph) -> HHSInstance:
    """Single domain whose space is the ambient graph and pi the identity."""
    dom = Domain(
        id="whole",
        space=g,
        pi=tuple(frozenset([v]) for v in range(g.n)),
        rel={},
        rho={},
    )
    return _with_measured_E(HHSInstance(ambient=g, domains=(dom,), E=0))


def _tree_gates(tree: UnitGraph, line: list[int]) -> list[int]:
    D = tree.distance_matrix
    gates = []
    for v in range(tree.n):
        d = D[v, line]
        hits = np.flatnonzero(d == d.min())
        assert len(hits) == 1, "line is not gated"
        gates.append(line[int(hits[0])])
    return gates


def _axes_domains(tree: UnitGraph, axes: list[list[int]]) -> list[Domain]:
    k = len(axes)
    locals_ = [{v: t for t, v in enumerate(a)} for a in axes]
    gates = [_tree_gates(tree, a) for a in axes]
    doms = []
    for i, axis in enumerate(axes):
        pi = tuple(frozenset([locals_[i][gates[i][v]]]) for v in range(tree.n))
        rel = {f"axis{j}": REL_TRANS for j in range(k) if j != i}
        rho = {}
        for j in range(k):
            if j == i:
                continue
            rho[f"axis{j}"] = frozenset(locals_[j][gates[j][v]] for v in axis)
        doms.append(
            Domain(id=f"axis{i}", space=path_graph(len(axis)), pi=pi, rel=rel, rho=rho)
        )
    return doms


def spider_with_axes(legs: int, leg_length: int, include_tree_domain: bool = False) -> HHSInstance:
    """Spider tree whose axes pair up consecutive legs through the center.

    With an even number of legs the axes are pairwise transverse leaf-to-leaf
    geodesics meeting only at the center, so every measured constant is zero.
    """
    if legs % 2:
        raise ValueError("need an even number of legs")
    tree = spider_graph(legs, leg_length)
    leg = lambda i: [0] + [1 + i * leg_length + t for t in range(leg_length)]
    axes = []
    for i in range(0, legs, 2):
        left = leg(i)
        right = leg(i + 1)
        axes.append(list(reversed(left[1:]))[: leg_length] + [0] + right[1:])
    doms = _axes_domains(tree, axes)
    if include_tree_domain:
        doms = _add_tree_domain(tree, axes, doms)
    return _with_measured_E(HHSInstance(ambient=tree, domains=tuple(doms), E=0))


def _add_tree_domain(tree: UnitGraph, axes: list[list[int]], doms: list[Domain]) -> list[Domain]:
    k = len(axes)
    locals_ = [{v: t for t, v in enumerate(a)} for a in axes]
    gates = [_tree_gates(tree, a) for a in axes]
    out = []
    for i, d in enumerate(doms):
        rel = dict(d.rel)
        rel["tree"] = REL_NESTED
        rho = dict(d.rho)
        rho["tree"] = frozenset(axes[i])
        out.append(dataclasses.replace(d, rel=rel, rho=rho))
    tree_dom = Domain(
        id="tree",
        space=tree,
        pi=tuple(frozenset([v]) for v in range(tree.n)),
        rel={f"axis{i}": REL_CONTAINS for i in range(k)},
        rho={},
        rho_map={
            f"axis{i}": tuple(frozenset([locals_[i][gates[i][v]]]) for v in range(tree.n))
            for i in range(k)
        },
    )
    return out + [tree_dom]


def tree_with_axes(
    n: int,
    k_axes: int,
    seed: int,
    include_tree_domain: bool = True,
    overlap_cap: int = 2,
    min_length: int = 3,
) -> HHSInstance:
    """Random tree with k leaf-to-leaf geodesic axes of small pairwise overlap.

    The axes are pairwise transverse domains; with include_tree_domain the
    whole tree joins as a domain containing each axis (its measured constant
    then includes the axis diameters).
    """
    rng = rng_from_seed(seed)
    tree = random_tree(n, rng)
    D = tree.distance_matrix
    leaves = [v for v in range(n) if tree.degree(v) == 1]
    axes: list[list[int]] = []
    attempts = 0
    while len(axes) < k_axes and attempts < 400:
        attempts += 1
        a, b = (int(x) for x in rng.choice(leaves, size=2, replace=False))
        if D[a, b] < min_length:
            continue
        path = _tree_geodesic(tree, a, b)
        if any(set(path) == set(ax) for ax in axes):
            continue
        ok = True
        for ax in axes:
            for line, other in ((ax, path), (path, ax)):
                gset = {_gate_on(D, line, v) for v in other}
                idx = sorted(gset)
                if len(idx) > 1 and int(D[np.ix_(idx, idx)].max()) > overlap_cap:
                    ok = False
        if not ok:
            continue
        gated = all(
            len(np.flatnonzero(D[v, path] == D[v, path].min())) == 1 for v in range(n)
        )
        if not gated:
            continue
        axes.append(path)
    if len(axes) < k_axes:
        raise ValueError(f"could not place {k_axes} axes (got {len(axes)}); vary the seed")
    doms = _axes_domains(tree, axes)
    if include_tree_domain:
        doms = _add_tree_domain(tree, axes, doms)
    return _with_measured_E(HHSInstance(ambient=tree, domains=tuple(doms), E=0))


def _gate_on(D: np.ndarray, line: list[int], v: int) -> int:
    d = D[v, line]
    return line[int(np.flatnonzero(d == d.min())[0])]


def _tree_geodesic(tree: UnitGraph, a: int, b: int) -> list[int]:
    D = tree.distance_matrix
    path = [a]
    cur = a
    while cur != b:
        for w in tree.neighbors(cur):
            if D[w, b] == D[cur, b] - 1:
                path.append(w)
                cur = w
                break
    return path


# ---------------------------------------------------------------------------
# projection-system fixtures


def tripod_system(leg_length: int = 4) -> ProjectionSystem:
    """Three leg-lines of a tripod; every projection is the center."""
    tree = spider_graph(3, leg_length)
    lines = [[0] + [1 + i * leg_length + t for t in range(leg_length)] for i in range(3)]
    return axes_in_tree_system(tree, lines)


def two_piece_system(len0: int, len1: int, p0: int = 0, p1: int = 0) -> ProjectionSystem:
    pieces = (path_graph(len0), path_graph(len1))
    proj = {(0, 1): frozenset([p0]), (1, 0): frozenset([p1])}
    rep = verify_projection_axioms(ProjectionSystem(pieces, proj, 0))
    return ProjectionSystem(pieces, proj, rep.theta_min)


def chain_system(middle_length: int = 12) -> ProjectionSystem:
    """A - B - C where the shadows of A and C sit at opposite ends of B."""
    pieces = (path_graph(4), path_graph(middle_length + 1), path_graph(4))
    proj = {
        (0, 1): frozenset([0]),
        (0, 2): frozenset([0]),
        (1, 0): frozenset([0]),
        (1, 2): frozenset([middle_length]),
        (2, 0): frozenset([0]),
        (2, 1): frozenset([0]),
    }
    rep = verify_projection_axioms(ProjectionSystem(pieces, proj, 0))
    return ProjectionSystem(pieces, proj, rep.theta_min)


def p1_violation_system() -> ProjectionSystem:
    """Two fat, far-apart shadow pairs on two pieces: (P1) must flag a triple."""
    pieces = (path_graph(11), path_graph(11), path_graph(3))
    proj = {
        (0, 1): frozenset([0, 1]),
        (0, 2): frozenset([9, 10]),
        (1, 0): frozenset([0, 1]),
        (1, 2): frozenset([9, 10]),
        (2, 0): frozenset([1]),
        (2, 1): frozenset([1]),
    }
    return ProjectionSystem(pieces, proj, 1)


def random_axes_system(n: int, k_lines: int, seed: int) -> ProjectionSystem:
    """Random tree with k random maximal geodesic lines, nearest-point projections."""
    rng = rng_from_seed(seed, stream=1)
    tree = random_tree(n, rng)
    D = tree.distance_matrix
    leaves = [v for v in range(n) if tree.degree(v) == 1]
    lines: list[list[int]] = []
    attempts = 0
    while len(lines) < k_lines and attempts < 600:
        attempts += 1
        a, b = (int(x) for x in rng.choice(leaves, size=2, replace=False))
        if D[a, b] < 2:
            continue
        path = _tree_geodesic(tree, a, b)
        if any(set(path) == set(l) for l in lines):
            continue
        if all(
            len(np.flatnonzero(D[v, path] == D[v, path].min())) == 1 for v in range(n)
        ):
            lines.append(path)
    if len(lines) < k_lines:
        raise ValueError(f"could not place {k_lines} lines; vary the seed")
    return axes_in_tree_system(tree, lines)

"""Hyperplane structure on median graphs: halfspaces, convex hulls,
dimension, the hull-neighbourhood bound, and the Helly property.

An edge class (hyperplane) is the set of edges inducing the same vertex
bipartition by relative distance; its two sides are convex halfspaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import UnitGraph
from .median import MedianAlgebra, interval, median_candidates


class ConvexityError(ValueError):
    pass


def _halfspace_key(mask: np.ndarray) -> bytes:
    comp = ~mask
    a, b = mask.tobytes(), comp.tobytes()
    return a if a < b else b


def edge_halfspace(D: np.ndarray, a: int, b: int) -> np.ndarray:
    """Vertices strictly closer to a than to b (a bipartition side for an edge)."""
    return D[:, a] < D[:, b]


def _edge_classes(g: UnitGraph) -> tuple[list[list[tuple[int, int]]], list[np.ndarray]]:
    D = g.distance_matrix
    classes: dict[bytes, int] = {}
    edge_lists: list[list[tuple[int, int]]] = []
    masks: list[np.ndarray] = []
    for u, v in g.edges:
        side = edge_halfspace(D, u, v)
        if (side == side[0]).all():
            raise ConvexityError(f"edge ({u},{v}) does not separate; graph not bipartite")
        key = _halfspace_key(side)
        if key not in classes:
            classes[key] = len(edge_lists)
            edge_lists.append([])
            masks.append(side if side.tobytes() == key else ~side)
        edge_lists[classes[key]].append((u, v))
    return edge_lists, masks


def crossing_dimension(g: UnitGraph) -> int:
    """Max size of a pairwise-crossing family of edge classes."""
    _, masks = _edge_classes(g)
    return _max_crossing(masks)


def _max_crossing(masks: list[np.ndarray]) -> int:
    k = len(masks)
    if k == 0:
        return 0
    cross = np.zeros((k, k), dtype=bool)
    for i in range(k):
        for j in range(i + 1, k):
            a, b = masks[i], masks[j]
            if (a & b).any() and (a & ~b).any() and (~a & b).any() and (~a & ~b).any():
                cross[i, j] = cross[j, i] = True
    import networkx as nx

    G = nx.Graph()
    G.add_nodes_from(range(k))
    G.add_edges_from(zip(*np.nonzero(np.triu(cross))))
    return max(len(c) for c in nx.find_cliques(G))


@dataclass(frozen=True)
class CubeSkeleton:
    """A median graph with its hyperplane classes and halfspace data."""

    median: MedianAlgebra
    hyperplanes: tuple[tuple[tuple[int, int], ...], ...]
    halfspaces: tuple[tuple[frozenset[int], frozenset[int]], ...]
    dimension: int

    @property
    def graph(self) -> UnitGraph:
        return self.median.graph

    @property
    def n(self) -> int:
        return self.median.n

    def halfspace_masks(self) -> list[tuple[np.ndarray, np.ndarray]]:
        out = []
        for h0, h1 in self.halfspaces:
            m0 = np.zeros(self.n, dtype=bool)
            m0[sorted(h0)] = True
            out.append((m0, ~m0))
        return out


def hyperplane_decomposition(m: MedianAlgebra) -> CubeSkeleton:
    """Group edges into parallelism classes and verify halfspace convexity."""
    g = m.graph
    edge_lists, masks = _edge_classes(g)
    halfspaces = []
    for mask in masks:
        for side in (mask, ~mask):
            ok, witness = _convex_mask(m.dist, side)
            if not ok:
                raise ConvexityError(f"halfspace not convex at {witness}")
        h0 = frozenset(int(v) for v in np.flatnonzero(mask))
        h1 = frozenset(int(v) for v in np.flatnonzero(~mask))
        if min(h1) < min(h0):
            h0, h1 = h1, h0
        halfspaces.append((h0, h1))
    dim = _max_crossing(masks)
    return CubeSkeleton(
        median=m,
        hyperplanes=tuple(tuple(sorted(e)) for e in edge_lists),
        halfspaces=tuple(halfspaces),
        dimension=dim,
    )


def _convex_mask(D: np.ndarray, mask: np.ndarray) -> tuple[bool, tuple[int, int] | None]:
    members = np.flatnonzero(mask)
    out = ~mask
    for a in members:
        rows = D[a][None, :] + D[members, :] == D[a, members][:, None]
        bad = rows & out[None, :]
        if bad.any():
            i = int(np.argmax(bad.any(axis=1)))
            return False, (int(a), int(members[i]))
    return True, None


def is_convex(m: MedianAlgebra, S) -> bool:
    """Interval-closure convexity: every geodesic between members stays inside."""
    mask = np.zeros(m.n, dtype=bool)
    mask[sorted(set(int(v) for v in S))] = True
    ok, _ = _convex_mask(m.dist, mask)
    return ok


def interval_closure(m: MedianAlgebra, S) -> frozenset[int]:
    """Fixpoint of adding all geodesic intervals between member pairs."""
    mask = np.zeros(m.n, dtype=bool)
    mask[sorted(set(int(v) for v in S))] = True
    while True:
        members = np.flatnonzero(mask)
        new = mask.copy()
        for a in members:
            rows = m.dist[a][None, :] + m.dist[members, :] == m.dist[a, members][:, None]
            new |= rows.any(axis=0)
        if (new == mask).all():
            return frozenset(int(v) for v in np.flatnonzero(mask))
        mask = new


def convex_hull(c: CubeSkeleton, S) -> frozenset[int]:
    """Intersection of all halfspaces containing S."""
    members = sorted(set(int(v) for v in S))
    if not members:
        raise ConvexityError("hull of the empty set is undefined")
    mask = np.ones(c.n, dtype=bool)
    sel = np.zeros(c.n, dtype=bool)
    sel[members] = True
    for m0, m1 in c.halfspace_masks():
        if not (sel & ~m0).any():
            mask &= m0
        elif not (sel & ~m1).any():
            mask &= m1
    return frozenset(int(v) for v in np.flatnonzero(mask))


def neighbourhood(D: np.ndarray, S, r: int) -> frozenset[int]:
    members = sorted(set(int(v) for v in S))
    return frozenset(int(v) for v in np.flatnonzero(D[:, members].min(axis=1) <= r))


@dataclass(frozen=True)
class HullBoundReport:
    verdict: bool
    max_excess: int
    radius: int
    dimension: int


def hull_neighbourhood_check(c: CubeSkeleton, Z, r: int) -> HullBoundReport:
    """Check hull(N_r(Z)) within N_{d*r}(Z) for convex Z; d = dimension."""
    members = sorted(set(int(v) for v in Z))
    if not is_convex(c.median, members):
        raise ConvexityError("Z is not convex")
    D = c.median.dist
    ball = neighbourhood(D, members, r)
    hull = convex_hull(c, ball)
    d = c.dimension
    excess = max(int(D[v, members].min()) - d * r for v in sorted(hull))
    return HullBoundReport(verdict=excess <= 0, max_excess=excess, radius=r, dimension=d)


@dataclass(frozen=True)
class HellyResult:
    found: bool
    vertex: int | None
    witness_pair: tuple[int, int] | None


def helly_intersection(c: CubeSkeleton, family) -> HellyResult:
    """Common vertex of pairwise-intersecting convex sets, or a disjoint pair.

    For up to three members the point is the median of pairwise picks; larger
    families fold the last two members into their (convex) intersection.
    """
    sets = [frozenset(int(v) for v in S) for S in family]
    for idx, S in enumerate(sets):
        if not is_convex(c.median, S):
            raise ConvexityError(f"family member {idx} is not convex")
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            if not (sets[i] & sets[j]):
                return HellyResult(False, None, (i, j))
    vertex = _helly_point(c.median, sets)
    assert all(vertex in S for S in sets)
    return HellyResult(True, vertex, None)


def _helly_point(m: MedianAlgebra, sets: list[frozenset[int]]) -> int:
    if len(sets) == 1:
        return min(sets[0])
    if len(sets) == 2:
        return min(sets[0] & sets[1])
    if len(sets) == 3:
        a = min(sets[1] & sets[2])
        b = min(sets[0] & sets[2])
        cc = min(sets[0] & sets[1])
        return m.median(a, b, cc)
    merged = sets[-2] & sets[-1]
    return _helly_point(m, sets[:-2] + [merged])


def gate(m: MedianAlgebra, S, x: int) -> int:
    """Nearest point of a convex set; unique in a median graph."""
    members = sorted(set(int(v) for v in S))
    d = m.dist[x, members]
    best = int(d.min())
    picks = [members[i] for i in np.flatnonzero(d == best)]
    return min(picks)

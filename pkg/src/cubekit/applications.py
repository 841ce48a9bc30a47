"""End of the pipeline: tree approximation of quasitrees, promotion of a
point cloud in a product of trees to a cube skeleton, the convex-image
correspondence for hierarchically quasiconvex sets, the coarse Helly
experiment, and packing counts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cubes import CubeSkeleton, helly_intersection, hyperplane_decomposition, is_convex
from .embedding import ColouredSystem, EmbeddingError, PsiImage
from .graphs import UnitGraph
from .hhs import HQCReport, HHSInstance, _setdist, is_hierarchically_quasiconvex, space_hull
from .median import (
    MedianAlgebra,
    connectify_and_close_in,
    median_bulk_on,
)
from .projection import QuasiTreeSpace


class PipelineError(ValueError):
    pass


# ---------------------------------------------------------------------------
# products of trees


class TreeProduct:
    """Virtual median graph: the product of factor trees under the l1 metric.

    Vertices are mixed-radix encoded tuples; medians are computed factorwise.
    """

    def __init__(self, factors: tuple[UnitGraph, ...]):
        for i, f in enumerate(factors):
            if not f.is_tree():
                raise PipelineError(f"factor {i} is not a tree")
        self.factors = tuple(factors)
        self.sizes = tuple(f.n for f in factors)
        self.dists = tuple(f.distance_matrix for f in factors)
        self.n = int(np.prod(self.sizes))

    def encode(self, coords) -> int:
        v = 0
        for c, s in zip(coords, self.sizes):
            v = v * s + int(c)
        return v

    def decode(self, v: int) -> tuple[int, ...]:
        out = []
        for s in reversed(self.sizes):
            out.append(v % s)
            v //= s
        return tuple(reversed(out))

    def decode_bulk(self, arr: np.ndarray) -> list[np.ndarray]:
        out = []
        rem = arr.astype(np.int64)
        for s in reversed(self.sizes):
            out.append(rem % s)
            rem = rem // s
        return list(reversed(out))

    def dist_pair(self, u: int, v: int) -> int:
        cu, cv = self.decode(u), self.decode(v)
        return int(sum(D[a, b] for D, a, b in zip(self.dists, cu, cv)))

    def neighbors(self, v: int):
        coords = self.decode(v)
        out = []
        for i, f in enumerate(self.factors):
            for w in f.neighbors(coords[i]):
                out.append(self.encode(coords[:i] + (w,) + coords[i + 1 :]))
        return sorted(out)

    def median_bulk(self, a: int, b_arr: np.ndarray, c: int) -> np.ndarray:
        ca, cc = self.decode(a), self.decode(c)
        cb = self.decode_bulk(np.asarray(b_arr, dtype=np.int64))
        meds = None
        for i, D in enumerate(self.dists):
            mi = median_bulk_on(D, ca[i], cb[i], cc[i])
            meds = mi if meds is None else meds * self.sizes[i] + mi
        return meds

    def pairwise_distances(self, verts: list[int]) -> np.ndarray:
        arrs = self.decode_bulk(np.array(verts, dtype=np.int64))
        total = np.zeros((len(verts), len(verts)), dtype=np.int64)
        for D, idx in zip(self.dists, arrs):
            total += D[np.ix_(idx, idx)]
        return total


# ---------------------------------------------------------------------------
# promotion to a cube skeleton


@dataclass(frozen=True)
class PromoteResult:
    skeleton: CubeSkeleton
    vertex_tuples: tuple[tuple[int, ...], ...]
    hausdorff: int
    one_connected: bool
    median_closed: bool
    isometric: bool
    dimension: int
    input_size: int
    closure_size: int


def promote_to_cube_complex(points, factors, C: int) -> PromoteResult:
    """Bridge and close a C-connected point set inside a product of trees;
    return the cube skeleton of the closure with its correspondence data."""
    space = TreeProduct(tuple(factors))
    enc = sorted({space.encode(p) for p in points})
    if not enc:
        raise PipelineError("no input points")
    result = connectify_and_close_in(space, space.dist_pair, enc, C)
    closure = sorted(result.closure)
    pd = space.pairwise_distances(closure)
    sub_edges = [
        (i, j)
        for i in range(len(closure))
        for j in range(i + 1, len(closure))
        if pd[i, j] == 1
    ]
    g = UnitGraph(len(closure), tuple(sub_edges))
    median = MedianAlgebra.from_graph(g)
    isometric = bool((median.dist == pd).all())
    skeleton = hyperplane_decomposition(median)
    tuples = tuple(space.decode(v) for v in closure)
    return PromoteResult(
        skeleton=skeleton,
        vertex_tuples=tuples,
        hausdorff=result.hausdorff,
        one_connected=result.one_connected,
        median_closed=True,  # closure is a fixpoint by construction
        isometric=isometric,
        dimension=skeleton.dimension,
        input_size=len(enc),
        closure_size=len(closure),
    )


# ---------------------------------------------------------------------------
# tree approximation


@dataclass(frozen=True)
class TreeApproxResult:
    tree: UnitGraph
    root: int
    additive: Fraction
    multiplicative: Fraction


def tree_approximate(q: QuasiTreeSpace, max_roots: int = 64) -> TreeApproxResult:
    """Shortest-path spanning tree minimizing the worst additive distortion
    over all pairs, greedily over candidate roots; distortion is reported,
    never assumed."""
    if not q.connected:
        raise PipelineError("quasitree space is disconnected")
    n = q.n
    mat = q.distance_matrix
    if not isinstance(mat, np.ndarray):
        raise PipelineError("tree approximation requires integer edge lengths")
    adj: dict[int, list[tuple[int, int]]] = {v: [] for v in range(n)}
    for u, v, w in q.edges:
        adj[u].append((v, int(w)))
        adj[v].append((u, int(w)))
    roots = list(range(n)) if n <= max_roots else list(range(0, n, max(1, n // max_roots)))
    best = None
    for root in roots:
        parent = [-1] * n
        order = sorted(range(n), key=lambda v: (mat[root, v], v))
        for v in order:
            if v == root:
                continue
            for u, w in sorted(adj[v]):
                if mat[root, u] + w == mat[root, v]:
                    parent[v] = u
                    break
        edges = tuple((min(v, p), max(v, p)) for v, p in enumerate(parent) if p >= 0)
        tree = UnitGraph(n, edges)
        td = tree.distance_matrix
        add = int((td - mat).max())
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(mat > 0, td / np.maximum(mat, 1), 1.0)
        mult = Fraction(ratio.max()).limit_denominator(10**6)
        if best is None or (add, mult, root) < best[:3]:
            best = (add, mult, root, tree)
    add, mult, root, tree = best
    return TreeApproxResult(tree=tree, root=root, additive=Fraction(add), multiplicative=mult)


# ---------------------------------------------------------------------------
# hierarchically quasiconvex sets <-> convex subcomplexes


@dataclass(frozen=True)
class ConvexCorrespondenceReport:
    hqc: HQCReport
    hull_sizes: tuple[int, ...]
    z_prime_size: int
    hausdorff: int
    convex: bool


def hqc_convex_correspondence(
    cs: ColouredSystem,
    psi: PsiImage,
    Z,
    trees: list[TreeApproxResult],
    k0: int | None = None,
    kfun: dict | None = None,
) -> ConvexCorrespondenceReport:
    """Compare the image of Z with the product of per-colour tree hulls."""
    h = cs.instance
    pts = sorted(set(int(v) for v in Z))
    if k0 is None:
        k0 = h.E
    if kfun is None:
        kfun = {h.E: 2 * h.E + 2}
    hqc = is_hierarchically_quasiconvex(h, pts, k0, kfun)
    hull_masks = []
    phi = []
    for ci in range(cs.chi):
        image = [psi.maps[ci][z] for z in pts]
        phi.append(image)
        tdist = trees[ci].tree.distance_matrix
        hull_masks.append(np.flatnonzero(space_hull(tdist, image)))
    convex = all(
        is_convex(MedianAlgebra.from_graph(trees[ci].tree), hull_masks[ci])
        for ci in range(cs.chi)
    )
    # Hausdorff between the image of Z and the product of hulls, in l1
    per_colour = [
        trees[ci].tree.distance_matrix[np.ix_(hull_masks[ci], phi[ci])]
        for ci in range(cs.chi)
    ]
    total = per_colour[0]
    for nxt in per_colour[1:]:
        total = (total[:, None, :] + nxt[None, :, :]).reshape(-1, nxt.shape[1])
    hausdorff = int(total.min(axis=1).max())
    return ConvexCorrespondenceReport(
        hqc=hqc,
        hull_sizes=tuple(len(m) for m in hull_masks),
        z_prime_size=int(np.prod([len(m) for m in hull_masks])),
        hausdorff=hausdorff,
        convex=convex,
    )


# ---------------------------------------------------------------------------
# coarse Helly


@dataclass(frozen=True)
class HellyExperimentResult:
    center: int
    r: int
    inflation: int
    helly_points: tuple[int, ...]
    hull_bound_ok: bool


def coarse_helly_experiment(
    cs: ColouredSystem, psi: PsiImage, sets, R: int, trees: list[TreeApproxResult]
) -> HellyExperimentResult:
    """Push pairwise-close sets through the pipeline, intersect their inflated
    convex images factorwise, and pull the common point back."""
    h = cs.instance
    DG = h.dist
    families = [sorted(set(int(v) for v in S)) for S in sets]
    for i in range(len(families)):
        for j in range(i + 1, len(families)):
            d = int(DG[np.ix_(families[i], families[j])].min())
            if d > R:
                raise EmbeddingError(
                    f"sets {i} and {j} are {d} apart, exceeding R={R}"
                )
    hulls: list[list[np.ndarray]] = []  # [colour][set] -> hull vertex array
    for ci in range(cs.chi):
        tdist = trees[ci].tree.distance_matrix
        hulls.append(
            [np.flatnonzero(space_hull(tdist, [psi.maps[ci][z] for z in S])) for S in families]
        )
    # product distance between convex images decomposes over the factors
    worst = 0
    for i in range(len(families)):
        for j in range(i + 1, len(families)):
            d = sum(
                int(trees[ci].tree.distance_matrix[np.ix_(hulls[ci][i], hulls[ci][j])].min())
                for ci in range(cs.chi)
            )
            worst = max(worst, d)
    r_infl = (worst + 1) // 2
    helly_points = []
    hull_bound_ok = True
    for ci in range(cs.chi):
        tree = trees[ci].tree
        tdist = tree.distance_matrix
        skel = hyperplane_decomposition(MedianAlgebra.from_graph(tree))
        inflated = []
        for hv in hulls[ci]:
            ball = np.flatnonzero(tdist[:, hv].min(axis=1) <= r_infl)
            hull = np.flatnonzero(space_hull(tdist, ball))
            if int(tdist[np.ix_(hull, hv)].min(axis=1).max()) > skel.dimension * r_infl:
                hull_bound_ok = False
            inflated.append(frozenset(int(v) for v in hull))
        res = helly_intersection(skel, inflated)
        if not res.found:
            raise EmbeddingError(
                f"inflated images in colour {ci} fail to intersect (pair {res.witness_pair})"
            )
        helly_points.append(res.vertex)
    # pull back: ambient vertex whose image is l1-nearest to the Helly point
    best = None
    center = -1
    for g in range(h.n):
        d = sum(
            int(trees[ci].tree.distance_matrix[psi.maps[ci][g], helly_points[ci]])
            for ci in range(cs.chi)
        )
        if best is None or d < best:
            best = d
            center = g
    r_out = max(int(DG[center, S].min()) for S in families)
    return HellyExperimentResult(
        center=center,
        r=r_out,
        inflation=r_infl,
        helly_points=tuple(helly_points),
        hull_bound_ok=hull_bound_ok,
    )


# ---------------------------------------------------------------------------
# packing


def bounded_packing_count(h: HHSInstance, family, R: int) -> tuple[int, tuple[int, ...]]:
    """Size of the largest pairwise-R-close subfamily (exact by clique search
    up to 20 members, greedy beyond); members must be pairwise disjoint."""
    sets = [sorted(set(int(v) for v in S)) for S in family]
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            overlap = set(sets[i]) & set(sets[j])
            if overlap:
                raise EmbeddingError(f"family members {i},{j} overlap at {min(overlap)}")
    DG = h.dist
    k = len(sets)
    close = np.zeros((k, k), dtype=bool)
    for i in range(k):
        for j in range(i + 1, k):
            if int(DG[np.ix_(sets[i], sets[j])].min()) <= R:
                close[i, j] = close[j, i] = True
    if k <= 20:
        import networkx as nx

        G = nx.Graph()
        G.add_nodes_from(range(k))
        G.add_edges_from(zip(*np.nonzero(np.triu(close))))
        # largest clique, ties broken lexicographically
        cliques = sorted(
            (tuple(int(v) for v in sorted(c)) for c in nx.find_cliques(G)),
            key=lambda c: (-len(c), c),
        )
        best = cliques[0] if cliques else ()
        return len(best), best
    order = sorted(range(k), key=lambda v: (-int(close[v].sum()), v))
    clique: list[int] = []
    for v in order:
        if all(close[v, u] for u in clique):
            clique.append(v)
    return len(clique), tuple(sorted(clique))

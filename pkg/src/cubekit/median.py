"""Median graphs: recognition, the ternary median operation, subalgebras,
and the connectify-and-close procedure.

The median of a triple is realized as the unique vertex in the triple
intersection of pairwise metric intervals, computed from the distance
matrix.  All subset operations are exact fixpoint computations.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .graphs import UnitGraph, all_pairs_distances


class MedianError(ValueError):
    pass


class NotMedianGraphError(MedianError):
    def __init__(self, witness: tuple[int, int, int], count: int):
        self.witness = witness
        self.count = count
        super().__init__(
            f"triple {witness} has {count} medians (exactly one required)"
        )


def _popcount_rows(a: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(a).sum(axis=-1, dtype=np.int64)
    table = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)
    return table[a].sum(axis=-1)


def interval_matrix(D: np.ndarray, x: int) -> np.ndarray:
    """Boolean matrix M[y, v] = (v lies on a geodesic from x to y)."""
    return D[x][None, :] + D == D[x][:, None]


def interval(D: np.ndarray, a: int, b: int) -> np.ndarray:
    """Boolean mask of vertices on some geodesic from a to b."""
    return D[a] + D[b] == D[a, b]


def median_candidates(D: np.ndarray, x: int, y: int, z: int) -> np.ndarray:
    """Indices of vertices lying between each pair of {x, y, z}."""
    mask = interval(D, x, y) & interval(D, y, z) & interval(D, z, x)
    return np.flatnonzero(mask)


def is_median_graph(g: UnitGraph) -> tuple[bool, tuple[int, int, int] | None]:
    """Decide medianness; on failure return a witness triple with 0 or >=2 medians.

    Bit-packed interval scan: one pass per vertex pair, vectorized over the
    third vertex.
    """
    g.require_connected()
    n = g.n
    if n <= 2:
        return True, None
    D = g.distance_matrix
    # IT[x, y] = packed bits over v of "v in I(x, y)"
    IT = np.empty((n, n, (n + 7) // 8), dtype=np.uint8)
    for x in range(n):
        IT[x] = np.packbits(interval_matrix(D, x), axis=1)
    ITT = IT.transpose(1, 0, 2).copy()
    for x in range(n):
        for y in range(x + 1, n):
            combined = IT[x, y][None, :] & IT[y] & ITT[x]
            counts = _popcount_rows(combined)
            bad = np.flatnonzero(counts[y + 1 :] != 1)
            if bad.size:
                z = int(bad[0]) + y + 1
                return False, (x, y, z)
    return True, None


@dataclass(frozen=True)
class MedianAlgebra:
    """A verified median graph together with its metric and rank."""

    graph: UnitGraph
    rank: int

    @staticmethod
    def from_graph(g: UnitGraph) -> "MedianAlgebra":
        ok, witness = is_median_graph(g)
        if not ok:
            counts = len(median_candidates(g.distance_matrix, *witness))
            raise NotMedianGraphError(witness, counts)
        from . import cubes  # rank is a hyperplane quantity; lazy to avoid a cycle

        rank = cubes.crossing_dimension(g)
        return MedianAlgebra(g, rank)

    @property
    def n(self) -> int:
        return self.graph.n

    @cached_property
    def dist(self) -> np.ndarray:
        return all_pairs_distances(self.graph)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.graph.neighbors(v)

    def median(self, x: int, y: int, z: int) -> int:
        cand = median_candidates(self.dist, x, y, z)
        if cand.size != 1:
            raise NotMedianGraphError((x, y, z), int(cand.size))
        return int(cand[0])

    def median_bulk(self, a: int, b_arr: np.ndarray, c: int) -> np.ndarray:
        """Medians m(a, b, c) for every b in b_arr, vectorized."""
        return median_bulk_on(self.dist, a, b_arr, c)


def median_bulk_on(D: np.ndarray, a: int, b_arr: np.ndarray, c: int) -> np.ndarray:
    """Medians m(a, b, c) over a distance matrix, for every b in b_arr."""
    b_arr = np.asarray(b_arr, dtype=np.int64)
    iab = D[a][None, :] + D[b_arr, :] == D[a, b_arr][:, None]
    ibc = D[b_arr, :] + D[c][None, :] == D[b_arr, c][:, None]
    iac = (D[a] + D[c] == D[a, c])[None, :]
    combined = iab & ibc & iac
    meds = np.argmax(combined, axis=1)
    if (combined.sum(axis=1) != 1).any():
        bad = int(np.flatnonzero(combined.sum(axis=1) != 1)[0])
        raise NotMedianGraphError((a, int(b_arr[bad]), c), int(combined[bad].sum()))
    return meds


def median_triple(m: MedianAlgebra, x: int, y: int, z: int) -> int:
    """The unique vertex between each pair of {x, y, z}."""
    return m.median(x, y, z)


# ---------------------------------------------------------------------------
# subalgebras
#
# The closure engine works against any object exposing median_bulk(a, b_arr, c)
# over integer vertex ids (MedianAlgebra here, the tree-product space in the
# promotion pipeline).


def closure_of(space, seed) -> frozenset[int]:
    """Smallest median-closed superset of `seed`: worklist fixpoint."""
    members = sorted(set(int(v) for v in seed))
    if not members:
        raise MedianError("closure of the empty set is undefined")
    in_set = set(members)
    queue = list(members)
    while queue:
        c = queue.pop()
        arr = np.fromiter(in_set, dtype=np.int64)
        fresh: set[int] = set()
        for a in arr:
            meds = space.median_bulk(int(a), arr, c)
            fresh.update(int(v) for v in set(meds.tolist()) - in_set)
        for v in sorted(fresh):
            in_set.add(v)
            queue.append(v)
    return frozenset(in_set)


def subalgebra_closure(m: MedianAlgebra, A) -> frozenset[int]:
    """Median-saturation fixpoint containing A; minimal by construction."""
    return closure_of(m, A)


def is_median_closed(m: MedianAlgebra, S) -> tuple[bool, tuple[int, int, int] | None]:
    members = np.array(sorted(set(int(v) for v in S)), dtype=np.int64)
    sset = set(members.tolist())
    for a in members:
        for c in members:
            if c < a:
                continue
            meds = m.median_bulk(int(a), members, int(c))
            out = set(meds.tolist()) - sset
            if out:
                bad = int(np.flatnonzero(~np.isin(meds, members))[0])
                return False, (int(a), int(members[bad]), int(c))
    return True, None


# ---------------------------------------------------------------------------
# connectivity of subsets


def connectivity_components(dist: np.ndarray, members: list[int], step: int) -> list[list[int]]:
    """Partition `members` into components of the "distance <= step" graph."""
    k = len(members)
    if k == 0:
        return []
    sub = dist[np.ix_(members, members)] <= step
    seen = [False] * k
    comps = []
    for s in range(k):
        if seen[s]:
            continue
        stack = [s]
        seen[s] = True
        comp = []
        while stack:
            i = stack.pop()
            comp.append(members[i])
            for j in np.flatnonzero(sub[i]):
                if not seen[j]:
                    seen[j] = True
                    stack.append(int(j))
        comps.append(sorted(comp))
    return comps


def is_c_connected(dist: np.ndarray, S, C: int) -> bool:
    members = sorted(set(int(v) for v in S))
    return len(connectivity_components(dist, members, C)) <= 1


def minimal_connection_constant(dist: np.ndarray, S) -> int:
    """Least C for which S is C-connected."""
    members = sorted(set(int(v) for v in S))
    if len(members) <= 1:
        return 0
    sub = dist[np.ix_(members, members)]
    for c in sorted(set(sub.flatten().tolist())):
        if c > 0 and len(connectivity_components(dist, members, int(c))) == 1:
            return int(c)
    return int(sub.max())


@dataclass(frozen=True)
class SubsetReport:
    subset: frozenset[int]
    C: int
    M: int
    is_C_connected: bool
    is_M_median: bool
    minimal_C: int
    minimal_M: int
    closure: frozenset[int]
    hausdorff_to_closure: int


def median_defect(m: MedianAlgebra, A) -> int:
    """Largest distance from a median of an A-triple back to A."""
    members = np.array(sorted(set(int(v) for v in A)), dtype=np.int64)
    worst = 0
    for a in members:
        for c in members:
            if c < a:
                continue
            meds = m.median_bulk(int(a), members, int(c))
            d = m.dist[np.ix_(meds, members)].min(axis=1).max()
            worst = max(worst, int(d))
    return worst


def median_subset_report(m: MedianAlgebra, A, C: int, M: int) -> SubsetReport:
    """Exhaustive connectivity/medianness audit of a vertex subset."""
    members = sorted(set(int(v) for v in A))
    if not members:
        raise MedianError("empty subset")
    min_c = minimal_connection_constant(m.dist, members)
    min_m = median_defect(m, members)
    closure = subalgebra_closure(m, members)
    cl = sorted(closure)
    haus = int(m.dist[np.ix_(cl, members)].min(axis=1).max())
    return SubsetReport(
        subset=frozenset(members),
        C=C,
        M=M,
        is_C_connected=min_c <= C,
        is_M_median=min_m <= M,
        minimal_C=min_c,
        minimal_M=min_m,
        closure=closure,
        hausdorff_to_closure=haus,
    )


# ---------------------------------------------------------------------------
# connectify and close


def lex_least_geodesic(space, u: int, v: int) -> list[int]:
    """Shortest u->v path choosing the least-index neighbor at every step."""
    path = [u]
    cur = u
    while cur != v:
        step = None
        for w in space.neighbors(cur):
            if space.dist_pair(w, v) == space.dist_pair(cur, v) - 1:
                if step is None or w < step:
                    step = w
        path.append(step)
        cur = step
    return path


class _GraphSpace:
    """Adapter giving MedianAlgebra the neighbor/dist protocol of the engine."""

    def __init__(self, m: MedianAlgebra):
        self.m = m

    def neighbors(self, v: int):
        return self.m.neighbors(v)

    def dist_pair(self, u: int, v: int) -> int:
        return int(self.m.dist[u, v])

    def median_bulk(self, a, b_arr, c):
        return self.m.median_bulk(a, b_arr, c)


@dataclass(frozen=True)
class ConnectifyResult:
    a_prime: frozenset[int]
    closure: frozenset[int]
    hausdorff: int
    one_connected: bool


def connectify_and_close_in(space, dist_lookup, A, C: int) -> ConnectifyResult:
    """Bridge C-close 1-connected pieces of A with geodesics, then close.

    `dist_lookup(u, v)` must return the ambient distance; `space` follows the
    engine protocol (neighbors / dist_pair / median_bulk).
    """
    members = sorted(set(int(v) for v in A))
    if not members:
        raise MedianError("empty subset")
    k = len(members)
    sub = np.array([[dist_lookup(u, v) for v in members] for u in members], dtype=np.int64)
    # maximal 1-connected pieces = components of the induced unit-step graph
    comp_id = _components_from_matrix(sub, 1)
    n_pieces = comp_id.max() + 1
    if n_pieces > 1:
        cc = _components_from_matrix(sub, C)
        if cc.max() > 0:
            i = int(np.argmax(cc == 0))
            j = int(np.argmax(cc == 1))
            raise MedianError(
                f"subset is not {C}-connected: vertices {members[i]} and {members[j]} "
                "lie in different pieces"
            )
    added: set[int] = set()
    for i in range(n_pieces):
        vi = [members[t] for t in range(k) if comp_id[t] == i]
        for j in range(n_pieces):
            if j == i:
                continue
            vj = [members[t] for t in range(k) if comp_id[t] == j]
            pairs = [(u, v) for u in vi for v in vj]
            dmin = min(dist_lookup(u, v) for u, v in pairs)
            if dmin > C:
                continue
            u, v = min((u, v) for u, v in pairs if dist_lookup(u, v) == dmin)
            added.update(lex_least_geodesic(space, u, v))
    a_prime = frozenset(members) | frozenset(added)
    closure = closure_of(space, a_prime)
    cl = sorted(closure)
    clmat = np.array([[dist_lookup(u, v) for v in cl] for u in cl], dtype=np.int64)
    one_conn = _components_from_matrix(clmat, 1).max() == 0
    haus = max(min(dist_lookup(u, v) for v in members) for u in cl)
    return ConnectifyResult(a_prime, closure, int(haus), bool(one_conn))


def _components_from_matrix(sub: np.ndarray, step: int) -> np.ndarray:
    k = sub.shape[0]
    adj = sub <= step
    comp = -np.ones(k, dtype=np.int64)
    nxt = 0
    for s in range(k):
        if comp[s] >= 0:
            continue
        stack = [s]
        comp[s] = nxt
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(adj[i]):
                if comp[j] < 0:
                    comp[j] = nxt
                    stack.append(int(j))
        nxt += 1
    return comp


def connectify_and_close(m: MedianAlgebra, A, C: int) -> ConnectifyResult:
    """The bridging procedure on a median graph; see connectify_and_close_in."""
    space = _GraphSpace(m)
    return connectify_and_close_in(space, lambda u, v: int(m.dist[u, v]), A, C)


# ---------------------------------------------------------------------------
# isometric subalgebras


def check_isometric_subalgebra(m: MedianAlgebra, Y) -> bool:
    """A 1-connected median-closed subset carries the ambient metric.

    Preconditions are verified first; violations raise with a witness.
    """
    members = sorted(set(int(v) for v in Y))
    if not members:
        raise MedianError("empty subset")
    sub = m.dist[np.ix_(members, members)]
    comp = _components_from_matrix(sub, 1)
    if comp.max() > 0:
        i = int(np.argmax(comp == 0))
        j = int(np.argmax(comp == 1))
        raise MedianError(
            f"subset not 1-connected: vertices {members[i]}, {members[j]} "
            "in different pieces"
        )
    closed, witness = is_median_closed(m, members)
    if not closed:
        raise MedianError(f"subset not median-closed: triple {witness} escapes")
    induced, index = m.graph.induced_subgraph(members)
    di = induced.distance_matrix
    return bool((di == sub).all())

"""Finite simple graphs with unit-length edges: the carrier type for everything else.

Vertices are integers 0..n-1.  Distances are geodesic edge counts, computed
once per graph and cached.  Construction rejects loops and multi-edges;
connectivity is enforced wherever a metric is needed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph


class GraphError(ValueError):
    pass


class DisconnectedGraphError(GraphError):
    """Raised when a metric is requested on a disconnected graph.

    Carries one unreachable vertex pair as a witness.
    """

    def __init__(self, u: int, v: int):
        self.u = u
        self.v = v
        super().__init__(f"graph is disconnected: no path joins vertex {u} to vertex {v}")


def _canonical_edges(n: int, edges) -> tuple[tuple[int, int], ...]:
    seen = set()
    out = []
    for e in edges:
        u, v = int(e[0]), int(e[1])
        if u == v:
            raise GraphError(f"loop at vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edge ({u},{v}) out of range for {n} vertices")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphError(f"multi-edge {key}")
        seen.add(key)
        out.append(key)
    out.sort()
    return tuple(out)


@dataclass(frozen=True)
class UnitGraph:
    """Simple undirected graph; edges all have length 1."""

    n: int
    edges: tuple[tuple[int, int], ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n <= 0:
            raise GraphError("need at least one vertex")
        object.__setattr__(self, "edges", _canonical_edges(self.n, self.edges))
        if self.labels is not None and len(self.labels) != self.n:
            raise GraphError("labels length must equal vertex count")

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbr: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nbr[u].append(v)
            nbr[v].append(u)
        return tuple(tuple(sorted(a)) for a in nbr)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    @cached_property
    def _sparse(self) -> sp.csr_matrix:
        if not self.edges:
            return sp.csr_matrix((self.n, self.n), dtype=np.int8)
        rows = [u for u, v in self.edges] + [v for u, v in self.edges]
        cols = [v for u, v in self.edges] + [u for u, v in self.edges]
        data = np.ones(len(rows), dtype=np.int8)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        """All-pairs geodesic distances (edge counts), int matrix."""
        if self.n == 1:
            return np.zeros((1, 1), dtype=np.int32)
        dist = csgraph.shortest_path(self._sparse, method="D", unweighted=True)
        if np.isinf(dist).any():
            bad = np.argwhere(np.isinf(dist))[0]
            raise DisconnectedGraphError(int(bad[0]), int(bad[1]))
        return dist.astype(np.int32)

    def is_connected(self) -> bool:
        ncomp, _ = csgraph.connected_components(self._sparse, directed=False)
        return ncomp == 1

    def require_connected(self) -> None:
        ncomp, lab = csgraph.connected_components(self._sparse, directed=False)
        if ncomp > 1:
            u = int(np.argmax(lab == 0))
            v = int(np.argmax(lab == 1))
            raise DisconnectedGraphError(u, v)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def is_tree(self) -> bool:
        return self.is_connected() and len(self.edges) == self.n - 1

    def induced_subgraph(self, vertices) -> tuple["UnitGraph", dict[int, int]]:
        """Induced subgraph plus the old->new vertex index mapping."""
        vs = sorted(set(int(v) for v in vertices))
        index = {v: i for i, v in enumerate(vs)}
        sub = [
            (index[u], index[v])
            for u, v in self.edges
            if u in index and v in index
        ]
        labels = tuple(self.labels[v] for v in vs) if self.labels is not None else None
        return UnitGraph(len(vs), tuple(sub), labels), index

    def to_dict(self) -> dict:
        d = {"n": self.n, "edges": [list(e) for e in self.edges]}
        if self.labels is not None:
            d["labels"] = list(self.labels)
        return d

    @staticmethod
    def from_dict(d: dict) -> "UnitGraph":
        labels = tuple(d["labels"]) if "labels" in d and d["labels"] is not None else None
        return UnitGraph(int(d["n"]), tuple((int(u), int(v)) for u, v in d["edges"]), labels)


def all_pairs_distances(g: UnitGraph) -> np.ndarray:
    """Geodesic edge-count matrix; raises DisconnectedGraphError on disconnected input."""
    return g.distance_matrix


# ---------------------------------------------------------------------------
# fixture constructors


def path_graph(n: int) -> UnitGraph:
    return UnitGraph(n, tuple((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> UnitGraph:
    if n < 3:
        raise GraphError("cycle needs at least 3 vertices")
    return UnitGraph(n, tuple((i, (i + 1) % n) for i in range(n)))


def grid_graph(rows: int, cols: int) -> UnitGraph:
    """rows x cols grid; vertex (r, c) has index r*cols + c."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return UnitGraph(rows * cols, tuple(edges))


def grid_index(r: int, c: int, cols: int) -> int:
    return r * cols + c


def grid_coords(v: int, cols: int) -> tuple[int, int]:
    return divmod(v, cols)


def hypercube_graph(d: int) -> UnitGraph:
    """d-cube: vertices are bitmasks, edges flip one bit."""
    n = 1 << d
    edges = [(v, v | (1 << b)) for v in range(n) for b in range(d) if not v & (1 << b)]
    return UnitGraph(n, tuple(edges))


def complete_bipartite_graph(a: int, b: int) -> UnitGraph:
    return UnitGraph(a + b, tuple((i, a + j) for i in range(a) for j in range(b)))


def star_graph(legs: int) -> UnitGraph:
    """Center vertex 0 with `legs` pendant vertices."""
    return UnitGraph(legs + 1, tuple((0, i + 1) for i in range(legs)))


def spider_graph(legs: int, leg_length: int) -> UnitGraph:
    """Center 0 with `legs` paths of `leg_length` edges attached."""
    edges = []
    nxt = 1
    for _ in range(legs):
        prev = 0
        for _ in range(leg_length):
            edges.append((prev, nxt))
            prev = nxt
            nxt += 1
    return UnitGraph(nxt, tuple(edges))


def random_tree(n: int, rng: np.random.Generator) -> UnitGraph:
    """Uniform-ish random tree: each vertex i>0 attaches to a random earlier vertex."""
    edges = tuple((int(rng.integers(0, i)), i) for i in range(1, n))
    return UnitGraph(n, edges)


def random_connected_graph(n: int, extra_edges: int, rng: np.random.Generator) -> UnitGraph:
    """Random tree plus `extra_edges` random chords (deduplicated)."""
    tree = random_tree(n, rng)
    present = set(tree.edges)
    edges = list(tree.edges)
    tries = 0
    while len(edges) < n - 1 + extra_edges and tries < 50 * (extra_edges + 1):
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        tries += 1
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in present:
            continue
        present.add(key)
        edges.append(key)
    return UnitGraph(n, tuple(edges))


# ---------------------------------------------------------------------------
# isomorphism

def are_isomorphic(g: UnitGraph, h: UnitGraph) -> bool:
    """Exact isomorphism test (VF2 via networkx; brute force for tiny inputs)."""
    if g.n != h.n or len(g.edges) != len(h.edges):
        return False
    if sorted(g.degree(v) for v in range(g.n)) != sorted(h.degree(v) for v in range(h.n)):
        return False
    if g.n <= 7:
        hset = set(h.edges)
        for perm in itertools.permutations(range(g.n)):
            if all((min(perm[u], perm[v]), max(perm[u], perm[v])) in hset for u, v in g.edges):
                return True
        return False
    import networkx as nx

    gn = nx.Graph(list(g.edges))
    gn.add_nodes_from(range(g.n))
    hn = nx.Graph(list(h.edges))
    hn.add_nodes_from(range(h.n))
    return nx.is_isomorphic(gn, hn)


def verify_isomorphism(g: UnitGraph, h: UnitGraph, mapping: dict[int, int]) -> bool:
    """Check that `mapping` is a bijection g->h preserving adjacency both ways."""
    if len(mapping) != g.n or h.n != g.n:
        return False
    if sorted(mapping.values()) != list(range(h.n)):
        return False
    hset = set(h.edges)
    mapped = {(min(mapping[u], mapping[v]), max(mapping[u], mapping[v])) for u, v in g.edges}
    return mapped == hset

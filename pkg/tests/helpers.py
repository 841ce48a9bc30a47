"""Independent brute-force oracles used to derive expected values.

Everything here is deliberately naive and self-contained: plain-Python BFS,
exhaustive triple scans, exhaustive subsequence search.  The oracles never
call into the code paths they check.
"""

from collections import deque
from itertools import combinations


def oracle_bfs(n, edges, src):
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    dist = [None] * n
    dist[src] = 0
    q = deque([src])
    while q:
        u = q.popleft()
        for w in adj[u]:
            if dist[w] is None:
                dist[w] = dist[u] + 1
                q.append(w)
    return dist


def oracle_all_dists(n, edges):
    return [oracle_bfs(n, edges, s) for s in range(n)]


def oracle_medians_of(dist, x, y, z):
    n = len(dist)
    out = []
    for v in range(n):
        if (
            dist[x][v] + dist[v][y] == dist[x][y]
            and dist[y][v] + dist[v][z] == dist[y][z]
            and dist[z][v] + dist[v][x] == dist[z][x]
        ):
            out.append(v)
    return out

def oracle_is_median(n, edges):
    dist = oracle_all_dists(n, edges)
    if any(None in row for row in dist):
        return False, None
    for x, y, z in combinations(range(n), 3):
        meds = oracle_medians_of(dist, x, y, z)
        if len(meds) != 1:
            return False, (x, y, z)
    return True, None


def oracle_closure(n, edges, seed_set):
    """Median saturation by repeated full triple scans."""
    dist = oracle_all_dists(n, edges)
    S = set(seed_set)
    while True:
        new = set()
        for x, y, z in combinations(sorted(S), 3):
            meds = oracle_medians_of(dist, x, y, z)
            assert len(meds) == 1
            if meds[0] not in S:
                new.add(meds[0])
        if not new:
            return S
        S |= new


def oracle_interval_closure(n, edges, seed_set):
    dist = oracle_all_dists(n, edges)
    S = set(seed_set)
    while True:
        new = set()
        for a in S:
            for b in S:
                for v in range(n):
                    if dist[a][v] + dist[v][b] == dist[a][b] and v not in S:
                        new.add(v)
        if not new:
            return S
        S |= new


def oracle_unparam_qg(distfn, path, D):
    """Exhaustive search over strictly increasing index subsequences."""
    T = len(path)
    if T == 1:
        return True

    def qg_ok(idx):
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                d = distfn(path[idx[a]], path[idx[b]])
                r = b - a
                if d > D * r + D:
                    return False
                if r > D * (d + D):
                    return False
        return True

    def covered(idx):
        return all(
            min(distfn(p, path[i]) for i in idx) <= D for p in path
        )

    middle = list(range(1, T - 1))
    for k in range(0, len(middle) + 1):
        for combo in combinations(middle, k):
            idx = (0,) + combo + (T - 1,)
            if qg_ok(idx) and covered(idx):
                return True
    return False


def grid_v(r, c, cols):
    return r * cols + c


def lex_geodesic(graph, a, b):
    """Least-index shortest path in a UnitGraph, for building test paths."""
    D = graph.distance_matrix
    path = [a]
    cur = a
    while cur != b:
        nxt = min(w for w in graph.neighbors(cur) if D[w, b] == D[cur, b] - 1)
        path.append(nxt)
        cur = nxt
    return path

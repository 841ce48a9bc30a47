"""Finite hierarchical instances: an ambient graph, a family of domain
graphs with projections, pairwise relations (nesting / orthogonality /
transversality), rho-points, and the battery of checks that goes with
them: consistency, relevant domains, distance-formula fitting, hierarchy
paths, product regions, hulls, hierarchical quasiconvexity, colourings,
and the coarse median.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .graphs import UnitGraph
from .median import MedianAlgebra, is_median_graph

REL_NESTED = "nested"      # self is strictly nested in other
REL_CONTAINS = "contains"  # other is strictly nested in self
REL_ORTH = "orth"
REL_TRANS = "trans"
_INVERSE = {REL_NESTED: REL_CONTAINS, REL_CONTAINS: REL_NESTED,
            REL_ORTH: REL_ORTH, REL_TRANS: REL_TRANS}


class InstanceError(ValueError):
    pass


class OrderNotTotalError(InstanceError):
    pass


def _setdist(D: np.ndarray, A, B) -> int:
    return int(D[np.ix_(sorted(A), sorted(B))].min())


def _setdiam(D: np.ndarray, A) -> int:
    idx = sorted(A)
    if len(idx) <= 1:
        return 0
    return int(D[np.ix_(idx, idx)].max())


@dataclass(frozen=True)
class Domain:
    """One domain: its space, the projection from the ambient graph, its
    relations to the other domains, and its rho data."""

    id: str
    space: UnitGraph
    pi: tuple[frozenset[int], ...]
    rel: dict[str, str]
    rho: dict[str, frozenset[int]]
    rho_map: dict[str, tuple[frozenset[int], ...]] = field(default_factory=dict)

    @cached_property
    def dist(self) -> np.ndarray:
        return self.space.distance_matrix

    def pi_rep(self, x: int) -> int:
        return min(self.pi[x])

    @cached_property
    def setdist(self) -> np.ndarray:
        """Matrix S[x, v] = distance from the projection of ambient x to v."""
        D = self.dist
        return np.stack([D[sorted(p)].min(axis=0) for p in self.pi])


@dataclass(frozen=True)
class HHSInstance:
    ambient: UnitGraph
    domains: tuple[Domain, ...]
    E: int

    @cached_property
    def by_id(self) -> dict[str, Domain]:
        return {d.id: d for d in self.domains}

    @cached_property
    def dist(self) -> np.ndarray:
        return self.ambient.distance_matrix

    @property
    def n(self) -> int:
        return self.ambient.n

    def domain_ids(self) -> list[str]:
        return [d.id for d in self.domains]

    def d_U(self, U: Domain, x: int, y: int) -> int:
        """Distance in U's space between the projections of x and y."""
        return int(U.setdist[x, sorted(U.pi[y])].min())

    def d_U_to_set(self, U: Domain, x: int, S) -> int:
        return int(U.setdist[x, sorted(S)].min())

    def d_U_matrix(self, U: Domain) -> np.ndarray:
        """Full matrix of d_U(x, y) over ambient pairs."""
        reps = [sorted(p) for p in U.pi]
        if all(len(r) == 1 for r in reps):
            idx = [r[0] for r in reps]
            return U.dist[np.ix_(idx, idx)]
        return np.stack([U.setdist[:, r].min(axis=1) for r in reps], axis=1)

    def rho_of(self, source: Domain, target: Domain) -> frozenset[int]:
        """The shadow of `source` inside `target`'s space."""
        if target.id not in source.rho:
            raise InstanceError(f"missing rho of {source.id} in {target.id}")
        return source.rho[target.id]

    def to_dict(self) -> dict:
        return {
            "ambient": self.ambient.to_dict(),
            "E": self.E,
            "domains": [
                {
                    "id": d.id,
                    "space": d.space.to_dict(),
                    "pi": [sorted(s) for s in d.pi],
                    "rel": dict(sorted(d.rel.items())),
                    "rho": {k: sorted(v) for k, v in sorted(d.rho.items())},
                    "rho_map": {
                        k: [sorted(s) for s in v]
                        for k, v in sorted(d.rho_map.items())
                    },
                }
                for d in self.domains
            ],
        }

    @staticmethod
    def from_dict(data: dict) -> "HHSInstance":
        domains = []
        for dd in data["domains"]:
            domains.append(
                Domain(
                    id=str(dd["id"]),
                    space=UnitGraph.from_dict(dd["space"]),
                    pi=tuple(frozenset(int(v) for v in s) for s in dd["pi"]),
                    rel={str(k): str(v) for k, v in dd["rel"].items()},
                    rho={
                        str(k): frozenset(int(v) for v in s)
                        for k, s in dd.get("rho", {}).items()
                    },
                    rho_map={
                        str(k): tuple(frozenset(int(v) for v in s) for s in rows)
                        for k, rows in dd.get("rho_map", {}).items()
                    },
                )
            )
        return HHSInstance(
            ambient=UnitGraph.from_dict(data["ambient"]),
            domains=tuple(domains),
            E=int(data["E"]),
        )


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Finding:
    check: str
    ok: bool
    measured: int
    witness: tuple | None


@dataclass(frozen=True)
class InstanceDiagnostics:
    findings: tuple[Finding, ...]
    E_min: int
    ok: bool

    def failures(self) -> list[Finding]:
        return [f for f in self.findings if not f.ok]


def validate_instance(h: HHSInstance) -> InstanceDiagnostics:
    """Full axiom scan; every finding carries its measured constant."""
    findings: list[Finding] = []
    ids = h.domain_ids()
    if len(set(ids)) != len(ids):
        raise InstanceError("duplicate domain ids")

    # relation schema
    schema_ok = True
    witness = None
    for U, V in itertools.combinations(h.domains, 2):
        rUV = U.rel.get(V.id)
        rVU = V.rel.get(U.id)
        if rUV is None or rVU is None or _INVERSE.get(rUV) != rVU:
            schema_ok = False
            witness = (U.id, V.id)
            break
    findings.append(Finding("relation-schema", schema_ok, 0, witness))

    # rho presence and diameters
    rho_ok = True
    rho_diam = 0
    witness = None
    for U in h.domains:
        for V in h.domains:
            if U.id == V.id:
                continue
            r = U.rel.get(V.id)
            if r in (REL_TRANS, REL_NESTED):
                if V.id not in U.rho or not U.rho[V.id]:
                    rho_ok = False
                    witness = (U.id, V.id)
                else:
                    rho_diam = max(rho_diam, _setdiam(V.dist, U.rho[V.id]))
            if r == REL_CONTAINS and V.id not in U.rho_map:
                rho_ok = False
                witness = (U.id, V.id)
    findings.append(Finding("rho-presence", rho_ok, rho_diam, witness))
    findings.append(Finding("rho-diameter", rho_diam <= h.E, rho_diam, None))

    # projection diameters
    pi_diam = 0
    witness = None
    for U in h.domains:
        if len(U.pi) != h.n:
            raise InstanceError(f"projection table of {U.id} has wrong length")
        for x in range(h.n):
            if not U.pi[x]:
                raise InstanceError(f"empty projection of vertex {x} in {U.id}")
            d = _setdiam(U.dist, U.pi[x])
            if d > pi_diam:
                pi_diam = d
                witness = (U.id, x)
    findings.append(Finding("projection-diameter", pi_diam <= h.E, pi_diam, witness))

    # coarse Lipschitz (slope 1, additive defect) and coarse onto
    lip = 0
    lip_w = None
    onto = 0
    onto_w = None
    DG = h.dist
    for U in h.domains:
        gap_mat = h.d_U_matrix(U) - DG
        defect = int(gap_mat.max())
        if defect > lip:
            lip = defect
            x, y = np.unravel_index(int(np.argmax(gap_mat)), gap_mat.shape)
            lip_w = (U.id, int(x), int(y))
        image = sorted(set().union(*U.pi))
        gap = int(U.dist[:, image].min(axis=1).max())
        if gap > onto:
            onto = gap
            onto_w = (U.id,)
    findings.append(Finding("coarse-lipschitz", lip <= h.E, lip, lip_w))
    findings.append(Finding("coarse-onto", onto <= h.E, onto, onto_w))

    # consistency of all vertex tuples, vectorized over the ambient vertex
    cons = 0
    cons_w = None
    for U, V in itertools.combinations(h.domains, 2):
        r = U.rel[V.id]
        if r == REL_ORTH:
            continue
        if r == REL_TRANS:
            vals = np.minimum(
                U.setdist[:, sorted(h.rho_of(V, U))].min(axis=1),
                V.setdist[:, sorted(h.rho_of(U, V))].min(axis=1),
            )
        elif r == REL_NESTED:
            vals = _nested_consistency_all(h, U, V)
        else:
            vals = _nested_consistency_all(h, V, U)
        worst = int(vals.max())
        if worst > cons:
            cons = worst
            cons_w = (int(np.argmax(vals)), U.id, V.id)
    findings.append(Finding("tuple-consistency", cons <= h.E, cons, cons_w))

    if not schema_ok or not rho_ok:
        e_min = max(f.measured for f in findings)
        return InstanceDiagnostics(tuple(findings), e_min, False)
    e_min = max(f.measured for f in findings)
    return InstanceDiagnostics(tuple(findings), e_min, all(f.ok for f in findings))


def _tuple_consistency(h: HHSInstance, b: dict[str, frozenset[int]]) -> tuple[int, tuple]:
    """Worst pairwise consistency value of a tuple; (value, (U,V)) pair."""
    worst = 0
    worst_pair: tuple = (None, None)
    for U, V in itertools.combinations(h.domains, 2):
        r = U.rel[V.id]
        if r == REL_ORTH:
            continue
        if r == REL_TRANS:
            val = min(
                _setdist(U.dist, b[U.id], h.rho_of(V, U)),
                _setdist(V.dist, b[V.id], h.rho_of(U, V)),
            )
        elif r == REL_NESTED:  # U strictly inside V
            val = _nested_consistency(h, U, V, b[U.id], b[V.id])
        else:  # V strictly inside U
            val = _nested_consistency(h, V, U, b[V.id], b[U.id])
        if val > worst:
            worst = val
            worst_pair = (U.id, V.id)
    return worst, worst_pair


def _nested_consistency(h, small: Domain, big: Domain, b_small, b_big) -> int:
    first = _setdist(big.dist, b_big, h.rho_of(small, big))
    if small.id in big.rho_map:
        mapped = frozenset().union(*(big.rho_map[small.id][v] for v in b_big))
        second = _setdiam(small.dist, b_small | mapped)
        return min(first, second)
    return first


def _nested_consistency_all(h, small: Domain, big: Domain) -> np.ndarray:
    """Nesting-clause consistency value of every vertex tuple, vectorized."""
    first = big.setdist[:, sorted(h.rho_of(small, big))].min(axis=1)
    second = np.empty(h.n, dtype=np.int64)
    for x in range(h.n):
        mapped = frozenset().union(*(big.rho_map[small.id][v] for v in big.pi[x]))
        second[x] = _setdiam(small.dist, small.pi[x] | mapped)
    return np.minimum(first, second)


def check_consistent_tuple(h: HHSInstance, b: dict[str, frozenset[int]], kappa: int):
    """Verdict plus the worst pair for an arbitrary per-domain tuple."""
    for d in h.domains:
        if d.id not in b or not b[d.id]:
            raise InstanceError(f"tuple is missing a nonempty entry for {d.id}")
        if _setdiam(d.dist, b[d.id]) > kappa:
            raise InstanceError(f"tuple entry for {d.id} has diameter above kappa")
    value, pair = _tuple_consistency(h, b)
    return value <= kappa, pair, value


# ---------------------------------------------------------------------------
# relevant domains


def relevant_domains(h: HHSInstance, x: int, y: int, s) -> list[str]:
    """Domains where x, y project more than s apart, ordered along the way.

    Pairwise-transverse relevant domains carry a total order; its totality is
    verified and an OrderNotTotalError names any offending pair.
    """
    if s < 100 * h.E:
        raise InstanceError(f"threshold s={s} is below 100*E={100 * h.E}")
    rel = [d for d in h.domains if h.d_U(d, x, y) > s]
    order: dict[tuple[str, str], int] = {}
    for U, V in itertools.combinations(rel, 2):
        if U.rel[V.id] != REL_TRANS:
            continue
        u_before = h.d_U_to_set(U, y, h.rho_of(V, U)) <= h.E
        v_before = h.d_U_to_set(V, y, h.rho_of(U, V)) <= h.E
        if u_before == v_before:
            raise OrderNotTotalError(
                f"domains {U.id}, {V.id} are not comparable in rel_s({x},{y}): "
                f"both-or-neither satisfy the ordering rule"
            )
        order[(U.id, V.id)] = -1 if u_before else 1
        order[(V.id, U.id)] = 1 if u_before else -1

    import functools

    def cmp(a: Domain, b: Domain) -> int:
        if (a.id, b.id) in order:
            return order[(a.id, b.id)]
        return -1 if a.id < b.id else (1 if a.id > b.id else 0)

    return [d.id for d in sorted(rel, key=functools.cmp_to_key(cmp))]


# ---------------------------------------------------------------------------
# distance formula


@dataclass(frozen=True)
class DistanceFormulaFit:
    s: int
    A: int
    B: Fraction
    samples: tuple[tuple[tuple[int, int], int, int], ...]  # (pair, true, sum)
    max_upper_slack: Fraction
    max_lower_slack: Fraction


def projection_sum(h: HHSInstance, x: int, y: int, s) -> int:
    total = 0
    for d in h.domains:
        v = h.d_U(d, x, y)
        if v >= s:
            total += v
    return total


def distance_formula_fit(h: HHSInstance, s, samples) -> DistanceFormulaFit:
    """Least integer A >= 1 whose minimal additive term B(A) stays below A*s.

    B(A) = max(0, max(S/A - d), max(d - A*S)) over the sample; with that
    (A, B) both distance-formula inequalities hold on every sampled pair.
    """
    if s < 100 * h.E:
        raise InstanceError(f"threshold s={s} is below 100*E={100 * h.E}")
    rows = []
    for x, y in samples:
        x, y = int(x), int(y)
        rows.append(((x, y), int(h.dist[x, y]), projection_sum(h, x, y, s)))
    A = 1
    while True:
        b_needed = Fraction(0)
        for _, d, S in rows:
            b_needed = max(b_needed, Fraction(S, A) - d, Fraction(d - A * S))
        if b_needed <= A * s or A > 1 << 20:
            break
        A += 1
    B = max(b_needed, Fraction(0))
    up = max((Fraction(A * S + B - d) for _, d, S in rows), default=Fraction(0))
    low = max((Fraction(d) - (Fraction(S, A) - B) for _, d, S in rows), default=Fraction(0))
    return DistanceFormulaFit(int(s), A, B, tuple(rows), up, low)


# ---------------------------------------------------------------------------
# quasigeodesics and hierarchy paths


def _dedup_runs(path: list[int]) -> list[tuple[int, int]]:
    runs = []
    for v in path:
        if runs and runs[-1][0] == v:
            runs[-1] = (v, runs[-1][1] + 1)
        else:
            runs.append((v, 1))
    return runs


def unparametrised_qg_on_metric(distfn, path: list[int], D: int, budget: int = 2_000_000) -> bool:
    """Search for milestones 0 = i_0 < ... < i_K = T whose subsampled
    sequence is a (D, D)-quasigeodesic with all path points D-close to it."""
    if not path:
        raise InstanceError("empty path")
    if D < 1:
        return False
    runs = _dedup_runs([int(v) for v in path])
    R = len(runs)
    if R == 1:
        return True
    verts = [v for v, _ in runs]
    mult = [c for _, c in runs]
    dmat = {}

    def d(i: int, j: int):
        key = (verts[i], verts[j])
        if key not in dmat:
            dmat[key] = distfn(verts[i], verts[j])
        return dmat[key]

    de = d(0, R - 1)
    K_cap = int(D * (de + D))  # rank difference bound for the endpoint pair
    counter = [0]

    def compatible(hist, run: int, rank: int) -> bool:
        for r2, k2 in hist:
            dd = d(r2, run)
            dr = rank - k2
            if dr > D * (dd + D):
                return False
            if dd > D * dr + D:
                return False
        return True

    def covered(hist) -> bool:
        chosen = [verts[r] for r, _ in hist]
        for i in range(R):
            if min(distfn(verts[i], c) for c in chosen) > D:
                return False
        return True

    def search(hist, run: int, used: int, rank: int) -> bool:
        counter[0] += 1
        if counter[0] > budget:
            raise RuntimeError("quasigeodesic search budget exceeded")
        if run == R - 1:
            if covered(hist):
                return True
        if rank >= K_cap:
            return False
        # stay in the same run (multiplicity permitting) or advance
        if used < mult[run]:
            if compatible(hist, run, rank + 1):
                hist.append((run, rank + 1))
                if search(hist, run, used + 1, rank + 1):
                    return True
                hist.pop()
        for nxt in range(run + 1, R):
            if compatible(hist, nxt, rank + 1):
                hist.append((nxt, rank + 1))
                if search(hist, nxt, 1, rank + 1):
                    return True
                hist.pop()
        return False

    return search([(0, 0)], 0, 1, 0)


def is_unparametrised_quasigeodesic(space: UnitGraph, path: list[int], D: int) -> bool:
    Dm = space.distance_matrix
    return unparametrised_qg_on_metric(lambda u, v: int(Dm[u, v]), path, D)


def is_parametrised_quasigeodesic(Dm: np.ndarray, path: list[int], D) -> bool:
    idx = np.array([int(v) for v in path])
    T = len(idx)
    if T == 1:
        return True
    sub = Dm[np.ix_(idx, idx)]
    steps = np.abs(np.arange(T)[:, None] - np.arange(T)[None, :])
    return bool(
        (sub <= D * steps + D).all() and (steps <= D * (sub + D)).all()
    )


def is_hierarchy_path(h: HHSInstance, path: list[int], D: int) -> tuple[bool, str | None]:
    """Ambient (D,D)-quasigeodesic whose every domain shadow is an
    unparametrised D-quasigeodesic; returns the first failing domain."""
    path = [int(v) for v in path]
    if not path:
        raise InstanceError("empty path")
    if not is_parametrised_quasigeodesic(h.dist, path, D):
        raise InstanceError("path is not an ambient (D,D)-quasigeodesic")
    for dom in h.domains:
        shadow = [dom.pi_rep(v) for v in path]
        if not is_unparametrised_quasigeodesic(dom.space, shadow, D):
            return False, dom.id
    return True, None


# ---------------------------------------------------------------------------
# product regions, hulls, quasiconvexity


def product_region(h: HHSInstance, U_id: str) -> frozenset[int]:
    """Vertices projecting E-close to the rho of U on every transverse or
    strictly larger domain.  May be empty; emptiness is an instance defect."""
    U = h.by_id[U_id]
    keep = np.ones(h.n, dtype=bool)
    for V in h.domains:
        if V.id == U.id:
            continue
        if U.rel[V.id] in (REL_TRANS, REL_NESTED):
            keep &= V.setdist[:, sorted(h.rho_of(U, V))].min(axis=1) <= h.E
    return frozenset(int(v) for v in np.flatnonzero(keep))


def space_hull(space_dist: np.ndarray, points) -> np.ndarray:
    """Union of all geodesics between pairs of `points`, as a boolean mask."""
    pts = sorted(set(int(p) for p in points))
    mask = np.zeros(space_dist.shape[0], dtype=bool)
    mask[pts] = True
    for a in pts:
        rows = space_dist[a][None, :] + space_dist[pts, :] == space_dist[a, pts][:, None]
        mask |= rows.any(axis=0)
    return mask


def theta_hull(h: HHSInstance, A, theta) -> frozenset[int]:
    """Vertices whose every projection is theta-close to the hull of A's
    projections in that domain."""
    pts = sorted(set(int(v) for v in A))
    if not pts:
        raise InstanceError("empty set")
    keep = np.ones(h.n, dtype=bool)
    for dom in h.domains:
        proj = sorted(set().union(*(dom.pi[x] for x in pts)))
        hull = np.flatnonzero(space_hull(dom.dist, proj))
        keep &= dom.setdist[:, hull].min(axis=1) <= theta
    return frozenset(int(v) for v in np.flatnonzero(keep))


@dataclass(frozen=True)
class HQCReport:
    ok: bool
    shadow_ok: bool
    shadow_witness: tuple | None
    realization_ok: bool
    realization_witness: tuple | None


def is_hierarchically_quasiconvex(
    h: HHSInstance, Z, k0, kfun: dict
) -> HQCReport:
    """Shadows k0-quasiconvex plus the realization clause at each kappa in kfun."""
    pts = sorted(set(int(v) for v in Z))
    if not pts:
        raise InstanceError("empty set")
    shadow_ok = True
    shadow_w = None
    for dom in h.domains:
        proj = sorted(set().union(*(dom.pi[x] for x in pts)))
        hull = np.flatnonzero(space_hull(dom.dist, proj))
        worst = int(dom.dist[np.ix_(hull, proj)].min(axis=1).max())
        if worst > k0:
            shadow_ok = False
            shadow_w = (dom.id, worst)
            break
    realization_ok = True
    realization_w = None
    DG = h.dist
    to_shadow = np.stack(
        [
            dom.setdist[:, sorted(set().union(*(dom.pi[z] for z in pts)))].min(axis=1)
            for dom in h.domains
        ]
    ).max(axis=0)
    to_set = DG[:, pts].min(axis=1)
    for kappa, bound in sorted(kfun.items()):
        bad = np.flatnonzero((to_shadow <= kappa) & (to_set > bound))
        if bad.size:
            realization_ok = False
            realization_w = (kappa, int(bad[0]), int(to_set[bad[0]]))
            break
    return HQCReport(
        ok=shadow_ok and realization_ok,
        shadow_ok=shadow_ok,
        shadow_witness=shadow_w,
        realization_ok=realization_ok,
        realization_witness=realization_w,
    )


# ---------------------------------------------------------------------------
# colourings


@dataclass(frozen=True)
class Colouring:
    classes: tuple[tuple[str, ...], ...]

    @property
    def chi(self) -> int:
        return len(self.classes)

    def class_of(self, domain_id: str) -> int:
        for i, cls in enumerate(self.classes):
            if domain_id in cls:
                return i
        raise InstanceError(f"domain {domain_id} is uncoloured")


def find_bbf_colouring(h: HHSInstance) -> Colouring:
    """Greedy proper colouring of the conflict graph (conflict = not transverse)."""
    ids = sorted(h.domain_ids())
    classes: list[list[str]] = []
    for uid in ids:
        U = h.by_id[uid]
        placed = False
        for cls in classes:
            if all(U.rel[v] == REL_TRANS for v in cls):
                cls.append(uid)
                placed = True
                break
        if not placed:
            classes.append([uid])
    col = Colouring(tuple(tuple(c) for c in classes))
    for cls in col.classes:
        for a, b in itertools.combinations(cls, 2):
            assert h.by_id[a].rel[b] == REL_TRANS
    return col


# ---------------------------------------------------------------------------
# coarse median


def domain_coarse_median(h: HHSInstance, dom: Domain, x: int, y: int, z: int) -> int:
    """Tree median of representatives when the space is a tree, else the
    least-index minimizer of the summed distances to the three projections."""
    if dom.space.is_tree():
        reps = [dom.pi_rep(x), dom.pi_rep(y), dom.pi_rep(z)]
        D = dom.dist
        mask = (
            (D[reps[0]] + D[reps[1]] == D[reps[0], reps[1]])
            & (D[reps[1]] + D[reps[2]] == D[reps[1], reps[2]])
            & (D[reps[2]] + D[reps[0]] == D[reps[2], reps[0]])
        )
        return int(np.flatnonzero(mask)[0])
    D = dom.dist
    score = sum(D[:, sorted(dom.pi[w])].min(axis=1) for w in (x, y, z))
    return int(np.argmin(score))


def hhs_median(h: HHSInstance, x: int, y: int, z: int) -> tuple[int, int]:
    """Ambient vertex realizing the per-domain coarse medians best;
    returns (vertex, achieved max defect)."""
    targets = [domain_coarse_median(h, dom, x, y, z) for dom in h.domains]
    score = np.stack(
        [dom.setdist[:, t] for dom, t in zip(h.domains, targets)]
    ).max(axis=0)
    best_v = int(np.argmin(score))
    return best_v, int(score[best_v])

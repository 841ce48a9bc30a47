"""Wallspaces and their dual complexes.

A wall is a bipartition of a finite ground set; a coherent orientation picks
one side per wall with all chosen sides pairwise intersecting.  The dual
graph has one vertex per coherent orientation and an edge where two
orientations differ on exactly one wall.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cubes import CubeSkeleton, hyperplane_decomposition
from .graphs import UnitGraph
from .median import MedianAlgebra

ENUMERATION_GUARD = 25


class WallspaceError(ValueError):
    pass


class WallGuardError(WallspaceError):
    pass


@dataclass(frozen=True)
class Wallspace:
    points: int
    walls: tuple[tuple[frozenset[int], frozenset[int]], ...]

    def __post_init__(self):
        ground = frozenset(range(self.points))
        canon = []
        for i, (lh, rh) in enumerate(self.walls):
            lh, rh = frozenset(lh), frozenset(rh)
            if not lh or not rh:
                raise WallspaceError(f"wall {i} has an empty side")
            if lh | rh != ground or lh & rh:
                raise WallspaceError(f"wall {i} is not a bipartition of the ground set")
            if sorted(rh) < sorted(lh):
                lh, rh = rh, lh
            canon.append((lh, rh))
        object.__setattr__(self, "walls", tuple(canon))

    def side(self, wall: int, which: int) -> frozenset[int]:
        return self.walls[wall][which]

    def to_dict(self) -> dict:
        return {
            "points": self.points,
            "walls": [[sorted(l), sorted(r)] for l, r in self.walls],
        }

    @staticmethod
    def from_dict(d: dict) -> "Wallspace":
        walls = tuple(
            (frozenset(int(x) for x in l), frozenset(int(x) for x in r))
            for l, r in d["walls"]
        )
        return Wallspace(int(d["points"]), walls)


@dataclass(frozen=True)
class Orientation:
    """A choice of one side per wall; sides[i] in {0, 1}."""

    sides: tuple[int, ...]

    def chosen(self, w: Wallspace, wall: int) -> frozenset[int]:
        return w.side(wall, self.sides[wall])


def is_coherent(w: Wallspace, o: Orientation) -> bool:
    sides = [w.side(i, s) for i, s in enumerate(o.sides)]
    for i in range(len(sides)):
        for j in range(i + 1, len(sides)):
            if not (sides[i] & sides[j]):
                return False
    return True


def coherent_orientations(w: Wallspace) -> list[Orientation]:
    """All coherent orientations, by pruned backtracking; guarded input size."""
    k = len(w.walls)
    if k > ENUMERATION_GUARD:
        raise WallGuardError(
            f"{k} walls exceeds the enumeration guard ({ENUMERATION_GUARD}); "
            "use principal_orientations instead"
        )
    out: list[Orientation] = []
    chosen: list[frozenset[int]] = []
    sides: list[int] = []

    def extend(i: int):
        if i == k:
            out.append(Orientation(tuple(sides)))
            return
        for s in (0, 1):
            half = w.side(i, s)
            if all(half & c for c in chosen):
                chosen.append(half)
                sides.append(s)
                extend(i + 1)
                chosen.pop()
                sides.pop()

    extend(0)
    return out


def principal_orientation(w: Wallspace, x: int) -> Orientation:
    """Orient every wall toward the side containing the ground point x."""
    return Orientation(tuple(0 if x in l else 1 for l, _ in w.walls))


def principal_orientations(w: Wallspace) -> list[Orientation]:
    """Distinct basepoint orientations, sorted; the scalable generator."""
    return sorted(
        {principal_orientation(w, x) for x in range(w.points)},
        key=lambda o: o.sides,
    )


@dataclass(frozen=True)
class DualComplex:
    skeleton: CubeSkeleton
    orientations: tuple[Orientation, ...]
    exhaustive: bool


def dual_cube_complex(w: Wallspace) -> DualComplex:
    """The dual graph on coherent orientations, verified median.

    Above the enumeration guard only principal orientations are generated;
    for wallspaces arising from median-graph hyperplanes these are all of
    them.
    """
    if len(w.walls) <= ENUMERATION_GUARD:
        orients = coherent_orientations(w)
        exhaustive = True
    else:
        orients = principal_orientations(w)
        exhaustive = False
    orients = sorted(orients, key=lambda o: o.sides)
    if not orients:
        raise WallspaceError("wallspace admits no coherent orientation")
    mat = np.array([o.sides for o in orients], dtype=np.int8)
    k = len(orients)
    edges = []
    for i in range(k):
        diff = (mat[i + 1 :] != mat[i]).sum(axis=1)
        for j in np.flatnonzero(diff == 1):
            edges.append((i, i + 1 + int(j)))
    g = UnitGraph(k, tuple(edges))
    g.require_connected()
    median = MedianAlgebra.from_graph(g)
    return DualComplex(
        skeleton=hyperplane_decomposition(median),
        orientations=tuple(orients),
        exhaustive=exhaustive,
    )


def walls_of_skeleton(c: CubeSkeleton) -> Wallspace:
    """The wallspace whose walls are the skeleton's halfspace pairs."""
    return Wallspace(c.n, tuple(c.halfspaces))


def duality_roundtrip(c: CubeSkeleton) -> tuple[bool, DualComplex, dict[int, int]]:
    """Map each vertex to its principal orientation and verify an isomorphism."""
    from .graphs import verify_isomorphism

    w = walls_of_skeleton(c)
    dual = dual_cube_complex(w)
    index = {o.sides: i for i, o in enumerate(dual.orientations)}
    mapping = {}
    for v in range(c.n):
        key = principal_orientation(w, v).sides
        if key not in index:
            return False, dual, {}
        mapping[v] = index[key]
    ok = verify_isomorphism(c.graph, dual.skeleton.graph, mapping)
    return ok, dual, mapping

"""Oriented CW complexes on the 2-sphere given by polygon boundary walks.

A complex is stored as vertices, directed edges, and tiles whose boundary
walks are cyclic sequences of darts.  A dart is a pair ``(edge_id, sign)``
with sign ``+1`` (tail to head) or ``-1``.  All tile walks are traversed
counterclockwise, i.e. with the tile on the left of each dart, so every
dart of the complex occurs in exactly one walk.

The dual 1-skeleton is represented on the same dart set: the dual dart
crossing a primal dart ``d`` (from the tile right of ``d`` to the tile left
of ``d``) is keyed by ``d`` itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ValidationFailure

Dart = tuple[str, int]  # (edge id, +1 | -1)

PLUS = 1
MINUS = -1


def flip(d: Dart) -> Dart:
    return (d[0], -d[1])


def sign_str(s: int) -> str:
    return "+" if s > 0 else "-"


def sign_of(s: str | int) -> int:
    if s in (1, -1):
        return int(s)
    if s == "+":
        return PLUS
    if s == "-":
        return MINUS
    raise ValueError(f"bad orientation sign {s!r}")


@dataclass(frozen=True)
class SphereComplex:
    """CW structure on S^2: vertices, directed edges, tiles with boundary walks."""

    vertices: tuple[str, ...]
    edges: dict[str, tuple[str, str]]          # id -> (tail, head)
    tiles: dict[str, tuple[Dart, ...]]         # id -> boundary walk, ccw
    marked: frozenset[str] = frozenset()

    # -- raw accessors ---------------------------------------------------

    def _cache(self) -> dict:
        try:
            return object.__getattribute__(self, "_memo")
        except AttributeError:
            object.__setattr__(self, "_memo", {})
            return object.__getattribute__(self, "_memo")

    def tail(self, d: Dart) -> str:
        t, h = self.edges[d[0]]
        return t if d[1] > 0 else h

    def head(self, d: Dart) -> str:
        return self.tail(flip(d))

    def darts(self) -> list[Dart]:
        out = []
        for e in self.edges:
            out.append((e, PLUS))
            out.append((e, MINUS))
        return out

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.tiles)

    # -- walk combinatorics ----------------------------------------------

    def dart_location(self) -> dict[Dart, tuple[str, int]]:
        """Map each dart to (tile id, walk position).  Requires pairing."""
        memo = self._cache()
        if "loc" in memo:
            return memo["loc"]
        loc: dict[Dart, tuple[str, int]] = {}
        for t in sorted(self.tiles):
            for i, d in enumerate(self.tiles[t]):
                if d in loc:
                    raise ValidationFailure(
                        f"dart {d} occurs twice in tile walks", check="orientation pairing")
                loc[d] = (t, i)
        memo["loc"] = loc
        return loc

    def tile_left(self, d: Dart) -> str:
        return self.dart_location()[d][0]

    def walk_next(self, d: Dart) -> Dart:
        t, i = self.dart_location()[d]
        w = self.tiles[t]
        return w[(i + 1) % len(w)]

    def walk_prev(self, d: Dart) -> Dart:
        t, i = self.dart_location()[d]
        w = self.tiles[t]
        return w[(i - 1) % len(w)]

    def rotation_ccw(self, d: Dart) -> Dart:
        """Counterclockwise-next dart out of the same vertex as ``d``."""
        return flip(self.walk_prev(d))

    def rotation_cw(self, d: Dart) -> Dart:
        return self.walk_next(flip(d))

    def vertex_darts(self) -> dict[str, list[Dart]]:
        """Outgoing darts per vertex (insertion order, not rotation order)."""
        memo = self._cache()
        if "vdarts" in memo:
            return memo["vdarts"]
        out: dict[str, list[Dart]] = {v: [] for v in self.vertices}
        for e, (t, h) in self.edges.items():
            out[t].append((e, PLUS))
            out[h].append((e, MINUS))
        memo["vdarts"] = out
        return out

    def degree(self, v: str) -> int:
        """Number of darts out of v (loops count twice)."""
        return len(self.vertex_darts()[v])


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    ok: bool
    failures: list[tuple[str, str]] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def first_failure(self) -> str | None:
        return self.failures[0][0] if self.failures else None

    def summary(self) -> str:
        if self.ok:
            extra = ", ".join(f"{k}={v}" for k, v in sorted(self.notes.items()))
            return f"pass ({extra})" if extra else "pass"
        check, msg = self.failures[0]
        return f"fail [{check}] {msg}"


def validate_complex(cx: SphereComplex) -> ValidationReport:
    """Check all SphereComplex invariants; report the first violated one."""
    memo = cx._cache()
    if "validated" in memo:
        return memo["validated"]
    fails: list[tuple[str, str]] = []

    def bad(check: str, msg: str) -> ValidationReport:
        fails.append((check, msg))
        return ValidationReport(False, fails)

    if len(set(cx.vertices)) != len(cx.vertices):
        return bad("ids", "duplicate vertex id")
    vset = set(cx.vertices)
    for e, (t, h) in cx.edges.items():
        if t not in vset or h not in vset:
            return bad("references", f"edge {e} has unknown endpoint")
    for t, w in cx.tiles.items():
        if len(w) == 0:
            return bad("walk length", f"tile {t} has empty boundary walk")
        if len(w) == 1:
            return bad("walk length", f"tile {t} is a monogon")
        for d in w:
            if d[0] not in cx.edges or d[1] not in (PLUS, MINUS):
                return bad("references", f"tile {t} references unknown dart {d}")

    # orientation pairing: every dart exactly once over all walks
    seen: dict[Dart, str] = {}
    for t in sorted(cx.tiles):
        for d in cx.tiles[t]:
            if d in seen:
                return bad("orientation pairing",
                           f"dart {d} appears in tiles {seen[d]} and {t}")
            seen[d] = t
    missing = [d for d in cx.darts() if d not in seen]
    if missing:
        return bad("orientation pairing", f"dart {missing[0]} appears in no walk")

    # walk consistency: consecutive darts chain head -> tail
    for t in sorted(cx.tiles):
        w = cx.tiles[t]
        for i, d in enumerate(w):
            nxt = w[(i + 1) % len(w)]
            if cx.head(d) != cx.tail(nxt):
                return bad("walk consistency",
                           f"tile {t}: darts {d} and {nxt} do not chain")

    if not cx.vertices:
        return bad("connected", "no vertices")
    touched = {v for pair in cx.edges.values() for v in pair}
    for v in cx.vertices:
        if v not in touched:
            return bad("connected", f"vertex {v} is isolated")

    # connectivity of the 1-skeleton
    adj: dict[str, set[str]] = {v: set() for v in cx.vertices}
    for (t, h) in cx.edges.values():
        adj[t].add(h)
        adj[h].add(t)
    stack = [cx.vertices[0]]
    reached = {cx.vertices[0]}
    while stack:
        for u in adj[stack.pop()]:
            if u not in reached:
                reached.add(u)
                stack.append(u)
    if reached != vset:
        return bad("connected", "1-skeleton is disconnected")

    chi = cx.euler_characteristic()
    if chi != 2:
        return bad("euler", f"V - E + F = {chi}, expected 2")

    # rotation-system check: vertex links are circles matching declared tails
    loc = cx.dart_location()
    visited: set[Dart] = set()
    orbits = 0
    for d0 in loc:
        if d0 in visited:
            continue
        v = cx.tail(d0)
        d = d0
        while True:
            if cx.tail(d) != v:
                return bad("vertex links",
                           f"rotation orbit of {d0} mixes vertices {v} and {cx.tail(d)}")
            visited.add(d)
            d = cx.rotation_ccw(d)
            if d == d0:
                break
        orbits += 1
    if orbits != len(cx.vertices):
        return bad("vertex links",
                   f"{orbits} rotation orbits for {len(cx.vertices)} vertices")

    if not cx.marked <= vset:
        return bad("marked", "marked set contains a non-vertex")

    report = ValidationReport(True, [], notes={
        "V": len(cx.vertices), "E": len(cx.edges), "F": len(cx.tiles)})
    memo["validated"] = report
    return report


def require_valid(cx: SphereComplex, what: str = "complex") -> None:
    rep = validate_complex(cx)
    if not rep.ok:
        raise ValidationFailure(f"{what}: {rep.summary()}", check=rep.first_failure or "")


def euler_characteristic(cx: SphereComplex) -> int:
    return cx.euler_characteristic()


# ---------------------------------------------------------------------------
# dual skeleton
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DualSkeleton:
    """Dual 1-skeleton with rotation system, on the primal dart set.

    The dual dart keyed by primal dart ``d`` crosses ``d`` from the tile on
    its right to the tile on its left.  Dual vertices are tiles; the dual
    edge of primal edge ``e`` carries the two dual darts ``(e, +)``/``(e, -)``.
    Faces of the dual are in bijection with primal vertices.
    """

    complex: SphereComplex
    dart_tile: dict[Dart, str]                  # primal dart -> tile on its left
    rotation: dict[str, tuple[Dart, ...]]       # tile -> ccw out-dart keys
    face_of_dart: dict[Dart, int]               # dual dart -> face index
    face_vertex: tuple[str, ...]                # face index -> primal vertex

    def dual_tail(self, d: Dart) -> str:
        """Tile at the tail of the dual dart keyed by d."""
        return self.dart_tile[flip(d)]

    def dual_head(self, d: Dart) -> str:
        return self.dart_tile[d]

    def left_vertex(self, d: Dart) -> str:
        """Primal vertex on the left of the dual dart keyed by d."""
        e, s = d
        t, h = self.complex.edges[e]
        return t if s > 0 else h

    def num_dual_vertices(self) -> int:
        return len(self.complex.tiles)

    def num_dual_edges(self) -> int:
        return len(self.complex.edges)

    def num_faces(self) -> int:
        return len(self.face_vertex)

    def edges_at_tile(self, t: str) -> list[str]:
        return [d[0] for d in self.rotation[t]]


def dual_skeleton(cx: SphereComplex) -> DualSkeleton:
    """Dualize a validated complex; faces are labeled by primal vertices."""
    memo = cx._cache()
    if "dual" in memo:
        return memo["dual"]
    require_valid(cx)
    loc = cx.dart_location()
    dart_tile = {d: t for d, (t, _) in loc.items()}
    # ccw out-darts at tile t: reversals of its walk darts, in walk order
    rotation = {t: tuple(flip(d) for d in w) for t, w in cx.tiles.items()}

    rot_index = {t: {d: i for i, d in enumerate(r)} for t, r in rotation.items()}

    def face_next(d: Dart) -> Dart:
        # face-on-left traversal: clockwise-previous out-dart of the reversal
        rd = flip(d)
        t = dart_tile[flip(rd)]  # tail tile of dual dart rd
        r = rotation[t]
        i = rot_index[t][rd]
        return r[(i - 1) % len(r)]

    face_of: dict[Dart, int] = {}
    labels: list[str] = []
    for d0 in sorted(loc):
        if d0 in face_of:
            continue
        idx = len(labels)
        label = None
        d = d0
        while True:
            face_of[d] = idx
            e, s = d
            t, h = cx.edges[e]
            v = t if s > 0 else h  # primal vertex left of the dual dart
            if label is None:
                label = v
            elif label != v:
                raise ValidationFailure(
                    f"dual face mixes primal vertices {label} and {v}",
                    check="duality")
            d = face_next(d)
            if d == d0:
                break
        labels.append(label)

    if len(labels) != len(cx.vertices):
        raise ValidationFailure(
            f"dual has {len(labels)} faces for {len(cx.vertices)} vertices",
            check="duality")
    if len(cx.tiles) - len(cx.edges) + len(labels) != 2:
        raise ValidationFailure("embedded dual is not a sphere", check="duality")
    if sorted(labels) != sorted(cx.vertices):
        raise ValidationFailure("dual faces do not match primal vertices",
                                check="duality")
    dual = DualSkeleton(cx, dart_tile, rotation, face_of, tuple(labels))
    memo["dual"] = dual
    return dual


# ---------------------------------------------------------------------------
# combinatorial curves in the dual skeleton
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CombinatorialCurve:
    """Closed walk in a dual skeleton, as a cyclic sequence of dual darts.

    Entry ``(e, s)`` is the dual dart crossing the primal dart ``(e, s)``.
    ``simple`` means the walk repeats no dual vertex; embedded walks may
    revisit vertices but use each dual edge at most once and resolve
    without crossings.
    """

    darts: tuple[Dart, ...]

    def __len__(self) -> int:
        return len(self.darts)

    def edge_ids(self) -> list[str]:
        return [d[0] for d in self.darts]

    def reversed(self) -> "CombinatorialCurve":
        return CombinatorialCurve(tuple(flip(d) for d in reversed(self.darts)))


def curve_vertices(dual: DualSkeleton, c: CombinatorialCurve) -> list[str]:
    """Dual vertices visited, aligned with dart tails."""
    return [dual.dual_tail(d) for d in c.darts]


def is_closed_walk(dual: DualSkeleton, c: CombinatorialCurve) -> bool:
    n = len(c.darts)
    if n == 0:
        return False
    for i, d in enumerate(c.darts):
        nxt = c.darts[(i + 1) % n]
        if dual.dual_head(d) != dual.dual_tail(nxt):
            return False
    return True


def is_vertex_simple(dual: DualSkeleton, c: CombinatorialCurve) -> bool:
    vs = curve_vertices(dual, c)
    return len(set(vs)) == len(vs)


def _chords_cross(a: tuple[int, int], b: tuple[int, int], n: int) -> bool:
    """Do chords a, b of a cycle on n rotation slots interleave?"""
    a0, a1 = a
    b0, b1 = b
    if len({a0, a1, b0, b1}) < 4:
        return False

    def between(x, lo, hi):
        # is x strictly inside the ccw arc lo -> hi?
        if lo <= hi:
            return lo < x < hi
        return x > lo or x < hi

    return between(b0, a0, a1) != between(b1, a0, a1)


def is_embedded_closed_walk(dual: DualSkeleton, c: CombinatorialCurve) -> bool:
    """Closed walk, each dual edge used at most once, transitions at every
    dual vertex pairwise non-crossing in the rotation system."""
    if not is_closed_walk(dual, c):
        return False
    eids = c.edge_ids()
    if len(set(eids)) != len(eids):
        return False
    n = len(c.darts)
    rot_index = {t: {d: i for i, d in enumerate(r)}
                 for t, r in dual.rotation.items()}
    # transition chord at each visit: (arriving end slot, leaving end slot)
    chords: dict[str, list[tuple[int, int]]] = {}
    for i in range(n):
        arriving = c.darts[i]
        leaving = c.darts[(i + 1) % n]
        t = dual.dual_head(arriving)
        # arriving dual dart occupies the slot of its reversal's key
        slot_in = rot_index[t][flip(arriving)]
        slot_out = rot_index[t][leaving]
        chords.setdefault(t, []).append((slot_in, slot_out))
    for t, chs in chords.items():
        m = len(dual.rotation[t])
        for i in range(len(chs)):
            for j in range(i + 1, len(chs)):
                if _chords_cross(chs[i], chs[j], m):
                    return False
    return True


def enclosed_markings(cx: SphereComplex, c: CombinatorialCurve,
                      dual: DualSkeleton | None = None,
                      count_all_vertices: bool = False
                      ) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Partition marked vertices by the two sides of an embedded curve.

    Returns ``(left, right)`` relative to the traversal direction.  With
    ``count_all_vertices`` the partition is over all vertices instead of
    the marked set.
    """
    if dual is None:
        dual = dual_skeleton(cx)
    if not is_embedded_closed_walk(dual, c):
        raise ValidationFailure("curve is not an embedded closed walk in the dual",
                                check="curve")
    wall_edges = set(c.edge_ids())

    # face adjacency across non-curve dual edges
    nfaces = dual.num_faces()
    adj: list[set[int]] = [set() for _ in range(nfaces)]
    for e in cx.edges:
        if e in wall_edges:
            continue
        f1 = dual.face_of_dart[(e, PLUS)]
        f2 = dual.face_of_dart[(e, MINUS)]
        adj[f1].add(f2)
        adj[f2].add(f1)

    def bfs(starts: set[int]) -> set[int]:
        seen = set(starts)
        stack = list(starts)
        while stack:
            for g in adj[stack.pop()]:
                if g not in seen:
                    seen.add(g)
                    stack.append(g)
        return seen

    left_seed = {dual.face_of_dart[d] for d in c.darts}
    right_seed = {dual.face_of_dart[flip(d)] for d in c.darts}
    left = bfs(left_seed)
    right = bfs(right_seed)
    if left & right or len(left) + len(right) != nfaces:
        raise ValidationFailure("curve does not separate the sphere into two sides",
                                check="curve")

    pool = set(cx.vertices) if count_all_vertices else set(cx.marked)
    lv = tuple(sorted(v for i in left if (v := dual.face_vertex[i]) in pool))
    rv = tuple(sorted(v for i in right if (v := dual.face_vertex[i]) in pool))
    return lv, rv

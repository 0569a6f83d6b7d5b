"""Finite subdivision rules: level-0/1 complexes, the subdivision map, exact
level-n subdivision by pullback, Fatou/Julia classification, and shifts and
powers.

Cell ids of deeper levels follow the deterministic scheme
``<parent-id>/<kind>.<level-1-cell-id>``, so parentage is readable from the
id and copies are addressed by the level-1 cell they replicate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Literal

from .complexes import (
    Dart,
    MINUS,
    PLUS,
    SphereComplex,
    ValidationReport,
    flip,
    require_valid,
    sign_of,
    validate_complex,
)
from .errors import BudgetExceeded, InternalInconsistency, ValidationFailure

Kind = Literal["vertex", "edge", "tile"]

DEFAULT_CELL_BUDGET = 1_000_000


@dataclass(frozen=True)
class EdgeImage:
    edge: str
    orient: int  # +1: tail->tail, -1: tail->head


@dataclass(frozen=True)
class TileImage:
    tile: str
    align: int   # walk position 0 of the source maps to this position of the image


@dataclass(frozen=True)
class SubdivisionRule:
    name: str
    level0: SphereComplex
    level1: SphereComplex
    carrier_vertices: dict[str, tuple[Kind, str]]
    carrier_edges: dict[str, tuple[Kind, str]]
    carrier_tiles: dict[str, str]
    map_vertices: dict[str, str]
    map_edges: dict[str, EdgeImage]
    map_tiles: dict[str, TileImage]
    metadata: dict = field(default_factory=dict)

    @property
    def marked(self) -> frozenset[str]:
        return self.level0.marked


# ---------------------------------------------------------------------------
# rule index: subdivision paths, tile interiors, expanded boundaries, wedges
# ---------------------------------------------------------------------------


@dataclass
class RuleIndex:
    """Derived combinatorics of a structurally valid rule."""

    rule: SubdivisionRule
    degree: int
    vertex_copy: dict[str, str]                       # level-0 vertex -> level-1 copy
    path: dict[str, list[Dart]]                       # edge -> level-1 darts, tail->head
    path_interior: dict[str, list[str]]               # edge -> interior level-1 vertices
    interior_vertices: dict[str, list[str]]           # tile -> carried vertices
    interior_edges: dict[str, list[str]]              # tile -> carried edges
    interior_tiles: dict[str, list[str]]              # tile -> carried tiles
    expanded: dict[str, list[Dart]]                   # tile -> expanded boundary walk
    expanded_orig: dict[str, list[int]]               # expanded index -> walk position
    bmatch: dict[str, dict[Dart, int]]                # tile -> boundary dart -> index
    attach: dict[str, dict[Dart, int]]                # tile -> interior dart -> corner index
    local_degree: dict[str, int]                      # level-1 vertex -> local degree

    def corner_is_original(self, t: str, c: int) -> bool:
        orig = self.expanded_orig[t]
        return orig[c] != orig[(c - 1) % len(orig)] or len(orig) == 1


def _build_paths(rule: SubdivisionRule, vertex_copy: dict[str, str]
                 ) -> tuple[dict[str, list[Dart]], dict[str, list[str]]]:
    """Order the carried cells of each level-0 edge into its subdivision path."""
    c1 = rule.level1
    carried_edges: dict[str, list[str]] = {e: [] for e in rule.level0.edges}
    carried_verts: dict[str, set[str]] = {e: set() for e in rule.level0.edges}
    for e1, (kind, ref) in rule.carrier_edges.items():
        if kind == "edge":
            carried_edges[ref].append(e1)
    for v1, (kind, ref) in rule.carrier_vertices.items():
        if kind == "edge":
            carried_verts[ref].add(v1)

    loc1 = c1.dart_location()
    paths: dict[str, list[Dart]] = {}
    interiors: dict[str, list[str]] = {}
    for e0 in sorted(rule.level0.edges):
        tail0, head0 = rule.level0.edges[e0]
        start = vertex_copy[tail0]
        end = vertex_copy[head0]
        pieces = carried_edges[e0]
        if not pieces:
            raise ValidationFailure(f"edge {e0} has no carried level-1 edge",
                                    check="carrier")
        # darts available on the carried pieces
        incident: dict[str, list[Dart]] = {}
        for e1 in pieces:
            for s in (PLUS, MINUS):
                incident.setdefault(c1.tail((e1, s)), []).append((e1, s))
        interior = carried_verts[e0]
        for w in interior:
            if len(incident.get(w, [])) != 2:
                raise ValidationFailure(
                    f"interior vertex {w} of edge {e0} is not a path point",
                    check="carrier")

        def walk_from(d0: Dart) -> list[Dart] | None:
            out = [d0]
            used = {d0[0]}
            cur = c1.head(d0)
            while len(out) < len(pieces):
                nxts = [d for d in incident.get(cur, [])
                        if d[0] not in used and cur in interior]
                if len(nxts) != 1:
                    return None
                out.append(nxts[0])
                used.add(nxts[0][0])
                cur = c1.head(nxts[0])
            if cur != end or len(used) != len(pieces):
                return None
            # every interior vertex visited
            seen = {c1.head(d) for d in out[:-1]}
            if seen != interior:
                return None
            return out

        candidates = []
        for d in sorted(incident.get(start, [])):
            got = walk_from(d)
            if got is not None:
                candidates.append(got)
        if not candidates:
            raise ValidationFailure(
                f"carried cells of edge {e0} do not form a path "
                f"from {start} to {end}", check="carrier")
        if len(candidates) > 1:
            # loops admit two orientations; pick the one whose first dart has
            # the tile left of (e0,+) on its left, else lexicographic
            left0 = rule.level0.tile_left((e0, PLUS))
            filtered = [p for p in candidates
                        if rule.carrier_tiles.get(loc1[p[0]][0]) == left0]
            pick = filtered if filtered else candidates
            candidates = sorted(pick)
        paths[e0] = candidates[0]
        interiors[e0] = [c1.head(d) for d in candidates[0][:-1]]
    return paths, interiors


def build_rule_index(rule: SubdivisionRule) -> RuleIndex:
    c0, c1 = rule.level0, rule.level1

    # vertex copies: carrier vertex->vertex must biject onto Vert(level0)
    vertex_copy: dict[str, str] = {}
    for v1, (kind, ref) in rule.carrier_vertices.items():
        if kind == "vertex":
            if ref in vertex_copy:
                raise ValidationFailure(f"two level-1 copies of vertex {ref}",
                                        check="carrier")
            vertex_copy[ref] = v1
    missing = set(c0.vertices) - set(vertex_copy)
    if missing:
        raise ValidationFailure(f"level-0 vertex {sorted(missing)[0]} has no "
                                "level-1 copy", check="carrier")

    paths, path_interior = _build_paths(rule, vertex_copy)

    interior_vertices: dict[str, list[str]] = {t: [] for t in c0.tiles}
    interior_edges: dict[str, list[str]] = {t: [] for t in c0.tiles}
    interior_tiles: dict[str, list[str]] = {t: [] for t in c0.tiles}
    for v1, (kind, ref) in sorted(rule.carrier_vertices.items()):
        if kind == "tile":
            interior_vertices[ref].append(v1)
    for e1, (kind, ref) in sorted(rule.carrier_edges.items()):
        if kind == "tile":
            interior_edges[ref].append(e1)
    for t1, ref in sorted(rule.carrier_tiles.items()):
        interior_tiles[ref].append(t1)

    # expanded boundary walks with occurrence tags
    expanded: dict[str, list[Dart]] = {}
    expanded_orig: dict[str, list[int]] = {}
    bmatch: dict[str, dict[Dart, int]] = {}
    for t in sorted(c0.tiles):
        exp: list[Dart] = []
        orig: list[int] = []
        for j, (e0, s) in enumerate(c0.tiles[t]):
            run = paths[e0] if s == PLUS else [flip(d) for d in reversed(paths[e0])]
            exp.extend(run)
            orig.extend([j] * len(run))
        expanded[t] = exp
        expanded_orig[t] = orig
        match: dict[Dart, int] = {}
        for c, d in enumerate(exp):
            if d in match:
                raise ValidationFailure(
                    f"boundary dart {d} repeats in expansion of tile {t}",
                    check="carrier")
            match[d] = c
        bmatch[t] = match

    # wedge assignment: interior darts at boundary vertices -> corner index
    attach: dict[str, dict[Dart, int]] = {t: {} for t in c0.tiles}
    total_darts = 2 * len(c1.edges)
    for t in sorted(c0.tiles):
        exp = expanded[t]
        n = len(exp)
        for c in range(n):
            beta = exp[c]
            alpha = exp[(c - 1) % n]
            d = c1.rotation_ccw(beta)
            steps = 0
            while d != flip(alpha):
                if steps > total_darts:
                    raise ValidationFailure(
                        f"wedge walk at tile {t} corner {c} does not close",
                        check="carrier")
                if d in attach[t]:
                    raise ValidationFailure(
                        f"dart {d} assigned to two corners of tile {t}",
                        check="carrier")
                attach[t][d] = c
                d = c1.rotation_ccw(d)
                steps += 1

    # every dart of an interior edge at a path/copy vertex must be attached
    for t in sorted(c0.tiles):
        for e1 in interior_edges[t]:
            for s in (PLUS, MINUS):
                w = c1.tail((e1, s))
                kind, ref = rule.carrier_vertices[w]
                if kind != "tile" and (e1, s) not in attach[t]:
                    raise ValidationFailure(
                        f"interior dart ({e1},{s}) of tile {t} not attached "
                        "to any boundary corner", check="carrier")

    # degree and local degrees
    dartdeg0: dict[str, int] = {v: 0 for v in c0.vertices}
    for e, (a, b) in c0.edges.items():
        dartdeg0[a] += 1
        dartdeg0[b] += 1
    dartdeg1: dict[str, int] = {v: 0 for v in c1.vertices}
    for e, (a, b) in c1.edges.items():
        dartdeg1[a] += 1
        dartdeg1[b] += 1
    local_degree: dict[str, int] = {}
    for v1 in c1.vertices:
        img = rule.map_vertices[v1]
        num, den = dartdeg1[v1], dartdeg0[img]
        if den == 0 or num % den:
            raise ValidationFailure(
                f"vertex {v1}: level-1 valence {num} is not a multiple of the "
                f"image valence {den}", check="local degree")
        local_degree[v1] = num // den

    tiles_per_type: dict[str, int] = {t: 0 for t in c0.tiles}
    for t1, img in rule.map_tiles.items():
        tiles_per_type[img.tile] += 1
    degs = sorted(set(tiles_per_type.values()))
    if len(degs) != 1:
        raise ValidationFailure(
            f"tile preimage counts differ across types: {tiles_per_type}",
            check="degree")
    degree = degs[0]

    return RuleIndex(rule, degree, vertex_copy, paths, path_interior,
                     interior_vertices, interior_edges, interior_tiles,
                     expanded, expanded_orig, bmatch, attach, local_degree)


# ---------------------------------------------------------------------------
# rule validation
# ---------------------------------------------------------------------------


def validate_rule(rule: SubdivisionRule) -> ValidationReport:
    """Full structural check; on pass reports degree and critical vertices."""
    fails: list[tuple[str, str]] = []

    def fail(check: str, msg: str) -> ValidationReport:
        fails.append((check, msg))
        return ValidationReport(False, fails)

    for cx, name in ((rule.level0, "level0"), (rule.level1, "level1")):
        rep = validate_complex(cx)
        if not rep.ok:
            return fail(rep.first_failure or "complex", f"{name}: {rep.summary()}")

    c0, c1 = rule.level0, rule.level1
    # totality of carrier and map
    for v1 in c1.vertices:
        if v1 not in rule.carrier_vertices:
            return fail("carrier", f"vertex {v1} has no carrier")
        if v1 not in rule.map_vertices:
            return fail("map", f"vertex {v1} has no image")
        if rule.map_vertices[v1] not in set(c0.vertices):
            return fail("post-critical containment",
                        f"vertex {v1} maps outside Vert(level0)")
    for e1 in c1.edges:
        if e1 not in rule.carrier_edges:
            return fail("carrier", f"edge {e1} has no carrier")
        if e1 not in rule.map_edges:
            return fail("map", f"edge {e1} has no image")
        if rule.map_edges[e1].edge not in c0.edges:
            return fail("map", f"edge {e1} maps to unknown edge")
    for t1 in c1.tiles:
        if t1 not in rule.carrier_tiles:
            return fail("carrier", f"tile {t1} has no carrier")
        if t1 not in rule.map_tiles:
            return fail("map", f"tile {t1} has no image")
        if rule.map_tiles[t1].tile not in c0.tiles:
            return fail("map", f"tile {t1} maps to unknown tile")

    # endpoint consistency of edge images
    for e1, img in sorted(rule.map_edges.items()):
        t1v, h1v = c1.edges[e1]
        t0v, h0v = c0.edges[img.edge]
        want = (t0v, h0v) if img.orient == PLUS else (h0v, t0v)
        got = (rule.map_vertices[t1v], rule.map_vertices[h1v])
        if got != want:
            return fail("orientation",
                        f"edge {e1}: endpoint images {got} do not match "
                        f"{img.edge} with orient {img.orient}")

    try:
        index = build_rule_index(rule)
    except ValidationFailure as exc:
        return fail(exc.check or "carrier", str(exc))

    # walk transport: each level-1 tile walk maps onto its image walk with
    # orientation preserved, starting at the declared alignment
    for t1 in sorted(c1.tiles):
        img = rule.map_tiles[t1]
        w1 = c1.tiles[t1]
        w0 = c0.tiles[img.tile]
        if len(w1) != len(w0):
            return fail("orientation",
                        f"tile {t1} walk length {len(w1)} differs from image "
                        f"{img.tile} length {len(w0)}")
        for i, (e1, s1) in enumerate(w1):
            em = rule.map_edges[e1]
            got = (em.edge, s1 * em.orient)
            want = w0[(i + img.align) % len(w0)]
            if got != want:
                return fail("orientation",
                            f"tile {t1} position {i}: dart maps to {got}, "
                            f"image walk holds {want}")

    # degree uniformity across cells
    d = index.degree
    for e0 in c0.edges:
        lifts = [e1 for e1, img in rule.map_edges.items() if img.edge == e0]
        if len(lifts) != d:
            return fail("degree",
                        f"edge {e0} has {len(lifts)} lifts, expected {d}")
    for v0 in c0.vertices:
        total = sum(index.local_degree[v1]
                    for v1, img in rule.map_vertices.items() if img == v0)
        if total != d:
            return fail("degree",
                        f"vertex {v0} preimage local degrees sum to {total}, "
                        f"expected {d}")

    # tile interiors form disks: Euler count 1 per tile, connected
    for t0 in sorted(c0.tiles):
        vi = len(index.interior_vertices[t0])
        ei = len(index.interior_edges[t0])
        ti = len(index.interior_tiles[t0])
        if vi - ei + ti != 1:
            return fail("carrier",
                        f"tile {t0}: interior cell counts V-E+F = {vi - ei + ti}, "
                        "expected 1")
        if ti == 0:
            return fail("carrier", f"tile {t0} has no carried tile")
        # each carried edge must separate two carried tiles of the same tile
        loc1 = c1.dart_location()
        carried = set(index.interior_tiles[t0])
        for e1 in index.interior_edges[t0]:
            for s in (PLUS, MINUS):
                side = loc1[(e1, s)][0]
                if side not in carried:
                    return fail("carrier",
                                f"interior edge {e1} of {t0} borders foreign "
                                f"tile {side}")
        # connectivity of carried tiles across carried edges
        if ti > 1:
            adj: dict[str, set[str]] = {x: set() for x in carried}
            for e1 in index.interior_edges[t0]:
                a = loc1[(e1, PLUS)][0]
                b = loc1[(e1, MINUS)][0]
                adj[a].add(b)
                adj[b].add(a)
            stack = [index.interior_tiles[t0][0]]
            seen = {stack[0]}
            while stack:
                for y in adj[stack.pop()]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            if seen != carried:
                return fail("carrier", f"tile {t0} interior is disconnected")

    # marked set must be forward invariant and contain the critical values
    marked = rule.marked
    if marked:
        crit_values = {rule.map_vertices[v1]
                       for v1, deg in index.local_degree.items() if deg > 1}
        orbit_closure = set(crit_values)
        frontier = list(crit_values)
        f0 = {v: rule.map_vertices[index.vertex_copy[v]] for v in c0.vertices}
        while frontier:
            v = frontier.pop()
            w = f0[v]
            if w not in orbit_closure:
                orbit_closure.add(w)
                frontier.append(w)
        if not orbit_closure <= marked:
            return fail("marked",
                        f"marked set omits post-critical vertex "
                        f"{sorted(orbit_closure - marked)[0]}")
        if not {f0[v] for v in marked} <= marked:
            return fail("marked", "marked set is not forward invariant")

    critical = sorted(v1 for v1, deg in index.local_degree.items() if deg > 1)
    return ValidationReport(True, [], notes={
        "degree": index.degree,
        "critical_vertices": tuple(critical),
    })


def require_valid_rule(rule: SubdivisionRule) -> RuleIndex:
    rep = validate_rule(rule)
    if not rep.ok:
        raise ValidationFailure(f"rule {rule.name}: {rep.summary()}",
                                check=rep.first_failure or "")
    return build_rule_index(rule)


# ---------------------------------------------------------------------------
# leveled complexes and subdivision
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CellInfo:
    kind: Kind
    parent: str | None = None        # containing cell id one level down
    parent_kind: Kind | None = None
    type_cell: str = ""              # level-0 cell under f^level
    type_orient: int = PLUS          # edges only
    type_align: int = 0              # tiles only
    fimage: str | None = None        # one-step image cell id (level >= 1)
    fimage_orient: int = PLUS
    fimage_align: int = 0
    rel_orient: int = PLUS           # edges inside an edge parent: direction


@dataclass
class LeveledComplex:
    complex: SphereComplex
    level: int
    vinfo: dict[str, CellInfo]
    einfo: dict[str, CellInfo]
    tinfo: dict[str, CellInfo]

    def cell_count(self) -> int:
        cx = self.complex
        return len(cx.vertices) + len(cx.edges) + len(cx.tiles)

    def edge_type(self, e: str) -> tuple[str, int]:
        info = self.einfo[e]
        return info.type_cell, info.type_orient

    def tile_type(self, t: str) -> tuple[str, int]:
        info = self.tinfo[t]
        return info.type_cell, info.type_align


def level_zero(rule: SubdivisionRule) -> LeveledComplex:
    c0 = rule.level0
    vinfo = {v: CellInfo("vertex", type_cell=v) for v in c0.vertices}
    einfo = {e: CellInfo("edge", type_cell=e) for e in c0.edges}
    tinfo = {t: CellInfo("tile", type_cell=t) for t in c0.tiles}
    return LeveledComplex(c0, 0, vinfo, einfo, tinfo)


def level_one(rule: SubdivisionRule, index: RuleIndex) -> LeveledComplex:
    c1 = rule.level1
    vinfo: dict[str, CellInfo] = {}
    einfo: dict[str, CellInfo] = {}
    tinfo: dict[str, CellInfo] = {}
    for v1 in c1.vertices:
        kind, ref = rule.carrier_vertices[v1]
        vinfo[v1] = CellInfo("vertex", parent=ref, parent_kind=kind,
                             type_cell=rule.map_vertices[v1],
                             fimage=rule.map_vertices[v1])
    for e1 in c1.edges:
        kind, ref = rule.carrier_edges[e1]
        img = rule.map_edges[e1]
        rel = PLUS
        if kind == "edge":
            path = index.path[ref]
            rel = next(s for (eid, s) in path if eid == e1)
        einfo[e1] = CellInfo("edge", parent=ref, parent_kind=kind,
                             type_cell=img.edge, type_orient=img.orient,
                             fimage=img.edge, fimage_orient=img.orient,
                             rel_orient=rel)
    for t1 in c1.tiles:
        img = rule.map_tiles[t1]
        tinfo[t1] = CellInfo("tile", parent=rule.carrier_tiles[t1],
                             parent_kind="tile",
                             type_cell=img.tile, type_align=img.align,
                             fimage=img.tile, fimage_align=img.align)
    return LeveledComplex(c1, 1, vinfo, einfo, tinfo)


def _vertex_dynamics(rule: SubdivisionRule, index: RuleIndex) -> dict[str, str]:
    return {v: rule.map_vertices[index.vertex_copy[v]]
            for v in rule.level0.vertices}


def subdivide_once(rule: SubdivisionRule, index: RuleIndex, lv: LeveledComplex,
                   budget: int = DEFAULT_CELL_BUDGET) -> LeveledComplex:
    """One pullback step: copy each cell's type pattern through its alignment."""
    if lv.level == 0:
        return level_one(rule, index)
    c = lv.complex
    c1 = rule.level1
    f0 = _vertex_dynamics(rule, index)

    new_vinfo: dict[str, CellInfo] = {}
    new_einfo: dict[str, CellInfo] = {}
    new_tinfo: dict[str, CellInfo] = {}
    new_edges: dict[str, tuple[str, str]] = {}
    new_tiles: dict[str, tuple[Dart, ...]] = {}

    # persisting vertices: contained in themselves one level down; the image
    # point keeps its id except across the 0 -> 1 id change
    for v, info in lv.vinfo.items():
        fim = info.fimage if lv.level > 1 else index.vertex_copy[info.fimage]
        new_vinfo[v] = CellInfo("vertex", parent=v, parent_kind="vertex",
                                type_cell=f0[info.type_cell], fimage=fim)

    def cv(parent: str, w1: str) -> str:
        return f"{parent}/v.{w1}"

    def ce(parent: str, e1: str) -> str:
        return f"{parent}/e.{e1}"

    def ct(parent: str, t1: str) -> str:
        return f"{parent}/t.{t1}"

    # edge subdivision: copies of the type's path cells, endpoints resolved
    # by path position (a loop type has one copy id at both path ends)
    for e in sorted(c.edges):
        info = lv.einfo[e]
        etype, s = info.type_cell, info.type_orient
        fim = info.fimage
        path = index.path[etype]
        m = len(path)
        tail_e, head_e = c.edges[e]
        start, finish = (tail_e, head_e) if s == PLUS else (head_e, tail_e)

        def path_vertex(j: int) -> str:
            # vertex at path slot j in the copy inside e (0..m)
            if j == 0:
                return start
            if j == m:
                return finish
            return cv(e, index.path_interior[etype][j - 1])

        for w1 in index.path_interior[etype]:
            vid = cv(e, w1)
            new_vinfo[vid] = CellInfo(
                "vertex", parent=e, parent_kind="edge",
                type_cell=rule.map_vertices[w1],
                fimage=cv(fim, w1) if lv.level > 1 else w1)
        for j, (e1, d1) in enumerate(path):
            eid = ce(e, e1)
            a, b = (path_vertex(j), path_vertex(j + 1))
            if d1 == MINUS:
                a, b = b, a
            new_edges[eid] = (a, b)
            img = rule.map_edges[e1]
            new_einfo[eid] = CellInfo(
                "edge", parent=e, parent_kind="edge",
                type_cell=img.edge, type_orient=img.orient,
                fimage=ce(fim, e1) if lv.level > 1 else e1,
                rel_orient=s * d1)

    # tile interiors
    for t in sorted(c.tiles):
        info = lv.tinfo[t]
        ttype, k = info.type_cell, info.type_align
        fim = info.fimage
        walk = c.tiles[t]
        m = len(walk)
        exp = index.expanded[ttype]
        orig = index.expanded_orig[ttype]

        def edge_at(j: int) -> Dart:
            return walk[(j - k) % m]

        def boundary_vertex_copy(c_idx: int) -> str:
            """Level-(n+1) vertex at expanded corner c_idx of this tile."""
            w1 = c1.tail(exp[c_idx])
            j = orig[c_idx]
            if index.corner_is_original(ttype, c_idx):
                return c.tail(edge_at(j))
            host = edge_at(j)[0]
            return cv(host, w1)

        corner_index_cache: dict[Dart, int] = index.attach[ttype]

        def resolve_in_tile(w1: str, via_dart: Dart) -> str:
            kind, ref = rule.carrier_vertices[w1]
            if kind == "tile":
                return cv(t, w1)
            c_idx = corner_index_cache[via_dart]
            return boundary_vertex_copy(c_idx)

        for w1 in index.interior_vertices[ttype]:
            vid = cv(t, w1)
            new_vinfo[vid] = CellInfo(
                "vertex", parent=t, parent_kind="tile",
                type_cell=rule.map_vertices[w1],
                fimage=cv(fim, w1) if lv.level > 1 else w1)
        for e1 in index.interior_edges[ttype]:
            eid = ce(t, e1)
            a, b = c1.edges[e1]
            new_edges[eid] = (resolve_in_tile(a, (e1, PLUS)),
                              resolve_in_tile(b, (e1, MINUS)))
            img = rule.map_edges[e1]
            new_einfo[eid] = CellInfo(
                "edge", parent=t, parent_kind="tile",
                type_cell=img.edge, type_orient=img.orient,
                fimage=ce(fim, e1) if lv.level > 1 else e1)
        for t1 in index.interior_tiles[ttype]:
            tid = ct(t, t1)
            darts: list[Dart] = []
            for (x, dr) in c1.tiles[t1]:
                kind, ref = rule.carrier_edges[x]
                if kind == "tile":
                    darts.append((ce(t, x), dr))
                else:
                    c_idx = index.bmatch[ttype][(x, dr)]
                    host = edge_at(orig[c_idx])[0]
                    darts.append((ce(host, x), dr))
            new_tiles[tid] = tuple(darts)
            img = rule.map_tiles[t1]
            new_tinfo[tid] = CellInfo(
                "tile", parent=t, parent_kind="tile",
                type_cell=img.tile, type_align=img.align,
                fimage=ct(fim, t1) if lv.level > 1 else t1)

    total = len(new_vinfo) + len(new_edges) + len(new_tiles)
    if total > budget:
        raise BudgetExceeded(
            f"level {lv.level + 1} needs {total} cells (budget {budget})",
            reached=lv.level)

    vertices = tuple(new_vinfo)
    cx = SphereComplex(vertices, new_edges, new_tiles, c.marked)
    return LeveledComplex(cx, lv.level + 1, new_vinfo, new_einfo, new_tinfo)


@dataclass
class Tower:
    """Cache of leveled complexes R^0 .. R^n for one rule."""

    rule: SubdivisionRule
    index: RuleIndex
    levels: list[LeveledComplex]
    budget: int = DEFAULT_CELL_BUDGET

    @classmethod
    def build(cls, rule: SubdivisionRule, budget: int = DEFAULT_CELL_BUDGET
              ) -> "Tower":
        index = require_valid_rule(rule)
        return cls(rule, index, [level_zero(rule)], budget)

    def up_to(self, n: int) -> LeveledComplex:
        while len(self.levels) <= n:
            self.levels.append(
                subdivide_once(self.rule, self.index, self.levels[-1],
                               self.budget))
        return self.levels[n]


def subdivide(rule: SubdivisionRule, n: int,
              budget: int = DEFAULT_CELL_BUDGET) -> LeveledComplex:
    """Level-n subdivision complex of the rule."""
    if n < 0:
        raise ValueError("level must be nonnegative")
    return Tower.build(rule, budget).up_to(n)


# ---------------------------------------------------------------------------
# Fatou / Julia classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VertexClass:
    is_fatou: dict[str, bool]
    cycle_of: dict[str, tuple[str, ...]]
    local_degree: dict[str, int]      # at the level-1 copy
    periodic: frozenset[str]

    @property
    def fatou(self) -> frozenset[str]:
        return frozenset(v for v, b in self.is_fatou.items() if b)

    @property
    def julia(self) -> frozenset[str]:
        return frozenset(v for v, b in self.is_fatou.items() if not b)


def classify_vertices(rule: SubdivisionRule,
                      index: RuleIndex | None = None) -> VertexClass:
    index = index or require_valid_rule(rule)
    f0 = _vertex_dynamics(rule, index)
    local = {v: index.local_degree[index.vertex_copy[v]]
             for v in rule.level0.vertices}

    cycle_of: dict[str, tuple[str, ...]] = {}
    periodic: set[str] = set()
    for v in rule.level0.vertices:
        seen: list[str] = []
        cur = v
        while cur not in seen:
            seen.append(cur)
            cur = f0[cur]
        cyc = tuple(seen[seen.index(cur):])
        cycle_of[v] = cyc
        if v in cyc:
            periodic.add(v)

    is_fatou = {v: any(local[c] > 1 for c in cycle_of[v])
                for v in rule.level0.vertices}
    return VertexClass(is_fatou, cycle_of, local, frozenset(periodic))


def _interior_vertex_types(rule: SubdivisionRule, index: RuleIndex,
                           e0: str) -> set[str]:
    return {rule.map_vertices[w] for w in index.path_interior[e0]}


def _edge_reach(rule: SubdivisionRule, index: RuleIndex, e0: str) -> set[str]:
    """Edge types reachable from e0 in the edge-subdivision digraph."""
    seen = {e0}
    stack = [e0]
    while stack:
        cur = stack.pop()
        for (e1, _) in index.path[cur]:
            nxt = rule.map_edges[e1].edge
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def julia_edges(rule: SubdivisionRule, index: RuleIndex | None = None,
                classes: VertexClass | None = None) -> frozenset[str]:
    """Edges whose subdivisions never contain a Fatou vertex."""
    index = index or require_valid_rule(rule)
    classes = classes or classify_vertices(rule, index)
    out = set()
    for e0, (a, b) in rule.level0.edges.items():
        if classes.is_fatou[a] or classes.is_fatou[b]:
            continue
        exposed = set()
        for e in _edge_reach(rule, index, e0):
            exposed |= _interior_vertex_types(rule, index, e)
        if not any(classes.is_fatou[v] for v in exposed):
            out.add(e0)
    return frozenset(out)


def julia_tiles(rule: SubdivisionRule, index: RuleIndex | None = None,
                classes: VertexClass | None = None) -> frozenset[str]:
    index = index or require_valid_rule(rule)
    classes = classes or classify_vertices(rule, index)
    jedges = julia_edges(rule, index, classes)

    def tile_reach(t0: str) -> set[str]:
        seen = {t0}
        stack = [t0]
        while stack:
            cur = stack.pop()
            for t1 in index.interior_tiles[cur]:
                nxt = rule.map_tiles[t1].tile
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    out = set()
    for t0 in rule.level0.tiles:
        ok = True
        for t in tile_reach(t0):
            corners = {rule.level0.tail(d) for d in rule.level0.tiles[t]}
            if any(classes.is_fatou[v] for v in corners):
                ok = False
                break
            boundary = {d[0] for d in rule.level0.tiles[t]}
            if not boundary <= jedges:
                ok = False
                break
            inner_types = {rule.map_vertices[w]
                           for w in index.interior_vertices[t]}
            if any(classes.is_fatou[v] for v in inner_types):
                ok = False
                break
            for e1 in index.interior_edges[t]:
                e_img = rule.map_edges[e1].edge
                exposed = set()
                for e in _edge_reach(rule, index, e_img):
                    exposed |= _interior_vertex_types(rule, index, e)
                if any(classes.is_fatou[v] for v in exposed):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.add(t0)
    return frozenset(out)


# ---------------------------------------------------------------------------
# shifts and powers
# ---------------------------------------------------------------------------


def shift(rule: SubdivisionRule, k: int,
          budget: int = DEFAULT_CELL_BUDGET) -> SubdivisionRule:
    """Rule with level-0 = R^k(S), level-1 = R^{k+1}(S), map f."""
    if k < 1:
        raise ValueError("shift exponent must be >= 1")
    tower = Tower.build(rule, budget)
    lo = tower.up_to(k)
    hi = tower.up_to(k + 1)

    carrier_vertices = {v: (info.parent_kind, info.parent)
                        for v, info in hi.vinfo.items()}
    carrier_edges = {e: (info.parent_kind, info.parent)
                     for e, info in hi.einfo.items()}
    carrier_tiles = {t: info.parent for t, info in hi.tinfo.items()}
    map_vertices = {v: info.fimage for v, info in hi.vinfo.items()}
    map_edges = {e: EdgeImage(info.fimage, info.fimage_orient)
                 for e, info in hi.einfo.items()}
    map_tiles = {t: TileImage(info.fimage, info.fimage_align)
                 for t, info in hi.tinfo.items()}
    return SubdivisionRule(
        name=f"{rule.name}:shift{k}",
        level0=lo.complex, level1=hi.complex,
        carrier_vertices=carrier_vertices, carrier_edges=carrier_edges,
        carrier_tiles=carrier_tiles, map_vertices=map_vertices,
        map_edges=map_edges, map_tiles=map_tiles,
        metadata={**rule.metadata, "shift_of": rule.name, "shift": k})


def power(rule: SubdivisionRule, k: int,
          budget: int = DEFAULT_CELL_BUDGET) -> SubdivisionRule:
    """Rule with level-0 = S, level-1 = R^k(S), map f^k."""
    if k < 1:
        raise ValueError("power exponent must be >= 1")
    tower = Tower.build(rule, budget)
    hi = tower.up_to(k)

    def ancestor(cell: str, kind: Kind) -> tuple[Kind, str]:
        cur, cur_kind, lev = cell, kind, hi.level
        while lev > 0:
            lvc = tower.up_to(lev)
            inf = {"vertex": lvc.vinfo, "edge": lvc.einfo,
                   "tile": lvc.tinfo}[cur_kind][cur]
            cur, cur_kind = inf.parent, inf.parent_kind
            lev -= 1
        return (cur_kind, cur)

    carrier_vertices = {v: ancestor(v, "vertex") for v in hi.complex.vertices}
    carrier_edges = {e: ancestor(e, "edge") for e in hi.complex.edges}
    carrier_tiles = {t: ancestor(t, "tile")[1] for t in hi.complex.tiles}
    map_vertices = {v: info.type_cell for v, info in hi.vinfo.items()}
    map_edges = {e: EdgeImage(info.type_cell, info.type_orient)
                 for e, info in hi.einfo.items()}
    map_tiles = {t: TileImage(info.type_cell, info.type_align)
                 for t, info in hi.tinfo.items()}
    return SubdivisionRule(
        name=f"{rule.name}:power{k}",
        level0=rule.level0, level1=hi.complex,
        carrier_vertices=carrier_vertices, carrier_edges=carrier_edges,
        carrier_tiles=carrier_tiles, map_vertices=map_vertices,
        map_edges=map_edges, map_tiles=map_tiles,
        metadata={**rule.metadata, "power_of": rule.name, "power": k})

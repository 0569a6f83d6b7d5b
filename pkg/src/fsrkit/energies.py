"""Conformal graph energies and certified bounds on the asymptotic energy.

Energies of piecewise-linear graph maps are computed exactly from explicit
piece lists (rational breakpoints and derivatives), so every reported upper
bound is the energy of a concrete representative and hence certifies a bound
on the homotopy-class energy and, through submultiplicativity, on the
asymptotic energy.  The certificate engine builds the dual-skeleton virtual
endomorphism, removes one edge per Julia vertex, equips the base with a
K-expanding length, deforms the map near the recurrent forest by a staggered
cascade of local pulls, and evaluates the resulting fill profile exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import inf

from .complexes import Dart, MINUS, PLUS, dual_skeleton, flip
from .digraphs import path_count
from .dynamics import (
    build_edge_digraph,
    has_polynomial_growth,
    recurrency_periods,
    stability_threshold,
)
from .errors import InternalInconsistency, UnsupportedRegime, ValidationFailure
from .multicurves import MulticurveSpec, lambda_p
from .rules import (
    RuleIndex,
    SubdivisionRule,
    Tower,
    classify_vertices,
    power,
    require_valid_rule,
    shift,
)
from .spines import recurrent_edge_ids

MARGIN = 1e-9


# ---------------------------------------------------------------------------
# conformal graphs and PL maps with per-edge actions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConformalGraph:
    vertices: tuple[str, ...]
    edges: dict[str, tuple[str, str]]
    p: float
    lengths: dict[str, Fraction]

    def __post_init__(self):
        for e, val in self.lengths.items():
            if val < 0 or (val == 0 and self.p not in (1, inf)):
                raise ValidationFailure(
                    f"edge {e} has non-positive length {val}", check="lengths")


@dataclass(frozen=True)
class Onto:
    edge: str
    orient: int     # +1 tail->tail


@dataclass(frozen=True)
class Collapse:
    vertex: str


@dataclass(frozen=True)
class PLGraphMap:
    domain: ConformalGraph
    codomain: ConformalGraph
    vertex_image: dict[str, str]
    action: dict[str, Onto | Collapse]

    def derivative(self, e: str) -> Fraction:
        act = self.action[e]
        if isinstance(act, Collapse):
            return Fraction(0)
        return Fraction(self.codomain.lengths[act.edge],
                        self.domain.lengths[e])


def fill_pp(m: PLGraphMap, p: float | None = None) -> dict[str, float]:
    """Fill profile per codomain edge (constant for edge-to-edge maps)."""
    p = m.codomain.p if p is None else p
    out = {e: 0.0 for e in m.codomain.edges}
    for e, act in m.action.items():
        if isinstance(act, Collapse):
            continue
        if p == 1:
            out[act.edge] += float(
                Fraction(m.domain.lengths[e], m.codomain.lengths[act.edge]))
        elif p == inf:
            pass  # handled in energy_pp
        else:
            out[act.edge] += float(m.derivative(e)) ** (p - 1.0)
    return out


def energy_pp(m: PLGraphMap, p: float | None = None) -> float:
    """E^p_p of the map: sup-norm p-th root of the fill, or the Lipschitz
    constant at p = infinity."""
    p = m.codomain.p if p is None else p
    if p == inf:
        derivs = [float(m.derivative(e)) for e, a in m.action.items()
                  if isinstance(a, Onto)]
        return max(derivs, default=0.0)
    filled = fill_pp(m, p)
    top = max(filled.values(), default=0.0)
    if p == 1:
        return top
    return top ** (1.0 / p)


def energy_1p(m: PLGraphMap, p: float) -> float:
    """E^1_p of a map from a weighted graph: the p/(p-1)-norm of the
    multiplicity function, integrated over codomain edge lengths."""
    if p <= 1:
        raise ValidationFailure("energy_1p needs p > 1; use fill_pp at p = 1",
                                check="exponent")
    mult = {e: Fraction(0) for e in m.codomain.edges}
    for e, act in m.action.items():
        if isinstance(act, Onto):
            mult[act.edge] += m.domain.lengths[e]
    pv = p / (p - 1.0)
    total = 0.0
    for e, n in mult.items():
        total += float(n) ** pv * float(m.codomain.lengths[e])
    return total ** (1.0 / pv)


# ---------------------------------------------------------------------------
# dual-skeleton virtual endomorphism and natural representatives
# ---------------------------------------------------------------------------


def dual_conformal_graph(rule: SubdivisionRule, tower: Tower, n: int, p: float,
                         base_lengths: dict[str, Fraction] | None = None
                         ) -> ConformalGraph:
    """Level-n dual skeleton with lengths lifted from the base through the
    level-n covering: a dual edge inherits the length of its type's dual."""
    lv = tower.up_to(n)
    dual = dual_skeleton(lv.complex)
    lengths = {}
    for e in lv.complex.edges:
        etype = lv.einfo[e].type_cell
        lengths[e] = (base_lengths or {}).get(etype, Fraction(1))
    return ConformalGraph(tuple(sorted(lv.complex.tiles)),
                          {e: (dual.dart_tile[(e, MINUS)],
                               dual.dart_tile[(e, PLUS)])
                           for e in lv.complex.edges},
                          p, lengths)


def _ancestor_cell(tower: Tower, cell: str, kind: str, from_level: int,
                   to_level: int) -> tuple[str, str, int]:
    """Ancestor cell at the target level, with the edge-orientation product
    accumulated along edge-in-edge steps."""
    cur, cur_kind, lev = cell, kind, from_level
    orient = PLUS
    while lev > to_level:
        lvc = tower.up_to(lev)
        info = {"vertex": lvc.vinfo, "edge": lvc.einfo,
                "tile": lvc.tinfo}[cur_kind][cur]
        if cur_kind == "edge" and info.parent_kind == "edge":
            orient *= info.rel_orient
        if cur_kind == "vertex" and info.parent == cur:
            lev -= 1
            continue
        cur, cur_kind = info.parent, info.parent_kind
        lev -= 1
    return cur, cur_kind, orient


def natural_representative(rule: SubdivisionRule, n: int, m: int,
                           tower: Tower | None = None, p: float = 2.0,
                           base_lengths: dict[str, Fraction] | None = None
                           ) -> PLGraphMap:
    """phi^n_m: level-n dual -> level-m dual.  A dual edge maps onto the dual
    of its level-m ancestor edge, or collapses when the ancestor is a tile."""
    if not n > m >= 0:
        raise ValidationFailure("need n > m >= 0", check="levels")
    tower = tower or Tower.build(rule)
    gn = dual_conformal_graph(rule, tower, n, p, base_lengths)
    gm = dual_conformal_graph(rule, tower, m, p, base_lengths)
    lvn = tower.up_to(n)

    vertex_image = {}
    for t in lvn.complex.tiles:
        anc, kind, _ = _ancestor_cell(tower, t, "tile", n, m)
        vertex_image[t] = anc
    action: dict[str, Onto | Collapse] = {}
    for e in lvn.complex.edges:
        anc, kind, orient = _ancestor_cell(tower, e, "edge", n, m)
        if kind == "edge":
            action[e] = Onto(anc, orient)
        elif kind == "tile":
            action[e] = Collapse(anc)
        else:
            raise InternalInconsistency(f"edge {e} has vertex ancestor")
    return PLGraphMap(gn, gm, vertex_image, action)


def e1_exact(rule: SubdivisionRule, n: int,
             index: RuleIndex | None = None) -> int:
    """E^1 of the level-n natural representative: max subedge count."""
    index = index or require_valid_rule(rule)
    g = build_edge_digraph(rule, index)
    return max(path_count(g, e, n) for e in rule.level0.edges)


# ---------------------------------------------------------------------------
# K-expanding lengths
# ---------------------------------------------------------------------------


def subdivision_total_order(rule: SubdivisionRule,
                            index: RuleIndex | None = None) -> list[str]:
    """Linear extension of the subdivision preorder on level-0 edges.

    Requires every cycle of the edge digraph to be a loop; ranks increase
    along arcs, ties broken lexicographically."""
    index = index or require_valid_rule(rule)
    g = build_edge_digraph(rule, index)
    periods = recurrency_periods(rule, index)
    if any(per != 1 for per in periods.values()):
        raise UnsupportedRegime(
            "total order requires loop cycles; replace the rule by a power")
    succ: dict[str, set[str]] = {e: set() for e in rule.level0.edges}
    indeg: dict[str, int] = {e: 0 for e in rule.level0.edges}
    for a in g.arcs:
        if a.src != a.dst and a.dst not in succ[a.src]:
            succ[a.src].add(a.dst)
    for e, out in succ.items():
        for x in out:
            indeg[x] += 1
    ready = sorted(e for e, d in indeg.items() if d == 0)
    order: list[str] = []
    while ready:
        e = ready.pop(0)
        order.append(e)
        for x in sorted(succ[e]):
            indeg[x] -= 1
            if indeg[x] == 0:
                ready.append(x)
        ready.sort()
    if len(order) != len(rule.level0.edges):
        raise InternalInconsistency("subdivision preorder has a non-loop cycle")
    return order


def k_expanding_length(rule: SubdivisionRule, k_factor: int,
                       index: RuleIndex | None = None
                       ) -> tuple[dict[str, Fraction], list[str]]:
    """alpha(e) = (2K)^rank(e) along a total order extending the preorder."""
    if k_factor <= 1:
        raise ValidationFailure("K must exceed 1", check="parameters")
    order = subdivision_total_order(rule, index)
    alpha = {e: Fraction(2 * k_factor) ** r for r, e in enumerate(order)}
    for hi_edge in order:
        for lo_edge in order:
            if alpha[hi_edge] > alpha[lo_edge]:
                if not alpha[hi_edge] > k_factor * alpha[lo_edge]:
                    raise InternalInconsistency("K-expanding property failed")
    return alpha, order


def chain_rank_lengths(rule: SubdivisionRule, k_factor: int,
                       index: RuleIndex | None = None,
                       boost_above: dict[str, list[str]] | None = None
                       ) -> dict[str, Fraction]:
    """alpha(e) = (2K)^rank(e) with ranks from longest chains of the
    subdivision partial order, so incomparable edges share lengths.

    This satisfies the K-expanding inequality on every strictly comparable
    pair, which is what the preimage-length estimates use, while keeping
    recurrent loop edges of equal depth at equal length.  ``boost_above``
    adds artificial constraints edge > each listed edge (used to make the
    retraction's removed edge dominate its Julia star)."""
    if k_factor <= 1:
        raise ValidationFailure("K must exceed 1", check="parameters")
    index = index or require_valid_rule(rule)
    g = build_edge_digraph(rule, index)
    periods = recurrency_periods(rule, index)
    if any(per != 1 for per in periods.values()):
        raise UnsupportedRegime(
            "chain ranks require loop cycles; replace the rule by a power")
    # arcs point from shorter to longer: preorder arcs a -> b (b a type of a
    # subedge of a, b != a) plus the requested boosts
    up: dict[str, set[str]] = {e: set() for e in rule.level0.edges}
    for a in g.arcs:
        if a.src != a.dst:
            up[a.src].add(a.dst)
    for tall, shorts in (boost_above or {}).items():
        for s in shorts:
            if s != tall:
                up[s].add(tall)

    rank: dict[str, int] = {}
    state: dict[str, int] = {}

    def visit(e: str) -> int:
        if state.get(e) == 1:
            raise InternalInconsistency(
                "length constraints are cyclic; cannot build K-expanding "
                "lengths with the requested boosts")
        if e in rank:
            return rank[e]
        state[e] = 1
        r = 0
        for x in up[e]:
            r = max(r, visit(x) + 1)
        state[e] = 2
        # rank counts the chain above; longer chains above mean shorter edges
        rank[e] = r
        return r

    for e in rule.level0.edges:
        visit(e)
    top = max(rank.values(), default=0)
    alpha = {e: Fraction(2 * k_factor) ** (top - rank[e])
             for e in rule.level0.edges}
    for src, outs in up.items():
        for dst in outs:
            if not alpha[dst] > k_factor * alpha[src]:
                raise InternalInconsistency("chain-rank lengths not K-expanding")
    return alpha


# ---------------------------------------------------------------------------
# piecewise-linear maps with explicit pieces and exact fill profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Piece:
    """Linear piece: source interval of an edge mapped onto an oriented
    interval of a codomain edge.  Coordinates measure length from the tail."""

    src_edge: str
    src_a: Fraction
    src_b: Fraction
    img_edge: str
    img_a: Fraction
    img_b: Fraction

    def derivative(self) -> Fraction:
        width = self.src_b - self.src_a
        if width <= 0:
            raise InternalInconsistency("empty source interval")
        return abs(self.img_b - self.img_a) / width


@dataclass
class PiecewiseMap:
    domain: ConformalGraph
    codomain: ConformalGraph
    pieces: list[Piece] = field(default_factory=list)

    def check(self) -> None:
        for pc in self.pieces:
            le = self.domain.lengths[pc.src_edge]
            if not (0 <= pc.src_a < pc.src_b <= le):
                raise InternalInconsistency(f"bad source interval {pc}")
            li = self.codomain.lengths[pc.img_edge]
            if not (0 <= min(pc.img_a, pc.img_b)
                    and max(pc.img_a, pc.img_b) <= li):
                raise InternalInconsistency(f"bad image interval {pc}")


def fill_profile(pm: PiecewiseMap, p: float
                 ) -> dict[str, list[tuple[Fraction, Fraction, float]]]:
    """Per codomain edge, the fill value on each sub-interval between
    breakpoints (exact rational breakpoints, float fill values)."""
    cover: dict[str, list[tuple[Fraction, Fraction, Fraction]]] = {
        e: [] for e in pm.codomain.edges}
    for pc in pm.pieces:
        lo, hi = sorted((pc.img_a, pc.img_b))
        if lo == hi:
            continue
        cover[pc.img_edge].append((lo, hi, pc.derivative()))
    out: dict[str, list[tuple[Fraction, Fraction, float]]] = {}
    for e, ivs in cover.items():
        length = pm.codomain.lengths[e]
        cuts = sorted({Fraction(0), length,
                       *(x for iv in ivs for x in iv[:2])})
        prof = []
        for a, b in zip(cuts, cuts[1:]):
            total = 0.0
            for lo, hi, deriv in ivs:
                if lo <= a and b <= hi:
                    if p == inf:
                        total = max(total, float(deriv))
                    else:
                        total += float(deriv) ** (p - 1.0)
            prof.append((a, b, total))
        out[e] = prof
    return out


def sup_fill(pm: PiecewiseMap, p: float) -> tuple[float, str]:
    prof = fill_profile(pm, p)
    best, where = 0.0, ""
    for e, rows in prof.items():
        for a, b, val in rows:
            if val > best:
                best, where = val, e
    return best, where


def piecewise_energy(pm: PiecewiseMap, p: float) -> tuple[float, str]:
    top, where = sup_fill(pm, p)
    if p == inf:
        return top, where
    return top ** (1.0 / p), where


def plmap_to_pieces(m: PLGraphMap) -> PiecewiseMap:
    pm = PiecewiseMap(m.domain, m.codomain)
    for e, act in m.action.items():
        if isinstance(act, Collapse):
            continue
        le = m.domain.lengths[e]
        li = m.codomain.lengths[act.edge]
        if act.orient == PLUS:
            pm.pieces.append(Piece(e, Fraction(0), le, act.edge,
                                   Fraction(0), li))
        else:
            pm.pieces.append(Piece(e, Fraction(0), le, act.edge,
                                   li, Fraction(0)))
    pm.check()
    return pm


# ---------------------------------------------------------------------------
# the certificate engine
# ---------------------------------------------------------------------------


@dataclass
class CertificateReport:
    p: float
    certified: bool
    bound: float                     # bound on the asymptotic energy of rule
    raw_bound: float                 # bound for the transformed rule
    retraction_energy: float
    deformation_energy: float
    params: dict
    case_bounds: dict
    notes: dict = field(default_factory=dict)


def _transform_for_certificate(rule: SubdivisionRule, index: RuleIndex
                               ) -> tuple[SubdivisionRule, int, int]:
    """Power the rule until edge cycles are loops, then shift past the
    stability threshold.  Returns (rule, power k1, shift s)."""
    periods = recurrency_periods(rule, index)
    k1 = 1
    for per in periods.values():
        k1 = k1 * per // math.gcd(k1, per)
    cur = rule
    if k1 > 1:
        cur = power(rule, k1)
    kthr = stability_threshold(cur)
    s = max(kthr, 1)
    cur = shift(cur, s)
    return cur, k1, s


def _blob_structure(g1: ConformalGraph, phi: PLGraphMap
                    ) -> tuple[dict[str, int], dict[int, str]]:
    """Components of the collapsed part of the level-1 dual: blob id per
    vertex, plus the common image vertex of each blob."""
    parent = {v: v for v in g1.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e, act in phi.action.items():
        if isinstance(act, Collapse):
            a, b = g1.edges[e]
            parent[find(a)] = find(b)
    blob_of: dict[str, int] = {}
    rep_index: dict[str, int] = {}
    blob_image: dict[int, str] = {}
    for v in sorted(g1.vertices):
        r = find(v)
        if r not in rep_index:
            rep_index[r] = len(rep_index)
        b = rep_index[r]
        blob_of[v] = b
        img = phi.vertex_image[v]
        if b in blob_image and blob_image[b] != img:
            raise InternalInconsistency("collapsed blob maps to two vertices")
        blob_image[b] = img
    return blob_of, blob_image


DEFAULT_K_GRID = (4, 16, 64, 256, 1024)


def crochet_certificate(rule: SubdivisionRule, p: float,
                        k_factor: int | None = None,
                        index: RuleIndex | None = None) -> CertificateReport:
    """Certified upper bound on the asymptotic p-conformal energy via the
    K-expanding deformation of the dual virtual endomorphism.

    The rule must have polynomial growth and isolated Julia vertices (apply
    normalization first).  When ``k_factor`` is omitted a geometric grid is
    searched and the first certifying value returned.
    """
    if not (1 < p < inf):
        raise ValidationFailure("certificate needs 1 < p < infinity",
                                check="exponent")
    index = index or require_valid_rule(rule)
    if not has_polynomial_growth(rule, index):
        raise UnsupportedRegime("certificate requires polynomial edge growth")

    if k_factor is None:
        best: CertificateReport | None = None
        for k in DEFAULT_K_GRID:
            rep = crochet_certificate(rule, p, k_factor=k, index=index)
            if rep.certified:
                return rep
            if best is None or rep.bound < best.bound:
                best = rep
        best.notes["search"] = "K grid exhausted without certification"
        return best

    work, k1, s = _transform_for_certificate(rule, index)
    widx = require_valid_rule(work)
    classes = classify_vertices(work, widx)
    tower = Tower.build(work)

    # Julia vertices: choose the edge to remove (a preorder-maximal incident
    # edge), then build lengths in which it dominates its star
    eg = build_edge_digraph(work, widx)
    from .digraphs import reachable_from as _reach

    removed: dict[str, str] = {}
    boosts: dict[str, list[str]] = {}
    for v in sorted(work.level0.vertices):
        if classes.is_fatou[v]:
            continue
        incident = sorted({e for e in work.level0.edges
                           if v in work.level0.edges[e]})
        if any(work.level0.edges[e][0] == work.level0.edges[e][1] == v
               for e in incident):
            raise UnsupportedRegime(
                f"Julia vertex {v} carries a loop edge; not isolated")
        for a, b in (work.level0.edges[e] for e in incident):
            other = b if a == v else a
            if not classes.is_fatou[other]:
                raise UnsupportedRegime(
                    f"Julia vertices {v} and {other} are adjacent; apply "
                    "normalization first")
        maximal = [e for e in incident
                   if not any(x != e and x in _reach(eg, e) and
                              e not in _reach(eg, x) for x in incident)]
        choice = min(maximal or incident)
        removed[v] = choice
        boosts[choice] = [e for e in incident if e != choice]
    removed_edges = frozenset(removed.values())
    max_julia_degree = max(
        (len([e for e in work.level0.edges
              if v in work.level0.edges[e]])
         for v in removed), default=0)

    alpha = chain_rank_lengths(work, k_factor, widx, boost_above=boosts)
    for v, e_long in removed.items():
        for e in work.level0.edges:
            if v in work.level0.edges[e] and e != e_long:
                if not alpha[e_long] > k_factor * alpha[e]:
                    raise InternalInconsistency(
                        "removed edge does not dominate its Julia star")

    g0 = dual_conformal_graph(work, tower, 0, p, alpha)
    phi = natural_representative(work, 1, 0, tower, p, alpha)
    g1 = phi.domain
    lv0 = tower.up_to(0)
    dual0 = dual_skeleton(lv0.complex)

    # retraction G0 -> H0 as explicit pieces
    rho = PiecewiseMap(g0, g0)
    for e in g0.edges:
        if e not in removed_edges:
            rho.pieces.append(Piece(e, Fraction(0), g0.lengths[e],
                                    e, Fraction(0), g0.lengths[e]))
    for v, e_long in removed.items():
        path = _peripheral_complement(dual0, v, e_long)
        total = sum(alpha[x] for x, _ in path)
        src_len = g0.lengths[e_long]
        # orient: e_long runs between the two tiles flanking it; the path
        # replaces it around v with matching endpoints
        pos = Fraction(0)
        for (x, direction) in path:
            seg = Fraction(alpha[x])
            a = pos / total * src_len
            b = (pos + seg) / total * src_len
            if direction == PLUS:
                rho.pieces.append(Piece(e_long, a, b, x, Fraction(0),
                                        g0.lengths[x]))
            else:
                rho.pieces.append(Piece(e_long, a, b, x, g0.lengths[x],
                                        Fraction(0)))
            pos += seg
    rho.check()
    e_rho, _ = piecewise_energy(rho, p)
    rho_envelope = ((max_julia_degree / k_factor) ** (p - 1.0) + 1.0) ** (1 / p)

    # spine data of the transformed rule at levels 0 and 1
    rec0 = recurrent_edge_ids(work, widx, 0)
    rec1 = recurrent_edge_ids(work, widx, 1)
    h0_edges = {e for e in g0.edges if e not in removed_edges}
    f0_edges = sorted(rec0 & h0_edges)
    h1_edges = {e for e in g1.edges
                if tower.up_to(1).einfo[e].type_cell not in removed_edges}

    blob_of, blob_image = _blob_structure(g1, phi)

    # forest structure of F0 and the matching F1 lifts
    forest_adj: dict[str, list[tuple[str, str]]] = {}
    for e in f0_edges:
        a, b = g0.edges[e]
        forest_adj.setdefault(a, []).append((e, b))
        forest_adj.setdefault(b, []).append((e, a))
    # recurrent phi-preimage of each F0 edge
    rec_lift: dict[str, str] = {}
    for e1 in sorted(h1_edges):
        act = phi.action[e1]
        if isinstance(act, Onto) and e1 in rec1 and act.edge in f0_edges:
            if act.edge in rec_lift:
                raise InternalInconsistency(
                    f"edge {act.edge} has two recurrent lifts")
            rec_lift[act.edge] = e1
    missing = [e for e in f0_edges if e not in rec_lift]
    if missing:
        raise InternalInconsistency(f"no recurrent lift for {missing}")

    trees, depth, parent_edge, roots = _forest_rooted(forest_adj, f0_edges, g0)
    if trees is None:
        rep = CertificateReport(
            p, False, float("nan"), float("nan"), e_rho, float("nan"),
            params={"K": k_factor, "power": k1, "shift": s},
            case_bounds={},
            notes={"refused": "recurrent part of the retracted skeleton is "
                              "not a forest"})
        return rep

    # pull distances: per pulled vertex, capped by local edge lengths and
    # staggered so that every child pull strictly dominates its parent's
    max_depth = max(depth.values(), default=0)
    counts = _blob_incidence_counts(g1, phi, blob_of, h1_edges)
    max_count = max(counts.values(), default=1)
    c_stag = max(2, math.ceil((4.0 * max(1, max_count)) ** (1.0 / (p - 1.0))))

    f1_vertex = _forest_lift_vertices(g1, phi, blob_of, rec_lift)
    incident_lengths: dict[int, Fraction] = {}
    for e1 in h1_edges:
        if isinstance(phi.action[e1], Collapse):
            continue
        for tile in g1.edges[e1]:
            b = blob_of[tile]
            cur = incident_lengths.get(b)
            if cur is None or g1.lengths[e1] < cur:
                incident_lengths[b] = g1.lengths[e1]

    pulls: dict[str, Fraction] = {}
    root_set = set(roots)
    for u in sorted(depth, key=lambda x: -depth[x]):
        if u in root_set:
            continue
        e_par, _ = parent_edge[u]
        blob = blob_of[f1_vertex[u]]
        cap = min(g0.lengths[e_par] / 8,
                  incident_lengths.get(blob, g0.lengths[e_par]) /
                  (4 * c_stag))
        children = [w for w in depth
                    if w not in root_set and parent_edge[w][1] == u]
        for w in children:
            cap = min(cap, pulls[w] / (2 * c_stag))
        if cap <= 0:
            raise InternalInconsistency(f"no room to pull vertex {u}")
        pulls[u] = cap

    psi = _deformed_map(work, tower, g0, g1, phi, alpha, h1_edges, f0_edges,
                        rec_lift, blob_of, f1_vertex, parent_edge, roots,
                        pulls, c_stag)
    e_psi, worst_edge = piecewise_energy(psi, p)

    raw = e_rho * e_psi
    certified = raw < 1.0 - MARGIN
    bound = raw ** (1.0 / k1)
    n_const = max(
        sum(1 for e1 in g1.edges
            if isinstance(phi.action[e1], Onto)
            and phi.action[e1].edge == e) for e in g0.edges)
    m_const = max(
        sum(1 for e in g0.edges for end in g0.edges[e] if end == t)
        for t in g0.vertices)
    eps_ratio = 1.0 / c_stag
    case_bounds = {
        "case1": m_const * n_const * eps_ratio ** (p - 1)
                 + n_const / k_factor ** (p - 1),
        "case2": 1.0 - _tree_slack(psi, p, f0_edges, g0)
                 + n_const / k_factor ** (p - 1),
        "case3": n_const / k_factor ** (p - 1),
        "case4": n_const / (k_factor / 2.0) ** (p - 1),
        "retraction_envelope": rho_envelope,
    }
    return CertificateReport(
        p=p, certified=certified, bound=bound, raw_bound=raw,
        retraction_energy=e_rho, deformation_energy=e_psi,
        params={"K": k_factor, "power": k1, "shift": s,
                "stagger": c_stag, "max_depth": max_depth,
                "pulls": {u: str(v) for u, v in sorted(pulls.items())},
                "N": n_const, "M": m_const, "L": max_julia_degree},
        case_bounds=case_bounds,
        notes={"worst_fill_edge": worst_edge},
    )


def _tree_slack(psi: PiecewiseMap, p: float, f0_edges: list[str],
                g0: ConformalGraph) -> float:
    """1 - max fill over the recurrent forest edges (the epsilon_2 margin)."""
    prof = fill_profile(psi, p)
    worst = 0.0
    for e in f0_edges:
        for a, b, val in prof.get(e, []):
            worst = max(worst, val)
    return 1.0 - worst


def _peripheral_complement(dual0, v: str, e_long: str) -> list[Dart]:
    """The dual-face cycle around v minus the removed dual edge, oriented
    from one endpoint of the removed edge to the other."""
    face_idx = dual0.face_vertex.index(v)
    orbit = [d for d, i in dual0.face_of_dart.items() if i == face_idx]
    rot_index = {t: {d: i for i, d in enumerate(r)}
                 for t, r in dual0.rotation.items()}

    def face_next(d: Dart) -> Dart:
        rd = flip(d)
        t = dual0.dart_tile[flip(rd)]
        r = dual0.rotation[t]
        return r[(rot_index[t][rd] - 1) % len(r)]

    start = min(orbit)
    cyc = [start]
    cur = face_next(start)
    while cur != start:
        cyc.append(cur)
        cur = face_next(cur)
    k = next(i for i, d in enumerate(cyc) if d[0] == e_long)
    path_darts = cyc[k + 1:] + cyc[:k]
    # orientation relative to the removed edge: the path must run from the
    # head tile of the removed dart to its tail tile, i.e. reverse of the
    # cycle direction matching the dart; as pieces it only matters that the
    # chain is consecutive, which the face cycle guarantees.
    out: list[Dart] = []
    for d in path_darts:
        s = PLUS if d[1] == PLUS else MINUS
        out.append((d[0], s))
    # express as (edge, direction along tail->head coordinates)
    return out


def _forest_rooted(forest_adj, f0_edges, g0):
    """Root each tree component at a center; None when a cycle exists."""
    seen: set[str] = set()
    depth: dict[str, int] = {}
    parent_edge: dict[str, tuple[str, str]] = {}   # vertex -> (edge, parent)
    trees: list[list[str]] = []
    roots: list[str] = []
    for v0 in sorted(forest_adj):
        if v0 in seen:
            continue
        comp = {v0}
        stack = [v0]
        edges_in = set()
        while stack:
            u = stack.pop()
            for (e, wv) in forest_adj[u]:
                edges_in.add(e)
                if wv not in comp:
                    comp.add(wv)
                    stack.append(wv)
        if len(edges_in) != len(comp) - 1:
            return None, None, None, None
        seen |= comp
        # center: vertex minimizing eccentricity
        def ecc(r: str) -> int:
            dist = {r: 0}
            q = [r]
            while q:
                u = q.pop(0)
                for (e, wv) in forest_adj[u]:
                    if wv not in dist:
                        dist[wv] = dist[u] + 1
                        q.append(wv)
            return max(dist.values())

        root = min(sorted(comp), key=lambda r: (ecc(r), r))
        roots.append(root)
        trees.append(sorted(comp))
        depth[root] = 0
        q = [root]
        visited = {root}
        while q:
            u = q.pop(0)
            for (e, wv) in forest_adj[u]:
                if wv not in visited:
                    visited.add(wv)
                    depth[wv] = depth[u] + 1
                    parent_edge[wv] = (e, u)
                    q.append(wv)
    return trees, depth, parent_edge, roots


def _blob_incidence_counts(g1, phi, blob_of, h1_edges):
    counts: dict[int, int] = {}
    for e in h1_edges:
        if isinstance(phi.action[e], Collapse):
            continue
        a, b = g1.edges[e]
        for v in (a, b):
            counts[blob_of[v]] = counts.get(blob_of[v], 0) + 1
    return counts


def _forest_lift_vertices(g1, phi, blob_of, rec_lift) -> dict[str, str]:
    """Level-1 dual vertex over each forest vertex, via the recurrent lifts."""
    f1_vertex: dict[str, str] = {}
    for e0, e1 in sorted(rec_lift.items()):
        for tile in g1.edges[e1]:
            u = phi.vertex_image[tile]
            prev = f1_vertex.get(u)
            if prev is not None and blob_of[prev] != blob_of[tile]:
                raise InternalInconsistency(
                    f"forest lift is not vertex-consistent at {u}")
            f1_vertex[u] = tile
    return f1_vertex


def _deformed_map(work, tower, g0, g1, phi, alpha, h1_edges, f0_edges,
                  rec_lift, blob_of, f1_vertex, parent_edge, roots,
                  pulls, c_stag) -> PiecewiseMap:
    """The deformation of phi restricted to the H1 edges, as exact pieces.

    Every non-root vertex u of the recurrent forest is pulled, with the
    collapsed blob holding its level-1 lift, a distance pulls[u] into its
    parent edge.  Tails of width c_stag * pulls[u] on incident edges absorb
    the pull; recurrent lifts over forest edges keep an isometric core that
    starts at the displaced child point.
    """
    psi = PiecewiseMap(g1, g0)
    root_set = set(roots)
    rec_lift_edges = set(rec_lift.values())
    pulled_blob = {u: blob_of[t] for u, t in f1_vertex.items() if u in pulls}

    def pull_of(tile: str) -> tuple[str, str, Fraction, Fraction] | None:
        u = phi.vertex_image[tile]
        if u not in pulled_blob or blob_of[tile] != pulled_blob[u]:
            return None
        e_par, _ = parent_edge[u]
        m = pulls[u]
        return u, e_par, m, c_stag * m

    for e1 in sorted(h1_edges):
        act = phi.action[e1]
        if isinstance(act, Collapse):
            continue   # pulled blobs stay collapsed at their displaced points
        y = act.edge
        ly = g0.lengths[y]
        le = g1.lengths[e1]
        ta, tb = g1.edges[e1]
        ya, yb = g0.edges[y]
        img_tail_vertex = ya if act.orient == PLUS else yb
        if phi.vertex_image[ta] != img_tail_vertex:
            raise InternalInconsistency(f"orientation bookkeeping off at {e1}")
        img_from = Fraction(0) if act.orient == PLUS else ly
        sign = 1 if act.orient == PLUS else -1

        def ycoord(dist: Fraction) -> Fraction:
            return img_from + sign * dist

        if e1 in rec_lift_edges and le != ly:
            raise InternalInconsistency(
                f"recurrent lift {e1} is not isometric over {y}")

        src_lo, src_hi = Fraction(0), le
        start_dist, end_dist = Fraction(0), ly
        head_tail_piece = None
        tail_tail_piece = None

        for side, tile in (("tail", ta), ("head", tb)):
            pl = pull_of(tile)
            if pl is None:
                continue
            u, e_par, dist, width = pl
            if e1 in rec_lift_edges and e_par == y:
                # child end of a forest edge: the image starts at the
                # displaced point inside y itself
                if side == "tail":
                    start_dist = dist
                else:
                    end_dist = ly - dist
                continue
            ia, ib = _coord_interval(g0, e_par, u, dist)
            if side == "tail":
                tail_tail_piece = Piece(e1, Fraction(0), width, e_par, ib, ia)
                src_lo = width
            else:
                head_tail_piece = Piece(e1, le - width, le, e_par, ia, ib)
                src_hi = le - width

        if src_lo >= src_hi:
            raise InternalInconsistency(
                f"tails of {e1} overlap; edge too short for the pulls")
        if tail_tail_piece is not None:
            psi.pieces.append(tail_tail_piece)
        psi.pieces.append(Piece(e1, src_lo, src_hi, y,
                                ycoord(start_dist), ycoord(end_dist)))
        if head_tail_piece is not None:
            psi.pieces.append(head_tail_piece)
    psi.check()
    return psi


def _coord_interval(g0: ConformalGraph, edge: str, from_vertex: str,
                    dist: Fraction) -> tuple[Fraction, Fraction]:
    """Oriented interval on the edge starting at the given endpoint, inward."""
    a, b = g0.edges[edge]
    le = g0.lengths[edge]
    if from_vertex == a:
        return Fraction(0), dist
    if from_vertex == b:
        return le, le - dist
    raise InternalInconsistency(f"{from_vertex} is not an endpoint of {edge}")


# ---------------------------------------------------------------------------
# asymptotic bound assembly
# ---------------------------------------------------------------------------


@dataclass
class EnergyBound:
    p: float
    upper: float | None
    upper_source: str
    lower: float | None
    lower_source: str
    certified: bool
    exact: bool = False
    per_level: dict[int, float] = field(default_factory=dict)
    certificate: CertificateReport | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.upper is not None and self.lower is not None
                and self.lower > self.upper + 1e-7):
            raise InternalInconsistency(
                f"lower bound {self.lower} exceeds upper bound {self.upper}; "
                "inconsistent multicurve data")


def natural_energy_levels(rule: SubdivisionRule, p: float, n_max: int,
                          tower: Tower | None = None) -> dict[int, float]:
    """a_n = E^p_p of the level-n natural representative, unit base lengths."""
    tower = tower or Tower.build(rule)
    out = {}
    for n in range(1, n_max + 1):
        rep = natural_representative(rule, n, 0, tower, p=p)
        out[n] = energy_pp(rep, p)
    return out


def asymptotic_bounds(rule: SubdivisionRule, p: float, n_max: int = 4,
                      multicurves: tuple[MulticurveSpec, ...] = (),
                      index: RuleIndex | None = None,
                      tower: Tower | None = None,
                      try_certificate: bool = True) -> EnergyBound:
    """Certified bracket for the asymptotic p-conformal energy.

    Upper bounds come from natural representatives at levels up to n_max
    (by Fekete, each a_n^(1/n) bounds the limit) and, for p > 1 in the
    polynomial regime, from the deformation certificate.  Lower bounds come
    from user-supplied multicurves via lambda_p^(1/p).
    """
    index = index or require_valid_rule(rule)
    tower = tower or Tower.build(rule)
    poly = has_polynomial_growth(rule, index)

    lower = None
    lower_source = ""
    for mc in multicurves:
        if p == inf:
            continue
        lam = lambda_p(mc, p)
        cand = lam.value ** (1.0 / p) if p > 1 else lam.value
        if lower is None or cand > lower:
            lower = cand
            lower_source = "multicurve lambda_p^(1/p)"

    if p == 1 and poly:
        # polynomial growth forces the exact value 1
        return EnergyBound(p, 1.0, "polynomial growth: exact", max(lower or 1.0, 1.0),
                           lower_source or "trivial bound", certified=True,
                           exact=True,
                           per_level=natural_energy_levels(rule, p, n_max, tower))

    per_level = natural_energy_levels(rule, p, n_max, tower)
    upper = None
    upper_source = ""
    for n, a in per_level.items():
        cand = a ** (1.0 / n)
        if upper is None or cand < upper:
            upper = cand
            upper_source = f"natural representative, level {n}"

    certificate = None
    certified = False
    if try_certificate and poly and 1 < p < inf:
        try:
            certificate = crochet_certificate(rule, p, index=index)
        except (UnsupportedRegime, ValidationFailure):
            certificate = None
        if certificate is not None and certificate.certified:
            certified = True
            if certificate.bound < (upper if upper is not None else inf):
                upper = certificate.bound
                upper_source = "deformation certificate"

    return EnergyBound(p, upper, upper_source, lower, lower_source,
                       certified=certified, per_level=per_level,
                       certificate=certificate)

"""Directed graphs of subdivision dynamics: edge, tile, and band digraphs,
growth classification per edge, and the subdivision growth rate rho(e).

Vertices of the band digraph are pairs (tile, {i, j}) of distinct boundary
walk positions; a level-1 subtile yields an arc when two of its boundary
sides lie on distinct walk positions of the carrying tile.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lcm

from .complexes import Dart, flip
from .digraphs import (
    Arc,
    CertifiedValue,
    DynDigraph,
    GrowthClass,
    cycle_period,
    cycles_are_disjoint,
    growth_class,
    reachable_from,
    recurrent_vertices,
    spectral_radius,
)
from .errors import UnsupportedRegime
from .rules import RuleIndex, SubdivisionRule, require_valid_rule

BandLabel = tuple[str, frozenset]  # (tile id, {walk position i, j})


def build_edge_digraph(rule: SubdivisionRule,
                       index: RuleIndex | None = None) -> DynDigraph:
    """One vertex per level-0 edge, one arc per level-1 subedge."""
    index = index or require_valid_rule(rule)
    arcs = []
    for e0 in sorted(rule.level0.edges):
        for (e1, _) in index.path[e0]:
            arcs.append(Arc(e0, rule.map_edges[e1].edge, tag=e1))
    return DynDigraph(sorted(rule.level0.edges), arcs)


def build_tile_digraph(rule: SubdivisionRule,
                       index: RuleIndex | None = None) -> DynDigraph:
    """One vertex per level-0 tile, one arc per level-1 subtile."""
    index = index or require_valid_rule(rule)
    arcs = []
    for t0 in sorted(rule.level0.tiles):
        for t1 in index.interior_tiles[t0]:
            arcs.append(Arc(t0, rule.map_tiles[t1].tile, tag=t1))
    return DynDigraph(sorted(rule.level0.tiles), arcs)


def level0_bands(rule: SubdivisionRule) -> list[BandLabel]:
    out: list[BandLabel] = []
    for t0 in sorted(rule.level0.tiles):
        m = len(rule.level0.tiles[t0])
        for i in range(m):
            for j in range(i + 1, m):
                out.append((t0, frozenset({i, j})))
    return out


def subtile_boundary_positions(rule: SubdivisionRule, index: RuleIndex,
                               t0: str, t1: str) -> list[tuple[int, int]]:
    """Boundary sides of a carried subtile: (walk position in t1, occurrence
    walk position in t0)."""
    out = []
    for p, dart in enumerate(rule.level1.tiles[t1]):
        c = index.bmatch[t0].get(dart)
        if c is not None:
            out.append((p, index.expanded_orig[t0][c]))
    return out


def build_band_digraph(rule: SubdivisionRule,
                       index: RuleIndex | None = None) -> DynDigraph:
    """One vertex per level-0 band, one arc per level-1 subband."""
    index = index or require_valid_rule(rule)
    bands = level0_bands(rule)
    arcs = []
    for t0 in sorted(rule.level0.tiles):
        for t1 in index.interior_tiles[t0]:
            sides = subtile_boundary_positions(rule, index, t0, t1)
            img = rule.map_tiles[t1]
            m1 = len(rule.level1.tiles[t1])
            m_img = len(rule.level0.tiles[img.tile])
            for a in range(len(sides)):
                for b in range(a + 1, len(sides)):
                    (p, i) = sides[a]
                    (q, j) = sides[b]
                    if i == j:
                        continue  # both sides on one occurrence: no parent band
                    src: BandLabel = (t0, frozenset({i, j}))
                    dst: BandLabel = (img.tile,
                                      frozenset({(p + img.align) % m_img,
                                                 (q + img.align) % m_img}))
                    arcs.append(Arc(src, dst, tag=(t1, p, q)))
    return DynDigraph(bands, arcs)


# ---------------------------------------------------------------------------
# growth of edge subdivisions
# ---------------------------------------------------------------------------


def has_polynomial_growth(rule: SubdivisionRule,
                          index: RuleIndex | None = None) -> bool:
    """Sub-exponential growth of edge subdivisions: cycles of E are disjoint."""
    return cycles_are_disjoint(build_edge_digraph(rule, index))


def edge_growth_classes(rule: SubdivisionRule,
                        index: RuleIndex | None = None
                        ) -> dict[str, GrowthClass]:
    g = build_edge_digraph(rule, index)
    return {e: growth_class(g, e) for e in rule.level0.edges}


def edge_growth_rate(rule: SubdivisionRule, e0: str,
                     index: RuleIndex | None = None,
                     tol: float = 1e-10) -> CertifiedValue:
    """rho(e) = lim |R^n(e)|^(1/n), certified; exact 1.0 in the polynomial case."""
    g = build_edge_digraph(rule, index)
    cls = growth_class(g, e0)
    if cls.kind == "polynomial":
        return CertifiedValue(1.0, 1.0, 1.0)
    keep = sorted(reachable_from(g, e0))
    sub = g.induced(keep)
    return spectral_radius(sub.adjacency_matrix(keep), tol=tol)


def recurrency_periods(rule: SubdivisionRule,
                       index: RuleIndex | None = None) -> dict[str, int]:
    """Cycle length through [e] for each recurrent edge (polynomial regime)."""
    g = build_edge_digraph(rule, index)
    if not cycles_are_disjoint(g):
        raise UnsupportedRegime(
            "recurrency periods are defined only for disjoint cycles "
            "(polynomial growth)")
    return {e: cycle_period(g, e) for e in sorted(recurrent_vertices(g))}


def stability_threshold(rule: SubdivisionRule,
                        index: RuleIndex | None = None) -> int:
    """K = max lcm of recurrency periods over pairs of recurrent edges."""
    periods = recurrency_periods(rule, index)
    if not periods:
        return 0
    vals = sorted(periods.values())
    best = 0
    for a in vals:
        for b in vals:
            best = max(best, lcm(a, b))
    return best


def subdivision_edge_count(rule: SubdivisionRule, e0: str, n: int,
                           index: RuleIndex | None = None) -> int:
    """|R^n(e)|: number of level-n subedges of e (paths of length n in E)."""
    from .digraphs import path_count

    g = build_edge_digraph(rule, index)
    return path_count(g, e0, n)

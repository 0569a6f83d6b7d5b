"""Built-in example rules.

Each constructor returns a fresh, structurally valid SubdivisionRule.  The
catalog ships positive and negative controls for every analysis stage:
polynomial vs exponential growth, Levy-free vs obstructed, with and without
Julia vertices and Julia edges.
"""

from __future__ import annotations

from .complexes import MINUS, PLUS, SphereComplex
from .rules import EdgeImage, SubdivisionRule, TileImage


def power_spider_2() -> SubdivisionRule:
    """Degree-2 spider rule for the squaring map.

    One edge from 0 to infinity; the sphere is a single bigon tile.  The edge
    lifts to itself and to a second arc crossing the tile, so edge subdivision
    is a single loop and the rule has polynomial growth.
    """
    level0 = SphereComplex(
        vertices=("v0", "vinf"),
        edges={"e": ("v0", "vinf")},
        tiles={"t": (("e", PLUS), ("e", MINUS))},
        marked=frozenset({"v0", "vinf"}),
    )
    level1 = SphereComplex(
        vertices=("v0", "vinf"),
        edges={"a0": ("v0", "vinf"), "a1": ("v0", "vinf")},
        tiles={"tR": (("a0", PLUS), ("a1", MINUS)),
               "tL": (("a1", PLUS), ("a0", MINUS))},
        marked=frozenset({"v0", "vinf"}),
    )
    return SubdivisionRule(
        name="power_spider_2",
        level0=level0,
        level1=level1,
        carrier_vertices={"v0": ("vertex", "v0"), "vinf": ("vertex", "vinf")},
        carrier_edges={"a0": ("edge", "e"), "a1": ("tile", "t")},
        carrier_tiles={"tR": "t", "tL": "t"},
        map_vertices={"v0": "v0", "vinf": "vinf"},
        map_edges={"a0": EdgeImage("e", PLUS), "a1": EdgeImage("e", PLUS)},
        map_tiles={"tR": TileImage("t", 0), "tL": TileImage("t", 0)},
        metadata={"model_map": "z -> z^2",
                  "description": "degree-2 spider; polynomial growth control"},
    )


def square_spider_julia() -> SubdivisionRule:
    """Degree-2 spider for the squaring map with the Julia fixed point marked.

    Two legs 0 -> 1 -> infinity; the vertex at 1 is fixed, non-critical,
    hence a periodic Julia vertex, and the spine at every level is its
    peripheral 2-cycle.  Exercises peripheral-cycle and retraction logic.
    """
    level0 = SphereComplex(
        vertices=("v0", "v1", "vinf"),
        edges={"e0": ("v0", "v1"), "e1": ("v1", "vinf")},
        tiles={"t": (("e0", PLUS), ("e1", PLUS), ("e1", MINUS), ("e0", MINUS))},
        marked=frozenset({"v0", "v1", "vinf"}),
    )
    level1 = SphereComplex(
        vertices=("v0", "v1", "vinf", "w"),
        edges={"e0c": ("v0", "v1"), "e1c": ("v1", "vinf"),
               "n0": ("w", "v0"), "n1": ("w", "vinf")},
        tiles={"U": (("e0c", PLUS), ("e1c", PLUS), ("n1", MINUS), ("n0", PLUS)),
               "D": (("n0", MINUS), ("n1", PLUS), ("e1c", MINUS), ("e0c", MINUS))},
        marked=frozenset({"v0", "v1", "vinf"}),
    )
    return SubdivisionRule(
        name="square_spider_julia",
        level0=level0,
        level1=level1,
        carrier_vertices={"v0": ("vertex", "v0"), "v1": ("vertex", "v1"),
                          "vinf": ("vertex", "vinf"), "w": ("tile", "t")},
        carrier_edges={"e0c": ("edge", "e0"), "e1c": ("edge", "e1"),
                       "n0": ("tile", "t"), "n1": ("tile", "t")},
        carrier_tiles={"U": "t", "D": "t"},
        map_vertices={"v0": "v0", "v1": "v1", "vinf": "vinf", "w": "v1"},
        map_edges={"e0c": EdgeImage("e0", PLUS), "e1c": EdgeImage("e1", PLUS),
                   "n0": EdgeImage("e0", MINUS), "n1": EdgeImage("e1", PLUS)},
        map_tiles={"U": TileImage("t", 0), "D": TileImage("t", 0)},
        metadata={"model_map": "z -> z^2 (marked fixed point on the circle)",
                  "description": "periodic Julia vertex; peripheral-cycle control"},
    )


def spider_twocycle_2() -> SubdivisionRule:
    """Degree-2 spider with a preperiodic critical portrait.

    Portrait: z0 (critical) -> a -> b -> c -> b, infinity critical and fixed.
    The Julia two-cycle {b, c} gives recurrency period 2, so the stability
    threshold is 2; the spine consists of peripheral loops around b and c.
    """
    level0 = SphereComplex(
        vertices=("vinf", "a", "b", "c"),
        edges={"la": ("vinf", "a"), "lb": ("vinf", "b"), "lc": ("vinf", "c")},
        tiles={"t": (("la", PLUS), ("la", MINUS), ("lb", PLUS), ("lb", MINUS),
                     ("lc", PLUS), ("lc", MINUS))},
        marked=frozenset({"vinf", "a", "b", "c"}),
    )
    level1 = SphereComplex(
        vertices=("vinf", "z0", "a", "b", "c", "w"),
        edges={"A1": ("vinf", "z0"), "A2": ("vinf", "z0"),
               "B1": ("vinf", "a"), "B2": ("vinf", "c"),
               "C1": ("vinf", "b"), "C2": ("vinf", "w")},
        tiles={"T1": (("A2", PLUS), ("A1", MINUS), ("B2", PLUS), ("B2", MINUS),
                      ("C2", PLUS), ("C2", MINUS)),
               "T2": (("A1", PLUS), ("A2", MINUS), ("B1", PLUS), ("B1", MINUS),
                      ("C1", PLUS), ("C1", MINUS))},
        marked=frozenset({"vinf", "a", "b", "c"}),
    )
    return SubdivisionRule(
        name="spider_twocycle_2",
        level0=level0,
        level1=level1,
        carrier_vertices={"vinf": ("vertex", "vinf"), "a": ("vertex", "a"),
                          "b": ("vertex", "b"), "c": ("vertex", "c"),
                          "z0": ("tile", "t"), "w": ("tile", "t")},
        carrier_edges={"B1": ("edge", "la"), "C1": ("edge", "lb"),
                       "B2": ("edge", "lc"),
                       "A1": ("tile", "t"), "A2": ("tile", "t"),
                       "C2": ("tile", "t")},
        carrier_tiles={"T1": "t", "T2": "t"},
        map_vertices={"vinf": "vinf", "z0": "a", "a": "b", "b": "c",
                      "c": "b", "w": "c"},
        map_edges={"A1": EdgeImage("la", PLUS), "A2": EdgeImage("la", PLUS),
                   "B1": EdgeImage("lb", PLUS), "B2": EdgeImage("lb", PLUS),
                   "C1": EdgeImage("lc", PLUS), "C2": EdgeImage("lc", PLUS)},
        map_tiles={"T1": TileImage("t", 0), "T2": TileImage("t", 0)},
        metadata={"model_map": "preperiodic quadratic spider",
                  "description": "Julia two-cycle; threshold-2 control"},
    )


def levy_pillow_4() -> SubdivisionRule:
    """Degree-4 pillow rule with a Levy cycle and polynomial growth.

    The front square maps to itself identically; the back is fanned through
    three nested square rings.  Every edge lifts to itself once, so growth is
    polynomial, and the curve separating {A, B} from the Julia pair {C, D}
    lifts to four degree-one copies of itself: the Levy-positive control.
    """
    level0 = SphereComplex(
        vertices=("A", "B", "C", "D"),
        edges={"x": ("A", "B"), "y": ("B", "C"), "z": ("C", "D"),
               "w": ("D", "A")},
        tiles={"F": (("x", PLUS), ("y", PLUS), ("z", PLUS), ("w", PLUS)),
               "K": (("w", MINUS), ("z", MINUS), ("y", MINUS), ("x", MINUS))},
        marked=frozenset({"A", "B", "C", "D"}),
    )
    level1 = SphereComplex(
        vertices=("A", "B", "C", "D", "q1", "q2", "q3", "q4", "q5", "q6"),
        edges={"xc": ("A", "B"), "yc": ("B", "C"), "zc": ("C", "D"),
               "wc": ("D", "A"),
               "cx1": ("A", "B"), "cy1": ("B", "q1"), "cz1": ("q1", "q2"),
               "cw1": ("q2", "A"),
               "cx2": ("A", "B"), "cy2": ("B", "q3"), "cz2": ("q3", "q4"),
               "cw2": ("q4", "A"),
               "cx3": ("A", "B"), "cy3": ("B", "q5"), "cz3": ("q5", "q6"),
               "cw3": ("q6", "A")},
        tiles={
            "Fa": (("xc", PLUS), ("yc", PLUS), ("zc", PLUS), ("wc", PLUS)),
            "Fb": (("cx1", PLUS), ("cy1", PLUS), ("cz1", PLUS), ("cw1", PLUS)),
            "Fc": (("cx2", PLUS), ("cy2", PLUS), ("cz2", PLUS), ("cw2", PLUS)),
            "Fd": (("cx3", PLUS), ("cy3", PLUS), ("cz3", PLUS), ("cw3", PLUS)),
            "Ka": (("wc", MINUS), ("zc", MINUS), ("yc", MINUS), ("cx1", MINUS)),
            "Kb": (("cw1", MINUS), ("cz1", MINUS), ("cy1", MINUS), ("cx2", MINUS)),
            "Kc": (("cw2", MINUS), ("cz2", MINUS), ("cy2", MINUS), ("cx3", MINUS)),
            "Kd": (("cw3", MINUS), ("cz3", MINUS), ("cy3", MINUS), ("xc", MINUS)),
        },
        marked=frozenset({"A", "B", "C", "D"}),
    )
    tile_k = {"Fb", "Fc", "Fd", "Ka", "Kb", "Kc", "Kd"}
    return SubdivisionRule(
        name="levy_pillow_4",
        level0=level0,
        level1=level1,
        carrier_vertices={"A": ("vertex", "A"), "B": ("vertex", "B"),
                          "C": ("vertex", "C"), "D": ("vertex", "D"),
                          "q1": ("tile", "K"), "q2": ("tile", "K"),
                          "q3": ("tile", "K"), "q4": ("tile", "K"),
                          "q5": ("tile", "K"), "q6": ("tile", "K")},
        carrier_edges={"xc": ("edge", "x"), "yc": ("edge", "y"),
                       "zc": ("edge", "z"), "wc": ("edge", "w"),
                       **{e: ("tile", "K") for e in
                          ("cx1", "cy1", "cz1", "cw1", "cx2", "cy2", "cz2",
                           "cw2", "cx3", "cy3", "cz3", "cw3")}},
        carrier_tiles={"Fa": "F", **{t: "K" for t in tile_k}},
        map_vertices={"A": "A", "B": "B", "C": "C", "D": "D",
                      "q1": "C", "q2": "D", "q3": "C", "q4": "D",
                      "q5": "C", "q6": "D"},
        map_edges={"xc": EdgeImage("x", PLUS), "yc": EdgeImage("y", PLUS),
                   "zc": EdgeImage("z", PLUS), "wc": EdgeImage("w", PLUS),
                   "cx1": EdgeImage("x", PLUS), "cy1": EdgeImage("y", PLUS),
                   "cz1": EdgeImage("z", PLUS), "cw1": EdgeImage("w", PLUS),
                   "cx2": EdgeImage("x", PLUS), "cy2": EdgeImage("y", PLUS),
                   "cz2": EdgeImage("z", PLUS), "cw2": EdgeImage("w", PLUS),
                   "cx3": EdgeImage("x", PLUS), "cy3": EdgeImage("y", PLUS),
                   "cz3": EdgeImage("z", PLUS), "cw3": EdgeImage("w", PLUS)},
        map_tiles={"Fa": TileImage("F", 0), "Fb": TileImage("F", 0),
                   "Fc": TileImage("F", 0), "Fd": TileImage("F", 0),
                   "Ka": TileImage("K", 0), "Kb": TileImage("K", 0),
                   "Kc": TileImage("K", 0), "Kd": TileImage("K", 0)},
        metadata={"description": "Levy-positive control: the {C,D}-separating "
                                 "curve has four degree-one self-lifts"},
    )


def tripod_pillow_4() -> SubdivisionRule:
    """Degree-4 rule on the square pillow whose spine is a tripod.

    The edges x, z, w lift to themselves (three disjoint loops); y subdivides
    across the other three types, so growth is polynomial with no extra
    cycles.  The central tile of the front side carries three pairwise
    recurrent bands over x, z, w, giving a single star component with three
    half-edges at the stable level.  All four corners are critical and
    fixed, so the rule is hyperbolic-type and Levy-free.
    """
    level0 = SphereComplex(
        vertices=("A", "B", "C", "D"),
        edges={"x": ("A", "B"), "y": ("B", "C"), "z": ("C", "D"),
               "w": ("D", "A")},
        tiles={"F": (("x", PLUS), ("y", PLUS), ("z", PLUS), ("w", PLUS)),
               "K": (("w", MINUS), ("z", MINUS), ("y", MINUS), ("x", MINUS))},
        marked=frozenset({"A", "B", "C", "D"}),
    )
    level1 = SphereComplex(
        vertices=("A", "B", "C", "D", "h1", "h2", "q1", "q2", "q3", "q4"),
        edges={"xc": ("A", "B"), "zc": ("C", "D"), "wc": ("D", "A"),
               "y1": ("B", "h1"), "y2": ("h1", "h2"), "y3": ("h2", "C"),
               "cx1": ("q1", "q2"), "cx2": ("A", "B"),
               "cy1": ("B", "C"), "cy2": ("B", "C"), "cy3": ("q2", "C"),
               "cy4": ("B", "q3"),
               "cz1": ("C", "D"), "cz2": ("q3", "q4"),
               "cw1": ("D", "q1"), "cw2": ("q4", "A")},
        tiles={
            "Fa": (("xc", PLUS), ("cy1", PLUS), ("zc", PLUS), ("wc", PLUS)),
            "Fb": (("y1", MINUS), ("cy2", PLUS), ("y3", MINUS), ("y2", MINUS)),
            "Fc": (("cx1", PLUS), ("cy3", PLUS), ("cz1", PLUS), ("cw1", PLUS)),
            "Fd": (("cx2", PLUS), ("cy4", PLUS), ("cz2", PLUS), ("cw2", PLUS)),
            "Ka": (("wc", MINUS), ("cz1", MINUS), ("cy2", MINUS), ("cx2", MINUS)),
            "Kb": (("y2", PLUS), ("y3", PLUS), ("cy1", MINUS), ("y1", PLUS)),
            "Kc": (("cw1", MINUS), ("zc", MINUS), ("cy3", MINUS), ("cx1", MINUS)),
            "Kd": (("cw2", MINUS), ("cz2", MINUS), ("cy4", MINUS), ("xc", MINUS)),
        },
        marked=frozenset({"A", "B", "C", "D"}),
    )
    return SubdivisionRule(
        name="tripod_pillow_4",
        level0=level0,
        level1=level1,
        carrier_vertices={"A": ("vertex", "A"), "B": ("vertex", "B"),
                          "C": ("vertex", "C"), "D": ("vertex", "D"),
                          "h1": ("edge", "y"), "h2": ("edge", "y"),
                          "q1": ("tile", "K"), "q2": ("tile", "K"),
                          "q3": ("tile", "K"), "q4": ("tile", "K")},
        carrier_edges={"xc": ("edge", "x"), "zc": ("edge", "z"),
                       "wc": ("edge", "w"),
                       "y1": ("edge", "y"), "y2": ("edge", "y"),
                       "y3": ("edge", "y"),
                       "cx1": ("tile", "K"), "cx2": ("tile", "K"),
                       "cy1": ("tile", "F"), "cy2": ("tile", "K"),
                       "cy3": ("tile", "K"), "cy4": ("tile", "K"),
                       "cz1": ("tile", "K"), "cz2": ("tile", "K"),
                       "cw1": ("tile", "K"), "cw2": ("tile", "K")},
        carrier_tiles={"Fa": "F", "Fb": "K", "Fc": "K", "Fd": "K",
                       "Ka": "K", "Kb": "F", "Kc": "K", "Kd": "K"},
        map_vertices={"A": "A", "B": "B", "C": "C", "D": "D",
                      "h1": "A", "h2": "D",
                      "q1": "A", "q2": "B", "q3": "C", "q4": "D"},
        map_edges={"xc": EdgeImage("x", PLUS), "zc": EdgeImage("z", PLUS),
                   "wc": EdgeImage("w", PLUS),
                   "y1": EdgeImage("x", MINUS), "y2": EdgeImage("w", MINUS),
                   "y3": EdgeImage("z", MINUS),
                   "cx1": EdgeImage("x", PLUS), "cx2": EdgeImage("x", PLUS),
                   "cy1": EdgeImage("y", PLUS), "cy2": EdgeImage("y", PLUS),
                   "cy3": EdgeImage("y", PLUS), "cy4": EdgeImage("y", PLUS),
                   "cz1": EdgeImage("z", PLUS), "cz2": EdgeImage("z", PLUS),
                   "cw1": EdgeImage("w", PLUS), "cw2": EdgeImage("w", PLUS)},
        map_tiles={"Fa": TileImage("F", 0), "Fb": TileImage("F", 0),
                   "Fc": TileImage("F", 0), "Fd": TileImage("F", 0),
                   "Ka": TileImage("K", 0), "Kb": TileImage("K", 0),
                   "Kc": TileImage("K", 0), "Kd": TileImage("K", 0)},
        metadata={"description": "degree-4 two-tile rule; tripod spine, "
                                 "hyperbolic-type, Levy-free"},
    )


def doubling_edge() -> SubdivisionRule:
    """Degree-2 interval-folding rule whose edge doubles at every level.

    The segment edge subdivides into two copies of itself (the folding of
    [-2, 2] under z^2 - 2), so the edge-subdivision digraph has two loops at
    one vertex: the exponential-growth control.
    """
    level0 = SphereComplex(
        vertices=("-2", "2", "inf"),
        edges={"e": ("-2", "2"), "r": ("2", "inf")},
        tiles={"t": (("e", PLUS), ("r", PLUS), ("r", MINUS), ("e", MINUS))},
        marked=frozenset({"-2", "2", "inf"}),
    )
    level1 = SphereComplex(
        vertices=("-2", "0", "2", "inf"),
        edges={"s1": ("-2", "0"), "s2": ("0", "2"),
               "r1": ("2", "inf"), "r2": ("-2", "inf")},
        tiles={"U": (("s1", PLUS), ("s2", PLUS), ("r1", PLUS), ("r2", MINUS)),
               "D": (("r2", PLUS), ("r1", MINUS), ("s2", MINUS), ("s1", MINUS))},
        marked=frozenset({"-2", "2", "inf"}),
    )
    return SubdivisionRule(
        name="doubling_edge",
        level0=level0,
        level1=level1,
        carrier_vertices={"-2": ("vertex", "-2"), "2": ("vertex", "2"),
                          "inf": ("vertex", "inf"), "0": ("edge", "e")},
        carrier_edges={"s1": ("edge", "e"), "s2": ("edge", "e"),
                       "r1": ("edge", "r"), "r2": ("tile", "t")},
        carrier_tiles={"U": "t", "D": "t"},
        map_vertices={"-2": "2", "0": "-2", "2": "2", "inf": "inf"},
        map_edges={"s1": EdgeImage("e", MINUS), "s2": EdgeImage("e", PLUS),
                   "r1": EdgeImage("r", PLUS), "r2": EdgeImage("r", PLUS)},
        map_tiles={"U": TileImage("t", 3), "D": TileImage("t", 1)},
        metadata={"model_map": "z -> z^2 - 2",
                  "description": "interval folding; exponential growth control"},
    )


CATALOG = {
    "power_spider_2": power_spider_2,
    "square_spider_julia": square_spider_julia,
    "spider_twocycle_2": spider_twocycle_2,
    "tripod_pillow_4": tripod_pillow_4,
    "doubling_edge": doubling_edge,
    "levy_pillow_4": levy_pillow_4,
}


def catalog() -> dict[str, SubdivisionRule]:
    """All built-in rules, freshly constructed."""
    return {name: make() for name, make in CATALOG.items()}


def get_rule(name: str) -> SubdivisionRule:
    try:
        return CATALOG[name]()
    except KeyError:
        raise KeyError(f"unknown catalog rule {name!r}; "
                       f"available: {', '.join(sorted(CATALOG))}") from None

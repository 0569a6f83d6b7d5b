"""Sphere-complex structure, duality, and curve side-partitions."""

from __future__ import annotations

import pytest

from fsrkit.complexes import (
    CombinatorialCurve,
    SphereComplex,
    dual_skeleton,
    enclosed_markings,
    euler_characteristic,
    is_embedded_closed_walk,
    validate_complex,
)
from fsrkit.errors import ValidationFailure


def bigon_sphere() -> SphereComplex:
    return SphereComplex(
        vertices=("v0", "vinf"),
        edges={"e": ("v0", "vinf")},
        tiles={"t": (("e", 1), ("e", -1))},
        marked=frozenset({"v0", "vinf"}),
    )


def tetrahedron() -> SphereComplex:
    # vertices 1..4, faces oriented so every dart occurs once
    edges = {
        "e12": ("1", "2"), "e13": ("1", "3"), "e14": ("1", "4"),
        "e23": ("2", "3"), "e24": ("2", "4"), "e34": ("3", "4"),
    }
    tiles = {
        "f123": (("e12", 1), ("e23", 1), ("e13", -1)),
        "f134": (("e13", 1), ("e34", 1), ("e14", -1)),
        "f142": (("e14", 1), ("e24", -1), ("e12", -1)),
        "f243": (("e24", 1), ("e34", -1), ("e23", -1)),
    }
    return SphereComplex(("1", "2", "3", "4"), edges, tiles,
                         frozenset({"1", "2", "3", "4"}))


def square_pillow() -> SphereComplex:
    edges = {"x": ("A", "B"), "y": ("B", "C"), "z": ("C", "D"), "w": ("D", "A")}
    tiles = {
        "F": (("x", 1), ("y", 1), ("z", 1), ("w", 1)),
        "K": (("w", -1), ("z", -1), ("y", -1), ("x", -1)),
    }
    return SphereComplex(("A", "B", "C", "D"), edges, tiles,
                         frozenset({"A", "B", "C", "D"}))


def test_bigon_sphere_valid():
    rep = validate_complex(bigon_sphere())
    assert rep.ok, rep.summary()
    assert euler_characteristic(bigon_sphere()) == 2


def test_orientation_pairing_violation():
    cx = SphereComplex(
        vertices=("v0", "vinf"),
        edges={"e": ("v0", "vinf")},
        tiles={"t": (("e", 1), ("e", 1))},
    )
    rep = validate_complex(cx)
    assert not rep.ok
    # duplicated (e,+) dart is an orientation-pairing failure (it also breaks
    # walk chaining, but pairing is checked first)
    assert rep.first_failure == "orientation pairing"


def test_tetrahedron_valid():
    rep = validate_complex(tetrahedron())
    assert rep.ok, rep.summary()
    assert euler_characteristic(tetrahedron()) == 2


def test_torus_gluing_fails():
    # square torus: 1 vertex, 2 edges, 1 tile -> chi = 0
    cx = SphereComplex(
        vertices=("p",),
        edges={"a": ("p", "p"), "b": ("p", "p")},
        tiles={"t": (("a", 1), ("b", 1), ("a", -1), ("b", -1))},
    )
    assert euler_characteristic(cx) == 0
    rep = validate_complex(cx)
    assert not rep.ok
    assert rep.first_failure == "euler"


def test_monogon_rejected():
    cx = SphereComplex(
        vertices=("p", "q"),
        edges={"a": ("p", "p"), "b": ("p", "q")},
        tiles={"in": (("a", 1),), "out": (("a", -1), ("b", 1), ("b", -1))},
    )
    rep = validate_complex(cx)
    assert not rep.ok
    assert rep.first_failure == "walk length"


def test_dual_bigon():
    dual = dual_skeleton(bigon_sphere())
    assert dual.num_dual_vertices() == 1
    assert dual.num_dual_edges() == 1
    assert dual.num_faces() == 2
    assert sorted(dual.face_vertex) == ["v0", "vinf"]


def test_dual_tetrahedron():
    dual = dual_skeleton(tetrahedron())
    assert dual.num_dual_vertices() == 4
    assert dual.num_dual_edges() == 6
    assert dual.num_faces() == 4
    # every dual edge joins two distinct tiles here
    for e in tetrahedron().edges:
        assert dual.dual_tail((e, 1)) != dual.dual_head((e, 1))


def test_dual_embedded_euler():
    for cx in (bigon_sphere(), tetrahedron(), square_pillow()):
        dual = dual_skeleton(cx)
        chi = dual.num_dual_vertices() - dual.num_dual_edges() + dual.num_faces()
        assert chi == 2


def test_enclosed_markings_pillow():
    cx = square_pillow()
    dual = dual_skeleton(cx)
    # curve crossing x (into F) then z (back into K)
    c = CombinatorialCurve((("x", 1), ("z", -1)))
    assert is_embedded_closed_walk(dual, c)
    left, right = enclosed_markings(cx, c, dual)
    assert {frozenset(left), frozenset(right)} == {frozenset({"A", "D"}),
                                                   frozenset({"B", "C"})}
    # reversing the curve swaps the sides
    l2, r2 = enclosed_markings(cx, c.reversed(), dual)
    assert (set(l2), set(r2)) == (set(right), set(left))


def test_enclosed_markings_tetrahedron_face_cycle():
    cx = tetrahedron()
    dual = dual_skeleton(cx)
    # cycle around vertex 1: f123 -> f134 -> f142 -> f123
    c = CombinatorialCurve((("e13", 1), ("e14", 1), ("e12", 1)))
    assert is_embedded_closed_walk(dual, c)
    left, right = enclosed_markings(cx, c, dual)
    assert set(left) == {"1"}
    assert set(right) == {"2", "3", "4"}


def test_enclosed_markings_partition_unmarked_side():
    cx = SphereComplex(
        vertices=square_pillow().vertices,
        edges=square_pillow().edges,
        tiles=square_pillow().tiles,
        marked=frozenset({"B", "C"}),
    )
    c = CombinatorialCurve((("x", 1), ("z", -1)))
    left, right = enclosed_markings(cx, c)
    assert set(left) | set(right) == {"B", "C"}
    assert not (set(left) & set(right))
    assert () in (left, right)  # the A,D side holds no marked vertex


def test_non_embedded_curve_rejected():
    cx = square_pillow()
    dual = dual_skeleton(cx)
    c = CombinatorialCurve((("x", 1), ("x", -1)))  # uses the dual edge twice
    with pytest.raises(ValidationFailure):
        enclosed_markings(cx, c, dual)

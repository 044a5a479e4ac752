from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from tesstree.atd import (
    AtdSyntaxError,
    Geometry,
    classify_geometry,
    euler_characteristic,
    next_edge,
    orbit,
    parse_atd,
    regular,
    serialize_atd,
    validate,
)

from conftest import SUITE, atd_of


def test_regular_tiling_parses():
    atd = parse_atd("tile t n=1 s=7\nconn t.0 t.0\nvalence t.0 3\n")
    assert atd.tiles["t"].N == 7
    assert atd.connect("t", 5) == ("t", 0)
    assert atd.is_regular() == (7, 3)


def test_comments_and_blank_lines_ignored():
    atd = parse_atd("# heading\n\ntile t n=1 s=4  # square\nconn t.0 t.0\nvalence t.0 4\n")
    assert atd.is_regular() == (4, 4)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("tile t n=1 s=7\ntile t n=1 s=7\nconn t.0 t.0\nvalence t.0 3\n", "duplicate"),
        ("tile t n=1 s=7\nconn t.0 u.0\nvalence t.0 3\n", "unknown tile"),
        ("tile t n=1 s=7\nconn t.1 t.0\nvalence t.0 3\n", "out of range"),
        ("tile t n=1 s=7\nvalence t.0 3\n", "missing conn"),
        ("tile t n=1 s=7\nconn t.0 t.0\n", "missing valence"),
        ("tile t n=2 s=3\nconn t.0 t.0\nconn t.0 t.1\nvalence t.0 3\nvalence t.1 3\n", "conflicting"),
        ("shape t\n", "unknown directive"),
        ("tile t n=1\n", "malformed"),
    ],
)
def test_syntax_errors(text, fragment):
    with pytest.raises(AtdSyntaxError, match=fragment):
        parse_atd(text)


def test_syntax_error_reports_line():
    with pytest.raises(AtdSyntaxError) as info:
        parse_atd("tile t n=1 s=7\nconn t.0 t.0\nbogus\n")
    assert info.value.line == 3


def test_euler_characteristic_examples():
    assert euler_characteristic(regular(7, 3)) == Fraction(-1, 42)
    assert euler_characteristic(regular(4, 4)) == 0
    assert euler_characteristic(regular(3, 3)) == Fraction(1, 6)
    assert classify_geometry(regular(3, 3)).kind is Geometry.SPHERICAL


@given(st.integers(3, 12), st.integers(3, 12))
def test_regular_characteristic_sign_matches_angle_sum(p, q):
    # {p,q} is hyperbolic exactly when 1/p + 1/q < 1/2
    kind = classify_geometry(regular(p, q)).kind
    s = Fraction(1, p) + Fraction(1, q)
    expected = Geometry.HYPERBOLIC if s < Fraction(1, 2) else Geometry.EUCLIDEAN if s == Fraction(1, 2) else Geometry.SPHERICAL
    assert kind is expected


@pytest.mark.parametrize("name", SUITE)
def test_suite_is_consistent(name):
    assert validate(atd_of(name)) == []
    assert classify_geometry(atd_of(name)).kind is not Geometry.SPHERICAL


def test_truncated_square_tiling_is_euclidean_with_long_orbit():
    atd = atd_of("488")
    assert euler_characteristic(atd) == 0
    assert len(orbit(atd, ("o", 0))) == 3


def test_valence_constancy_failure_reported():
    # a.0 and a.1 share a vertex orbit but declare different valences
    atd = parse_atd("tile a n=2 s=2\nconn a.0 a.0\nconn a.1 a.1\nvalence a.0 3\nvalence a.1 4\n")
    checks = {f.check for f in validate(atd)}
    assert "valence-constancy" in checks


def test_orbit_divisibility_failure_reported():
    # the orbit of o.0 has length 3, which does not divide valence 4
    atd = parse_atd("tile o n=2 s=4\ntile q n=1 s=4\nconn o.0 q.0\nconn o.1 o.1\nvalence o.0 4\nvalence o.1 4\nvalence q.0 4\n")
    checks = {f.check for f in validate(atd)}
    assert "orbit-divisibility" in checks


def test_next_edge_walks_around_vertex():
    atd = atd_of("3636")
    assert next_edge(atd, ("r", 0)) == ("h", 0)
    assert next_edge(atd, ("h", 0)) == ("r", 0)


@pytest.mark.parametrize("name", SUITE)
def test_serialize_round_trip(name):
    atd = atd_of(name)
    text = serialize_atd(atd)
    again = parse_atd(text)
    assert serialize_atd(again) == text
    assert again.conn == atd.conn and again.valence == atd.valence

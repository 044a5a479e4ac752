from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from tesstree.atd import SphericalUnsupported, regular
from tesstree.surface import LEFT, RIGHT, Surface, StepLimitExceeded

from conftest import atd_of


def layer_counts(s: Surface, radius: int) -> list[int]:
    layer = [s.roots[0]]
    seen = set(layer)
    counts = [1]
    for _ in range(radius):
        nxt = []
        for g in layer:
            for k in range(s.size[s.find(g)[0]]):
                h, _ = s.step((g, k))
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
        layer = nxt
        counts.append(len(nxt))
    return counts


@pytest.mark.parametrize(
    "name, expected",
    [
        # squares: Manhattan spheres; hexagons and triangles grow linearly
        ("44", [1, 4, 8, 12, 16, 20]),
        ("63", [1, 6, 12, 18, 24, 30]),
        ("36", [1, 3, 6, 9, 12, 15]),
        ("73", [1, 7, 21, 56, 147, 385]),
    ],
)
def test_breadth_first_layers(name, expected):
    s = Surface(atd_of(name), shortcuts=False)
    assert layer_counts(s, len(expected) - 1) == expected


def test_spherical_rejected():
    with pytest.raises(SphericalUnsupported):
        Surface(regular(3, 3))


def test_step_returns_walker_facing_back():
    s = Surface(atd_of("73"))
    w = (s.roots[0], 3)
    back = s.step(w)
    assert s.resolve(s.step(back)) == s.resolve(w)


def test_walking_around_vertex_closes_after_valence_steps():
    s = Surface(atd_of("54"))
    w = (s.roots[0], 0)
    cur = w
    for _ in range(4):
        cur = s.rotate(s.step(cur), 1)
    assert s.resolve(cur) == s.resolve(w)


def test_root_distances_and_parent():
    s = Surface(atd_of("73"))
    root = s.roots[0]
    c, back = s.step((root, 2))
    assert s.get_delta(root) == 0
    assert s.get_delta(c) == 1
    assert s.parent_of(c) == back


def test_sides_around_first_layer_tile():
    s = Surface(atd_of("73"))
    c, _ = s.step((s.roots[0], 0))
    p = s.parent_of(c)
    kinds = []
    for k in range(7):
        w = (c, p + k)
        kinds.append("T" if s.is_tree_edge(w) else s.get_side(w))
    # parent, left wall, three children, two right walls
    assert kinds == ["T", LEFT, "T", "T", "T", RIGHT, RIGHT]


def test_side_is_antisymmetric():
    s = Surface(atd_of("45"))
    layer_counts(s, 3)
    for g in list(s.tiles()):
        if s.get_delta(g) > 2:
            continue
        for k in range(s.size[g]):
            if not s.is_tree_edge((g, k)):
                other = s.step((g, k))
                a = s.get_side((g, k), use_cache=False)
                b = s.get_side(other, use_cache=False)
                assert {a, b} == {LEFT, RIGHT}


def test_step_limit_enforced():
    s = Surface(atd_of("73"), step_limit=1)
    c, _ = s.step((s.roots[0], 0))
    p = s.parent_of(c)
    with pytest.raises(StepLimitExceeded):
        s.get_side((c, p + 5), use_cache=False)


def _route(s: Surface, g: int):
    """Edge choices leading from the root to ``g`` along saved back-directions."""
    path = s._path(g)
    tiles = [s.resolve(w) for w in path]
    arrivals = [s.known(w) for w in path]
    if not path:
        return None, []
    turns = []
    for i in range(len(path) - 1, 0, -1):
        turns.append((arrivals[i - 1][1] - tiles[i][1]) % s.size[tiles[i][0]])
    return arrivals[-1][1], turns


def _replay(o: Surface, route) -> int:
    first, turns = route
    if first is None:
        return 0
    w = o.step((o.roots[0], first))
    for t in turns:
        w = o.step(o.rotate(w, t))
    return o.dist[o.find(w[0])[0]]


def _explore(name: str, seed: int, steps: int):
    """Random walk first (creates duplicates), then fill the ball so that every distance can settle."""
    atd = atd_of(name)
    s = Surface(atd)
    rng = random.Random(seed)
    w = (s.roots[0], 0)
    for _ in range(steps):
        w = s.step(s.rotate(w, rng.randrange(s.size[s.resolve(w)[0]])))
    walk = s.tiles()
    top = max(s.get_delta(g) for g in walk)
    for r in range(top + 1):
        for g in [x for x in s.tiles() if s.dist[x] <= r]:
            for k in range(s.size[s.find(g)[0]]):
                s.step((g, k))
    oracle = Surface(atd, shortcuts=False)
    layer_counts(oracle, top + 2)
    return s, walk, oracle


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 10_000))
def test_random_exploration_recovers_exact_distances(seed):
    s, walk, oracle = _explore("3636", seed, 25)
    for g in walk:
        g = s.find(g)[0]
        assert s.get_delta(g) == _replay(oracle, _route(s, g))

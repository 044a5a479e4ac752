from __future__ import annotations

import pytest

from tesstree.apps import compare_graphs
from tesstree.baselines import (
    PrecisionError,
    TileCapExceeded,
    UnsupportedTessellation,
    bfs_generate,
    numeric_generate,
    precision_probe,
)
from tesstree.grts import ball_members

from conftest import atd_of


@pytest.mark.parametrize("radius, tiles", [(1, 8), (2, 29), (3, 85)])
def test_bfs_ball_sizes(radius, tiles):
    graph = bfs_generate(atd_of("73"), radius)
    assert len(ball_members(graph, radius)) == tiles


def test_bfs_tile_cap():
    with pytest.raises(TileCapExceeded):
        bfs_generate(atd_of("73"), 10, tile_cap=500)


def test_bfs_root_type():
    graph = bfs_generate(atd_of("488"), 1, root_type="q")
    assert graph.ttype[graph.root] == "q"
    assert len(ball_members(graph, 1)) == 5


@pytest.mark.parametrize("name, radius", [("73", 5), ("44", 5), ("54", 4), ("63", 5), ("36", 5)])
def test_numeric_matches_bfs(name, radius):
    atd = atd_of(name)
    res = compare_graphs(numeric_generate(atd, radius), bfs_generate(atd, radius), radius)
    assert res.ok, res.message


def test_numeric_rejects_multi_tile():
    with pytest.raises(UnsupportedTessellation):
        numeric_generate(atd_of("488"), 2)


def test_precision_probe_small_radius_exact():
    assert precision_probe(atd_of("73"), 6) < 1e-6


def test_numeric_breaks_down_far_out():
    assert precision_probe(atd_of("73"), 30) > 1e-3
    with pytest.raises(PrecisionError):
        numeric_generate(atd_of("73"), 30)

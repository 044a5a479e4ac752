from __future__ import annotations

import shutil

import pytest

from tesstree.cli import main
from tesstree.grts import parse_grts, serialize

from conftest import DATA


@pytest.fixture
def grts73(tmp_path):
    shutil.copy(DATA / "73.atd", tmp_path / "73.atd")
    out = tmp_path / "73.grts"
    assert main(["rulegen", str(tmp_path / "73.atd"), "--out", str(out)]) == 0
    return out


def test_check_consistent(capsys):
    assert main(["check", str(DATA / "73.atd")]) == 0
    out = capsys.readouterr().out
    assert "consistent" in out and "hyperbolic" in out and "-1/42" in out


def test_check_bundled_name(capsys):
    assert main(["check", "44"]) == 0
    assert "euclidean" in capsys.readouterr().out


def test_check_inconsistent(tmp_path, capsys):
    p = tmp_path / "bad.atd"
    p.write_text("tile a n=2 s=2\nconn a.0 a.0\nconn a.1 a.1\nvalence a.0 3\nvalence a.1 4\n")
    assert main(["check", str(p)]) == 1
    assert "inconsistent" in capsys.readouterr().out


def test_check_syntax_error(tmp_path):
    p = tmp_path / "bad.atd"
    p.write_text("tile t\n")
    assert main(["check", str(p)]) == 2


def test_check_missing_file(tmp_path):
    assert main(["check", str(tmp_path / "nope.atd")]) == 2


def test_rulegen_writes_structure_and_stats(tmp_path, grts73):
    stats = tmp_path / "73.stats"
    assert main(["rulegen", str(tmp_path / "73.atd"), "--out", str(grts73), "--stats", str(stats)]) == 0
    g = parse_grts(grts73.read_text())
    assert len(g) == 3
    assert g.atd_ref == "73.atd"
    assert "states" in stats.read_text()


def test_rulegen_stdout(capsys):
    assert main(["rulegen", "73"]) == 0
    assert capsys.readouterr().out.startswith("grts ")


def test_rulegen_spherical(tmp_path):
    p = tmp_path / "33.atd"
    shutil.copy(DATA / "33.atd", p)
    assert main(["rulegen", str(p), "--out", str(tmp_path / "33.grts")]) == 4


def test_rulegen_iteration_cap():
    assert main(["rulegen", "37", "--max-iter", "1"]) == 3


def test_rulegen_batch(tmp_path, capsys):
    src = tmp_path / "in"
    src.mkdir()
    for name in ("73", "44"):
        shutil.copy(DATA / f"{name}.atd", src / f"{name}.atd")
    out = tmp_path / "out"
    assert main(["rulegen", "--batch", str(src), "--out", str(out), "--jobs", "2"]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["44.grts", "44.stats", "73.grts", "73.stats"]


def test_generate_adjacency(grts73, capsys):
    assert main(["generate", str(grts73), "--radius", "2"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 29


def test_generate_dot_and_svg(grts73, tmp_path, capsys):
    assert main(["generate", str(grts73), "--radius", "2", "--format", "dot"]) == 0
    assert capsys.readouterr().out.startswith("digraph")
    svg = tmp_path / "b.svg"
    assert main(["generate", str(grts73), "--radius", "3", "--format", "svg", "--out", str(svg)]) == 0
    assert svg.read_text().count("<polygon") == 85


def test_generate_horocycle(grts73, capsys):
    assert main(["generate", str(grts73), "--horocycle", "--tiles", "50", "--seed", "1"]) == 0
    assert len(capsys.readouterr().out.splitlines()) >= 50


def test_verify_ok(grts73, capsys):
    assert main(["verify", str(grts73), "--radius", "5"]) == 0
    assert "equal up to radius 5" in capsys.readouterr().out


def test_verify_numeric(grts73):
    assert main(["verify", str(grts73), "--radius", "4", "--oracle", "numeric"]) == 0


def test_verify_detects_swapped_walls(grts73, capsys):
    g = parse_grts(grts73.read_text())
    g.trans[1][1], g.trans[1][6] = "R", "L"
    grts73.write_text(serialize(g))
    assert main(["verify", str(grts73), "--radius", "4"]) == 6
    assert "mismatch" in capsys.readouterr().out


def test_verify_numeric_unsupported(tmp_path):
    shutil.copy(DATA / "488.atd", tmp_path / "488.atd")
    out = tmp_path / "488.grts"
    assert main(["rulegen", str(tmp_path / "488.atd"), "--out", str(out)]) == 0
    assert main(["verify", str(out), "--radius", "3", "--oracle", "numeric"]) == 7


def test_invalid_structure_rejected(grts73):
    g = parse_grts(grts73.read_text())
    g.trans[1][1] = "P"
    grts73.write_text(serialize(g))
    assert main(["generate", str(grts73)]) == 5


def test_coordseq(grts73, capsys):
    assert main(["coordseq", str(grts73), "--terms", "4", "--matrix"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "1 7 21 56"
    assert lines[1:] == ["0 7 0", "0 2 1", "0 1 1"]


def test_distance(grts73, capsys):
    assert main(["distance", str(grts73), "--from", "", "--to", ""]) == 0
    assert capsys.readouterr().out.strip() == "0"
    assert main(["distance", str(grts73), "--from", "0", "--to", "1"]) == 0
    assert capsys.readouterr().out.strip() == "1"


def test_distance_bad_turns(grts73):
    assert main(["distance", str(grts73), "--from", "0,x"]) == 2
    assert main(["distance", str(grts73), "--from", "0,1"]) == 2


def test_report_writes_files(grts73, tmp_path, capsys):
    out = tmp_path / "rep"
    assert main(["report", str(grts73), "--out-dir", str(out), "--terms", "5", "--radius", "3"]) == 0
    assert (out / "coordseq.png").stat().st_size > 0
    assert (out / "tiling.png").stat().st_size > 0
    rows = (out / "coordseq.tsv").read_text().splitlines()
    assert rows[0].split("\t")[0] == "n"
    assert [r.split("\t")[1] for r in rows[1:]] == ["1", "7", "21", "56", "147"]

"""Command-line front end.

Exit codes: 0 ok, 1 inconsistent ATD, 2 I/O / syntax / bad turn sequence,
3 iteration cap, 4 spherical input, 5 structure error, 6 verification
mismatch, 7 unsupported tessellation.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

from .atd import (
    Atd,
    AtdSyntaxError,
    Geometry,
    SphericalUnsupported,
    classify_geometry,
    load_atd,
    validate,
)
from .grts import (
    Grts,
    GrtsSyntaxError,
    NoEligibleState,
    StructureError,
    adjacency_text,
    ball_members,
    dot_text,
    generate_ball,
    generate_horocycle,
    parse_grts,
    serialize,
    validate_static,
)

OK, INCONSISTENT, IO_ERROR, ITER_CAP, SPHERICAL, STRUCTURE, MISMATCH, UNSUPPORTED = range(8)


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def bundled_atd(name: str) -> Path | None:
    p = resources.files("tesstree") / "data" / f"{name}.atd"
    return Path(str(p)) if p.is_file() else None


def _read_atd(arg: str) -> tuple[Atd, Path]:
    path = Path(arg)
    if not path.exists():
        alt = bundled_atd(arg)
        if alt is None:
            raise CliError(IO_ERROR, f"cannot read ATD {arg!r}")
        path = alt
    try:
        return load_atd(path), path
    except OSError as exc:
        raise CliError(IO_ERROR, str(exc)) from exc
    except AtdSyntaxError as exc:
        raise CliError(IO_ERROR, f"{path}: {exc}") from exc


def _read_grts(arg: str, atd_arg: str | None) -> tuple[Grts, Atd]:
    path = Path(arg)
    try:
        g = parse_grts(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(IO_ERROR, str(exc)) from exc
    except GrtsSyntaxError as exc:
        raise CliError(IO_ERROR, f"{path}: {exc}") from exc
    if atd_arg is None:
        if not g.atd_ref or g.atd_ref == "-":
            raise CliError(IO_ERROR, "the GRTS file names no ATD; pass --atd")
        ref = Path(g.atd_ref)
        atd_arg = str(ref if ref.is_absolute() else path.parent / ref)
        if not Path(atd_arg).exists():
            atd_arg = g.atd_ref
    atd, _ = _read_atd(atd_arg)
    problems = validate_static(g, atd)
    if problems:
        raise CliError(STRUCTURE, "invalid structure: " + "; ".join(problems))
    return g, atd


def _pick_root(g: Grts, arg: str | None) -> int:
    if arg is None:
        return g.roots[0]
    if arg.isdigit():
        q = int(arg)
        if q not in g.roots:
            raise CliError(IO_ERROR, f"state {q} is not a root")
        return q
    try:
        return g.root_for(arg)
    except KeyError as exc:
        raise CliError(IO_ERROR, str(exc)) from exc


def _parse_turns(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise CliError(IO_ERROR, f"bad turn sequence {text!r}") from exc


# ----------------------------------------------------------------------
# commands


def cmd_check(args) -> int:
    atd, path = _read_atd(args.file)
    failures = validate(atd)
    if failures:
        for f in failures:
            print(f"inconsistent: {f}")
        return INCONSISTENT
    geo = classify_geometry(atd)
    note = " (unsupported for rulegen)" if geo.kind is Geometry.SPHERICAL else ""
    print(f"consistent, χ={geo.curvature}, {geo.kind.value}{note}")
    return OK


def _learn_one(atd_path: str, out: str | None, single: bool, step_limit: int, max_iter: int, stats: str | None):
    from .rulegen import InconsistentAtd, IterationCapExceeded, LearnConfig, learn

    atd, path = _read_atd(atd_path)
    cfg = LearnConfig(origins="single" if single else "all", step_limit=step_limit, max_iterations=max_iter)
    try:
        g, st = learn(atd, cfg)
    except InconsistentAtd as exc:
        raise CliError(INCONSISTENT, f"inconsistent ATD: {exc}") from exc
    except SphericalUnsupported as exc:
        raise CliError(SPHERICAL, f"spherical tessellation is not supported: {exc}") from exc
    except IterationCapExceeded as exc:
        raise CliError(ITER_CAP, str(exc)) from exc
    g.name = atd.name or path.stem
    if out:
        g.atd_ref = os.path.relpath(path.resolve(), Path(out).resolve().parent)
    else:
        g.atd_ref = str(path)
    text = serialize(g)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    if stats:
        Path(stats).write_text("\n".join(st.as_lines()) + "\n", encoding="utf-8")
    return text


def _batch_job(item):
    src, out, single, step_limit, max_iter = item
    try:
        _learn_one(src, out, single, step_limit, max_iter, out[: -len(".grts")] + ".stats")
        return src, OK, ""
    except CliError as exc:
        return src, exc.code, str(exc)


def cmd_rulegen(args) -> int:
    if args.batch:
        src_dir = Path(args.batch)
        out_dir = Path(args.out or src_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        items = [
            (str(p), str(out_dir / (p.stem + ".grts")), args.single_origin, args.step_limit, args.max_iter)
            for p in sorted(src_dir.glob("*.atd"))
        ]
        worst = OK
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for src, code, msg in pool.map(_batch_job, items):
                print(f"{src}\t{code}\t{msg}" if msg else f"{src}\t{code}")
                worst = max(worst, code)
        return worst
    text = _learn_one(args.file, args.out, args.single_origin, args.step_limit, args.max_iter, args.stats)
    if not args.out:
        sys.stdout.write(text)
    return OK


def cmd_generate(args) -> int:
    g, atd = _read_grts(args.grts, args.atd)
    try:
        if args.horocycle:
            graph = generate_horocycle(g, atd, seed=args.seed, tiles=args.tiles)
            members = graph.members
        else:
            graph = generate_ball(g, atd, args.radius, root=_pick_root(g, args.root))
            members = sorted(ball_members(graph, args.radius))
    except NoEligibleState as exc:
        raise CliError(STRUCTURE, str(exc)) from exc
    except StructureError as exc:
        raise CliError(STRUCTURE, f"structure error: {exc}") from exc
    fmt = args.format
    if fmt == "adj":
        text = adjacency_text(graph, members)
    elif fmt == "dot":
        text = dot_text(graph, members)
    else:
        from .render import to_svg

        if atd.is_regular() is None:
            print("warning: no geometric layout for this tessellation; drawing a schematic layout", file=sys.stderr)
        text = to_svg(graph, members, labels=bool(args.labels))
    _emit(text, args.out)
    return OK


def cmd_verify(args) -> int:
    from .apps import verify, verify_states
    from .baselines import PrecisionError, UnsupportedTessellation

    g, atd = _read_grts(args.grts, args.atd)
    roots = g.roots if args.root is None else [_pick_root(g, args.root)]
    try:
        for root in roots:
            res = verify(g, atd, args.radius, oracle=args.oracle, root=root)
            if res.ok and args.anchors == "states" and args.oracle == "bfs":
                res = verify_states(g, atd, args.radius, root=root)
            if not res.ok:
                print(f"mismatch (root state {root}, radius {args.radius}): {res.message}")
                return MISMATCH
    except UnsupportedTessellation as exc:
        raise CliError(UNSUPPORTED, str(exc)) from exc
    except PrecisionError as exc:
        raise CliError(UNSUPPORTED, f"numeric oracle failed: {exc}") from exc
    print(f"equal up to radius {args.radius} ({len(roots)} root(s), oracle {args.oracle})")
    return OK


def cmd_coordseq(args) -> int:
    from .apps import coordination_sequence, recurrence_matrix

    g, _ = _read_grts(args.grts, args.atd)
    seq = coordination_sequence(g, args.terms, root=_pick_root(g, args.root))
    print(" ".join(str(x) for x in seq))
    if args.matrix:
        for row in recurrence_matrix(g).matrix:
            print(" ".join(str(x) for x in row))
    return OK


def cmd_distance(args) -> int:
    from .apps import replay, tile_distance
    from .grts import GenGraph

    g, atd = _read_grts(args.grts, args.atd)
    graph = GenGraph(g, atd)
    graph.root = graph.add_state(_pick_root(g, args.root), 0)
    ends = []
    for text in (getattr(args, "from"), args.to):
        turns = _parse_turns(text)
        x = graph.root
        for k, a in enumerate(turns):
            if not 0 <= a < graph.size(x):
                raise CliError(IO_ERROR, f"turn {a} out of range in {text!r}")
            base = 0 if k == 0 else g.parent_edge[graph.state[x]]
            nxt = g.trans[graph.state[x]][(base + a) % graph.size(x)]
            if not isinstance(nxt, int):
                raise CliError(IO_ERROR, f"turn {a} in {text!r} does not lead to a child")
            x = replay(graph, turns[: k + 1])
        ends.append(x)
    try:
        print(tile_distance(graph, ends[0], ends[1], delta=args.delta))
    except StructureError as exc:
        raise CliError(STRUCTURE, f"structure error: {exc}") from exc
    return OK


def cmd_report(args) -> int:
    from .apps import coordination_sequence
    from .render import plot_coordination, plot_tiling

    g, atd = _read_grts(args.grts, args.atd)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seqs = {f"root {q} ({g.tile_of[q]})": coordination_sequence(g, args.terms, root=q) for q in g.roots}
    lines = ["n\t" + "\t".join(f"root{q}" for q in g.roots)]
    for n in range(args.terms):
        lines.append(f"{n}\t" + "\t".join(str(seq[n]) for seq in seqs.values()))
    (out / "coordseq.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    plot_coordination(seqs, out / "coordseq.png")
    try:
        graph = generate_ball(g, atd, args.radius)
    except StructureError as exc:
        raise CliError(STRUCTURE, f"structure error: {exc}") from exc
    plot_tiling(graph, out / "tiling.png", sorted(ball_members(graph, args.radius)))
    sys.stdout.write("\n".join(lines) + "\n")
    return OK


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tesstree", description="Learn and use tree structures of periodic tessellations.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate an ATD and classify its geometry")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("rulegen", help="learn a tree structure from an ATD")
    p.add_argument("file", nargs="?")
    p.add_argument("--out")
    p.add_argument("--single-origin", action="store_true")
    p.add_argument("--seed", type=int, default=0, help="accepted for reproducibility; learning itself is deterministic")
    p.add_argument("--step-limit", type=int, default=10_000)
    p.add_argument("--max-iter", type=int, default=9_999)
    p.add_argument("--stats")
    p.add_argument("--batch", help="learn every *.atd in this directory")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_rulegen)

    def grts_args(p):
        p.add_argument("grts")
        p.add_argument("--atd", help="ATD file (default: the one named in the GRTS header)")
        p.add_argument("--root", help="root state id or tile type")

    p = sub.add_parser("generate", help="generate a ball (or a horocycle) from a tree structure")
    grts_args(p)
    p.add_argument("--radius", type=int, default=3)
    p.add_argument("--format", choices=["adj", "dot", "svg"], default="adj")
    p.add_argument("--labels", default="state,depth", help="empty string disables SVG labels")
    p.add_argument("--horocycle", action="store_true")
    p.add_argument("--tiles", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="compare generated balls with an independent oracle")
    grts_args(p)
    p.add_argument("--radius", type=int, default=8)
    p.add_argument("--oracle", choices=["bfs", "numeric"], default="bfs")
    p.add_argument("--anchors", choices=["roots", "states"], default="roots")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("coordseq", help="coordination sequence via the recurrence")
    grts_args(p)
    p.add_argument("--terms", type=int, default=10)
    p.add_argument("--matrix", action="store_true")
    p.set_defaults(func=cmd_coordseq)

    p = sub.add_parser("distance", help="distance between two tiles given by turn sequences")
    grts_args(p)
    p.add_argument("--from", default="")
    p.add_argument("--to", default="")
    p.add_argument("--delta", type=int, default=2)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("report", help="write coordseq.tsv plus coordseq.png and tiling.png")
    grts_args(p)
    p.add_argument("--out-dir", default="report")
    p.add_argument("--terms", type=int, default=12)
    p.add_argument("--radius", type=int, default=4)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "rulegen" and not args.file and not args.batch:
        print("rulegen needs an ATD file or --batch", file=sys.stderr)
        return IO_ERROR
    try:
        return args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())

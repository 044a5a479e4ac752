"""Abstract tessellation descriptions.

An ATD lists tile types (edge period ``n`` and rotational symmetry ``s``),
the connection rule pairing edge types, and the valence of every vertex
type.  Vertex ``i`` of a tile sits between edges ``i - 1`` and ``i``; the
valence stored for edge type ``(t, i)`` is the valence of that vertex.

Text format (``#`` starts a comment)::

    tile t n=1 s=7
    conn t.0 t.0
    valence t.0 3
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

EdgeType = tuple[str, int]


class AtdSyntaxError(ValueError):
    """Raised for malformed or incomplete ATD text."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class SphericalUnsupported(Exception):
    """The description realizes a spherical tessellation."""


@dataclass(frozen=True)
class TileType:
    id: str
    n: int
    s: int

    @property
    def N(self) -> int:
        return self.n * self.s


class Geometry(Enum):
    HYPERBOLIC = "hyperbolic"
    EUCLIDEAN = "euclidean"
    SPHERICAL = "spherical"


@dataclass(frozen=True)
class GeometryClass:
    curvature: Fraction
    kind: Geometry


@dataclass
class Atd:
    tiles: dict[str, TileType]
    conn: dict[EdgeType, EdgeType]
    valence: dict[EdgeType, int]
    name: str = ""
    # tile ids in declaration order; index in this list is the numeric type id
    order: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.order:
            self.order = list(self.tiles)
        self._index = {t: k for k, t in enumerate(self.order)}

    def tile(self, t: str) -> TileType:
        return self.tiles[t]

    def type_index(self, t: str) -> int:
        return self._index[t]

    def edge(self, t: str, i: int) -> EdgeType:
        return (t, i % self.tiles[t].n)

    def connect(self, t: str, i: int) -> EdgeType:
        return self.conn[self.edge(t, i)]

    def vertex_valence(self, t: str, i: int) -> int:
        return self.valence[self.edge(t, i)]

    def edge_types(self) -> list[EdgeType]:
        return [(t, i) for t in self.order for i in range(self.tiles[t].n)]

    def is_regular(self) -> tuple[int, int] | None:
        """Return ``(p, q)`` when this is the plain regular tiling {p,q}."""
        if len(self.tiles) != 1:
            return None
        (tt,) = self.tiles.values()
        if tt.n != 1 or self.conn[(tt.id, 0)] != (tt.id, 0):
            return None
        return tt.s, self.valence[(tt.id, 0)]


_ID = r"[A-Za-z_][A-Za-z0-9_\-]*"
_TILE_RE = re.compile(rf"^tile\s+({_ID})\s+n=(\d+)\s+s=(\d+)$")
_CONN_RE = re.compile(rf"^conn\s+({_ID})\.(\d+)\s+({_ID})\.(\d+)$")
_VAL_RE = re.compile(rf"^valence\s+({_ID})\.(\d+)\s+(\d+)$")


def parse_atd(text: str, name: str = "") -> Atd:
    """Parse ATD text; consistency is checked separately by :func:`validate`."""
    tiles: dict[str, TileType] = {}
    order: list[str] = []
    conn_lines: list[tuple[int, EdgeType, EdgeType]] = []
    val_lines: list[tuple[int, EdgeType, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        line = " ".join(line.split())
        col = len(raw) - len(raw.lstrip()) + 1
        if m := _TILE_RE.match(line):
            tid, n, s = m.group(1), int(m.group(2)), int(m.group(3))
            if tid in tiles:
                raise AtdSyntaxError(f"duplicate tile id {tid!r}", lineno, col)
            if n < 1 or s < 1 or n * s < 3:
                raise AtdSyntaxError(f"tile {tid!r} must have n>=1, s>=1 and n*s>=3", lineno, col)
            tiles[tid] = TileType(tid, n, s)
            order.append(tid)
        elif m := _CONN_RE.match(line):
            a = (m.group(1), int(m.group(2)))
            b = (m.group(3), int(m.group(4)))
            conn_lines.append((lineno, a, b))
        elif m := _VAL_RE.match(line):
            val_lines.append((lineno, (m.group(1), int(m.group(2))), int(m.group(3))))
        else:
            keyword = line.split()[0]
            if keyword in ("tile", "conn", "valence"):
                raise AtdSyntaxError(f"malformed {keyword} line: {line!r}", lineno, col)
            raise AtdSyntaxError(f"unknown directive {keyword!r}", lineno, col)

    def check_edge(e: EdgeType, lineno: int) -> None:
        t, i = e
        if t not in tiles:
            raise AtdSyntaxError(f"unknown tile {t!r}", lineno)
        if not 0 <= i < tiles[t].n:
            raise AtdSyntaxError(f"edge {t}.{i} out of range (n={tiles[t].n})", lineno)

    conn: dict[EdgeType, EdgeType] = {}

    def put(a: EdgeType, b: EdgeType, lineno: int) -> None:
        if a in conn and conn[a] != b:
            raise AtdSyntaxError(
                f"conflicting connection for {a[0]}.{a[1]}: "
                f"{conn[a][0]}.{conn[a][1]} vs {b[0]}.{b[1]}",
                lineno,
            )
        conn[a] = b

    for lineno, a, b in conn_lines:
        check_edge(a, lineno)
        check_edge(b, lineno)
        put(a, b, lineno)
        put(b, a, lineno)

    valence: dict[EdgeType, int] = {}
    for lineno, e, v in val_lines:
        check_edge(e, lineno)
        if v < 2:
            raise AtdSyntaxError(f"valence of {e[0]}.{e[1]} must be at least 2", lineno)
        if e in valence and valence[e] != v:
            raise AtdSyntaxError(f"conflicting valence for {e[0]}.{e[1]}", lineno)
        valence[e] = v

    if not tiles:
        raise AtdSyntaxError("no tiles declared")
    for t in order:
        for i in range(tiles[t].n):
            if (t, i) not in conn:
                raise AtdSyntaxError(f"missing conn for {t}.{i}")
            if (t, i) not in valence:
                raise AtdSyntaxError(f"missing valence for {t}.{i}")
    return Atd(tiles=tiles, conn=conn, valence=valence, name=name, order=order)


def load_atd(path) -> Atd:
    from pathlib import Path

    p = Path(path)
    return parse_atd(p.read_text(encoding="utf-8"), name=p.stem)


def serialize_atd(atd: Atd) -> str:
    """Canonical text: tiles sorted by id, then connections, then valences."""
    lines = []
    ids = sorted(atd.tiles)
    for t in ids:
        tt = atd.tiles[t]
        lines.append(f"tile {t} n={tt.n} s={tt.s}")
    seen = set()
    for t in ids:
        for i in range(atd.tiles[t].n):
            a = (t, i)
            b = atd.conn[a]
            if (b, a) in seen:
                continue
            seen.add((a, b))
            lines.append(f"conn {a[0]}.{a[1]} {b[0]}.{b[1]}")
    for t in ids:
        for i in range(atd.tiles[t].n):
            lines.append(f"valence {t}.{i} {atd.valence[(t, i)]}")
    return "\n".join(lines) + "\n"


def next_edge(atd: Atd, e: EdgeType) -> EdgeType:
    """Next edge type around the vertex shared with the connected edge."""
    t2, i2 = atd.conn[atd.edge(*e)]
    return (t2, (i2 + 1) % atd.tiles[t2].n)


def orbit(atd: Atd, e: EdgeType, limit: int | None = None) -> list[EdgeType]:
    """Edge types visited by iterating :func:`next_edge` until ``e`` recurs."""
    start = atd.edge(*e)
    limit = limit or len(atd.conn) + 1
    out = [start]
    cur = next_edge(atd, start)
    while cur != start:
        out.append(cur)
        if len(out) > limit:
            break
        cur = next_edge(atd, cur)
    return out


@dataclass(frozen=True)
class ConsistencyFailure:
    edge: EdgeType
    check: str  # "involution" | "valence-constancy" | "orbit-divisibility"

    def __str__(self) -> str:
        return f"{self.check} failure at {self.edge[0]}.{self.edge[1]}"


def validate(atd: Atd) -> list[ConsistencyFailure]:
    """Return every failed consistency check; an empty list means consistent."""
    report = []
    for e in atd.edge_types():
        if atd.conn.get(atd.conn[e]) != e:
            report.append(ConsistencyFailure(e, "involution"))
    if report:
        # next_edge orbits are meaningless when the pairing is broken
        return report
    for e in atd.edge_types():
        if atd.valence[e] != atd.valence[next_edge(atd, e)]:
            report.append(ConsistencyFailure(e, "valence-constancy"))
    for e in atd.edge_types():
        length = len(orbit(atd, e))
        if atd.valence[e] % length != 0:
            report.append(ConsistencyFailure(e, "orbit-divisibility"))
    return report


def euler_characteristic(atd: Atd) -> Fraction:
    total = Fraction(0)
    for tt in atd.tiles.values():
        corners = sum(Fraction(1, atd.valence[(tt.id, i)]) for i in range(tt.n))
        total += Fraction(1, tt.s) * (1 - Fraction(tt.N, 2) + tt.s * corners)
    return total


def classify_geometry(atd: Atd) -> GeometryClass:
    chi = euler_characteristic(atd)
    if chi < 0:
        kind = Geometry.HYPERBOLIC
    elif chi == 0:
        kind = Geometry.EUCLIDEAN
    else:
        kind = Geometry.SPHERICAL
    return GeometryClass(chi, kind)


def regular(p: int, q: int, name: str | None = None) -> Atd:
    """The regular tiling {p,q} as a one-tile ATD."""
    return parse_atd(f"tile t n=1 s={p}\nconn t.0 t.0\nvalence t.0 {q}\n", name=name or f"{p}{q}")

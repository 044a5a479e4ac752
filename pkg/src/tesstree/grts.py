"""Regular tree structures and combinatorial generation from them.

Every state names a tile type, the index of its parent edge (``None`` for
roots) and one transition per edge: ``"P"`` (parent), ``"L"``/``"R"``
(non-tree edge found by walking around a vertex) or an integer child state.
Rows are stored in the tile's canonical orientation, where the parent edge
has an index in ``[0, n)``.

Text format::

    grts 73 atd=73.atd
    roots 0
    state 0 tile=t parent=none
    trans 0: 1,1,1,1,1,1,1
"""

from __future__ import annotations

import random
import re
import sys
from collections import deque
from dataclasses import dataclass, field

from .atd import Atd

Entry = "str | int"


MAX_NESTING = 2_000


class StructureError(RuntimeError):
    """The tree structure cannot generate a consistent tessellation."""


class GrtsSyntaxError(ValueError):
    pass


class NoEligibleState(RuntimeError):
    pass


@dataclass
class Grts:
    tile_of: list[str]
    parent_edge: list[int | None]
    trans: list[list]
    name: str = ""
    atd_ref: str = ""

    @property
    def states(self) -> range:
        return range(len(self.tile_of))

    @property
    def roots(self) -> list[int]:
        return [q for q in self.states if self.parent_edge[q] is None]

    def __len__(self) -> int:
        return len(self.tile_of)

    def children(self, q: int) -> list[tuple[int, int]]:
        return [(i, x) for i, x in enumerate(self.trans[q]) if isinstance(x, int)]

    def copy(self) -> "Grts":
        return Grts(list(self.tile_of), list(self.parent_edge), [list(r) for r in self.trans], self.name, self.atd_ref)

    def root_for(self, tile: str | None = None) -> int:
        roots = self.roots
        if tile is None:
            return roots[0]
        for q in roots:
            if self.tile_of[q] == tile:
                return q
        raise KeyError(f"no root of tile type {tile!r}")


# ----------------------------------------------------------------------
# text format


def _fmt(x) -> str:
    return str(x)


def serialize(g: Grts) -> str:
    lines = [f"grts {g.name or 'unnamed'} atd={g.atd_ref or '-'}"]
    lines.append("roots " + " ".join(str(q) for q in g.roots))
    for q in g.states:
        p = "none" if g.parent_edge[q] is None else str(g.parent_edge[q])
        lines.append(f"state {q} tile={g.tile_of[q]} parent={p}")
    for q in g.states:
        lines.append(f"trans {q}: " + ",".join(_fmt(x) for x in g.trans[q]))
    return "\n".join(lines) + "\n"


_HEAD = re.compile(r"^grts\s+(\S+)\s+atd=(\S+)$")
_STATE = re.compile(r"^state\s+(\d+)\s+tile=(\S+)\s+parent=(none|\d+)$")
_TRANS = re.compile(r"^trans\s+(\d+):\s*(.*)$")
_ROOTS = re.compile(r"^roots((?:\s+\d+)*)$")


def parse_grts(text: str) -> Grts:
    name = atd_ref = ""
    states: dict[int, tuple[str, int | None]] = {}
    rows: dict[int, list] = {}
    declared_roots = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _HEAD.match(line):
            name, atd_ref = m.group(1), m.group(2)
        elif m := _STATE.match(line):
            q = int(m.group(1))
            if q in states:
                raise GrtsSyntaxError(f"line {lineno}: duplicate state {q}")
            states[q] = (m.group(2), None if m.group(3) == "none" else int(m.group(3)))
        elif m := _TRANS.match(line):
            q = int(m.group(1))
            row = []
            for tok in m.group(2).split(","):
                tok = tok.strip()
                if tok in ("P", "L", "R"):
                    row.append(tok)
                elif tok.isdigit():
                    row.append(int(tok))
                else:
                    raise GrtsSyntaxError(f"line {lineno}: bad transition entry {tok!r}")
            rows[q] = row
        elif m := _ROOTS.match(line):
            declared_roots = [int(x) for x in m.group(1).split()]
        else:
            raise GrtsSyntaxError(f"line {lineno}: unrecognized line {line!r}")
    n = len(states)
    if sorted(states) != list(range(n)):
        raise GrtsSyntaxError("state ids must be 0..k-1")
    for q in rows:
        if q not in states:
            raise GrtsSyntaxError(f"transitions for unknown state {q}")
    for q in states:
        if q not in rows:
            raise GrtsSyntaxError(f"missing transitions for state {q}")
        for x in rows[q]:
            if isinstance(x, int) and x not in states:
                raise GrtsSyntaxError(f"state {q} refers to unknown state {x}")
    g = Grts(
        tile_of=[states[q][0] for q in range(n)],
        parent_edge=[states[q][1] for q in range(n)],
        trans=[rows[q] for q in range(n)],
        name=name,
        atd_ref=atd_ref,
    )
    if declared_roots is not None and sorted(declared_roots) != sorted(g.roots):
        raise GrtsSyntaxError("roots line disagrees with parent=none states")
    return g


# ----------------------------------------------------------------------
# static checks


def validate_static(g: Grts, atd: Atd) -> list[str]:
    """Structural problems of ``g`` relative to ``atd``; empty means valid."""
    report = []
    if not g.roots:
        report.append("no root state")
    for q in g.states:
        t = g.tile_of[q]
        if t not in atd.tiles:
            report.append(f"state {q}: unknown tile type {t!r}")
            continue
        tt = atd.tiles[t]
        row = g.trans[q]
        if len(row) != tt.N:
            report.append(f"state {q}: {len(row)} transitions, tile has {tt.N} edges")
            continue
        parents = [i for i, x in enumerate(row) if x == "P"]
        p = g.parent_edge[q]
        if p is None:
            if parents:
                report.append(f"state {q}: root state has a parent entry")
        else:
            if not 0 <= p < tt.N:
                report.append(f"state {q}: parent edge {p} out of range")
            if parents != [p]:
                report.append(f"state {q}: parent entries at {parents}, expected exactly [{p}]")
        for i, x in enumerate(row):
            if isinstance(x, int):
                if not 0 <= x < len(g):
                    report.append(f"state {q}: edge {i} refers to missing state {x}")
                    continue
                pc = g.parent_edge[x]
                if pc is None:
                    report.append(f"state {q}: edge {i} leads to root state {x}")
                    continue
                t2 = g.tile_of[x]
                if t2 not in atd.tiles:
                    continue
                if atd.connect(t, i) != atd.edge(t2, pc):
                    report.append(
                        f"state {q}: edge {i} connects to {atd.connect(t, i)}, "
                        f"but child state {x} has parent edge {t2}.{pc}"
                    )
            elif x not in ("P", "L", "R"):
                report.append(f"state {q}: bad entry {x!r} at edge {i}")
    reach = set(g.roots)
    todo = list(reach)
    while todo:
        q = todo.pop()
        for _, x in g.children(q):
            if isinstance(x, int) and 0 <= x < len(g) and x not in reach:
                reach.add(x)
                todo.append(x)
    for q in g.states:
        if q not in reach:
            report.append(f"state {q}: unreachable from every root")
    return report


# ----------------------------------------------------------------------
# generated graphs


@dataclass
class TileGraph:
    """Explicit tile adjacency: ``edges[g][i] = (h, j)`` or ``None``."""

    atd: Atd
    ttype: list[str] = field(default_factory=list)
    edges: list[list] = field(default_factory=list)
    depth: list[int] = field(default_factory=list)
    root: int = 0
    # edge leading to the parent in the spanning tree, when known
    parent: list[int | None] = field(default_factory=list)

    def add(self, t: str, depth: int, parent: int | None = None) -> int:
        self.ttype.append(t)
        self.edges.append([None] * self.atd.tiles[t].N)
        self.depth.append(depth)
        self.parent.append(parent)
        return len(self.ttype) - 1

    def __len__(self) -> int:
        return len(self.ttype)

    def size(self, g: int) -> int:
        return len(self.edges[g])

    def bfs_distances(self, source: int | None = None, limit: int | None = None) -> dict[int, int]:
        source = self.root if source is None else source
        dist = {source: 0}
        q = deque([source])
        while q:
            x = q.popleft()
            if limit is not None and dist[x] >= limit:
                continue
            for e in self.edges[x]:
                if e is not None and e[0] not in dist:
                    dist[e[0]] = dist[x] + 1
                    q.append(e[0])
        return dist


class GenGraph(TileGraph):
    """Tessellation generated lazily by a tree structure."""

    def __init__(self, grts: Grts, atd: Atd, tile_cap: int = 2_000_000, rng: random.Random | None = None):
        super().__init__(atd)
        self.grts = grts
        self.state: list[int] = []
        self.tile_cap = tile_cap
        self.rng = rng
        self._busy: set[tuple[int, int]] = set()
        self._nesting = 0
        self._upward: dict[int, list[tuple[int, int]]] | None = None
        # tiles reported by horocycle generation
        self.members: list[int] | None = None

    def add_state(self, q: int, depth: int) -> int:
        if len(self.ttype) >= self.tile_cap:
            raise StructureError(f"tile cap {self.tile_cap} exceeded")
        g = self.add(self.grts.tile_of[q], depth, self.grts.parent_edge[q])
        self.state.append(q)
        return g

    def _link(self, g: int, i: int, h: int, j: int) -> None:
        cur = self.edges[g][i]
        if cur is not None and cur != (h, j):
            raise StructureError(f"edge {i} of tile {g} already connected elsewhere")
        cur = self.edges[h][j]
        if cur is not None and cur != (g, i):
            raise StructureError(f"edge {j} of tile {h} already connected elsewhere")
        self.edges[g][i] = (h, j)
        self.edges[h][j] = (g, i)

    def expand(self, g: int, i: int) -> tuple[int, int]:
        """Neighbor across edge ``i`` of ``g``, generating it if needed."""
        n = len(self.edges[g])
        i %= n
        e = self.edges[g][i]
        if e is not None:
            return e
        if (g, i) in self._busy:
            raise StructureError(f"cyclic dependency while resolving edge {i} of tile {g}")
        q = self.state[g]
        x = self.grts.trans[q][i]
        t = self.ttype[g]
        if isinstance(x, int):
            h = self.add_state(x, self.depth[g] + 1)
            self._link(g, i, h, self.grts.parent_edge[x])
            return self.edges[g][i]
        if x == "P":
            return self._extend_upward(g, i)
        if self._nesting >= MAX_NESTING:
            raise StructureError("vertex walks nest too deeply; the structure does not close up")
        self._busy.add((g, i))
        self._nesting += 1
        try:
            if x == "R":
                turn, want = 1, "L"
                v = self.atd.vertex_valence(t, i + 1)
            else:
                turn, want = -1, "R"
                v = self.atd.vertex_valence(t, i)
            wg, wi = g, (i + turn) % n
            for _ in range(v - 1):
                wg, wi = self.expand(wg, wi)
                wi = (wi + turn) % len(self.edges[wg])
        finally:
            self._busy.discard((g, i))
            self._nesting -= 1
        if self.grts.trans[self.state[wg]][wi] != want:
            raise StructureError(
                f"walking around the vertex from edge {i} of tile {g} (state {q}) "
                f"ended on a {self.grts.trans[self.state[wg]][wi]!r} edge, expected {want!r}"
            )
        self._link(g, i, wg, wi)
        return self.edges[g][i]

    # horocycle support -------------------------------------------------

    def _extend_upward(self, g: int, i: int) -> tuple[int, int]:
        if self.rng is None:
            raise StructureError(f"parent edge {i} of tile {g} is not connected")
        options = self.upward_options().get(self.state[g], [])
        if not options:
            raise StructureError(f"no eligible parent state for state {self.state[g]}")
        q1, i1 = self.rng.choice(options)
        h = self.add_state(q1, self.depth[g] - 1)
        self._link(g, i, h, i1)
        return self.edges[g][i]

    def upward_options(self) -> dict[int, list[tuple[int, int]]]:
        if self._upward is None:
            self._upward = horocycle_parents(self.grts)
        return self._upward


def horocycle_parents(g: Grts) -> dict[int, list[tuple[int, int]]]:
    """For each state, the ``(parent state, edge)`` slots it may hang from upward.

    A slot qualifies when the parent state has live children on both sides of
    the slot and can itself be extended upward indefinitely.
    """
    from .rulegen import compute_liveness

    live = compute_liveness(g).live
    pairs = []
    for q1 in g.states:
        p = g.parent_edge[q1]
        if p is None:
            continue
        n = len(g.trans[q1])
        for i, x in g.children(q1):
            left = [(p + k) % n for k in range(1, (i - p) % n)]
            right = [(i + k) % n for k in range(1, (p - i) % n)]
            if any(isinstance(g.trans[q1][k], int) and g.trans[q1][k] in live for k in left) and any(
                isinstance(g.trans[q1][k], int) and g.trans[q1][k] in live for k in right
            ):
                pairs.append((q1, i, x))
    up = {q for q in g.states if g.parent_edge[q] is not None}
    while True:
        keep = {x for (q1, i, x) in pairs if q1 in up and x in up}
        if keep == up:
            break
        up = keep
    out: dict[int, list[tuple[int, int]]] = {}
    for q1, i, x in pairs:
        if q1 in up and x in up:
            out.setdefault(x, []).append((q1, i))
    return out


def _deep_recursion():
    if sys.getrecursionlimit() < 20_000:
        sys.setrecursionlimit(20_000)


def generate_ball(g: Grts, atd: Atd, radius: int, root: int | None = None, tile_cap: int = 2_000_000) -> GenGraph:
    """Generate every tile within ``radius`` of a root tile, with all mutual connections."""
    _deep_recursion()
    root = g.roots[0] if root is None else root
    if g.parent_edge[root] is not None:
        raise ValueError(f"state {root} is not a root")
    graph = GenGraph(g, atd, tile_cap=tile_cap)
    graph.root = graph.add_state(root, 0)
    frontier = [graph.root]
    for d in range(radius + 1):
        nxt = []
        for x in frontier:
            for i in range(graph.size(x)):
                graph.expand(x, i)
        nxt = [x for x in range(len(graph)) if graph.depth[x] == d + 1]
        frontier = nxt
    return graph


def generate_horocycle(
    g: Grts, atd: Atd, seed: int = 0, tiles: int = 500, depth_span: int | None = None
) -> GenGraph:
    """Unrooted generation: parents are invented on demand above the start tile."""
    _deep_recursion()
    rng = random.Random(seed)
    options = horocycle_parents(g)
    starts = sorted(options)
    if not starts:
        raise NoEligibleState("no state can be extended upward with live branches on both sides")
    graph = GenGraph(g, atd, rng=rng)
    graph.root = graph.add_state(rng.choice(starts), 0)
    q = deque([graph.root])
    seen = {graph.root}
    order = [graph.root]
    while q and len(order) < tiles:
        x = q.popleft()
        for i in range(graph.size(x)):
            h, _ = graph.expand(x, i)
            if h not in seen and (depth_span is None or abs(graph.depth[h]) <= depth_span):
                seen.add(h)
                order.append(h)
                q.append(h)
    # every reported tile gets its parent, inventing one more ancestor if needed
    for x in order:
        graph.expand(x, g.parent_edge[graph.state[x]])
    graph.members = order
    return graph


def adjacency_text(graph: GenGraph, members: list[int] | None = None) -> str:
    """One line per tile: ``id type state depth: (nbr,edge) ...``; ``-`` marks an edge leaving the set."""
    members = list(range(len(graph))) if members is None else members
    keep = set(members)
    lines = []
    for x in members:
        cells = []
        for e in graph.edges[x]:
            cells.append(f"({e[0]},{e[1]})" if e is not None and e[0] in keep else "-")
        lines.append(f"{x} {graph.ttype[x]} {graph.state[x]} {graph.depth[x]}: " + " ".join(cells))
    return "\n".join(lines) + "\n"


def dot_text(graph: GenGraph, members: list[int] | None = None) -> str:
    """Directed graph; each connection carries its transition kind (P, L, R or C)."""
    members = list(range(len(graph))) if members is None else members
    keep = set(members)
    out = ["digraph tessellation {"]
    for x in members:
        out.append(f'  t{x} [label="{graph.state[x]}/{graph.depth[x]}", type="{graph.ttype[x]}"];')
    for x in members:
        row = graph.grts.trans[graph.state[x]]
        for i, e in enumerate(graph.edges[x]):
            if e is None or e[0] not in keep:
                continue
            kind = "C" if isinstance(row[i], int) else row[i]
            out.append(f'  t{x} -> t{e[0]} [kind="{kind}", edge={i}, back={e[1]}];')
    out.append("}")
    return "\n".join(out) + "\n"


# ----------------------------------------------------------------------
# canonical form


def ball_members(graph: TileGraph, radius: int, use_depth: bool = True) -> set[int]:
    if use_depth:
        return {x for x in range(len(graph)) if 0 <= graph.depth[x] <= radius}
    return {x for x, d in graph.bfs_distances(limit=radius).items() if d <= radius}


def canonical_form(
    graph: TileGraph, members: set[int], root: int | None = None, root_edge: int = 0, tree: bool = False
) -> list[tuple]:
    """Breadth-first encoding of the ball around ``root`` independent of tile numbering.

    Tiles are labelled in discovery order; each tile is read starting from the
    edge through which it was discovered (``root_edge`` for the root).  With
    ``tree`` the relative index of each tile's parent edge is included too.
    """
    return canonical_traversal(graph, members, root, root_edge, tree)[0]


def canonical_traversal(
    graph: TileGraph, members: set[int], root: int | None = None, root_edge: int = 0, tree: bool = False
) -> tuple[list[tuple], list[int]]:
    """Like :func:`canonical_form`, also returning the tiles in label order."""
    root = graph.root if root is None else root
    label = {root: 0}
    ref = {root: root_edge}
    order = [root]
    out = []
    k = 0
    while k < len(order):
        x = order[k]
        k += 1
        n = graph.size(x)
        row = []
        for r in range(n):
            e = graph.edges[x][(ref[x] + r) % n]
            if e is None or e[0] not in members:
                row.append(None)
                continue
            y, j = e
            if y not in label:
                label[y] = len(order)
                ref[y] = j
                order.append(y)
            row.append((label[y], (j - ref[y]) % graph.size(y)))
        if tree:
            p = graph.parent[x]
            out.append((graph.ttype[x], tuple(row), None if p is None else (p - ref[x]) % n))
        else:
            out.append((graph.ttype[x], tuple(row)))
    return out, order


def first_difference(a: list[tuple], b: list[tuple]) -> int | None:
    for k, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return k
    if len(a) != len(b):
        return min(len(a), len(b))
    return None

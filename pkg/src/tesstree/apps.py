"""Applications of tree structures: growth counts, addresses, distances, verification."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .atd import Atd
from .grts import (
    GenGraph,
    Grts,
    StructureError,
    TileGraph,
    ball_members,
    canonical_form,
    canonical_traversal,
    first_difference,
    generate_ball,
)


@dataclass
class Recurrence:
    """``matrix[p][q]`` counts children of state ``q`` below a tile in state ``p``."""

    matrix: list[list[int]]

    def step(self, counts: list[int]) -> list[int]:
        n = len(self.matrix)
        out = [0] * n
        for p, c in enumerate(counts):
            if c:
                row = self.matrix[p]
                for q in range(n):
                    if row[q]:
                        out[q] += c * row[q]
        return out


def recurrence_matrix(g: Grts) -> Recurrence:
    n = len(g)
    m = [[0] * n for _ in range(n)]
    for p in g.states:
        for _, q in g.children(p):
            m[p][q] += 1
    return Recurrence(m)


def coordination_sequence(g: Grts, terms: int, root: int | None = None) -> list[int]:
    """Number of tiles at each distance ``0 .. terms-1`` from a root tile (exact integers)."""
    root = g.roots[0] if root is None else root
    rec = recurrence_matrix(g)
    counts = [0] * len(g)
    counts[root] = 1
    out = []
    for _ in range(terms):
        out.append(sum(counts))
        counts = rec.step(counts)
    return out


# ----------------------------------------------------------------------
# addresses


def path_to_root(graph: GenGraph, g: int) -> list[int]:
    """Moves from the tile back to its root.

    Read backwards this is an address: the first entry is the edge taken at
    the root, every later entry is the clockwise turn from the arrival edge.
    Here the list starts with the last move, so ``path[::-1]`` is the address.
    """
    return address(graph, g)[::-1]


def _parent_edge(graph: GenGraph, x: int) -> int:
    return graph.grts.parent_edge[graph.state[x]]


def address(graph: GenGraph, g: int) -> list[int]:
    moves = []
    x = g
    while graph.grts.parent_edge[graph.state[x]] is not None:
        p = _parent_edge(graph, x)
        y, j = graph.edges[x][p]
        if graph.grts.parent_edge[graph.state[y]] is None:
            moves.append(j)
        else:
            moves.append((j - _parent_edge(graph, y)) % graph.size(y))
        x = y
    return moves[::-1]


def replay(graph: GenGraph, addr: list[int]) -> int:
    """Follow an address from the root, generating tiles as needed."""
    x = graph.root
    for k, a in enumerate(addr):
        edge = a if k == 0 else (_parent_edge(graph, x) + a)
        x, _ = graph.expand(x, edge % graph.size(x))
    return x


def tile_distance(graph: GenGraph, a: int, b: int, delta: int = 2) -> int:
    """Graph distance between two generated tiles.

    The search runs inside the tiles within ``delta`` of either root path;
    in a hyperbolic tiling geodesics stay close to those paths.
    """
    if a == b:
        return 0
    core = set()
    for g in (a, b):
        x = g
        core.add(x)
        while graph.grts.parent_edge[graph.state[x]] is not None:
            x, _ = graph.edges[x][_parent_edge(graph, x)]
            core.add(x)
    region = set(core)
    frontier = list(core)
    for _ in range(delta):
        nxt = []
        for x in frontier:
            for i in range(graph.size(x)):
                y, _ = graph.expand(x, i)
                if y not in region:
                    region.add(y)
                    nxt.append(y)
        frontier = nxt
    dist = {a: 0}
    q = deque([a])
    while q:
        x = q.popleft()
        for i in range(graph.size(x)):
            e = graph.edges[x][i]
            if e is None or e[0] not in region or e[0] in dist:
                continue
            dist[e[0]] = dist[x] + 1
            if e[0] == b:
                return dist[e[0]]
            q.append(e[0])
    raise ValueError("tiles are not connected inside the search region")


# ----------------------------------------------------------------------
# verification


@dataclass
class VerifyResult:
    ok: bool
    radius: int
    tiles: int
    first_difference: int | None = None
    message: str = ""


def compare_graphs(a: TileGraph, b: TileGraph, radius: int, tree: bool = False) -> VerifyResult:
    ca = canonical_form(a, ball_members(a, radius), tree=tree)
    cb = canonical_form(b, ball_members(b, radius), tree=tree)
    k = first_difference(ca, cb)
    if k is None:
        return VerifyResult(True, radius, len(ca))
    left = ca[k] if k < len(ca) else None
    right = cb[k] if k < len(cb) else None
    return VerifyResult(False, radius, len(ca), k, f"tile {k} differs: {left} vs {right}")


def _state_depths(g: Grts, root: int) -> dict[int, int]:
    depth = {root: 0}
    q = deque([root])
    while q:
        u = q.popleft()
        for _, x in g.children(u):
            if x not in depth:
                depth[x] = depth[u] + 1
                q.append(x)
    return depth


def _follow(graph: TileGraph, addr: list[int]) -> int | None:
    x = graph.root
    for k, a in enumerate(addr):
        base = 0 if k == 0 else graph.parent[x]
        e = graph.edges[x][(base + a) % graph.size(x)]
        if e is None:
            return None
        x = e[0]
    return x


def _local(graph: TileGraph, centre: int, radius: int) -> list[tuple]:
    members = set(graph.bfs_distances(centre, limit=radius))
    ref = graph.parent[centre] if graph.parent[centre] is not None else 0
    form, order = canonical_traversal(graph, members, root=centre, root_edge=ref, tree=True)
    # relative depths pin down where the root lies
    return form + [tuple(graph.depth[x] - graph.depth[centre] for x in order)]


def verify_states(g: Grts, atd: Atd, radius: int, root: int | None = None) -> VerifyResult:
    """Check the ``radius`` neighborhood of the shallowest tile of every state against the BFS oracle."""
    from .baselines import bfs_generate

    root = g.roots[0] if root is None else root
    depths = _state_depths(g, root)
    reach = max(depths.values()) + radius
    ref = bfs_generate(atd, reach, root_type=g.tile_of[root])
    try:
        ours = generate_ball(g, atd, reach, root=root, tile_cap=4 * len(ref) + 1000)
    except StructureError as exc:
        return VerifyResult(False, radius, 0, 0, f"generation failed: {exc}")
    first: dict[int, int] = {}
    for x in range(len(ours)):
        first.setdefault(ours.state[x], x)
    for q in sorted(first):
        x = first[q]
        if ours.depth[x] + radius > reach:
            continue
        y = _follow(ref, address(ours, x))
        if y is None:
            return VerifyResult(False, radius, len(ours), None, f"state {q}: tile missing from oracle")
        a, b = _local(ours, x, radius), _local(ref, y, radius)
        k = first_difference(a, b)
        if k is not None:
            return VerifyResult(False, radius, len(ours), k, f"state {q}: neighborhood differs at entry {k}")
    return VerifyResult(True, radius, len(ours))


def verify(
    g: Grts, atd: Atd, radius: int, oracle: str = "bfs", root: int | None = None, tree: bool = True
) -> VerifyResult:
    """Compare the ball generated by ``g`` with an independent generator.

    With ``tree`` (BFS oracle only) the spanning trees must agree as well:
    each tile's parent edge is compared with the oracle's tie-broken parent.
    """
    from .baselines import bfs_generate, numeric_generate

    root = g.roots[0] if root is None else root
    if oracle == "bfs":
        ref = bfs_generate(atd, radius, root_type=g.tile_of[root])
    elif oracle == "numeric":
        ref = numeric_generate(atd, radius)
    else:
        raise ValueError(f"unknown oracle {oracle!r}")
    try:
        # a wrong structure may grow much faster than the real ball
        ours = generate_ball(g, atd, radius, root=root, tile_cap=4 * len(ref) + 1000)
    except StructureError as exc:
        return VerifyResult(False, radius, 0, 0, f"generation failed: {exc}")
    return compare_graphs(ours, ref, radius, tree=tree and oracle == "bfs")

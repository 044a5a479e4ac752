"""Lazily generated, self-correcting approximation of a tessellation.

Tiles are integer handles.  A *walker* is a ``(tile, edge)`` pair: standing in
``tile`` and facing edge ``edge``.  Edges are numbered clockwise, so rotating
by ``+1`` turns clockwise and by ``-1`` counterclockwise.

Generation can create the same real tile twice; such duplicates are merged
by an oriented union-find: ``rep[g] = (h, off)`` means walker ``(g, k)`` is
the same as ``(h, k + off)``.  Stored handles stay valid forever and are
resolved through :meth:`Surface.resolve`.
"""

from __future__ import annotations

import logging
from collections import OrderedDict, deque
from dataclasses import dataclass, field

from .atd import Atd, Geometry, SphericalUnsupported, classify_geometry

logger = logging.getLogger(__name__)

INF = 1 << 60
LEFT = "L"
RIGHT = "R"

Walker = tuple[int, int]


class SurfaceError(RuntimeError):
    """The surface reached a state that a consistent ATD cannot produce."""


class TypeMismatch(SurfaceError):
    pass


class RootHasNoParent(ValueError):
    pass


class Restart(Exception):
    """Raised to abandon the current learning iteration."""


class StepLimitExceeded(Restart):
    pass


class DistanceErrorRestart(Restart):
    pass


@dataclass(frozen=True)
class Shortcut:
    """A closed loop of walker moves anchored at a tile type.

    Replay starts facing ``start`` and, after each step except the last,
    turns counterclockwise by the next entry of ``turns``.  The walk ends
    back at the anchor tile, arriving through edge ``end``.
    """

    anchor_type: str
    start: int
    turns: tuple[int, ...]
    end: int

    def __len__(self) -> int:
        return len(self.turns) + 1


@dataclass
class SurfaceStats:
    tiles: int = 0
    moves: int = 0
    unifications: int = 0
    distance_errors: int = 0
    shortcuts: int = 0
    side_moves: int = 0


@dataclass
class _ShortcutStore:
    cap: int
    items: OrderedDict = field(default_factory=OrderedDict)  # Shortcut -> serial


class Surface:
    """Generated tiles with connections, distances and derived tree data."""

    def __init__(
        self,
        atd: Atd,
        origins: str = "single",
        step_limit: int = 10_000,
        shortcut_cap: int = 64,
        shortcuts: bool = True,
        root_type: str | None = None,
    ):
        if classify_geometry(atd).kind is Geometry.SPHERICAL:
            raise SphericalUnsupported(atd.name or "spherical tessellation")
        self.atd = atd
        self.step_limit = step_limit
        self.use_shortcuts = shortcuts
        self.stats = SurfaceStats()

        self.ttype: list[str] = []
        self.size: list[int] = []
        self.period: list[int] = []
        self.edges: list[list[Walker | None] | None] = []
        self.rep: list[Walker | None] = []
        self.dist: list[int] = []
        self.solid: list[bool] = []
        self.back: list[int | None] = []
        self.tag: list[int] = []
        self.tried: list[int] = []

        self.parent_cache: dict[int, int] = {}
        self.side_cache: dict[Walker, str] = {}
        self.distance_error = False

        self._queue: deque = deque()
        self._draining = False
        self._replaying = False
        self._pending_replays: list[Shortcut] = []
        self._serial = 0
        self._store = {t: _ShortcutStore(shortcut_cap) for t in atd.order}

        if root_type is not None:
            types = [root_type]
        else:
            types = atd.order if origins == "all" else atd.order[:1]
        self.roots: list[int] = []
        for k, t in enumerate(types):
            g = self._new_tile(t, k)
            self.dist[g] = 0
            self.solid[g] = True
            self.roots.append(g)

    # ------------------------------------------------------------------
    # basic structure

    def _new_tile(self, t: str, tag: int) -> int:
        tt = self.atd.tiles[t]
        g = len(self.ttype)
        self.ttype.append(t)
        self.size.append(tt.N)
        self.period.append(tt.n)
        self.edges.append([None] * tt.N)
        self.rep.append(None)
        self.dist.append(INF)
        self.solid.append(False)
        self.back.append(None)
        self.tag.append(tag)
        self.tried.append(0)
        self.stats.tiles += 1
        return g

    def __len__(self) -> int:
        """Number of live (representative) tiles."""
        return sum(1 for r in self.rep if r is None)

    def tiles(self) -> list[int]:
        return [g for g, r in enumerate(self.rep) if r is None]

    def find(self, g: int) -> Walker:
        """Representative of ``g`` and the rotation offset into its frame."""
        if self.rep[g] is None:
            return g, 0
        path = []
        off = 0
        while self.rep[g] is not None:
            h, o = self.rep[g]
            path.append((g, o))
            off += o
            g = h
        n = self.size[g]
        acc = off
        for x, o in path:
            self.rep[x] = (g, acc % n)
            acc -= o
        return g, off % n

    def resolve(self, w: Walker) -> Walker:
        g, i = w
        r, off = self.find(g)
        return r, (i + off) % self.size[r]

    def rotate(self, w: Walker, k: int) -> Walker:
        g, i = w
        return g, (i + k) % self.size[g]

    def known(self, w: Walker) -> Walker | None:
        """Neighbor walker across ``w`` if already generated."""
        g, i = self.resolve(w)
        e = self.edges[g][i]
        return None if e is None else self.resolve(e)

    def step(self, w: Walker) -> Walker:
        """Cross the edge ``w`` faces, generating the neighbor if needed.

        Returns the walker on the far side, facing back across the edge.
        """
        g, i = self.resolve(w)
        self.stats.moves += 1
        if self.edges[g][i] is None:
            t2, j = self.atd.connect(self.ttype[g], i)
            h = self._new_tile(t2, self.tag[g])
            self._connect((g, i), (h, j))
            self._drain()
            g, i = self.resolve(w)
        return self.resolve(self.edges[g][i])

    def type_of(self, g: int) -> str:
        return self.ttype[self.find(g)[0]]

    # ------------------------------------------------------------------
    # connections, valence checks and unification

    def _connect(self, a: Walker, b: Walker) -> None:
        g, i = a
        h, j = b
        if self.atd.connect(self.ttype[g], i) != self.atd.edge(self.ttype[h], j):
            raise SurfaceError(f"edge types do not match for {a} <-> {b}")
        self.edges[g][i] = (h, j)
        self.edges[h][j] = (g, i)
        self._queue.append(("v", g, i))
        self._queue.append(("v", g, i + 1))
        self._relax_pair(g, i, h, j)

    def _drain(self) -> None:
        if self._draining:
            return
        self._draining = True
        try:
            while self._queue:
                task = self._queue.popleft()
                if task[0] == "v":
                    self._valence_check(task[1], task[2])
                else:
                    self._unify(task[1], task[2])
        finally:
            self._draining = False
        if self._pending_replays and not self._replaying:
            self._run_pending_replays()

    def _valence_check(self, g: int, i: int) -> None:
        g, i = self.resolve((g, i))
        v = self.atd.vertex_valence(self.ttype[g], i)
        start = (g, i)
        # walk back around vertex i of g: inverse of "step, turn clockwise"
        first = start
        closed = False
        for _ in range(v + 1):
            prev = self.known(self.rotate(first, -1))
            if prev is None:
                break
            first = prev
            if first == start:
                closed = True
                break
        if closed:
            return
        chain = [first]
        while len(chain) <= v:
            nxt = self.known(chain[-1])
            if nxt is None:
                break
            nxt = self.rotate(nxt, 1)
            if nxt == chain[0]:
                if len(chain) != v:
                    raise SurfaceError(f"vertex closed with {len(chain)} tiles, expected {v}")
                return
            chain.append(nxt)
        if len(chain) > v:
            self._unify(chain[0], chain[v])
        elif len(chain) == v:
            a = chain[-1]
            b = self.rotate(chain[0], -1)
            if self.known(a) is None and self.known(b) is None:
                self._connect(a, b)

    def unify(self, w1: Walker, w2: Walker) -> None:
        """Record that walkers ``w1`` and ``w2`` denote the same position."""
        self._unify(w1, w2)
        self._drain()

    def _unify(self, w1: Walker, w2: Walker) -> None:
        g1, i1 = self.resolve(w1)
        g2, i2 = self.resolve(w2)
        n = self.size[g1]
        if g1 == g2:
            if (i1 - i2) % n:
                raise SurfaceError(f"tile {g1} identified with its own rotation")
            return
        if self.ttype[g1] != self.ttype[g2] or (i1 - i2) % self.period[g1]:
            raise TypeMismatch(f"cannot unify {w1} ({self.ttype[g1]}) with {w2} ({self.ttype[g2]})")
        if self.tag[g1] != self.tag[g2]:
            raise TypeMismatch("tiles from different roots cannot be unified")
        off = (i1 - i2) % n
        self.stats.unifications += 1

        d1, d2 = self.dist[g1], self.dist[g2]
        error = None
        if d2 < d1:
            if self.solid[g1]:
                p2 = self._path(g2)
                new = [(g1, (p2[0][1] + off) % n)] + p2[1:] if p2 else p2
                error = (self._path(g1), new)
            self.dist[g1] = d2
            self.back[g1] = None if self.back[g2] is None else (self.back[g2] + off) % n
        elif d1 < d2 and self.solid[g2]:
            p2 = self._path(g2)
            old = [(g1, (p2[0][1] + off) % n)] + p2[1:] if p2 else p2
            error = (old, self._path(g1))
        self.solid[g1] = self.solid[g1] or self.solid[g2]
        self.tried[g1] = min(self.tried[g1], self.tried[g2])

        self.rep[g2] = (g1, off)
        moved = self.edges[g2]
        self.edges[g2] = None
        self.parent_cache.pop(g2, None)
        self.parent_cache.pop(g1, None)
        for k, e in enumerate(moved):
            if e is None:
                continue
            h, j = self.resolve(e)
            k1 = (k + off) % n
            cur = self.edges[g1][k1]
            if cur is None:
                self.edges[g1][k1] = (h, j)
                if self.edges[h] is not None:
                    self.edges[h][j] = (g1, k1)
                self._queue.append(("v", g1, k1))
                self._queue.append(("v", g1, k1 + 1))
            elif self.resolve(cur) != (h, j):
                self._queue.append(("u", self.resolve(cur), (h, j)))
        if error is not None:
            self._distance_error(g1, *error)
        for e in self.edges[g1]:
            if e is not None:
                self.parent_cache.pop(self.resolve(e)[0], None)
        self._relax_from(g1)
        for e in list(self.edges[g1]):
            if e is not None:
                self._relax_from(self.resolve(e)[0])

    # ------------------------------------------------------------------
    # distances

    def _relax_pair(self, g: int, i: int, h: int, j: int) -> None:
        if self.dist[h] > self.dist[g] + 1:
            self._lower(h, self.dist[g] + 1, j)
            self._relax_from(h)
        elif self.dist[g] > self.dist[h] + 1:
            self._lower(g, self.dist[h] + 1, i)
            self._relax_from(g)

    def _relax_from(self, g: int) -> None:
        stack = [g]
        while stack:
            x = self.find(stack.pop())[0]
            dx = self.dist[x]
            if dx >= INF:
                continue
            for e in self.edges[x]:
                if e is None:
                    continue
                y, j = self.resolve(e)
                if self.dist[y] > dx + 1:
                    self._lower(y, dx + 1, j)
                    stack.append(y)

    def _lower(self, y: int, d: int, j: int) -> None:
        """Set ``dist[y] = d`` with back-direction ``j``."""
        if self.solid[y]:
            old = self._path(y)
            x, bx = self.resolve(self.edges[y][j])
            new = [(y, j)] + self._path(x)
            self._distance_error(y, old, new)
        self.dist[y] = d
        self.back[y] = j
        self.parent_cache.pop(y, None)
        for e in self.edges[y]:
            if e is not None:
                self.parent_cache.pop(self.resolve(e)[0], None)

    def _path(self, x: int) -> list[Walker]:
        """Departure walkers following saved back-directions to a root."""
        x = self.find(x)[0]
        out = []
        limit = self.dist[x]
        while self.dist[x] > 0 and self.back[x] is not None and len(out) <= limit:
            w = (x, self.back[x])
            out.append(w)
            nxt = self.known(w)
            if nxt is None:
                break
            x = nxt[0]
        return out

    def _distance_error(self, y: int, old: list[Walker], new: list[Walker]) -> None:
        self.distance_error = True
        self.stats.distance_errors += 1
        if self.use_shortcuts:
            sc = self._make_loop(old, new)
            if sc is not None:
                self.record_shortcut(sc)

    def _make_loop(self, old: list[Walker], new: list[Walker]) -> Shortcut | None:
        if not old or not new:
            return None

        def tiles(path):
            out = [self.resolve(w)[0] for w in path]
            last = self.known(path[-1])
            if last is not None:
                out.append(last[0])
            return out

        t_old = tiles(old)
        t_new = tiles(new)
        pos_old = {}
        for k, t in enumerate(t_old[1:], start=1):
            pos_old.setdefault(t, k)
        meet = None
        for b, t in enumerate(t_new[1:], start=1):
            if t in pos_old:
                meet = (pos_old[t], b)
                break
        if meet is None:
            return None
        a, b = meet
        if a >= len(old) + 1 or b >= len(new) + 1:
            return None
        departures = [self.resolve(w) for w in old[:a]]
        arrivals = [self.known(w) for w in new[:b]]
        if any(x is None for x in arrivals):
            return None
        for k in range(b - 1, -1, -1):
            departures.append(arrivals[k])
        start = departures[0]
        end_edge = self.resolve(new[0])[1]
        turns = []
        for prev, dep in zip(departures, departures[1:]):
            arr = self.known(prev)
            if arr is None or arr[0] != dep[0]:
                return None
            turns.append((arr[1] - dep[1]) % self.size[dep[0]])
        final = self.known(departures[-1])
        if final is None or final[0] != start[0]:
            return None
        t = self.ttype[start[0]]
        n = self.period[start[0]]
        base = start[1] - start[1] % n
        size = self.size[start[0]]
        return Shortcut(t, start[1] % n, tuple(turns), (end_edge - base) % size)

    def record_shortcut(self, sc: Shortcut) -> None:
        if len(sc) == 0:
            return
        store = self._store[sc.anchor_type]
        if sc in store.items:
            return
        self._serial += 1
        store.items[sc] = self._serial
        while len(store.items) > store.cap:
            store.items.popitem(last=False)
        self.stats.shortcuts += 1
        self._pending_replays.append(sc)

    def shortcuts(self, t: str | None = None) -> list[Shortcut]:
        if t is None:
            return [sc for s in self._store.values() for sc in s.items]
        return list(self._store[t].items)

    def _run_pending_replays(self) -> None:
        self._replaying = True
        try:
            while self._pending_replays:
                sc = self._pending_replays.pop(0)
                for g in self.tiles():
                    if self.solid[g] and self.ttype[g] == sc.anchor_type:
                        self._try_shortcut(g, sc)
        finally:
            self._replaying = False

    def try_shortcut(self, g: int, sc: Shortcut) -> None:
        was = self._replaying
        self._replaying = True
        try:
            self._try_shortcut(g, sc)
        finally:
            self._replaying = was

    def _try_shortcut(self, g: int, sc: Shortcut) -> None:
        g = self.find(g)[0]
        if self.ttype[g] != sc.anchor_type:
            raise ValueError("shortcut anchored at a different tile type")
        n = self.period[g]
        length = len(sc)
        for r in range(self.atd.tiles[sc.anchor_type].s):
            w = (g, sc.start + r * n)
            arrived = None
            for k in range(length):
                x, i = self.resolve(w)
                nb = self.known((x, i))
                if nb is None:
                    if self.dist[x] + (length - k) >= self.dist[self.find(g)[0]]:
                        break
                    nb = self.step((x, i))
                if k < length - 1:
                    w = (nb[0], nb[1] - sc.turns[k])
                else:
                    arrived = nb
            if arrived is None:
                continue
            home = self.resolve((g, sc.end + r * n))
            if arrived[0] != home[0]:
                self.unify(home, arrived)

    def get_delta(self, g: int) -> int:
        """Distance of ``g`` from its root, after replaying shortcuts; marks ``g`` solid."""
        g = self.find(g)[0]
        if self.use_shortcuts and not self._replaying:
            store = self._store[self.ttype[g]]
            newest = self._serial
            if self.tried[g] < newest and store.items:
                todo = [sc for sc, serial in store.items.items() if serial > self.tried[g]]
                self.tried[g] = newest
                self._replaying = True
                try:
                    for sc in todo:
                        self._try_shortcut(g, sc)
                finally:
                    self._replaying = False
                if self._pending_replays:
                    self._run_pending_replays()
                g = self.find(g)[0]
        self.solid[g] = True
        return self.dist[g]

    def check(self) -> None:
        if self.distance_error:
            raise DistanceErrorRestart()

    # ------------------------------------------------------------------
    # tree structure

    def parent_of(self, g: int) -> int:
        """Parent edge of ``g`` in the frame of its current representative."""
        g = self.find(g)[0]
        if g in self.parent_cache:
            return self.parent_cache[g]
        d = self.get_delta(g)
        if d == 0:
            raise RootHasNoParent(g)
        size = self.size[g]
        cands = []
        orig = g
        for k in range(size):
            h, _ = self.step((orig, k))
            if self.get_delta(h) == d - 1:
                cands.append(k)
        g, off = self.find(orig)
        if self.dist[g] != d:
            # the tile moved closer while its neighbors were generated
            return self.parent_of(g)
        cands = [(k + off) % size for k in cands]
        if not cands:
            raise SurfaceError(f"tile {g} at distance {d} has no closer neighbor")
        n = self.period[g]
        low = min(k % n for k in cands)
        best = [k for k in cands if k % n == low]
        if len(best) == 1:
            choice = best[0]
        else:
            choice = self._lex_parent(g, best)
        self.parent_cache[g] = choice
        return choice

    def _lex_parent(self, g: int, cands: list[int]) -> int:
        """Pick the candidate whose path to the root has the smallest turn sequence."""
        fronts = {k: self.step((g, k)) for k in cands}
        alive = sorted(cands)
        while len(alive) > 1:
            positions = {fronts[k] for k in alive}
            if len(positions) == 1:
                break
            turns = {}
            for k in alive:
                x, a = self.resolve(fronts[k])
                if self.get_delta(x) == 0:
                    turns[k] = -1
                    continue
                p = self.parent_of(x)
                turns[k] = (a - p) % self.size[x]
                fronts[k] = (x, p)
            low = min(turns.values())
            alive = [k for k in alive if turns[k] == low]
            if low < 0:
                break
            for k in alive:
                fronts[k] = self.step(fronts[k])
        return alive[0]

    def is_tree_edge(self, w: Walker) -> bool:
        x, k = self.resolve(w)
        if self.get_delta(x) > 0 and self.parent_of(x) == k:
            return True
        y, j = self.step((x, k))
        return self.get_delta(y) > 0 and self.parent_of(y) == j

    # ------------------------------------------------------------------
    # wall sides

    def _hug(self, w: Walker, turn: int, target: Walker, skip: str, budget: list[int]) -> tuple[Walker, bool]:
        """Move along the wall keeping it on one side; ``turn`` is +1 (cw) or -1 (ccw)."""
        w = self.rotate(self.resolve(w), turn)
        while True:
            budget[0] += 1
            if budget[0] > self.step_limit:
                raise StepLimitExceeded()
            if self.is_tree_edge(w):
                w = self.rotate(self.step(w), turn)
                continue
            w = self.resolve(w)
            if w == self.resolve(target):
                return w, True
            if self.side_cache.get(w) == skip:
                w = self.rotate(self.step(w), turn)
                continue
            return w, False

    def get_side(self, w: Walker, use_cache: bool = True) -> str:
        """Side (``"L"`` or ``"R"``) of the non-tree edge faced by ``w``."""
        w = self.resolve(w)
        if use_cache and w in self.side_cache:
            return self.side_cache[w]
        target = self.step(w)
        walkers = {RIGHT: w, LEFT: w}
        visited: dict[str, list[Walker]] = {RIGHT: [w], LEFT: [w]}
        budget = [0]
        result = None
        while result is None:
            dr = self.get_delta(self.resolve(walkers[RIGHT])[0])
            dl = self.get_delta(self.resolve(walkers[LEFT])[0])
            side = RIGHT if dr <= dl else LEFT
            turn = 1 if side == RIGHT else -1
            skip = side if use_cache else "-"
            nxt, hit = self._hug(walkers[side], turn, target, skip, budget)
            walkers[side] = nxt
            visited[side].append(nxt)
            if hit:
                result = side
        self.stats.side_moves += budget[0]
        if use_cache:
            for side in (RIGHT, LEFT):
                self._cache_visits(visited[side], side)
        return result

    def _cache_visits(self, visited: list[Walker], first_side: str) -> None:
        other = LEFT if first_side == RIGHT else RIGHT
        seen = set()
        for v in visited:
            v = self.resolve(v)
            opp = self.known(v)
            if opp is not None and opp in seen:
                self.side_cache[opp] = first_side
                self.side_cache[v] = other
            seen.add(v)

    def clear_caches(self) -> None:
        self.side_cache.clear()
        self.parent_cache.clear()
        self.distance_error = False

    def reset_distance_error(self) -> None:
        self.distance_error = False

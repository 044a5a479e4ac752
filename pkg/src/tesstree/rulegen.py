"""Learning a tree structure from an ATD by exploring a lazily generated surface.

Tiles are classified into states by per-type decision trees that ask about
neighbors (parent, child, or non-tree edge with distance difference and
side).  Candidate structures are checked for consistency of their child
rows and then by walking both sides of every branch boundary until a
repeated configuration proves the boundary periodic.
"""

from __future__ import annotations

import sys
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .atd import Atd, SphericalUnsupported, classify_geometry, Geometry, validate
from .grts import Grts
from .surface import LEFT, RIGHT, Restart, StepLimitExceeded, Surface, Walker


class IterationCapExceeded(RuntimeError):
    pass


class InconsistentAtd(ValueError):
    def __init__(self, failures):
        self.failures = failures
        super().__init__("; ".join(str(f) for f in failures))


class EdgeClass(Enum):
    """What a classifier query observes across one edge."""

    PARENT = "P"
    CHILD = "C"
    CLOSER_L = "-L"
    CLOSER_R = "-R"
    LEVEL_L = "0L"
    LEVEL_R = "0R"
    FARTHER_L = "+L"
    FARTHER_R = "+R"

    @property
    def side(self) -> str | None:
        return self.value[1] if len(self.value) == 2 else None

    @staticmethod
    def nontree(dd: int, side: str) -> "EdgeClass":
        sign = "-" if dd < 0 else ("0" if dd == 0 else "+")
        return EdgeClass(sign + side)


Query = tuple[int, int]


@dataclass(eq=False)
class _Node:
    query: Query | None = None
    expect: EdgeClass | None = None
    rest: tuple = ()
    children: dict = field(default_factory=dict)
    state: int | None = None
    key: tuple | None = None


@dataclass
class _Eval:
    state: int
    key: tuple
    nodes: list  # internal nodes visited, in order
    answers: list  # answers given at those nodes
    ref: Walker  # reference walker of the tile
    children: dict  # answer index (1-based) -> child reference walker


class Classifier:
    """Decision trees mapping surface tiles to state ids."""

    def __init__(self, surface: Surface):
        self.s = surface
        self.roots: dict[tuple, _Node] = {}
        self.leaf_of: dict[int, _Node] = {}
        self.next_id = 0
        self.cache: dict[int, _Eval] = {}
        self.by_state: dict[int, set[int]] = {}

    def reset(self) -> None:
        self.roots.clear()
        self.leaf_of.clear()
        self.clear_cache()

    def clear_cache(self) -> None:
        self.cache.clear()
        self.by_state.clear()

    def key_of(self, g: int) -> tuple[tuple, Walker]:
        s = self.s
        g = s.find(g)[0]
        t = s.ttype[g]
        if s.get_delta(g) == 0:
            return (t, None), (g, 0)
        p = s.parent_of(g)
        return (t, p % s.period[g]), (g, p)

    def _fresh_root(self, key: tuple) -> _Node:
        N = self.s.atd.tiles[key[0]].N
        plan = tuple(((0, k), None) for k in range(N))
        node = _Node(query=plan[0][0], expect=None, rest=plan[1:], key=key)
        self.roots[key] = node
        return node

    def _descend(self, node: _Node, a: EdgeClass) -> _Node:
        nxt = node.children.get(a)
        if nxt is not None:
            return nxt
        if node.rest and (node.expect is None or node.expect == a):
            (q, e), rest = node.rest[0], node.rest[1:]
            nxt = _Node(query=q, expect=e, rest=rest, key=node.key)
        else:
            nxt = _Node(key=node.key)
        node.children[a] = nxt
        return nxt

    def answer(self, ref: Walker, j: int, is_root: bool) -> tuple[EdgeClass, Walker | None]:
        s = self.s
        x, r = s.resolve(ref)
        if j % s.size[x] == 0 and not is_root:
            return EdgeClass.PARENT, None
        w = (x, (r + j) % s.size[x])
        y, b = s.step(w)
        dx = s.get_delta(x)
        dy = s.get_delta(y)
        if dy == dx + 1 and s.parent_of(y) == b:
            return EdgeClass.CHILD, (y, b)
        if dx > 0 and s.parent_of(x) == s.resolve(w)[1]:
            # a second edge to the parent, reached through a different rotation
            return EdgeClass.PARENT, None
        return EdgeClass.nontree(dy - dx, s.get_side(w)), None

    def evaluate(self, g: int) -> _Eval:
        s = self.s
        g = s.find(g)[0]
        hit = self.cache.get(g)
        if hit is not None:
            return hit
        key, ref = self.key_of(g)
        is_root = key[1] is None
        node = self.roots.get(key) or self._fresh_root(key)
        refs: list[Walker | None] = [ref]
        nodes, answers, children = [], [], {}
        while node.query is not None:
            i, j = node.query
            base = refs[i]
            if base is None:
                raise RuntimeError("classifier query refers to a non-child answer")
            a, cref = self.answer(base, j, is_root and i == 0)
            refs.append(cref)
            if cref is not None:
                children[len(refs) - 1] = cref
            nodes.append(node)
            answers.append(a)
            node = self._descend(node, a)
        if node.state is None:
            node.state = self.next_id
            self.next_id += 1
            self.leaf_of[node.state] = node
        g = s.find(g)[0]
        ev = _Eval(node.state, key, nodes, answers, s.resolve(ref), children)
        self.cache[g] = ev
        self.by_state.setdefault(node.state, set()).add(g)
        return ev

    def classify(self, g: int) -> int:
        return self.evaluate(g).state

    def row(self, g: int) -> list[EdgeClass]:
        ev = self.evaluate(g)
        N = self.s.size[self.s.find(g)[0]]
        return ev.answers[:N]

    def child_ref(self, g: int, k: int) -> Walker:
        """Reference walker of the child found by the ``k``-th rotation query."""
        return self.evaluate(g).children[k + 1]

    def graft(self, parent: int, k: int, v1: int, v2: int) -> bool:
        """Split the state of ``parent`` using where children ``v1`` and ``v2`` first differ."""
        e0 = self.evaluate(parent)
        e1, e2 = self.evaluate(v1), self.evaluate(v2)
        if e1.key != e2.key:
            return False
        m = 0
        while m < len(e1.answers) and m < len(e2.answers) and e1.answers[m] == e2.answers[m]:
            m += 1
        if m >= len(e1.answers) or m >= len(e2.answers):
            return False
        base = len(e0.nodes)
        kv = k + 1

        def tr(idx: int) -> int:
            return kv if idx == 0 else base + idx

        plan = []
        for n in range(m + 1):
            i, j = e1.nodes[n].query
            plan.append(((tr(i), j), e1.answers[n] if n < m else None))
        leaf = self.leaf_of.pop(e0.state)
        leaf.state = None
        leaf.query, leaf.expect = plan[0]
        leaf.rest = tuple(plan[1:])
        for g in self.by_state.pop(e0.state, ()):
            self.cache.pop(g, None)
        return True


# ----------------------------------------------------------------------
# candidates and liveness


@dataclass
class BranchInfo:
    live: set[int]
    dead_size: dict[int, int]


def compute_liveness(g: Grts) -> BranchInfo:
    """States whose subtree is infinite are live; dead ones get their subtree size."""
    n = len(g)
    kids = [[x for _, x in g.children(q)] for q in g.states]
    # live = can reach a cycle in the child graph
    on_cycle_or_reach = set()
    color = [0] * n
    order = []

    def dfs(q):
        stack = [(q, iter(kids[q]))]
        color[q] = 1
        while stack:
            u, it = stack[-1]
            for v in it:
                if color[v] == 0:
                    color[v] = 1
                    stack.append((v, iter(kids[v])))
                    break
            else:
                color[u] = 2
                order.append(u)
                stack.pop()

    for q in range(n):
        if color[q] == 0:
            dfs(q)
    # reverse graph SCCs via Kosaraju
    rev = [[] for _ in range(n)]
    for u in range(n):
        for v in kids[u]:
            rev[v].append(u)
    comp = [-1] * n
    c = 0
    for u in reversed(order):
        if comp[u] != -1:
            continue
        st = [u]
        comp[u] = c
        while st:
            x = st.pop()
            for y in rev[x]:
                if comp[y] == -1:
                    comp[y] = c
                    st.append(y)
        c += 1
    size = [0] * c
    for u in range(n):
        size[comp[u]] += 1
    cyclic = {u for u in range(n) if size[comp[u]] > 1 or u in kids[u]}
    live = set(cyclic)
    changed = True
    while changed:
        changed = False
        for u in range(n):
            if u not in live and any(v in live for v in kids[u]):
                live.add(u)
                changed = True
    dead_size: dict[int, int] = {}

    def sz(u):
        if u in dead_size:
            return dead_size[u]
        dead_size[u] = 1 + sum(sz(v) for v in kids[u])
        return dead_size[u]

    for u in range(n):
        if u not in live:
            sz(u)
    return BranchInfo(live, dead_size)


@dataclass
class LearnConfig:
    origins: str = "all"
    step_limit: int = 10_000
    max_iterations: int = 9_999
    shortcuts: bool = True
    reset_base: int = 16
    time_limit: float | None = None


@dataclass
class LearnStats:
    iterations: int = 0
    restarts: int = 0
    resets: int = 0
    grafts: int = 0
    witnesses: int = 0
    candidates: int = 0
    states_before_merge: int = 0
    states: int = 0
    tiles: int = 0
    moves: int = 0
    unifications: int = 0
    distance_errors: int = 0
    shortcuts: int = 0
    seconds: float = 0.0

    def as_lines(self) -> list[str]:
        return [f"{k}={v}" for k, v in self.__dict__.items()]


class _Witness(Exception):
    def __init__(self, tile: int, k: int):
        self.tile = tile
        self.k = k


class _Accept(Exception):
    pass


@dataclass
class _Candidate:
    states: list[int]
    rows: dict[int, list]  # state -> relative row of "P" / "L" / "R" / child state id
    key: dict[int, tuple]
    rep: dict[int, int]


class Learner:
    def __init__(self, atd: Atd, config: LearnConfig | None = None):
        failures = validate(atd)
        if failures:
            raise InconsistentAtd(failures)
        if classify_geometry(atd).kind is Geometry.SPHERICAL:
            raise SphericalUnsupported(atd.name or "spherical tessellation")
        self.atd = atd
        self.cfg = config or LearnConfig()
        self.s = Surface(atd, origins=self.cfg.origins, step_limit=self.cfg.step_limit, shortcuts=self.cfg.shortcuts)
        self.cls = Classifier(self.s)
        self.stats = LearnStats()
        self.agenda: list[int] = list(self.s.roots)

    # ------------------------------------------------------------------

    def _ref_edge(self, x: int) -> int:
        s = self.s
        return 0 if s.get_delta(x) == 0 else s.parent_of(x)

    def _rel(self, w: Walker) -> tuple[int, int]:
        x, e = self.s.resolve(w)
        return x, (e - self._ref_edge(x)) % self.s.size[x]

    def _close(self):
        """Representatives per state, child-state rows, and inconsistencies found."""
        s, cls = self.s, self.cls
        rep: dict[int, int] = {}
        rows: dict[int, list] = {}
        incons = []
        queued_states: set[int] = set()
        queue = deque(self.agenda)
        seen_tiles: set[int] = set()
        while queue:
            g = s.find(queue.popleft())[0]
            if g in seen_tiles:
                continue
            seen_tiles.add(g)
            q = cls.classify(g)
            row = cls.row(g)
            out = []
            kids = []
            for k, a in enumerate(row):
                if a is EdgeClass.CHILD:
                    v = cls.child_ref(g, k)[0]
                    cq = cls.classify(v)
                    out.append(cq)
                    kids.append((v, cq))
                elif a is EdgeClass.PARENT:
                    out.append("P")
                else:
                    out.append(a.side)
            g = s.find(g)[0]
            if q not in rep:
                rep[q] = g
                rows[q] = out
                for v, cq in kids:
                    if cq not in rep and cq not in queued_states:
                        queued_states.add(cq)
                        queue.append(v)
            elif rows[q] != out:
                k = next(k for k in range(len(out)) if rows[q][k] != out[k])
                incons.append((rep[q], g, k))
        return rep, rows, incons

    def _resolve_inconsistencies(self, incons) -> None:
        done = set()
        for g1, g2, k in incons:
            q = self.cls.classify(g1)
            if q in done or self.cls.classify(g2) != q:
                continue
            v1 = self.cls.child_ref(g1, k)[0]
            v2 = self.cls.child_ref(g2, k)[0]
            if self.cls.graft(g1, k, v1, v2):
                done.add(q)
                self.stats.grafts += 1
        if not done:
            raise RuntimeError("unresolvable inconsistency between classified tiles")

    # ------------------------------------------------------------------
    # branch examination

    def _state(self, x: int, cand: _Candidate) -> int:
        q = self.cls.classify(x)
        if q not in cand.rows:
            raise _Witness(self.s.find(x)[0], -1)
        return q

    def _label(self, w: Walker, cand: _Candidate):
        x, k = self._rel(w)
        return cand.rows[self._state(x, cand)][k]

    def _hug(self, w: Walker, turn: int, cand: _Candidate, budget: list[int]) -> tuple[Walker, str]:
        s = self.s
        w = s.rotate(s.resolve(w), turn)
        while True:
            budget[0] += 1
            if budget[0] > self.cfg.step_limit:
                raise StepLimitExceeded()
            x, k = self._rel(w)
            q = self._state(x, cand)
            lab = cand.rows[q][k]
            if lab == "P":
                w = s.rotate(s.step(w), turn)
            elif isinstance(lab, int):
                y = s.step(w)
                if self.cls.classify(y[0]) != lab:
                    raise _Witness(s.find(x)[0], k)
                w = s.rotate(y, turn)
            else:
                return s.resolve(w), lab

    def _chain(self, x: int, cand: _Candidate, live: set[int]) -> tuple:
        s = self.s
        out = []
        while True:
            q = self._state(x, cand)
            if q in live or s.get_delta(x) == 0:
                return tuple(out)
            y, b = s.step((x, s.parent_of(x)))
            y, rel = self._rel((y, b))
            out.append((self._state(y, cand), rel))
            x = y

    def _key(self, w: Walker, cand: _Candidate, live: set[int]) -> tuple:
        x, k = self._rel(w)
        return (self._state(x, cand), k, self._chain(x, cand, live))

    def _walk_side(self, w, lab, stack, push, turn, cand, budget):
        s = self.s
        while True:
            if lab == push:
                stack.append(w)
            elif stack:
                top = stack.pop()
                if s.known(w) != s.resolve(top):
                    raise Restart()
            else:
                return w, lab
            w, lab = self._hug(w, turn, cand, budget)

    def examine_branch(self, cand: _Candidate, live: set[int], memo: set, q: int, i1: int) -> None:
        s = self.s
        t = cand.rep[q]
        ref = self._ref_edge(t)
        budget = [0]
        base = (t, (ref + i1) % s.size[t])
        wr, lr = self._hug(base, 1, cand, budget)
        wl, ll = self._hug(s.rotate(base, 1), -1, cand, budget)
        sr: list[Walker] = []
        sl: list[Walker] = []
        while True:
            wr, lr = self._walk_side(wr, lr, sr, RIGHT, 1, cand, budget)
            wl, ll = self._walk_side(wl, ll, sl, LEFT, -1, cand, budget)
            if s.known(wr) != s.resolve(wl):
                raise Restart()
            key = (self._key(wr, cand, live), self._key(wl, cand, live))
            if key in memo:
                return
            memo.add(key)
            wr, lr = self._hug(wr, 1, cand, budget)
            wl, ll = self._hug(wl, -1, cand, budget)

    # ------------------------------------------------------------------

    def _reset(self) -> None:
        self.agenda = list(self.s.roots)
        self.cls.reset()
        self.stats.resets += 1

    def learn(self) -> Grts:
        if sys.getrecursionlimit() < 20_000:
            sys.setrecursionlimit(20_000)
        start = time.perf_counter()
        cfg = self.cfg
        it = 0
        next_reset = cfg.reset_base
        while True:
            it += 1
            if it > cfg.max_iterations:
                raise IterationCapExceeded(f"no valid structure after {cfg.max_iterations} iterations")
            if cfg.time_limit is not None and time.perf_counter() - start > cfg.time_limit:
                raise IterationCapExceeded(f"time limit of {cfg.time_limit}s exceeded")
            self.stats.iterations = it
            if next_reset and it == next_reset:
                next_reset *= 2
                self._reset()
            try:
                result = self._iteration()
                self.s.check()
            except Restart:
                self.stats.restarts += 1
                self.s.clear_caches()
                self.cls.clear_cache()
                continue
            if result is not None:
                self._finish_stats(start, result)
                return result

    def _iteration(self) -> Grts | None:
        rep, rows, incons = self._close()
        self.s.check()
        if incons:
            self._resolve_inconsistencies(incons)
            return None
        cand = _Candidate(sorted(rep), rows, {q: self.cls.evaluate(rep[q]).key for q in rep}, rep)
        self.stats.candidates += 1
        raw = self._to_grts(cand)
        live = compute_liveness(raw).live
        live = {cand.states[i] for i in live}
        memo: set = set()
        witnesses: dict[tuple, int] = {}
        for q in cand.states:
            row = rows[q]
            kids = [k for k, x in enumerate(row) if isinstance(x, int) and x in live]
            if cand.key[q][1] is not None:
                # the gap containing the parent edge belongs to the parent's branch
                kids = kids[:-1]
            for i1 in kids:
                try:
                    self.examine_branch(cand, live, memo, q, i1)
                except _Witness as w:
                    witnesses.setdefault((self.cls.classify(w.tile), w.k), w.tile)
        if witnesses:
            self.stats.witnesses += len(witnesses)
            self.agenda.extend(witnesses.values())
            return None
        self.stats.states_before_merge = len(raw)
        return canonical_relabel(minimize(raw))

    def _to_grts(self, cand: _Candidate) -> Grts:
        index = {q: k for k, q in enumerate(cand.states)}
        tile_of, parent_edge, trans = [], [], []
        for q in cand.states:
            t, res = cand.key[q]
            N = self.atd.tiles[t].N
            off = 0 if res is None else res
            row = [None] * N
            for k, x in enumerate(cand.rows[q]):
                row[(off + k) % N] = index[x] if isinstance(x, int) else x
            tile_of.append(t)
            parent_edge.append(res)
            trans.append(row)
        return Grts(tile_of, parent_edge, trans, name=self.atd.name)

    def _finish_stats(self, start: float, g: Grts) -> None:
        st = self.stats
        st.states = len(g)
        st.moves = self.s.stats.moves
        st.seconds = round(time.perf_counter() - start, 4)
        st.tiles = len(self.s)
        st.unifications = self.s.stats.unifications
        st.distance_errors = self.s.stats.distance_errors
        st.shortcuts = self.s.stats.shortcuts


# ----------------------------------------------------------------------
# post-processing


def minimize(g: Grts) -> Grts:
    """Merge states that generate identical subtrees (partition refinement)."""
    block = {q: (g.tile_of[q], g.parent_edge[q], tuple(x if not isinstance(x, int) else "C" for x in g.trans[q])) for q in g.states}
    while True:
        ids: dict = {}
        for q in g.states:
            ids.setdefault(block[q], len(ids))
        cls = {q: ids[block[q]] for q in g.states}
        sig = {
            q: (cls[q], tuple(cls[x] if isinstance(x, int) else x for x in g.trans[q])) for q in g.states
        }
        ids2: dict = {}
        for q in g.states:
            ids2.setdefault(sig[q], len(ids2))
        if len(ids2) == len(ids):
            break
        block = sig
    rep: dict[int, int] = {}
    for q in g.states:
        rep.setdefault(cls[q], q)
    order = sorted(rep)
    new = {c: k for k, c in enumerate(order)}
    tile_of = [g.tile_of[rep[c]] for c in order]
    parent = [g.parent_edge[rep[c]] for c in order]
    trans = [[new[cls[x]] if isinstance(x, int) else x for x in g.trans[rep[c]]] for c in order]
    return Grts(tile_of, parent, trans, g.name, g.atd_ref)


def canonical_relabel(g: Grts) -> Grts:
    """Renumber states by depth-first discovery: roots first, children in edge order."""
    order: list[int] = []
    seen: set[int] = set()

    def visit(q: int) -> None:
        stack = [q]
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            order.append(u)
            for _, x in reversed(g.children(u)):
                if x not in seen:
                    stack.append(x)

    for r in g.roots:
        visit(r)
    for q in g.states:
        if q not in seen:
            visit(q)
    new = {q: k for k, q in enumerate(order)}
    return Grts(
        [g.tile_of[q] for q in order],
        [g.parent_edge[q] for q in order],
        [[new[x] if isinstance(x, int) else x for x in g.trans[q]] for q in order],
        g.name,
        g.atd_ref,
    )


def learn(atd: Atd, config: LearnConfig | None = None) -> tuple[Grts, LearnStats]:
    learner = Learner(atd, config)
    g = learner.learn()
    return g, learner.stats

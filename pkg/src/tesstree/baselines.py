"""Reference generators used to check tree structures.

``bfs_generate`` builds a ball by plain breadth-first expansion of the
surface (no tree structure involved).  ``numeric_generate`` places regular
tiles with floating point isometries and identifies tiles by distance,
which is exactly where floating point eventually breaks down.
"""

from __future__ import annotations

import math

import numpy as np

from .atd import Atd, Geometry, classify_geometry
from .grts import TileGraph
from .surface import Surface

SAME_TILE = 1e-3
DISTINCT_TILE = 1e-2


class TileCapExceeded(RuntimeError):
    pass


class PrecisionError(ArithmeticError):
    pass


class UnsupportedTessellation(ValueError):
    pass


def bfs_generate(atd: Atd, radius: int, root_type: str | None = None, tile_cap: int = 1_000_000) -> TileGraph:
    """Ball of ``radius`` around a root tile, generated without any tree structure.

    One extra layer is expanded so that every vertex cycle touching the ball
    is closed before the snapshot is taken.
    """
    root_type = root_type or atd.order[0]
    s = Surface(atd, root_type=root_type, shortcuts=False)
    root = s.roots[0]
    layer = [root]
    seen = {root}
    for d in range(radius + 1):
        nxt = []
        for g in layer:
            g = s.find(g)[0]
            for k in range(s.size[g]):
                h, _ = s.step((g, k))
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
            if len(s.dist) > tile_cap:
                raise TileCapExceeded(f"more than {tile_cap} tiles generated")
        layer = nxt
    graph = TileGraph(atd)
    ids: dict[int, int] = {}
    for g in s.tiles():
        if s.dist[g] <= radius + 1:
            parent = s.parent_of(g) if 0 < s.dist[g] <= radius else None
            ids[g] = graph.add(s.ttype[g], s.dist[g], parent)
    graph.root = ids[s.find(root)[0]]
    for g, x in ids.items():
        for k in range(s.size[g]):
            e = s.known((g, k))
            if e is not None and e[0] in ids:
                graph.edges[x][k] = (ids[e[0]], e[1])
    return graph


# ----------------------------------------------------------------------
# numeric placement


def _rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


class Isometry:
    """Helpers for 3x3 isometries of the hyperbolic plane (hyperboloid model) or the Euclidean plane."""

    def __init__(self, geometry: Geometry, p: int, q: int):
        self.geometry = geometry
        self.p = p
        self.alpha = 2 * math.pi / p
        if geometry is Geometry.HYPERBOLIC:
            inr = math.acosh(math.cos(math.pi / q) / math.sin(math.pi / p))
            d = 2 * inr
            self.T = np.array([[math.cosh(d), 0.0, math.sinh(d)], [0.0, 1.0, 0.0], [math.sinh(d), 0.0, math.cosh(d)]])
        else:
            d = 1.0
            self.T = np.array([[1.0, 0.0, d], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        self.step_len = d
        self.origin = np.array([0.0, 0.0, 1.0])
        self.J = np.diag([1.0, 1.0, -1.0])

    def edge(self, k: int) -> np.ndarray:
        """Move across edge ``k`` (clockwise numbering); the new frame faces back on edge 0."""
        return _rot(-k * self.alpha) @ self.T @ _rot(math.pi)

    def fix(self, M: np.ndarray) -> np.ndarray:
        """Re-orthonormalize to limit drift."""
        if self.geometry is not Geometry.HYPERBOLIC:
            R = M[:2, :2]
            u, _, vt = np.linalg.svd(R)
            out = M.copy()
            out[:2, :2] = u @ vt
            out[2] = [0.0, 0.0, 1.0]
            return out
        J = self.J
        cols = [M[:, 2].copy(), M[:, 0].copy(), M[:, 1].copy()]

        def ip(a, b):
            return a @ J @ b

        def norm(v, sign):
            sq = sign * ip(v, v)
            if not sq > 0:
                raise PrecisionError("isometry lost its shape to rounding")
            return v / math.sqrt(sq)

        t = norm(cols[0], -1)
        x = norm(cols[1] + ip(cols[1], t) * t, 1)
        y = norm(cols[2] + ip(cols[2], t) * t - ip(cols[2], x) * x, 1)
        return np.column_stack([x, y, t])

    def inverse(self, M: np.ndarray) -> np.ndarray:
        if self.geometry is Geometry.HYPERBOLIC:
            return self.J @ M.T @ self.J
        return np.linalg.inv(M)

    def distances(self, point: np.ndarray, points: np.ndarray) -> np.ndarray:
        if self.geometry is Geometry.HYPERBOLIC:
            c = points[:, 2] * point[2] - points[:, 0] * point[0] - points[:, 1] * point[1]
            return np.arccosh(np.maximum(c, 1.0))
        return np.hypot(points[:, 0] - point[0], points[:, 1] - point[1])

    def distance(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(self.distances(a, b[None, :])[0])

    def rotation_index(self, A: np.ndarray) -> int:
        theta = math.atan2(A[1, 0], A[0, 0])
        return round(-theta / self.alpha) % self.p


def _regular_params(atd: Atd) -> tuple[Geometry, int, int]:
    pq = atd.is_regular()
    if pq is None:
        raise UnsupportedTessellation("numeric generation supports plain regular tilings only")
    kind = classify_geometry(atd).kind
    if kind is Geometry.SPHERICAL:
        raise UnsupportedTessellation("spherical tilings are not supported")
    return kind, pq[0], pq[1]


def precision_probe(atd: Atd, radius: int) -> float:
    """Walk ``radius`` tiles outward, circle one vertex, and measure how far the loop misses.

    Exact arithmetic returns to the same tile; the returned value is the
    floating point discrepancy.
    """
    kind, p, q = _regular_params(atd)
    iso = Isometry(kind, p, q)
    M = np.eye(3)
    try:
        for _ in range(radius):
            M = iso.fix(M @ iso.edge(p // 2))
        start = M @ iso.origin
        W = M
        for _ in range(q):
            # cross edge 0 and turn to the next edge around the shared vertex
            W = iso.fix(W @ iso.edge(0) @ _rot(-iso.alpha))
    except PrecisionError:
        return math.inf
    miss = iso.distance(start, W @ iso.origin)
    return miss if math.isfinite(miss) else math.inf


def numeric_generate(atd: Atd, radius: int, tile_cap: int = 200_000) -> TileGraph:
    """Ball of ``radius`` around the origin tile, with tiles identified numerically."""
    kind, p, q = _regular_params(atd)
    miss = precision_probe(atd, radius)
    if miss > SAME_TILE:
        raise PrecisionError(f"loop around a vertex at radius {radius} misses by {miss:.3g}")
    iso = Isometry(kind, p, q)
    (t,) = atd.tiles
    graph = TileGraph(atd)
    frames = [np.eye(3)]
    centers = [iso.origin.copy()]
    graph.root = graph.add(t, 0)
    layer = [0]
    for d in range(radius + 1):
        nxt = []
        for g in layer:
            for k in range(p):
                if graph.edges[g][k] is not None:
                    continue
                M = iso.fix(frames[g] @ iso.edge(k))
                c = M @ iso.origin
                dist = iso.distances(c, np.array(centers))
                j = int(np.argmin(dist))
                best = float(dist[j])
                if SAME_TILE < best <= DISTINCT_TILE:
                    raise PrecisionError(f"cannot tell whether two tiles coincide (distance {best:.3g})")
                if best <= SAME_TILE:
                    h = j
                    arrive = iso.rotation_index(iso.inverse(frames[h]) @ M)
                else:
                    if len(frames) >= tile_cap:
                        raise TileCapExceeded(f"more than {tile_cap} tiles placed")
                    h = graph.add(t, d + 1)
                    frames.append(M)
                    centers.append(c)
                    arrive = 0
                    nxt.append(h)
                graph.edges[g][k] = (h, arrive)
                graph.edges[h][arrive] = (g, k)
        layer = nxt
    return graph

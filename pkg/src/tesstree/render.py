"""Drawing generated balls: SVG text and matplotlib report figures.

Regular tilings are drawn with true geometry (Poincare disk or plane).
Other tessellations get a schematic radial layout: tiles sit on rings by
depth and are drawn as small regular polygons.
"""

from __future__ import annotations

import math
from collections import deque
from pathlib import Path

import numpy as np

from .atd import Geometry, classify_geometry
from .baselines import Isometry, _rot
from .grts import GenGraph

Polygon = list[tuple[float, float]]


def _geometric_layout(graph: GenGraph, tiles: list[int]) -> dict[int, Polygon] | None:
    pq = graph.atd.is_regular()
    kind = classify_geometry(graph.atd).kind
    if pq is None or kind is Geometry.SPHERICAL:
        return None
    p, q = pq
    iso = Isometry(kind, p, q)
    if kind is Geometry.HYPERBOLIC:
        circ = math.acosh(1 / (math.tan(math.pi / p) * math.tan(math.pi / q)))
        corner = lambda th: np.array([math.sinh(circ) * math.cos(th), math.sinh(circ) * math.sin(th), math.cosh(circ)])
    else:
        circ = (iso.step_len / 2) / math.cos(math.pi / p)
        corner = lambda th: np.array([circ * math.cos(th), circ * math.sin(th), 1.0])
    corners = [corner(-(i - 0.5) * iso.alpha) for i in range(p)]
    keep = set(tiles)
    frames = {graph.root: np.eye(3)}
    todo = deque([graph.root])
    while todo:
        x = todo.popleft()
        for k, e in enumerate(graph.edges[x]):
            if e is None or e[0] in frames or e[0] not in keep:
                continue
            y, j = e
            frames[y] = frames[x] @ iso.edge(k) @ _rot(j * iso.alpha)
            todo.append(y)
    out = {}
    for x, M in frames.items():
        pts = []
        for c in corners:
            v = M @ c
            if kind is Geometry.HYPERBOLIC:
                pts.append((v[0] / (1 + v[2]), v[1] / (1 + v[2])))
            else:
                pts.append((v[0], v[1]))
        out[x] = pts
    return out


def _radial_layout(graph: GenGraph, tiles: list[int]) -> dict[int, Polygon]:
    rings: dict[int, list[int]] = {}
    for x in tiles:
        rings.setdefault(graph.depth[x], []).append(x)
    out = {}
    low = min(rings)
    for d, members in rings.items():
        r = d - low
        for k, x in enumerate(members):
            th = 2 * math.pi * k / len(members)
            cx, cy = r * math.cos(th), r * math.sin(th)
            size = 0.3 if r else 0.4
            n = graph.size(x)
            out[x] = [(cx + size * math.cos(-2 * math.pi * i / n), cy + size * math.sin(-2 * math.pi * i / n)) for i in range(n)]
    return out


def layout(graph: GenGraph, tiles: list[int] | None = None) -> dict[int, Polygon]:
    tiles = list(range(len(graph))) if tiles is None else tiles
    return _geometric_layout(graph, tiles) or _radial_layout(graph, tiles)


def to_svg(graph: GenGraph, tiles: list[int] | None = None, labels: bool = True, size: int = 800) -> str:
    """One ``<polygon>`` per tile; optional ``state/depth`` labels."""
    polys = layout(graph, tiles)
    xs = [p[0] for poly in polys.values() for p in poly]
    ys = [p[1] for poly in polys.values() for p in poly]
    lo_x, hi_x, lo_y, hi_y = min(xs), max(xs), min(ys), max(ys)
    span = max(hi_x - lo_x, hi_y - lo_y) or 1.0
    scale = (size - 20) / span

    def tr(pt):
        return 10 + (pt[0] - lo_x) * scale, 10 + (hi_y - pt[1]) * scale

    types = graph.atd.order
    palette = ["#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">']
    for x in sorted(polys):
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in map(tr, polys[x]))
        fill = palette[types.index(graph.ttype[x]) % len(palette)]
        out.append(f'<polygon points="{pts}" fill="{fill}" stroke="#333" stroke-width="0.5"/>')
        if labels:
            cx = sum(tr(p)[0] for p in polys[x]) / len(polys[x])
            cy = sum(tr(p)[1] for p in polys[x]) / len(polys[x])
            out.append(
                f'<text x="{cx:.2f}" y="{cy:.2f}" font-size="6" text-anchor="middle">'
                f"{graph.state[x]}/{graph.depth[x]}</text>"
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_coordination(seqs: dict[str, list[int]], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for name, seq in seqs.items():
        ax.plot(range(len(seq)), seq, marker="o", label=name)
    ax.set_yscale("log")
    ax.set_xlabel("distance from root")
    ax.set_ylabel("tiles")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_tiling(graph: GenGraph, path: Path, tiles: list[int] | None = None) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.collections import PolyCollection

    polys = layout(graph, tiles)
    keys = sorted(polys)
    fig, ax = plt.subplots(figsize=(6, 6))
    nstates = len(graph.grts)
    coll = PolyCollection(
        [polys[x] for x in keys], array=np.array([graph.state[x] for x in keys]), cmap=plt.get_cmap("tab20", nstates)
    )
    coll.set_clim(-0.5, nstates - 0.5)
    coll.set_edgecolor("#333333")
    coll.set_linewidth(0.3)
    ax.add_collection(coll)
    ax.autoscale_view()
    ax.set_aspect("equal")
    ax.axis("off")
    ticks = range(nstates) if nstates <= 20 else None
    fig.colorbar(coll, ax=ax, label="state", shrink=0.7, ticks=ticks)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

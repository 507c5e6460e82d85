"""Hasse diagrams of congruence lattices, rendered to image files."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .congruence import CongruenceLattice, partition_str  # noqa: E402


def levels(L: CongruenceLattice) -> list[int]:
    """Length of the longest chain from the bottom to each element."""
    height = [0] * len(L)
    # elements are sorted with finer partitions first, so covers point forward
    for i in range(len(L)):
        for j in L.covers[i]:
            height[j] = max(height[j], height[i] + 1)
    return height


def layout(L: CongruenceLattice) -> list[tuple[float, float]]:
    height = levels(L)
    rows: dict[int, list[int]] = {}
    for i, h in enumerate(height):
        rows.setdefault(h, []).append(i)
    pos = [(0.0, 0.0)] * len(L)
    for h, members in rows.items():
        w = len(members)
        for k, i in enumerate(members):
            pos[i] = (k - (w - 1) / 2, float(h))
    return pos


def hasse_diagram(L: CongruenceLattice, path: str, title: str | None = None,
                  labels: bool = True) -> str:
    """Draw L and save it to ``path``; returns the path."""
    pos = layout(L)
    a = L.algebra
    width = max(4.0, 1.6 * max(levels(L).count(h) for h in set(levels(L))))
    height = max(3.0, 1.2 * (max(levels(L)) + 1))
    fig, ax = plt.subplots(figsize=(width, height))
    for i, ups in enumerate(L.covers):
        for j in ups:
            ax.plot([pos[i][0], pos[j][0]], [pos[i][1], pos[j][1]], color="0.3", lw=1, zorder=1)
    xs, ys = zip(*pos)
    ax.scatter(xs, ys, s=40, color="black", zorder=2)
    if labels and len(L) <= 40:
        for i, p in enumerate(L.elements):
            ax.annotate(partition_str(a, p), pos[i], textcoords="offset points", xytext=(6, 4),
                        fontsize=7)
    kind = f"Con_Q({', '.join(L.generators)})" if L.generators else "Con"
    ax.set_title(title or f"{kind} of {a.name}")
    ax.set_axis_off()
    ax.margins(0.2)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

"""Minimal standalone SVG plots of planar limit shapes."""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameter
from .io_utils import atomic_write_text

SIZE = 400
MARGIN = 40


def shape_svg(points, mu_min: float | None = None, mu_max: float | None = None,
              title: str = "limit shape") -> str:
    """SVG text for a closed boundary polyline through ``points`` (n, 2)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise InvalidParameter("need at least three planar boundary points")
    if not np.all(np.isfinite(pts)):
        raise InvalidParameter("boundary points must be finite")
    ext = max(float(np.abs(pts).max()), 1.0) * 1.1
    scale = (SIZE / 2 - MARGIN) / ext
    c = SIZE / 2

    def xy(p):
        return f"{c + scale * p[0]:.3f},{c - scale * p[1]:.3f}"

    closed = np.vstack([pts, pts[:1]])
    poly = " ".join(xy(p) for p in closed)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f"<title>{title}</title>",
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{xy((-1, 0)).split(",")[0]}" y1="{c}" x2="{xy((1, 0)).split(",")[0]}" '
        f'y2="{c}" stroke="gray" stroke-width="1"/>',
        f'<line x1="{c}" y1="{xy((0, 1)).split(",")[1]}" x2="{c}" '
        f'y2="{xy((0, -1)).split(",")[1]}" stroke="gray" stroke-width="1"/>',
        f'<polyline points="{poly}" fill="none" stroke="black" stroke-width="1.5"/>',
    ]
    legend = [title]
    if mu_min is not None and mu_max is not None:
        legend.append(f"mu min {mu_min:.6g}, mu max {mu_max:.6g}")
    for k, text in enumerate(legend):
        lines.append(f'<text x="10" y="{18 + 16 * k}" font-family="sans-serif" '
                     f'font-size="12">{text}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def emit_svg(points, path, mu_min=None, mu_max=None, title="limit shape") -> None:
    """Write the shape plot atomically; nothing is written if the data is invalid."""
    text = shape_svg(points, mu_min, mu_max, title)
    atomic_write_text(path, text)

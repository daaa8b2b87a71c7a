"""Minimal deterministic SVG scatter plots of zero sets, read back from zeros.csv."""

from __future__ import annotations

import csv
import math
from pathlib import Path

WIDTH, HEIGHT = 640, 480
MARGIN = 60
PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22",
)
SHAPES = ("circle", "square", "triangle", "diamond", "cross")


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * span:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _marker(shape: str, x: float, y: float, color: str, r: float = 4.0) -> str:
    if shape == "circle":
        return f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r:.1f}" fill="{color}"/>'
    if shape == "square":
        return f'<rect x="{x - r:.2f}" y="{y - r:.2f}" width="{2 * r:.1f}" height="{2 * r:.1f}" fill="{color}"/>'
    if shape == "triangle":
        pts = f"{x:.2f},{y - r:.2f} {x - r:.2f},{y + r:.2f} {x + r:.2f},{y + r:.2f}"
        return f'<polygon points="{pts}" fill="{color}"/>'
    if shape == "diamond":
        pts = f"{x:.2f},{y - r:.2f} {x + r:.2f},{y:.2f} {x:.2f},{y + r:.2f} {x - r:.2f},{y:.2f}"
        return f'<polygon points="{pts}" fill="{color}"/>'
    return (
        f'<path d="M{x - r:.2f},{y - r:.2f}L{x + r:.2f},{y + r:.2f}M{x - r:.2f},{y + r:.2f}L{x + r:.2f},{y - r:.2f}" '
        f'stroke="{color}" stroke-width="1.5"/>'
    )


def scatter_svg(points_by_k: dict[int, list[tuple[float, float, bool]]], title: str = "", xlabel: str = "Re", ylabel: str = "Im") -> str:
    """One marker per point, a distinct colour/shape pair per k.

    Points flagged False (irrelevant) are drawn hollow.
    """
    pts = [(x, y) for v in points_by_k.values() for x, y, _ in v]
    if pts:
        xs, ys = [p[0] for p in pts], [p[1] for p in pts]
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    else:
        x0, x1, y0, y1 = -1.0, 1.0, -1.0, 1.0
    # pad and avoid zero spans
    dx = (x1 - x0) or 1.0
    dy = (y1 - y0) or 1.0
    x0, x1 = x0 - 0.05 * dx, x1 + 0.05 * dx
    y0, y1 = y0 - 0.05 * dy, y1 + 0.05 * dy

    def px(x):
        return MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def py(y):
        return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{HEIGHT - MARGIN}" x2="{X:.2f}" y2="{HEIGHT - MARGIN + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{HEIGHT - MARGIN + 18}" text-anchor="middle" font-family="sans-serif" font-size="10">{t:g}</text>')
    for t in _nice_ticks(y0, y1):
        Y = py(t)
        out.append(f'<line x1="{MARGIN - 5}" y1="{Y:.2f}" x2="{MARGIN}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN - 8}" y="{Y + 3:.2f}" text-anchor="end" font-family="sans-serif" font-size="10">{t:g}</text>')
    out.append(f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle" font-family="sans-serif" font-size="12">{xlabel}</text>')
    out.append(
        f'<text x="15" y="{HEIGHT / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 15 {HEIGHT / 2:.1f})">{ylabel}</text>'
    )
    for n, k in enumerate(sorted(points_by_k)):
        color = PALETTE[n % len(PALETTE)]
        shape = SHAPES[(n // len(PALETTE)) % len(SHAPES)] if len(points_by_k) > len(PALETTE) else SHAPES[n % len(SHAPES)]
        out.append(f'<g id="k{k}">')
        for x, y, rel in points_by_k[k]:
            m = _marker(shape, px(x), py(y), color)
            if not rel:
                m = m.replace(f'fill="{color}"', f'fill="none" stroke="{color}"')
            out.append(m)
        out.append("</g>")
        ly = MARGIN + 12 * n
        if ly < HEIGHT - MARGIN:
            out.append(_marker(shape, WIDTH - MARGIN + 12, ly, color, 3.0))
            out.append(f'<text x="{WIDTH - MARGIN + 20}" y="{ly + 3:.1f}" font-family="sans-serif" font-size="9">k={k}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def scatter_from_csv(path, plane: str = "x", title: str = "") -> str:
    """Scatter of the zeros in ``path`` (zeros.csv schema) in the x or z plane."""
    if plane not in ("x", "z"):
        raise ValueError("plane must be 'x' or 'z'")
    by_k: dict[int, list] = {}
    with open(Path(path), newline="") as fh:
        for row in csv.DictReader(fh):
            k = int(row["k"])
            by_k.setdefault(k, []).append(
                (float(row[f"re_{plane}"]), float(row[f"im_{plane}"]), row["relevant"] == "true")
            )
    return scatter_svg(by_k, title, f"Re {plane}", f"Im {plane}")

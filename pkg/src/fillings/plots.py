"""Deterministic SVG figures written by hand.

Coordinates are printed with fixed precision and elements are emitted in a
fixed order, so identical input gives byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import SurfaceMesh

WIDTH = HEIGHT = 480
MARGIN = 40
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


def _fmt(v: float) -> str:
    return f"{v:.3f}"


class _Canvas:
    def __init__(self, xmin, xmax, ymin, ymax, title=""):
        span = max(xmax - xmin, ymax - ymin, 1e-12)
        self.s = (WIDTH - 2 * MARGIN) / span
        self.x0, self.y0 = xmin, ymin
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        ]
        if title:
            self.parts.append(f'<text x="{MARGIN}" y="{MARGIN // 2}" font-size="12">{title}</text>')

    def xy(self, p):
        return (MARGIN + (p[0] - self.x0) * self.s,
                HEIGHT - MARGIN - (p[1] - self.y0) * self.s)

    def polyline(self, pts, color, width=1.0, cls=None, extra=""):
        coords = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in (self.xy(p) for p in pts))
        c = f' class="{cls}"' if cls else ""
        self.parts.append(f'<polyline{c} points="{coords}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"{extra}/>')

    def circle(self, p, r, color, cls=None):
        x, y = self.xy(p)
        c = f' class="{cls}"' if cls else ""
        self.parts.append(f'<circle{c} cx="{_fmt(x)}" cy="{_fmt(y)}" r="{r}" fill="{color}"/>')

    def raw(self, text):
        self.parts.append(text)

    def text(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _xy(mesh: SurfaceMesh) -> np.ndarray:
    if mesh.positions is None:
        raise ValueError("mesh has no positions to draw")
    return np.asarray(mesh.positions)[:, :2]


def _drawable(mesh: SurfaceMesh, a: int, b: int, xy: np.ndarray) -> bool:
    # segments across a gluing seam would cut through the picture
    return np.linalg.norm(xy[a] - xy[b]) <= 1.5 * mesh.length(a, b) + 1e-9


def _mesh_canvas(mesh: SurfaceMesh, title: str) -> tuple[_Canvas, np.ndarray]:
    xy = _xy(mesh)
    cv = _Canvas(xy[:, 0].min(), xy[:, 0].max(), xy[:, 1].min(), xy[:, 1].max(), title)
    cv.raw('<g class="mesh">')
    for a, b in mesh.edges:
        a, b = int(a), int(b)
        if _drawable(mesh, a, b, xy):
            cv.polyline([xy[a], xy[b]], "#cccccc", 0.5)
    cv.raw("</g>")
    return cv, xy


def _write(text: str, path) -> str:
    if path is not None:
        Path(path).write_text(text)
    return text


def plot_bouquet(mesh: SurfaceMesh, bouquet, path=None) -> str:
    """Mesh edges in grey, each loop of the bouquet in its own colour."""
    cv, xy = _mesh_canvas(mesh, f"bouquet: {len(bouquet.loops)} loops")
    for i, loop in enumerate(bouquet.loops):
        color = PALETTE[i % len(PALETTE)]
        cv.raw(f'<g class="loop" id="loop-{i}">')
        for a, b in loop.edges:
            if _drawable(mesh, a, b, xy):
                cv.polyline([xy[a], xy[b]], color, 2.0)
        cv.raw("</g>")
    cv.circle(xy[bouquet.basepoint], 4, "black", "basepoint")
    return _write(cv.text(), path)


def plot_special_field(mesh: SurfaceMesh, field, vertices, path=None) -> str:
    """Boundary samples, and an arrow from each listed vertex to its point of maximum."""
    cv, xy = _mesh_canvas(mesh, f"points of maximum for p = {field.p_index}")
    for v in field.samples.vertices:
        cv.circle(xy[int(v)], 2, "#555555", "sample")
    cv.circle(xy[int(field.samples.vertices[field.p_index])], 5, PALETTE[1], "p")
    for x in vertices:
        q = int(field.samples.vertices[field.argmax[int(x)]])
        cv.polyline([xy[int(x)], xy[q]], PALETTE[0], 1.0, "arrow")
        cv.circle(xy[int(x)], 2.5, PALETTE[0], "base")
    return _write(cv.text(), path)


def plot_convergence(rows: list[dict], x: str, columns, path=None, log_y: bool = True) -> str:
    """One polyline per column against ``x``; empty input gives empty axes."""
    columns = list(columns)
    pts = {c: [(float(r[x]), float(r[c])) for r in rows if c in r] for c in columns}
    allp = [p for c in columns for p in pts[c]]
    ty = (lambda v: np.log10(max(v, 1e-300))) if log_y else (lambda v: v)
    if allp:
        xs = [p[0] for p in allp]
        ys = [ty(p[1]) for p in allp]
        sx = (WIDTH - 2 * MARGIN) / max(max(xs) - min(xs), 1e-12)
        sy = (HEIGHT - 2 * MARGIN) / max(max(ys) - min(ys), 1e-12)
    else:
        sx = sy = WIDTH - 2 * MARGIN
    cv = _Canvas(0, 1, 0, 1, f"convergence against {x}")
    x0 = min((p[0] for p in allp), default=0.0)
    y0 = min((ty(p[1]) for p in allp), default=0.0)

    def to_px(p):
        return (MARGIN + (p[0] - x0) * sx, HEIGHT - MARGIN - (ty(p[1]) - y0) * sy)

    cv.raw(f'<g class="axes"><line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
           f'y2="{HEIGHT - MARGIN}" stroke="black"/><line x1="{MARGIN}" y1="{MARGIN}" '
           f'x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/></g>')
    for i, c in enumerate(columns):
        if not pts[c]:
            continue
        coords = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in map(to_px, pts[c]))
        color = PALETTE[i % len(PALETTE)]
        cv.raw(f'<polyline class="series" data-column="{c}" points="{coords}" fill="none" '
               f'stroke="{color}" stroke-width="1.5"/>')
        cv.raw(f'<text x="{WIDTH - MARGIN - 120}" y="{MARGIN + 14 * (i + 1)}" font-size="11" '
               f'fill="{color}">{c}</text>')
    return _write(cv.text(), path)

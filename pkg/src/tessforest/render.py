"""SVG renders of planar partitions (stroke-only polygons)."""
from __future__ import annotations

import numpy as np

from .geometry import Ball, polygon_vertices_2d


def _poly_points(V, lo, hi, scale, margin) -> str:
    # SVG y grows downwards; flip so the picture has the usual orientation
    xs = (V[:, 0] - lo[0]) * scale + margin
    ys = (hi[1] - V[:, 1]) * scale + margin
    return " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(xs, ys))


def partition_svg(partition, scale: float = 400.0, margin: float = 10.0,
                  stroke: str = "#000000", stroke_width: float = 1.0) -> str:
    """SVG document for a d=2 partition.  ``scale`` is pixels per unit.

    Each cell is drawn as a closed stroke-only polygon from its vertex
    cycle.  Coordinates are written with fixed precision so a given
    partition always produces the same bytes.
    """
    if partition.dimension != 2:
        raise ValueError("SVG rendering is only available for d = 2")
    window = partition.window
    if isinstance(window, Ball):
        raise ValueError("SVG rendering needs a Box window")
    lo, hi = window.lower, window.upper
    w = (hi[0] - lo[0]) * scale + 2 * margin
    h = (hi[1] - lo[1]) * scale + 2 * margin
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.3f}" height="{h:.3f}" '
        f'viewBox="0 0 {w:.3f} {h:.3f}">',
        f'<g fill="none" stroke="{stroke}" stroke-width="{stroke_width:g}">',
    ]
    for cell in partition.cells():
        V = polygon_vertices_2d(cell)
        if len(V) >= 3:
            lines.append(f'<polygon points="{_poly_points(np.asarray(V), lo, hi, scale, margin)}"/>')
    lines += ["</g>", "</svg>", ""]
    return "\n".join(lines)


def write_svg(partition, path, scale: float = 400.0) -> None:
    with open(path, "w") as fh:
        fh.write(partition_svg(partition, scale=scale))

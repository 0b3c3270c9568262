"""Static SVG pictures of deformed grids.

Each lattice row and column of ``phi = id + u`` is drawn as a polyline through
the mapped node positions.  Coordinates are printed with a fixed number of
decimals so identical input gives identical bytes.
"""
from __future__ import annotations

import os
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimMismatch, SliceOutOfRange
from .grid import Diffeo

STYLES = (
    'stroke="#1f3b73" stroke-width="0.8" fill="none"',
    'stroke="#c0392b" stroke-width="0.8" fill="none" stroke-dasharray="3,2"',
)


def planar_positions(phi: Diffeo, slice_: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """Mapped node positions in a drawable plane, shape ``(2, n0, n1)``.

    In 3D ``slice_ = (axis, index)`` picks the lattice plane; the image shows
    the two in-plane coordinates of the mapped nodes.
    """
    pos = phi.positions()
    spec = phi.spec
    if spec.dim == 2:
        if slice_ is not None:
            raise DimMismatch("2D grids are drawn whole; no slice")
        return pos
    if slice_ is None:
        raise DimMismatch("a 3D grid needs a (axis, index) slice")
    axis, index = slice_
    if axis not in (0, 1, 2):
        raise SliceOutOfRange(f"axis {axis} not in 0..2")
    if not 0 <= index < spec.shape[axis]:
        raise SliceOutOfRange(f"index {index} outside 0..{spec.shape[axis] - 1}")
    keep = [a for a in range(3) if a != axis]
    plane = np.take(pos, index, axis=axis + 1)
    return plane[keep]


def to_pixels(xy: np.ndarray, size: int, margin: int) -> np.ndarray:
    """Unit square to pixel coordinates, y pointing up."""
    span = size - 2 * margin
    px = margin + xy[0] * span
    py = margin + (1.0 - xy[1]) * span
    return np.stack([px, py])


def _polylines(pix: np.ndarray, style: str) -> list:
    out = []
    n0, n1 = pix.shape[1:]
    lines = [pix[:, i, :] for i in range(n0)] + [pix[:, :, j] for j in range(n1)]
    for line in lines:
        pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(line[0], line[1]))
        out.append(f'<polyline {style} points="{pts}"/>')
    return out


def svg_grid(
    phis: Sequence[Diffeo],
    slice_: Optional[Tuple[int, int]] = None,
    size: int = 512,
    margin: int = 8,
) -> str:
    """SVG text drawing one or two maps (the second dashed, for overlays)."""
    if not 1 <= len(phis) <= len(STYLES):
        raise ValueError(f"draw 1 or {len(STYLES)} maps, got {len(phis)}")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for phi, style in zip(phis, STYLES):
        pix = to_pixels(planar_positions(phi, slice_), size, margin)
        parts.append("<g>")
        parts.extend(_polylines(pix, style))
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_grid(
    phi: Diffeo,
    path: Union[str, os.PathLike],
    slice_: Optional[Tuple[int, int]] = None,
    overlay: Optional[Diffeo] = None,
    size: int = 512,
) -> Path:
    phis = [phi] if overlay is None else [phi, overlay]
    path = Path(path)
    path.write_text(svg_grid(phis, slice_, size))
    return path

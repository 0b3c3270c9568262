"""DFF1 field files and a CSV debug mirror.

Layout (little-endian)::

    b"DFF1" | dim u32 | N_0 .. N_{dim-1} u32 | ncomp u32 | ncomp * prod(N) f64

Each component is stored with the x index varying fastest.  In memory arrays
are indexed ``[x, y(, z)]``, so a component is written as its transpose.
"""
from __future__ import annotations

import csv
import os
import struct
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import DimensionMismatch, MalformedHeader, Truncation
from .grid import GridSpec

MAGIC = b"DFF1"
PathLike = Union[str, os.PathLike]


def _as_components(field: np.ndarray, spec: GridSpec) -> np.ndarray:
    if field.shape == spec.shape:
        return field[None]
    if field.ndim == spec.dim + 1 and field.shape[1:] == spec.shape:
        return field
    raise DimensionMismatch(f"field of shape {field.shape} does not live on grid {spec.shape}")


def encode_field(field: np.ndarray, spec: GridSpec) -> bytes:
    comps = _as_components(np.asarray(field, dtype=float), spec)
    head = MAGIC + struct.pack(f"<{spec.dim + 2}I", spec.dim, *spec.shape, comps.shape[0])
    # x fastest == C order of the transposed component
    body = b"".join(np.ascontiguousarray(c.T).astype("<f8").tobytes() for c in comps)
    return head + body


def write_field(field: np.ndarray, spec: GridSpec, path: PathLike) -> None:
    Path(path).write_bytes(encode_field(field, spec))


def decode_field(buf: bytes, expect: Optional[GridSpec] = None):
    """Parse a DFF1 buffer into ``(array, spec)``.

    A single component comes back as a plain grid array, several as a stacked
    ``(ncomp, *shape)`` array.
    """
    if len(buf) < 8:
        raise Truncation("file shorter than the fixed header")
    if buf[:4] != MAGIC:
        raise MalformedHeader(f"bad magic {buf[:4]!r}")
    (dim,) = struct.unpack_from("<I", buf, 4)
    if dim not in (2, 3):
        raise MalformedHeader(f"dim must be 2 or 3, got {dim}")
    hlen = 4 + 4 * (dim + 2)
    if len(buf) < hlen:
        raise Truncation("header cut short")
    *shape, ncomp = struct.unpack_from(f"<{dim + 1}I", buf, 8)
    shape = tuple(shape)
    if ncomp < 1 or min(shape) < 1:
        raise MalformedHeader(f"bad sizes shape={shape} ncomp={ncomp}")
    try:
        spec = GridSpec(shape)
    except ValueError as exc:
        raise MalformedHeader(str(exc)) from None
    if expect is not None and expect != spec:
        raise DimensionMismatch(f"file grid {shape} != expected {expect.shape}")
    n = int(np.prod(shape))
    need = hlen + 8 * n * ncomp
    if len(buf) < need:
        raise Truncation(f"expected {need} bytes, got {len(buf)}")
    if len(buf) > need:
        raise MalformedHeader(f"{len(buf) - need} trailing bytes after payload")
    flat = np.frombuffer(buf, dtype="<f8", count=n * ncomp, offset=hlen)
    comps = flat.reshape((ncomp,) + shape[::-1])
    arr = np.stack([c.T for c in comps]).astype(float)
    return (arr[0] if ncomp == 1 else arr), spec


def read_field(path: PathLike, expect: Optional[GridSpec] = None):
    return decode_field(Path(path).read_bytes(), expect)


def export_csv(field: np.ndarray, spec: GridSpec, path: PathLike) -> None:
    """One row per node in file order; header names the index and components."""
    comps = _as_components(np.asarray(field, dtype=float), spec)
    axes = "ijk"[: spec.dim]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(axes) + [f"c{k}" for k in range(comps.shape[0])])
        # reversed ndindex order makes x vary fastest
        for idx in np.ndindex(*spec.shape[::-1]):
            node = idx[::-1]
            w.writerow(list(node) + [repr(float(c[node])) for c in comps])

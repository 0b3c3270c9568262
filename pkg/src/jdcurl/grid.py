"""Grid and field containers, norms, synthetic deformations and noise.

Fields are plain numpy arrays indexed ``[x, y]`` or ``[x, y, z]``.  A scalar
field has shape ``spec.shape``; a vector field has shape
``(spec.dim,) + spec.shape``.  The domain is the unit square/cube, so node
``i`` along an axis sits at ``i * h`` with ``h = 1 / (N - 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import BumpTouchesBoundary, SpecMismatch


@dataclass(frozen=True)
class GridSpec:
    """Uniform node grid on the unit box with homogeneous Dirichlet boundary."""

    shape: tuple

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        if len(shape) not in (2, 3):
            raise ValueError(f"grid must be 2D or 3D, got shape {shape}")
        if min(shape) < 4:
            raise ValueError(f"need at least 4 nodes per axis, got {shape}")
        object.__setattr__(self, "shape", shape)

    @classmethod
    def cube(cls, n: int, dim: int = 2) -> "GridSpec":
        return cls((n,) * dim)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple:
        return tuple(1.0 / (n - 1) for n in self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def coords(self) -> list:
        """Node coordinate arrays, one per axis, each of shape ``self.shape``."""
        axes = [np.linspace(0.0, 1.0, n) for n in self.shape]
        return np.meshgrid(*axes, indexing="ij")

    def interior(self) -> tuple:
        return tuple(slice(1, n - 1) for n in self.shape)

    def interior_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[self.interior()] = True
        return mask

    def vector_shape(self) -> tuple:
        return (self.dim,) + self.shape

    def zeros(self) -> np.ndarray:
        return np.zeros(self.vector_shape())


def check_same_spec(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise SpecMismatch(f"grid {a.shape} does not match {b.shape}")


def zero_boundary(u: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Copy of ``u`` (scalar or vector) with every boundary node set to 0."""
    out = np.zeros_like(u)
    lead = (slice(None),) * (u.ndim - spec.dim)
    out[lead + spec.interior()] = u[lead + spec.interior()]
    return out


@dataclass(frozen=True)
class Diffeo:
    """The map ``phi = id + u`` sampled at grid nodes."""

    spec: GridSpec
    u: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.shape != self.spec.vector_shape():
            raise SpecMismatch(
                f"displacement shape {u.shape} != {self.spec.vector_shape()}"
            )
        u = u.copy()
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    def positions(self) -> np.ndarray:
        """Image of every node, shape ``(dim,) + shape``."""
        return np.stack(self.spec.coords()) + self.u


def identity_map(spec: GridSpec) -> Diffeo:
    return Diffeo(spec, spec.zeros())


# --- synthetic deformations ---------------------------------------------


def cutoff(r: np.ndarray, radius: float) -> np.ndarray:
    """C2 polynomial cutoff ``(1 - (r/R)^2)^3`` inside the ball, 0 outside."""
    s2 = (r / radius) ** 2
    return np.where(s2 < 1.0, (1.0 - s2) ** 3, 0.0)


@dataclass(frozen=True)
class CutoffRotation:
    """Rotate the ball about ``center`` by ``angle`` radians, fading to 0 at ``radius``.

    In 3D the rotation acts in the plane normal to ``axis`` (0, 1 or 2).
    """

    center: Sequence[float]
    radius: float
    angle: float
    axis: int = 2

    def displacement(self, X: list) -> np.ndarray:
        d = [x - c for x, c in zip(X, self.center)]
        q = cutoff(np.sqrt(sum(di**2 for di in d)), self.radius)
        out = np.zeros((len(X),) + X[0].shape)
        if len(X) == 2:
            i, j = 0, 1
        else:
            i, j = [a for a in range(3) if a != self.axis]
        c, s = np.cos(self.angle), np.sin(self.angle)
        out[i] = q * ((c - 1.0) * d[i] - s * d[j])
        out[j] = q * (s * d[i] + (c - 1.0) * d[j])
        return out


@dataclass(frozen=True)
class TranslationBump:
    """Shift the ball about ``center`` by the vector ``shift``, with cutoff."""

    center: Sequence[float]
    radius: float
    shift: Sequence[float]

    def displacement(self, X: list) -> np.ndarray:
        d = [x - c for x, c in zip(X, self.center)]
        q = cutoff(np.sqrt(sum(di**2 for di in d)), self.radius)
        return np.stack([q * s for s in self.shift])


@dataclass(frozen=True)
class SkewBump:
    """Shear ``x += shear * (y - cy)`` inside the ball, with cutoff.

    ``axes`` picks (moved axis, driving axis); default (0, 1).
    """

    center: Sequence[float]
    radius: float
    shear: float
    axes: tuple = (0, 1)

    def displacement(self, X: list) -> np.ndarray:
        d = [x - c for x, c in zip(X, self.center)]
        q = cutoff(np.sqrt(sum(di**2 for di in d)), self.radius)
        out = np.zeros((len(X),) + X[0].shape)
        moved, driver = self.axes
        out[moved] = q * self.shear * d[driver]
        return out


BumpOp = Union[CutoffRotation, TranslationBump, SkewBump]


def synthesize_deformation(spec: GridSpec, ops: Sequence[BumpOp]) -> np.ndarray:
    """Sum the displacements of localized bumps; boundary values are exactly 0."""
    X = spec.coords()
    u = spec.zeros()
    for op in ops:
        if len(op.center) != spec.dim:
            raise ValueError(f"bump center {op.center} is not {spec.dim}D")
        for c in op.center:
            if not (c - op.radius > 0.0 and c + op.radius < 1.0):
                raise BumpTouchesBoundary(
                    f"support of {type(op).__name__} at {tuple(op.center)} "
                    f"with radius {op.radius} reaches the boundary"
                )
        u += op.displacement(X)
    return zero_boundary(u, spec)


def add_gaussian_noise(
    u: np.ndarray, spec: GridSpec, sigma: float, seed: int
) -> np.ndarray:
    """Add i.i.d. N(0, sigma^2) to every interior node; boundary stays 0."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return np.array(u, dtype=float, copy=True)
    rng = np.random.default_rng(seed)
    noise = zero_boundary(rng.normal(0.0, sigma, size=u.shape), spec)
    return u + noise


# --- norms ----------------------------------------------------------------


def l2_norm_field(v: np.ndarray, spec: GridSpec) -> float:
    """Discrete L2 norm ``sqrt(h^d * sum |v|^2)`` over all nodes."""
    return float(np.sqrt(spec.cell_volume * np.sum(np.square(v))))


def pointwise_norm(v: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Euclidean norm per node; a scalar field gives its absolute value."""
    if v.shape == spec.shape:
        return np.abs(v)
    return np.sqrt(np.sum(np.square(v), axis=0))


def max_pointwise_norm(v: np.ndarray, spec: GridSpec) -> float:
    return float(pointwise_norm(v, spec).max())


def max_abs(s: np.ndarray) -> float:
    return float(np.max(np.abs(s)))


# --- small-deformation group ---------------------------------------------


def compose_small(t2: Diffeo, t1: Diffeo) -> Diffeo:
    """``T2 o T1 = id + u1 + u2`` in the small-deformation sense."""
    check_same_spec(t2.spec, t1.spec)
    return Diffeo(t1.spec, t1.u + t2.u)

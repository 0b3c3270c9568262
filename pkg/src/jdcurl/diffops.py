"""Finite-difference vector calculus on the unit-box grid.

First derivatives use second-order central differences at interior nodes and
second-order one-sided differences at boundary nodes, so every stencil is
exact on quadratics.  ``partial_adjoint`` is the exact transpose of
``partial`` under the plain node sum; the loss gradients are built from it.

Jacobian convention: ``J[i, j] = d u_i / d x_j``.  The curl is the standard
one, ``(u3y - u2z, u1z - u3x, u2x - u1y)`` in 3D and ``u2x - u1y`` in 2D.
"""
from __future__ import annotations

import numpy as np

from .errors import DimMismatch
from .grid import GridSpec


def partial(s: np.ndarray, axis: int, spec: GridSpec) -> np.ndarray:
    """d s / d x_axis for a scalar field ``s``."""
    return np.gradient(s, spec.spacing[axis], axis=axis, edge_order=2)


def partial_adjoint(y: np.ndarray, axis: int, spec: GridSpec) -> np.ndarray:
    """Apply the transpose of the ``partial`` stencil matrix along ``axis``."""
    h2 = 2.0 * spec.spacing[axis]
    y = np.moveaxis(y, axis, 0)
    out = np.zeros_like(y)
    # interior rows i: -1 at column i-1, +1 at column i+1
    out[:-2] -= y[1:-1]
    out[2:] += y[1:-1]
    # boundary rows: (-3, 4, -1) and (1, -4, 3)
    out[0] -= 3.0 * y[0]
    out[1] += 4.0 * y[0]
    out[2] -= y[0]
    out[-3] += y[-1]
    out[-2] -= 4.0 * y[-1]
    out[-1] += 3.0 * y[-1]
    return np.moveaxis(out / h2, 0, axis)


def gradient(s: np.ndarray, spec: GridSpec) -> np.ndarray:
    return np.stack([partial(s, a, spec) for a in range(spec.dim)])


def jacobian(u: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Shape ``(d, d) + spec.shape`` with entry ``[i, j] = d u_i / d x_j``."""
    return np.stack([gradient(u[i], spec) for i in range(spec.dim)])


def divergence(u: np.ndarray, spec: GridSpec) -> np.ndarray:
    return sum(partial(u[i], i, spec) for i in range(spec.dim))


def divergence_from_jacobian(J: np.ndarray) -> np.ndarray:
    return sum(J[i, i] for i in range(J.shape[0]))


def curl_from_jacobian(J: np.ndarray) -> np.ndarray:
    if J.shape[0] == 2:
        return J[1, 0] - J[0, 1]
    return np.stack(
        [J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]]
    )


def curl(u: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Vector curl in 3D, scalar curl in 2D."""
    if spec.dim == 2:
        return partial(u[1], 0, spec) - partial(u[0], 1, spec)
    d = partial
    return np.stack(
        [
            d(u[2], 1, spec) - d(u[1], 2, spec),
            d(u[0], 2, spec) - d(u[2], 0, spec),
            d(u[1], 0, spec) - d(u[0], 1, spec),
        ]
    )


def det_from_jacobian(J: np.ndarray) -> np.ndarray:
    if J.shape[0] == 2:
        return J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    return (
        J[0, 0] * (J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
        - J[0, 1] * (J[1, 0] * J[2, 2] - J[1, 2] * J[2, 0])
        + J[0, 2] * (J[1, 0] * J[2, 1] - J[1, 1] * J[2, 0])
    )


def tail_from_jacobian(J: np.ndarray) -> np.ndarray:
    """Sum of the principal 2x2 minors of J (3D only)."""
    return (
        J[0, 0] * J[1, 1]
        + J[0, 0] * J[2, 2]
        + J[1, 1] * J[2, 2]
        - J[0, 1] * J[1, 0]
        - J[0, 2] * J[2, 0]
        - J[1, 2] * J[2, 1]
    )


def tail(u: np.ndarray, spec: GridSpec) -> np.ndarray:
    if spec.dim != 3:
        raise DimMismatch("Tail(u) is only defined in 3D")
    return tail_from_jacobian(jacobian(u, spec))


def det_grad_u(u: np.ndarray, spec: GridSpec) -> np.ndarray:
    return det_from_jacobian(jacobian(u, spec))


def det_grad_phi(u: np.ndarray, spec: GridSpec) -> np.ndarray:
    """det(grad(id + u)) = 1 + div u + det grad u (+ Tail(u) in 3D)."""
    J = jacobian(u, spec)
    out = 1.0 + divergence_from_jacobian(J) + det_from_jacobian(J)
    if spec.dim == 3:
        out = out + tail_from_jacobian(J)
    return out

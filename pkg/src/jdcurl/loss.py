"""JD/curl residual loss and its gradient with respect to the Poisson control.

For ``phi = id + u`` the residuals are

    P = det(grad phi) - f0 = (1 - f0) + div u + det grad u + Tail(u)
    Q = curl u - g0

and the loss is ``L = 1/2 h^d sum P^2 + 1/2 h^d sum |Q|^2`` over interior nodes.
With ``f0 = 1, g0 = 0`` this is the counter-example loss; other targets give
the SSD functional of the variational construction.

The control is ``F = lap(u)``.  Varying ``u`` gives

    dL = h^d sum -(grad P + a + b + c) . du

where ``a_i`` and ``b_i`` are divergences of ``P`` times the cofactor and
Tail-derivative rows of the Jacobian and ``c_i`` is the divergence of the
rearranged curl residual.  "grad" and "div" here are the exact adjoints of the
difference stencils (they agree with central differences away from the
boundary), which makes the discrete gradient exact rather than O(h^2).
Since ``lap`` is symmetric, ``dL/dF = A + B`` with ``lap A = -(grad P + a + b)``
and ``lap B = -c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels, diffops
from .grid import GridSpec
from .poisson import PoissonPlan, solve_poisson


@dataclass(frozen=True)
class ResidualPair:
    P: np.ndarray
    Q: np.ndarray
    J: np.ndarray


@dataclass(frozen=True)
class LossValue:
    total: float
    l1: float
    l2: float


@dataclass(frozen=True)
class ControlGradient:
    A: np.ndarray
    B: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.A + self.B


def residuals(
    u: np.ndarray,
    spec: GridSpec,
    jd_target: Optional[np.ndarray] = None,
    curl_target: Optional[np.ndarray] = None,
) -> ResidualPair:
    J = diffops.jacobian(u, spec)
    P = diffops.divergence_from_jacobian(J) + diffops.det_from_jacobian(J)
    if spec.dim == 3:
        P = P + diffops.tail_from_jacobian(J)
    if jd_target is not None:
        P = P + (1.0 - jd_target)
    Q = diffops.curl_from_jacobian(J)
    if curl_target is not None:
        Q = Q - curl_target
    return ResidualPair(P, Q, J)


def _interior_sum_sq(x: np.ndarray, spec: GridSpec) -> float:
    inner = (slice(None),) * (x.ndim - spec.dim) + spec.interior()
    return math.fsum(np.square(x[inner]).ravel())


def loss_from_residuals(r: ResidualPair, spec: GridSpec) -> LossValue:
    w = 0.5 * spec.cell_volume
    l1 = w * _interior_sum_sq(r.P, spec)
    l2 = w * _interior_sum_sq(r.Q, spec)
    return LossValue(l1 + l2, l1, l2)


def loss(u: np.ndarray, spec: GridSpec, jd_target=None, curl_target=None) -> LossValue:
    return loss_from_residuals(residuals(u, spec, jd_target, curl_target), spec)


# --- adjoint pieces -------------------------------------------------------


def cofactor_rows(J: np.ndarray) -> np.ndarray:
    """``C[i, j] = d det(J) / d J[i, j]``."""
    if J.shape[0] == 2:
        return np.stack([np.stack([J[1, 1], -J[1, 0]]), np.stack([-J[0, 1], J[0, 0]])])
    C = np.empty_like(J)
    for i in range(3):
        i1, i2 = (i + 1) % 3, (i + 2) % 3
        for j in range(3):
            j1, j2 = (j + 1) % 3, (j + 2) % 3
            C[i, j] = J[i1, j1] * J[i2, j2] - J[i1, j2] * J[i2, j1]
    return C


def tail_rows(J: np.ndarray, variant: str = "derived") -> np.ndarray:
    """``T[i, j] = d Tail(J) / d J[i, j]`` (3D).

    ``variant="misprint"`` reproduces a misprinted first entry ``u3z + u2z`` of
    the first row; it exists so tests can show it fails the gradient check.
    """
    T = np.stack(
        [
            np.stack([J[1, 1] + J[2, 2], -J[1, 0], -J[2, 0]]),
            np.stack([-J[0, 1], J[0, 0] + J[2, 2], -J[2, 1]]),
            np.stack([-J[0, 2], -J[1, 2], J[0, 0] + J[1, 1]]),
        ]
    )
    if variant == "misprint":
        T[0, 0] = J[2, 2] + J[1, 2]
    elif variant != "derived":
        raise ValueError(f"unknown tail variant {variant!r}")
    return T


def adjoint_divergence(w: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Negative transpose of the gradient stencil applied to a vector field."""
    return -sum(diffops.partial_adjoint(w[j], j, spec) for j in range(spec.dim))


def adjoint_gradient(s: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Negative transpose of the divergence stencil applied to a scalar field."""
    return -np.stack([diffops.partial_adjoint(s, j, spec) for j in range(spec.dim)])


def _interior_only(x: np.ndarray, spec: GridSpec) -> np.ndarray:
    return x * spec.interior_mask()


def curl_rows(Q: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Rows ``w_i`` with ``sum Q . curl(du) = sum_i w_i . grad(du_i)``."""
    if spec.dim == 2:
        z = np.zeros_like(Q)
        return np.stack([np.stack([z, -Q]), np.stack([Q, z])])
    z = np.zeros_like(Q[0])
    return np.stack(
        [
            np.stack([z, -Q[2], Q[1]]),
            np.stack([Q[2], z, -Q[0]]),
            np.stack([-Q[1], Q[0], z]),
        ]
    )


def cofactor_vectors(
    u: np.ndarray,
    spec: GridSpec,
    jd_target=None,
    curl_target=None,
    tail_variant: str = "derived",
):
    """Return ``(grad_P, a, b, c)``; in 2D ``b`` is identically zero."""
    r = residuals(u, spec, jd_target, curl_target)
    Pm = _interior_only(r.P, spec)
    Qm = _interior_only(r.Q, spec)
    grad_p = adjoint_gradient(Pm, spec)
    cof = cofactor_rows(r.J)
    a = np.stack([adjoint_divergence(Pm * cof[i], spec) for i in range(spec.dim)])
    if spec.dim == 3:
        T = tail_rows(r.J, tail_variant)
        b = np.stack([adjoint_divergence(Pm * T[i], spec) for i in range(3)])
    else:
        b = np.zeros_like(a)
    W = curl_rows(Qm, spec)
    c = np.stack([adjoint_divergence(W[i], spec) for i in range(spec.dim)])
    return grad_p, a, b, c


def gradient_wrt_u(u, spec, jd_target=None, curl_target=None, tail_variant="derived"):
    """``dL/du`` under the plain node-sum inner product (``h^d`` factored out)."""
    grad_p, a, b, c = cofactor_vectors(u, spec, jd_target, curl_target, tail_variant)
    return -(grad_p + a + b + c)


def gradient_wrt_F(
    u: np.ndarray,
    plan: PoissonPlan,
    jd_target=None,
    curl_target=None,
    tail_variant: str = "derived",
) -> ControlGradient:
    spec = plan.spec
    grad_p, a, b, c = cofactor_vectors(u, spec, jd_target, curl_target, tail_variant)
    A = solve_poisson(-(grad_p + a + b), plan)
    B = solve_poisson(-c, plan)
    return ControlGradient(A, B)


class LossEvaluator:
    """Fast repeated evaluation of the loss and dL/du for one grid and target.

    Only interior nodes enter the loss and every interior derivative is a
    central difference, so the work collapses to one fused pass over the
    interior (see ``_kernels``).  Agrees with ``loss`` / ``gradient_wrt_u`` to
    roundoff.
    """

    def __init__(self, spec: GridSpec, jd_target=None, curl_target=None):
        self.spec = spec
        inner = spec.interior()
        m = tuple(n - 2 for n in spec.shape)
        self.weight = 0.5 * spec.cell_volume
        self.ih = np.array([0.5 / h for h in spec.spacing])
        self.offset = np.zeros(m) if jd_target is None else np.ascontiguousarray((1.0 - jd_target)[inner])
        if spec.dim == 2:
            tshape = m
            tin = inner
        else:
            tshape = (3,) + m
            tin = (slice(None),) + inner
        self.target = np.zeros(tshape) if curl_target is None else np.ascontiguousarray(curl_target[tin])
        self._wbuf = np.zeros((spec.dim, spec.dim) + spec.shape)

    def loss(self, u: np.ndarray) -> LossValue:
        u = np.ascontiguousarray(u, dtype=float)
        if self.spec.dim == 2:
            s1, s2 = _kernels.loss_2d(u, self.ih[0], self.ih[1], self.offset, self.target)
        else:
            s1, s2 = _kernels.loss_3d(u, self.ih, self.offset, self.target)
        l1 = self.weight * s1
        l2 = self.weight * s2
        return LossValue(l1 + l2, l1, l2)

    def gradient_u(self, u: np.ndarray) -> np.ndarray:
        """Interior values of dL/du (node-sum inner product)."""
        u = np.ascontiguousarray(u, dtype=float)
        out = np.empty((self.spec.dim,) + tuple(n - 2 for n in self.spec.shape))
        if self.spec.dim == 2:
            _kernels.grad_2d(u, self.ih[0], self.ih[1], self.offset, self.target, self._wbuf, out)
        else:
            _kernels.grad_3d(u, self.ih, self.offset, self.target, self._wbuf, out)
        return out

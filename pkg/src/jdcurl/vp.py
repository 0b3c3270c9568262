"""Maps with a prescribed Jacobian determinant and curl.

Given ``(f0, g0)`` the construction looks for ``phi = id + u`` minimizing

    SSD(phi) = 1/2 sum h^d [(det grad phi - f0)^2 + |curl phi - g0|^2]

with ``u`` driven through the Poisson control ``lap u = F``.  This is the
counter-example loss with shifted residuals, so ``loss.LossEvaluator`` with
targets supplies both the value and the exact gradient.

Inverses and grid-to-grid paths are built the same way, acting on a
composition: to find ``D`` with ``D o src`` close to ``dst``, the displacement
of ``D o src`` is ``u_src + S w`` where ``S`` samples ``w`` (multilinearly) at
the image points of ``src``.  The residuals of that composite are measured
against ``(det grad dst, curl dst)``, and the gradient is pulled back to ``w``
through ``S^T`` before the Poisson solve.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import sparse

from . import diffops
from .errors import FoldedInput, InadmissiblePrescription, ZeroInitialLoss
from .grid import Diffeo, GridSpec, check_same_spec, identity_map, max_pointwise_norm
from .loss import LossEvaluator, LossValue, loss
from .minimizer import DescentTrace, MinimizerConfig, descend
from .poisson import PoissonPlan, laplacian

ADMISSIBLE_TOL = 1e-8


@dataclass(frozen=True)
class Prescription:
    spec: GridSpec
    f0: np.ndarray
    g0: np.ndarray  # scalar field in 2D, vector field in 3D

    def __post_init__(self):
        curl_shape = self.spec.shape if self.spec.dim == 2 else self.spec.vector_shape()
        if np.shape(self.f0) != self.spec.shape or np.shape(self.g0) != curl_shape:
            raise InadmissiblePrescription("f0 / g0 shapes do not match the grid")

    @classmethod
    def trivial(cls, spec: GridSpec) -> "Prescription":
        g0 = np.zeros(spec.shape if spec.dim == 2 else spec.vector_shape())
        return cls(spec, np.ones(spec.shape), g0)

    @classmethod
    def from_diffeo(cls, phi: Diffeo) -> "Prescription":
        """Read ``(det grad phi, curl phi)`` back from a map."""
        return cls(phi.spec, diffops.det_grad_phi(phi.u, phi.spec), diffops.curl(phi.u, phi.spec))


@dataclass(frozen=True)
class AdmissibilityReport:
    mean_deviation: float
    max_divergence: float
    min_f0: float

    @property
    def passed(self) -> bool:
        return (
            self.mean_deviation <= ADMISSIBLE_TOL
            and self.max_divergence <= ADMISSIBLE_TOL
            and self.min_f0 > 0
        )


def trapezoid_mean(s: np.ndarray, spec: GridSpec) -> float:
    """Trapezoid-rule average over the unit box."""
    w = np.ones(spec.shape)
    for axis, n in enumerate(spec.shape):
        edge = [slice(None)] * spec.dim
        for k in (0, n - 1):
            edge[axis] = k
            w[tuple(edge)] *= 0.5
    return float(np.sum(w * s) * spec.cell_volume)


def check_admissible(p: Prescription) -> AdmissibilityReport:
    spec = p.spec
    mean_dev = abs(trapezoid_mean(p.f0, spec) - 1.0)
    if spec.dim == 3:
        div = diffops.divergence(p.g0, spec)[spec.interior()]
        max_div = float(np.abs(div).max())
    else:
        max_div = 0.0  # a scalar curl carries no divergence constraint
    return AdmissibilityReport(mean_dev, max_div, float(p.f0.min()))


@dataclass(frozen=True)
class SSDValue:
    total: float
    jd_part: float
    curl_part: float


def ssd(phi: Diffeo, p: Prescription) -> SSDValue:
    check_same_spec(phi.spec, p.spec)
    v = loss(phi.u, phi.spec, p.f0, p.g0)
    return SSDValue(v.total, v.l1, v.l2)


def _roundoff_floor(ev: LossEvaluator, p: Prescription) -> float:
    # loss left over when P and Q vanish up to a few ulps of the targets
    inner = p.spec.interior()
    lead = (slice(None),) * (p.g0.ndim - p.spec.dim)
    scale = np.sum(1.0 + p.f0[inner] ** 2) + np.sum(p.g0[lead + inner] ** 2)
    return ev.weight * (64 * np.finfo(float).eps) ** 2 * float(scale)


def _default_dt(G: np.ndarray, L0: LossValue) -> float:
    # the linear model along -dU predicts dL/ddt = -|G|^2; aim to halve L
    return 0.5 * L0.total / float(np.sum(G * G))


def minimize_ssd(
    phi0: Diffeo, p: Prescription, cfg: MinimizerConfig, plan: PoissonPlan
):
    """Descend SSD from ``phi0``; returns ``(phi, trace)``.

    Raises ``ZeroInitialLoss`` if ``phi0`` already meets the prescription to
    roundoff, and ``InadmissiblePrescription`` if ``p`` fails the checks.
    """
    spec = p.spec
    check_same_spec(phi0.spec, spec)
    rep = check_admissible(p)
    if not rep.passed:
        raise InadmissiblePrescription(
            f"mean(f0) off by {rep.mean_deviation:.3e}, max |div g0| {rep.max_divergence:.3e}, "
            f"min f0 {rep.min_f0:.3e}"
        )
    ev = LossEvaluator(spec, p.f0, p.g0)
    L0 = ev.loss(phi0.u)
    if L0.total <= _roundoff_floor(ev, p):
        raise ZeroInitialLoss(f"initial SSD {L0.total:.3e} is at roundoff level")
    inner = (slice(None),) + spec.interior()
    F0 = laplacian(phi0.u, spec)[inner]
    cfg = _with_dt(cfg, ev, plan, phi0.u, F0, L0)
    tr = descend(phi0.u, F0, ev.loss, ev.gradient_u, cfg, plan)
    return Diffeo(spec, tr.u), tr


def _with_dt(cfg, ev, plan, u0, F0, L0):
    if cfg.dt_init is not None or np.abs(F0).max() > 0:
        return cfg
    G = plan.solve_interior(ev.gradient_u(u0))
    return replace(cfg, dt_init=_default_dt(G, L0))


# --- resampled composition --------------------------------------------------


def sampling_matrix(points: np.ndarray, spec: GridSpec) -> sparse.csr_matrix:
    """Sparse ``S`` with ``(S f)[k] = f`` interpolated multilinearly at point ``k``.

    ``points`` has shape ``(dim,) + anything``; points are clamped to the box.
    """
    d = spec.dim
    pts = points.reshape(d, -1)
    m = pts.shape[1]
    base = []
    frac = []
    for a in range(d):
        n = spec.shape[a]
        x = np.clip(pts[a], 0.0, 1.0) * (n - 1)
        i = np.minimum(np.floor(x).astype(np.int64), n - 2)
        base.append(i)
        frac.append(x - i)
    rows = []
    cols = []
    vals = []
    strides = np.array([int(np.prod(spec.shape[a + 1 :])) for a in range(d)])
    for corner in np.ndindex(*(2,) * d):
        w = np.ones(m)
        flat = np.zeros(m, dtype=np.int64)
        for a, c in enumerate(corner):
            w = w * (frac[a] if c else 1.0 - frac[a])
            flat += (base[a] + c) * strides[a]
        rows.append(np.arange(m))
        cols.append(flat)
        vals.append(w)
    S = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(m, spec.size),
    )
    return S


def _apply(S: sparse.csr_matrix, w: np.ndarray, shape: tuple) -> np.ndarray:
    return np.stack([(S @ c.ravel()).reshape(shape) for c in w])


def compose(D: Diffeo, phi: Diffeo) -> Diffeo:
    """``D o phi`` with ``D`` sampled multilinearly at the image points of ``phi``."""
    check_same_spec(D.spec, phi.spec)
    S = sampling_matrix(phi.positions(), phi.spec)
    return Diffeo(phi.spec, phi.u + _apply(S, D.u, phi.spec.shape))


def identity_error(phi: Diffeo) -> float:
    """``max |phi(x) - x|`` over the nodes."""
    return max_pointwise_norm(phi.u, phi.spec)


def construct_path(
    src: Diffeo,
    dst: Diffeo,
    cfg: MinimizerConfig,
    plan: PoissonPlan,
    w0: Optional[np.ndarray] = None,
):
    """Find ``D`` with ``D o src`` matching ``dst`` in JD and curl.

    The start is the small-deformation guess ``w = u_dst - u_src`` unless
    ``w0`` is given.  Returns ``(D, trace)``; ``trace.u`` is ``D``'s
    displacement.
    """
    spec = src.spec
    check_same_spec(spec, dst.spec)
    for name, m in (("source", src), ("target", dst)):
        if np.any(diffops.det_grad_phi(m.u, spec)[spec.interior()] <= 0):
            raise FoldedInput(f"{name} map has non-positive Jacobian determinant")
    p = Prescription.from_diffeo(dst)
    ev = LossEvaluator(spec, p.f0, p.g0)
    S = sampling_matrix(src.positions(), spec)
    ST = S.T.tocsr()
    shape = spec.shape
    inner = spec.interior()
    inner_v = (slice(None),) + inner
    base = src.u
    gbuf = spec.zeros()

    def composite(w):
        return base + _apply(S, w, shape)

    def loss_fn(w):
        return ev.loss(composite(w))

    def grad_fn(w):
        gbuf[inner_v] = ev.gradient_u(composite(w))
        return _apply(ST, gbuf, shape)[inner_v]

    w = dst.u - src.u if w0 is None else np.array(w0, dtype=float)
    L0 = loss_fn(w)
    if L0.total <= _roundoff_floor(ev, p):
        tr = DescentTrace(w, laplacian(w, spec), L0, L0, 0, "already-minimal", 0)
        return Diffeo(spec, w), tr
    F0 = laplacian(w, spec)[inner_v]
    if cfg.dt_init is None and not np.abs(F0).max() > 0:
        cfg = replace(cfg, dt_init=_default_dt(plan.solve_interior(grad_fn(w)), L0))
    tr = descend(w, F0, loss_fn, grad_fn, cfg, plan)
    return Diffeo(spec, tr.u), tr


def construct_inverse(phi: Diffeo, cfg: MinimizerConfig, plan: PoissonPlan):
    """``D`` with ``D o phi`` close to the identity; returns ``(D, trace)``."""
    return construct_path(phi, identity_map(phi.spec), cfg, plan)


@dataclass(frozen=True)
class ConsistencyReport:
    forward_error: float  # max |D1 o B - R|
    backward_error: float  # max |D2 o R - B|
    inverse_consistency: float  # max |D2 o D1 - id|
    transitivity: Optional[float] = None  # max |D4 o D3 - D1|


def path_experiment(
    B: Diffeo,
    R: Diffeo,
    cfg: MinimizerConfig,
    plan: PoissonPlan,
    C: Optional[Diffeo] = None,
) -> ConsistencyReport:
    """Inverse consistency between grids ``B`` and ``R``, and transitivity via ``C``."""
    D1, _ = construct_path(B, R, cfg, plan)
    D2, _ = construct_path(R, B, cfg, plan)
    fwd = max_pointwise_norm(compose(D1, B).positions() - R.positions(), B.spec)
    bwd = max_pointwise_norm(compose(D2, R).positions() - B.positions(), B.spec)
    ic = identity_error(compose(D2, D1))
    trans = None
    if C is not None:
        D3, _ = construct_path(B, C, cfg, plan)
        D4, _ = construct_path(C, R, cfg, plan)
        trans = max_pointwise_norm(compose(D4, D3).u - D1.u, B.spec)
    return ConsistencyReport(fwd, bwd, ic, trans)

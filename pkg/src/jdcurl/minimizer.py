"""Gradient descent on the Poisson control with multiplicative step adaptation.

The loop follows ``shrinkJDandCurl``: a trial control ``F - dt * (A + B)`` is
solved for ``u``; if the loss went down the step is accepted and ``dt`` grows
by ``t_up``, otherwise it is discarded and ``dt`` shrinks by ``t_down``.  The
gradient is only recomputed after an accepted step.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import loss as _loss
from .errors import ZeroInitialLoss
from .grid import GridSpec
from .poisson import PoissonPlan, laplacian

STEP_FLOOR = 1e-300


@dataclass(frozen=True)
class MinimizerConfig:
    ratio_tolerance: float = 1e-12
    dt_init: Optional[float] = None
    t_up: float = 1.01
    t_down: float = 0.99
    max_iters: int = 200_000
    record_trace: bool = True

    def __post_init__(self):
        if not 0 < self.t_down < 1 < self.t_up:
            raise ValueError("need 0 < t_down < 1 < t_up")
        if not 0 < self.ratio_tolerance < 1:
            raise ValueError("ratio_tolerance must lie in (0, 1)")
        if self.dt_init is not None and self.dt_init <= 0:
            raise ValueError("dt_init must be positive")

    @classmethod
    def for_dim(cls, dim: int, **kw) -> "MinimizerConfig":
        """Defaults: tolerance 1e-12 / 200k iterations in 2D, 1e-8 / 50k in 3D."""
        base = dict(ratio_tolerance=1e-12, max_iters=200_000)
        if dim == 3:
            base = dict(ratio_tolerance=1e-8, max_iters=50_000)
        base.update(kw)
        return cls(**base)


@dataclass
class TraceRow:
    iter: int
    loss: float
    l1: float
    l2: float
    ratio: float
    dt: float
    accepted: bool


@dataclass
class DescentTrace:
    u: np.ndarray
    F: np.ndarray
    initial_loss: _loss.LossValue
    final_loss: _loss.LossValue
    iterations: int
    reason: str
    gradient_evaluations: int
    rows: list = field(default_factory=list)

    @property
    def ratio(self) -> float:
        if self.initial_loss.total == 0:
            return 0.0
        return self.final_loss.total / self.initial_loss.total

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.__dict__) + "\n" for r in self.rows)


def ratio(current: _loss.LossValue, initial: _loss.LossValue) -> float:
    if initial.total <= 0:
        raise ZeroInitialLoss("initial loss is zero")
    return current.total / initial.total


def descend(
    u0: np.ndarray,
    F0: np.ndarray,
    loss_fn: Callable[[np.ndarray], _loss.LossValue],
    grad_fn: Callable[[np.ndarray], np.ndarray],
    cfg: MinimizerConfig,
    plan: PoissonPlan,
) -> DescentTrace:
    """Accept/reject descent on a control ``F`` with ``u = solve(F)``.

    ``F0`` holds interior values; ``u`` is always a full field.  ``loss_fn(u)``
    scores a displacement and ``grad_fn(u)`` returns interior dL/du.  The
    control gradient is ``G = solve(dL/du)``, and since ``solve`` is linear the
    trial displacement ``solve(F - dt G)`` is ``u - dt solve(G)``.  That
    double solve is done once per accepted step, so rejected trials cost one
    loss evaluation and nothing else.

    ``u`` is the state that is carried; the control is recovered as
    ``F = lap(u)``, so the pair satisfies ``u = solve(F)`` to solver roundoff
    no matter how many steps were taken.
    """
    spec = plan.spec
    lead = (slice(None),) * (u0.ndim - spec.dim)
    inner = lead + spec.interior()
    F = F0
    u = np.array(u0, dtype=float)
    u_int = u[inner].copy()
    L0 = cur = loss_fn(u)
    if L0.total == 0:
        return DescentTrace(u, _embed(F, u0.shape, inner), L0, L0, 0, "already-minimal", 0)

    trial_u = u.copy()
    dt = cfg.dt_init
    better = True
    n_grad = 0
    rows = []
    r = 1.0
    reason = "max-iters"
    it = 0
    dU = None
    while True:
        if r < cfg.ratio_tolerance:
            reason = "converged"
            break
        if it >= cfg.max_iters:
            break
        if better:
            g = grad_fn(u)
            dU = plan.solve_twice(g)
            n_grad += 1
            if dt is None:
                gmax = np.abs(plan.solve_interior(g)).max()
                dt = 0.1 * np.abs(F).max() / gmax if gmax > 0 else 1.0
        new_int = u_int - dt * dU
        trial_u[inner] = new_int
        trial = loss_fn(trial_u)
        it += 1
        if trial.total < cur.total:
            u_int = new_int
            u, trial_u = trial_u, u
            cur = trial
            r = cur.total / L0.total
            dt *= cfg.t_up
            better = True
        else:
            dt *= cfg.t_down
            better = False
        if cfg.record_trace:
            rows.append(TraceRow(it, cur.total, cur.l1, cur.l2, r, float(dt), better))
        if dt < STEP_FLOOR:
            reason = "step-underflow"
            break
    if it:
        F = laplacian(u, spec)[inner]
    return DescentTrace(u, _embed(F, u0.shape, inner), L0, cur, it, reason, n_grad, rows)


def _embed(x_int: np.ndarray, shape: tuple, inner: tuple) -> np.ndarray:
    out = np.zeros(shape)
    out[inner] = x_int
    return out


def shrink_jd_and_curl(
    u0: np.ndarray, spec: GridSpec, cfg: MinimizerConfig, plan: PoissonPlan
) -> DescentTrace:
    """Minimize the counter-example loss starting from ``phi0 = id + u0``.

    The control starts at ``F = lap(u0)`` so that ``u = solve(F)`` holds from
    the first iteration.
    """
    ev = _loss.LossEvaluator(spec)
    inner = (slice(None),) + spec.interior()
    return descend(
        u0,
        laplacian(u0, spec)[inner],
        ev.loss,
        ev.gradient_u,
        cfg,
        plan,
    )

"""Experiment runner: counter-example searches, noise ensembles, VP runs.

A run is described by an ``ExperimentConfig``.  It can come from an INI file
(``[experiment]`` and ``[deformation]`` sections) with command-line flags
taking precedence.  Every run writes into ``--out``:

    metrics.json   deterministic summary (no wall-clock values)
    timing.json    wall time, kept apart so metrics.json is reproducible
    trace.jsonl    descent trace, one JSON object per iteration
    field_*.dff    fields in the DFF1 format
    render_*.svg   grid pictures (with --render)

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import diffops, io, render, theory, vp
from .errors import BumpTouchesBoundary, JDCurlError
from .grid import (
    CutoffRotation,
    Diffeo,
    GridSpec,
    SkewBump,
    TranslationBump,
    add_gaussian_noise,
    identity_map,
    max_abs,
    max_pointwise_norm,
    synthesize_deformation,
)
from .minimizer import MinimizerConfig, shrink_jd_and_curl
from .poisson import make_plan

MODES = ("counterexample", "ensemble", "vp-construct", "vp-inverse", "theory-suite")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


# --- configuration --------------------------------------------------------


def parse_grid(text: str) -> tuple:
    try:
        shape = tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        raise ConfigError(f"grid {text!r} is not of the form NxN or NxNxN") from None
    if len(shape) not in (2, 3) or min(shape) < 4:
        raise ConfigError(f"grid {text!r}: need 2 or 3 axes with at least 4 nodes")
    return shape


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


def parse_bump(text: str):
    """``rotation CX,CY[,CZ] R ANGLE [AXIS]``, ``translation C R SHIFT`` or ``skew C R SHEAR``."""
    parts = text.split()
    try:
        kind, center, radius = parts[0], _floats(parts[1]), float(parts[2])
        if kind == "rotation":
            axis = int(parts[4]) if len(parts) > 4 else 2
            return CutoffRotation(center, radius, float(parts[3]), axis)
        if kind == "translation":
            return TranslationBump(center, radius, _floats(parts[3]))
        if kind == "skew":
            return SkewBump(center, radius, float(parts[3]))
    except (IndexError, ValueError):
        pass
    raise ConfigError(f"cannot parse deformation {text!r}")


def default_recipe(dim: int) -> tuple:
    return (CutoffRotation((0.5,) * dim, 0.3, 0.4),)


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "counterexample"
    grid: tuple = (64, 64)
    recipe: tuple = ()
    sigma: float = 0.0
    seed: int = 0
    trials: Optional[int] = None
    tol: Optional[float] = None
    max_iters: Optional[int] = None
    out: Path = Path("out")
    render: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}")
        if self.sigma < 0:
            raise ConfigError("sigma must be non-negative")
        if self.trials is not None and self.trials < 2:
            raise ConfigError("an ensemble needs at least 2 trials")
        if self.tol is not None and not 0 < self.tol < 1:
            raise ConfigError("tol must lie in (0, 1)")

    @property
    def spec(self) -> GridSpec:
        return GridSpec(self.grid)

    @property
    def ops(self) -> tuple:
        return self.recipe or default_recipe(len(self.grid))

    def minimizer(self) -> MinimizerConfig:
        kw = {}
        if self.tol is not None:
            kw["ratio_tolerance"] = self.tol
        if self.max_iters is not None:
            kw["max_iters"] = self.max_iters
        return MinimizerConfig.for_dim(len(self.grid), **kw)

    def n_trials(self) -> int:
        if self.trials is not None:
            return self.trials
        return 16 if len(self.grid) == 2 else 8


def load_config(path: Optional[str], overrides: dict) -> ExperimentConfig:
    vals = {}
    if path is not None:
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise ConfigError(f"cannot read config file {path}")
        if cp.has_section("experiment"):
            vals.update(cp["experiment"])
        if cp.has_section("deformation"):
            vals["recipe"] = tuple(parse_bump(v) for _, v in sorted(cp["deformation"].items()))
    vals.update({k: v for k, v in overrides.items() if v is not None})
    conv = {
        "grid": lambda v: parse_grid(v) if isinstance(v, str) else tuple(v),
        "sigma": float,
        "seed": int,
        "trials": int,
        "tol": float,
        "max_iters": int,
        "out": Path,
        "render": lambda v: v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes", "on"),
    }
    kw = {}
    for key, v in vals.items():
        if key not in ExperimentConfig.__dataclass_fields__:
            raise ConfigError(f"unknown setting {key!r}")
        try:
            kw[key] = conv[key](v) if key in conv else v
        except ValueError:
            raise ConfigError(f"bad value for {key}: {v!r}") from None
    return ExperimentConfig(**kw)


# --- metrics --------------------------------------------------------------


@dataclass(frozen=True)
class MetricsRow:
    ratio: float
    max_det: float  # max |det grad u|
    max_curl: float  # max pointwise |curl u|
    max_u: float  # max pointwise |u|
    iterations: int
    reason: str
    wall_time: float = field(default=0.0, compare=False)

    def finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.ratio, self.max_det, self.max_curl, self.max_u))

    def deterministic(self) -> dict:
        d = asdict(self)
        d.pop("wall_time")
        return d


def field_metrics(u: np.ndarray, spec: GridSpec) -> tuple:
    inner = spec.interior()
    inner_v = (slice(None),) * (1 if spec.dim == 3 else 0) + inner
    det = diffops.det_grad_u(u, spec)[inner]
    curl = diffops.curl(u, spec)[inner_v]
    curl_norm = np.abs(curl) if spec.dim == 2 else np.sqrt(np.sum(curl * curl, axis=0))
    return max_abs(det), float(curl_norm.max()), max_pointwise_norm(u, spec)


def initial_field(cfg: ExperimentConfig, seed: Optional[int] = None) -> np.ndarray:
    spec = cfg.spec
    u0 = synthesize_deformation(spec, cfg.ops)
    if cfg.sigma > 0:
        u0 = add_gaussian_noise(u0, spec, cfg.sigma, cfg.seed if seed is None else seed)
    return u0


def run_counterexample(cfg: ExperimentConfig, out: Optional[Path] = None, seed: Optional[int] = None):
    """One descent from the configured ``u0``; returns ``(MetricsRow, trace)``."""
    spec = cfg.spec
    u0 = initial_field(cfg, seed)
    t0 = time.perf_counter()
    tr = shrink_jd_and_curl(u0, spec, cfg.minimizer(), make_plan(spec))
    wall = time.perf_counter() - t0
    if tr.reason == "already-minimal":
        # identity input: nothing to shrink, every metric is zero
        row = MetricsRow(0.0, 0.0, 0.0, 0.0, 0, "ZeroInitialLoss", wall)
    else:
        row = MetricsRow(tr.ratio, *field_metrics(tr.u, spec), tr.iterations, tr.reason, wall)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "trace.jsonl").write_text(tr.to_jsonl())
        io.write_field(u0, spec, out / "field_u0.dff")
        io.write_field(tr.u, spec, out / "field_u.dff")
        if cfg.render:
            _render_pair(spec, u0, tr.u, out)
    return row, tr


def _render_pair(spec: GridSpec, u0: np.ndarray, u: np.ndarray, out: Path) -> None:
    sl = None if spec.dim == 2 else (2, spec.shape[2] // 2)
    ident = identity_map(spec)
    render.render_grid(Diffeo(spec, u0), out / "render_initial.svg", sl)
    render.render_grid(Diffeo(spec, u), out / "render_final.svg", sl, overlay=ident)


@dataclass(frozen=True)
class EnsembleStats:
    count: int
    mean: dict
    variance: dict
    spread: dict  # variance / mean^2

    @classmethod
    def from_rows(cls, rows: Sequence[MetricsRow]) -> "EnsembleStats":
        if len(rows) < 2:
            raise ValueError("need at least 2 trials")
        mean, var, spread = {}, {}, {}
        for key in ("ratio", "max_det", "max_curl", "max_u"):
            x = np.array([getattr(r, key) for r in rows])
            # shift by the first trial: identical trials give exactly zero spread
            d = x - x[0]
            dm = float(np.mean(d))
            m = float(x[0] + dm)
            v = float(np.sum((d - dm) ** 2) / (len(x) - 1))
            mean[key], var[key] = m, v
            spread[key] = v / m**2 if m else 0.0
        return cls(len(rows), mean, var, spread)


def run_ensemble(cfg: ExperimentConfig, out: Optional[Path] = None):
    """Noised repeats with seeds ``seed, seed + 1, ...``; returns ``(stats, rows)``."""
    rows = []
    for k in range(cfg.n_trials()):
        sub = None if out is None else out / f"trial_{k:03d}"
        row, _ = run_counterexample(cfg, sub, seed=cfg.seed + k)
        rows.append(row)
    return EnsembleStats.from_rows(rows), rows


# --- VP modes ---------------------------------------------------------------


def run_vp_construct(cfg: ExperimentConfig, out: Path) -> dict:
    """Prescribe ``(f0, g0)`` from the configured map and rebuild it from id."""
    spec = cfg.spec
    target = Diffeo(spec, synthesize_deformation(spec, cfg.ops))
    p = vp.Prescription.from_diffeo(target)
    mcfg = cfg.minimizer() if cfg.tol is not None else replace(cfg.minimizer(), ratio_tolerance=1e-8)
    phi, tr = vp.minimize_ssd(identity_map(spec), p, mcfg, make_plan(spec))
    det = diffops.det_grad_phi(phi.u, spec)[spec.interior()]
    io.write_field(phi.u, spec, out / "field_phi.dff")
    (out / "trace.jsonl").write_text(tr.to_jsonl())
    if cfg.render:
        sl = None if spec.dim == 2 else (2, spec.shape[2] // 2)
        render.render_grid(phi, out / "render_vp.svg", sl, overlay=target)
    return {
        "ssd_ratio": tr.ratio,
        "max_jd_error": max_abs(det - p.f0[spec.interior()]),
        "max_distance_to_target": max_pointwise_norm(phi.u - target.u, spec),
        "iterations": tr.iterations,
        "reason": tr.reason,
    }


def run_vp_inverse(cfg: ExperimentConfig, out: Path) -> dict:
    spec = cfg.spec
    phi = Diffeo(spec, synthesize_deformation(spec, cfg.ops))
    mcfg = cfg.minimizer() if cfg.tol is not None else replace(cfg.minimizer(), ratio_tolerance=1e-6)
    D, tr = vp.construct_inverse(phi, mcfg, make_plan(spec))
    comp = vp.compose(D, phi)
    io.write_field(D.u, spec, out / "field_inverse.dff")
    (out / "trace.jsonl").write_text(tr.to_jsonl())
    if cfg.render:
        sl = None if spec.dim == 2 else (2, spec.shape[2] // 2)
        render.render_grid(comp, out / "render_composition.svg", sl, overlay=identity_map(spec))
    return {
        "composition_error": vp.identity_error(comp),
        "small_inverse_error": vp.identity_error(vp.compose(Diffeo(spec, -phi.u), phi)),
        "ratio": tr.ratio,
        "iterations": tr.iterations,
        "reason": tr.reason,
    }


# --- entry point -----------------------------------------------------------


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def run(cfg: ExperimentConfig) -> dict:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    if cfg.mode == "counterexample":
        row, _ = run_counterexample(cfg, out)
        metrics = row.deterministic()
    elif cfg.mode == "ensemble":
        stats, rows = run_ensemble(cfg, out)
        metrics = {**asdict(stats), "trials": [r.deterministic() for r in rows]}
    elif cfg.mode == "vp-construct":
        metrics = run_vp_construct(cfg, out)
    elif cfg.mode == "vp-inverse":
        metrics = run_vp_inverse(cfg, out)
    else:
        metrics = theory.run_suite(seed=cfg.seed, dim=len(cfg.grid))
    _dump(out / "metrics.json", metrics)
    _dump(out / "timing.json", {"wall_time": time.perf_counter() - t0})
    return metrics


def _all_finite(obj) -> bool:
    if isinstance(obj, float):
        return math.isfinite(obj)
    if isinstance(obj, dict):
        return all(_all_finite(v) for v in obj.values())
    if isinstance(obj, (list, tuple)):
        return all(_all_finite(v) for v in obj)
    return True


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jdcurl", description=__doc__.split("\n")[0])
    ap.add_argument("--config", help="INI file with [experiment] / [deformation] sections")
    ap.add_argument("--mode", choices=MODES)
    ap.add_argument("--grid", help="NxN or NxNxN")
    ap.add_argument("--tol", type=float, help="ratio tolerance")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--sigma", type=float, help="noise standard deviation")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--max-iters", dest="max_iters", type=int)
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--render", action="store_true", default=None, help="write SVG grid pictures")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k != "config"}
    try:
        cfg = load_config(args.config, overrides)
        cfg.spec  # validates the grid
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        metrics = run(cfg)
    except BumpTouchesBoundary as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (JDCurlError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if not _all_finite(metrics):
        print("numerical failure: non-finite metric", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps(metrics, sort_keys=True))
    return EXIT_OK

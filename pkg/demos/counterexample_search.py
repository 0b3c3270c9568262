"""Look for a non-trivial map with unit JD and zero curl.

Start from a cut-off rotation of the unit square, which has a JD close to 1
but a large curl, and let the descent shrink both residuals.  If a non-zero
``u`` with ``det(grad(id + u)) = 1`` and ``curl u = 0`` existed nearby, the
descent could settle on it.  What happens instead is that ``u`` itself goes to
zero as the loss does, roughly like the square root of the loss ratio.

    python demos/counterexample_search.py [N] [out_dir]
"""
import sys
import time
from pathlib import Path

import numpy as np

from jdcurl import render
from jdcurl.grid import CutoffRotation, Diffeo, GridSpec, identity_map, l2_norm_field, synthesize_deformation
from jdcurl.harness import field_metrics
from jdcurl.minimizer import MinimizerConfig, shrink_jd_and_curl
from jdcurl.poisson import make_plan

n = int(sys.argv[1]) if len(sys.argv) > 1 else 48
out = Path(sys.argv[2]) if len(sys.argv) > 2 else Path("demo_out")
out.mkdir(parents=True, exist_ok=True)

spec = GridSpec.cube(n)
plan = make_plan(spec)
u0 = synthesize_deformation(spec, [CutoffRotation((0.5, 0.5), 0.3, 0.4)])
det0, curl0, size0 = field_metrics(u0, spec)
print(f"grid {n}x{n}; start: max|det grad u| {det0:.3e}, max|curl u| {curl0:.3e}, max|u| {size0:.3e}")

# Tighter tolerances give smaller u.  Each run starts again from u0.
print(f"{'tol':>8} {'iters':>8} {'ratio':>10} {'max|det|':>10} {'max|curl|':>10} {'max|u|':>10} {'||u||':>10}")
rows = []
for tol in (1e-4, 1e-6, 1e-8, 1e-10):
    t0 = time.perf_counter()
    tr = shrink_jd_and_curl(u0, spec, MinimizerConfig(ratio_tolerance=tol, max_iters=2_000_000, record_trace=False), plan)
    det, curl, size = field_metrics(tr.u, spec)
    rows.append((tol, l2_norm_field(tr.u, spec)))
    print(f"{tol:8.0e} {tr.iterations:8d} {tr.ratio:10.2e} {det:10.2e} {curl:10.2e} {size:10.2e} {rows[-1][1]:10.2e}"
          f"   ({time.perf_counter() - t0:.1f} s)")

slope = np.polyfit(np.log10([r[0] for r in rows]), np.log10([r[1] for r in rows]), 1)[0]
print(f"log ||u|| against log tol: slope {slope:.2f} (0.5 would be ||u|| ~ sqrt(loss))")

# The last run drawn over the identity lattice: the two are indistinguishable.
render.render_grid(Diffeo(spec, u0), out / "start.svg")
render.render_grid(Diffeo(spec, tr.u), out / "final_over_identity.svg", overlay=identity_map(spec))
print(f"pictures in {out}/")

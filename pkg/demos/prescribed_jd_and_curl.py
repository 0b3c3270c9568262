"""Build maps from a prescribed Jacobian determinant and curl.

Read ``(f0, g0)`` off a known map ``phi*`` and rebuild a map from the identity
by minimizing the sum of squared differences.  Then keep ``f0`` and swap in
the curl of the opposite rotation: the JD of the result hardly changes, but
the map turns the other way.  The JD alone does not pin down a grid.

    python demos/prescribed_jd_and_curl.py [N] [out_dir]
"""
import sys
from pathlib import Path

import numpy as np

from jdcurl import diffops, render, vp
from jdcurl.grid import CutoffRotation, Diffeo, GridSpec, identity_map, max_pointwise_norm, synthesize_deformation
from jdcurl.minimizer import MinimizerConfig
from jdcurl.poisson import make_plan

n = int(sys.argv[1]) if len(sys.argv) > 1 else 48
out = Path(sys.argv[2]) if len(sys.argv) > 2 else Path("demo_out")
out.mkdir(parents=True, exist_ok=True)

spec = GridSpec.cube(n)
plan = make_plan(spec)
inner = spec.interior()
cfg = MinimizerConfig(ratio_tolerance=1e-8)

star = Diffeo(spec, synthesize_deformation(spec, [CutoffRotation((0.5, 0.5), 0.3, 0.5)]))
p = vp.Prescription.from_diffeo(star)
rep = vp.check_admissible(p)
print(f"prescription from phi*: mean(f0) - 1 = {rep.mean_deviation:.1e}, min f0 = {rep.min_f0:.3f}")

phi, tr = vp.minimize_ssd(identity_map(spec), p, cfg, plan)
det = diffops.det_grad_phi(phi.u, spec)
print(f"round trip: {tr.iterations} iterations, SSD ratio {tr.ratio:.1e}, "
      f"max |det - f0| {np.abs(det - p.f0)[inner].max():.1e}, max |phi - phi*| {max_pointwise_norm(phi.u - star.u, spec):.1e}")
render.render_grid(phi, out / "vp_round_trip.svg", overlay=star)

# Same JD, curl of the mirrored rotation.
other = synthesize_deformation(spec, [CutoffRotation((0.5, 0.5), 0.3, -0.5)])
q = vp.Prescription(spec, p.f0, diffops.curl(other, spec))
psi, _ = vp.minimize_ssd(identity_map(spec), q, cfg, plan)
d_det = np.abs(diffops.det_grad_phi(psi.u, spec) - det)[inner].max()
d_curl = np.abs(diffops.curl(psi.u, spec) - diffops.curl(phi.u, spec))[inner].max()
print(f"swapped curl: JDs differ by {d_det:.1e}, curls by {d_curl:.2f}, maps by {max_pointwise_norm(psi.u - phi.u, spec):.3f}")
render.render_grid(psi, out / "vp_swapped_curl.svg", overlay=phi)
print(f"pictures in {out}/")

"""Inverse maps and grid-to-grid paths.

For small displacements the inverse of ``id + u`` is ``id - u``.  That guess
is good to first order only, so the inverse is refined by asking for a map D
whose composition with phi has unit JD and zero curl.  The same machinery
connects two deformed grids B and R, and a detour through a third grid C
lands close to the direct path.

    python demos/inverses_and_paths.py [N]
"""
import sys
import time

from jdcurl import vp
from jdcurl.grid import CutoffRotation, Diffeo, GridSpec, SkewBump, TranslationBump, synthesize_deformation
from jdcurl.minimizer import MinimizerConfig
from jdcurl.poisson import make_plan

n = int(sys.argv[1]) if len(sys.argv) > 1 else 48
spec = GridSpec.cube(n)
plan = make_plan(spec)

phi = Diffeo(spec, synthesize_deformation(spec, [CutoffRotation((0.5, 0.5), 0.3, 0.4)]))
naive = vp.identity_error(vp.compose(Diffeo(spec, -phi.u), phi))
t0 = time.perf_counter()
D, tr = vp.construct_inverse(phi, MinimizerConfig(ratio_tolerance=1e-6, max_iters=50_000), plan)
print(f"max |D(phi(x)) - x|: id - u gives {naive:.2e}, constructed D gives "
      f"{vp.identity_error(vp.compose(D, phi)):.2e} ({tr.iterations} iterations, {time.perf_counter() - t0:.1f} s)")

B = Diffeo(spec, synthesize_deformation(spec, [CutoffRotation((0.45, 0.5), 0.3, 0.35)]))
R = Diffeo(spec, synthesize_deformation(spec, [TranslationBump((0.55, 0.5), 0.3, (0.03, 0.02))]))
C = Diffeo(spec, synthesize_deformation(spec, [SkewBump((0.5, 0.5), 0.3, 0.15)]))
rep = vp.path_experiment(B, R, MinimizerConfig(ratio_tolerance=1e-4), plan, C)
print(f"B -> R misses by {rep.forward_error:.2e}, R -> B by {rep.backward_error:.2e}")
print(f"(R -> B) o (B -> R) is {rep.inverse_consistency:.2e} from the identity")
print(f"B -> C -> R differs from B -> R by {rep.transitivity:.2e}")

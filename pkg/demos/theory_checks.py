"""The ingredients of the small-deformation uniqueness argument, measured.

Green's formula, the Poincare inequality with the discrete constant, and the
shrinking bound sequence.  All three are checks on the discrete operators used
everywhere else in the package.

    python demos/theory_checks.py
"""
import json
import math

from jdcurl import theory
from jdcurl.grid import GridSpec

rep = theory.run_suite(seed=0, trials=1000, n=33)
for name in ("greens_sine", "greens_bump"):
    r = rep[name]
    print(name, "residuals", ", ".join(f"{x:.2e}" for x in r["residuals"]),
          "orders", ", ".join(f"{o:.2f}" for o in r["orders"]))

for n in (17, 65, 257):
    C = theory.estimate_poincare_constant(GridSpec.cube(n))
    print(f"Poincare constant on {n}x{n}: {C:.6f} (limit 1/(2 pi^2) = {1 / (2 * math.pi**2):.6f})")
print(json.dumps(rep["poincare"], indent=2))

spec = GridSpec.cube(33)
C = theory.estimate_poincare_constant(spec)
eps = 0.5 * min(1.0, 1.0 / math.sqrt(C))
seq = theory.BoundSequence.build(C, eps, 6)
for n, b in enumerate(seq.bounds):
    print(f"step {n}: ||u|| < {b.l2_u:.2e}, ||grad u|| < {b.l2_grad_u:.2e}, ||lap u|| < {b.l2_lap_u:.2e}")

"""Discrete Jacobian-determinant / curl experiments on uniform grids.

Submodules:

``grid``       grids, displacement fields, synthetic bumps, norms
``diffops``    gradient, divergence, curl and determinant stencils
``poisson``    DST-based Dirichlet Poisson solver
``loss``       JD/curl residual loss and its exact discrete gradient
``minimizer``  accept/reject descent on the Poisson control
``vp``         construction of maps with prescribed JD and curl
``theory``     numerical checks of the small-deformation estimates
``io``         DFF1 field files
``render``     SVG grid rendering
``harness``    experiment runner and command line
"""
from .errors import JDCurlError
from .grid import Diffeo, GridSpec, identity_map, synthesize_deformation
from .minimizer import MinimizerConfig, shrink_jd_and_curl
from .poisson import make_plan, solve_poisson

__version__ = "0.1.0"

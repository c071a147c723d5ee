"""First-order system least-squares solver for the 2D Helmholtz equation.

The Helmholtz problem -Laplace(u) - k^2 u = f with the Robin condition
du/dn - sigma i k u = g is rewritten as a first-order system in
(phi, u) = (i grad(u)/k, u) and discretized by minimizing the L2 residual
over a Raviart-Thomas x continuous-Lagrange pair, which yields a complex
Hermitian positive definite system at every wave number.
"""

__version__ = "0.1.0"

from .assembly import FoslsSystem, ProblemSpec, assemble, residual_functional
from .estimator import FoslsHelmholtz
from .manufactured import (
    ExactSolution,
    bessel_exact,
    bessel_j0,
    bessel_j1,
    polynomial_exact,
)
from .mesh import AffineMap, DomainBox, Mesh, build_uniform_mesh, element_map, mesh_for_condition
from .metrics import ErrorReport, compute_errors, coercivity_probe, sample_grid, sample_trace
from .solve import SolveReport, solve_cg, solve_direct, solve_system
from .space import FESpacePair, boundary_dofs, build_spaces

__all__ = [
    "__version__",
    "AffineMap",
    "DomainBox",
    "ErrorReport",
    "ExactSolution",
    "FESpacePair",
    "FoslsHelmholtz",
    "FoslsSystem",
    "Mesh",
    "ProblemSpec",
    "SolveReport",
    "assemble",
    "bessel_exact",
    "bessel_j0",
    "bessel_j1",
    "boundary_dofs",
    "build_spaces",
    "build_uniform_mesh",
    "compute_errors",
    "coercivity_probe",
    "element_map",
    "mesh_for_condition",
    "polynomial_exact",
    "residual_functional",
    "sample_grid",
    "sample_trace",
    "solve_cg",
    "solve_direct",
    "solve_system",
]

"""Error norms, field sampling, and the discrete coercivity probe."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import assembly
from .mesh import Mesh, locate_points
from .solve import CholeskyFactor
from .space import FESpacePair

__all__ = [
    "ErrorReport",
    "compute_errors",
    "evaluate_u",
    "evaluate_phi",
    "sample_trace",
    "sample_grid",
    "coercivity_probe",
]


@dataclass(frozen=True)
class ErrorReport:
    """Relative L2 errors and the least-squares residual of one solve."""

    rel_err_u: float
    rel_err_phi: float
    fosls_residual: float
    ndof: int
    h: float
    k: float
    p_plus_1: int
    kh_over_p: float

    def as_dict(self) -> dict:
        return asdict(self)


def _l2(wq, values) -> float:
    if values.ndim == 3:  # vector field
        return float(np.sqrt(np.sum(wq * np.einsum("eqd,eqd->eq", values, np.conj(values)).real)))
    return float(np.sqrt(np.sum(wq * np.abs(values) ** 2)))


def compute_errors(mesh: Mesh, spaces: FESpacePair, coeff, exact) -> ErrorReport:
    """Relative L2(Omega) errors of (u_h, phi_h) against an exact pair.

    Uses the same quadrature policy as assembly, so the reported residual
    ties exactly to the assembled quadratic form.
    """
    tables = assembly.element_tables(mesh, spaces)
    btables = assembly.boundary_tables(mesh, spaces)
    fh = assembly.discrete_fields(mesh, spaces, coeff, tables, btables)
    fe = assembly.exact_fields(mesh, spaces, exact, tables, btables)
    norm_u = _l2(tables.wq, fe.u)
    norm_phi = _l2(tables.wq, fe.phi)
    err_u = _l2(tables.wq, fh.u - fe.u)
    err_phi = _l2(tables.wq, fh.phi - fe.phi)
    prob = assembly.ProblemSpec.from_exact(exact)
    residual = assembly.residual_quadrature(mesh, spaces, coeff, prob)
    return ErrorReport(
        rel_err_u=err_u / norm_u,
        rel_err_phi=err_phi / norm_phi,
        fosls_residual=residual,
        ndof=spaces.n_dof,
        h=mesh.h,
        k=exact.k,
        p_plus_1=spaces.order,
        kh_over_p=exact.k * mesh.h / spaces.order,
    )


def evaluate_u(mesh: Mesh, spaces: FESpacePair, coeff, points) -> np.ndarray:
    """Point values of the scalar solution u_h."""
    tri, ref = locate_points(mesh, points)
    _, cW = spaces.split(np.asarray(coeff, dtype=complex))
    vals = spaces.lagrange.eval(ref)  # (nbw, npts)
    return np.einsum("ip,pi->p", vals, cW[spaces.w_map[tri]])


def evaluate_phi(mesh: Mesh, spaces: FESpacePair, coeff, points) -> np.ndarray:
    """Point values of the flux phi_h; shape (npts, 2)."""
    tri, ref = locate_points(mesh, points)
    cV, _ = spaces.split(np.asarray(coeff, dtype=complex))
    vals = spaces.rt.eval(ref)  # (nbv, npts, 2)
    phys = np.einsum("pdc,ipc->ipd", mesh.B[tri] / mesh.detB[tri, None, None], vals)
    signed_coeff = cV[spaces.v_map[tri]] * spaces.v_sign[tri]
    return np.einsum("pi,ipd->pd", signed_coeff, phys)


def sample_trace(mesh: Mesh, spaces: FESpacePair, coeff, y: float, m: int) -> np.ndarray:
    """m equispaced samples of u_h along the line y = const.

    Returns rows (x, Re u_h, Im u_h).
    """
    box = mesh.box
    if not box.ymin <= y <= box.ymax:
        raise ValueError(f"line y={y} outside the domain")
    if m < 2:
        raise ValueError("need at least 2 samples")
    xs = np.linspace(box.xmin, box.xmax, m)
    pts = np.stack([xs, np.full(m, float(y))], axis=1)
    uh = evaluate_u(mesh, spaces, coeff, pts)
    return np.stack([xs, uh.real, uh.imag], axis=1)


def sample_grid(mesh: Mesh, spaces: FESpacePair, coeff, m: int) -> np.ndarray:
    """m x m grid samples of u_h over the box; rows (x, y, Re, Im)."""
    if m < 2:
        raise ValueError("need at least 2 samples per direction")
    box = mesh.box
    xs = np.linspace(box.xmin, box.xmax, m)
    ys = np.linspace(box.ymin, box.ymax, m)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    uh = evaluate_u(mesh, spaces, coeff, pts)
    return np.stack([pts[:, 0], pts[:, 1], uh.real, uh.imag], axis=1)


def coercivity_probe(
    mesh: Mesh,
    spaces: FESpacePair,
    k: float,
    sigma: int,
    rtol: float = 1e-8,
    maxit: int = 500,
    max_dofs: int = 200_000,
    seed: int = 1234,
) -> float:
    """Smallest eigenvalue of B x = lambda M x on the discrete pair.

    ``M`` is the Gram matrix of ||phi||^2 + ||u||^2 + k ||phi.n + sigma
    u||^2; wave-number-uniform coercivity of the least-squares form means
    this eigenvalue stays bounded away from zero as k grows.  Computed by
    shift-invert Lanczos (Krylov-accelerated inverse iteration) around
    zero, applying B^{-1} through its Cholesky factorization; plain power
    iteration stalls on the clustered low end of the pencil spectrum.
    """
    from scipy.sparse.linalg import LinearOperator, eigsh
    from scipy.sparse.linalg import ArpackNoConvergence

    if spaces.n_dof > max_dofs:
        raise ValueError(
            f"probe configuration has {spaces.n_dof} DOFs, above the cap {max_dofs}"
        )
    zero_f = lambda pts: np.zeros(np.asarray(pts).shape[:-1], dtype=complex)
    zero_g = lambda pts, nrm: np.zeros(np.asarray(pts).shape[:-1], dtype=complex)
    prob = assembly.ProblemSpec(k=k, sigma=sigma, f=zero_f, g=zero_g)
    B = assembly.assemble(mesh, spaces, prob).matrix
    M = assembly.assemble_gram(mesh, spaces, k, sigma)
    CholeskyFactor(M)  # M must itself be Hermitian positive definite
    factor = CholeskyFactor(B)
    op = LinearOperator(
        B.shape, matvec=lambda v: factor.solve(np.asarray(v, dtype=complex)), dtype=complex
    )
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(spaces.n_dof) + 1j * rng.standard_normal(spaces.n_dof)
    try:
        lam = eigsh(
            B,
            k=1,
            M=M,
            sigma=0.0,
            which="LM",
            OPinv=op,
            v0=v0,
            tol=rtol,
            maxiter=maxit,
            return_eigenvectors=False,
        )
    except ArpackNoConvergence as exc:
        raise RuntimeError(
            f"coercivity probe did not converge within {maxit} inverse iterations"
        ) from exc
    return float(lam[0])

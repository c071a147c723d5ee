"""Solvers for the complex Hermitian positive definite system.

Direct solves go through CHOLMOD (via cvxopt), which factors the matrix
as L L^H and raises on a non-positive pivot; the iterative path is plain
conjugate gradients in the complex Hermitian inner product with Jacobi
preconditioning.  Both report the final relative residual.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import cvxopt
import cvxopt.cholmod
import numpy as np
import scipy.sparse as sps

__all__ = [
    "SolveReport",
    "SolverError",
    "NotPositiveDefiniteError",
    "MaxIterationsError",
    "solve_direct",
    "solve_cg",
    "solve_system",
    "CholeskyFactor",
]


class SolverError(Exception):
    pass


class NotPositiveDefiniteError(SolverError):
    """Cholesky hit a non-positive pivot: the matrix is not HPD."""


class MaxIterationsError(SolverError):
    """CG ran out of iterations; carries the best iterate found."""

    def __init__(self, message, best, residual, iterations):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SolveReport:
    method: str
    iterations: int
    relative_residual: float
    wall_time: float


def _as_cvxopt(matrix: sps.spmatrix) -> cvxopt.spmatrix:
    coo = matrix.tocoo()
    data = np.asarray(coo.data, dtype=complex)
    return cvxopt.spmatrix(
        data, coo.row.astype(int), coo.col.astype(int), size=coo.shape
    )


class CholeskyFactor:
    """Reusable CHOLMOD factorization of a Hermitian PD sparse matrix."""

    def __init__(self, matrix: sps.spmatrix):
        if matrix.shape[0] != matrix.shape[1]:
            raise SolverError("matrix must be square")
        K = _as_cvxopt(matrix)
        try:
            self._factor = cvxopt.cholmod.symbolic(K)
            cvxopt.cholmod.numeric(K, self._factor)
        except ArithmeticError as exc:
            raise NotPositiveDefiniteError(
                "Cholesky factorization failed: matrix is not positive definite"
            ) from exc
        self.shape = matrix.shape

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=complex)
        if rhs.shape != (self.shape[0],):
            raise SolverError(
                f"rhs length {rhs.shape} does not match matrix size {self.shape[0]}"
            )
        b = cvxopt.matrix(rhs)
        cvxopt.cholmod.solve(self._factor, b)
        return np.array(b).ravel()


def _relative_residual(matrix, x, rhs):
    nrm = np.linalg.norm(rhs)
    if nrm == 0.0:
        return float(np.linalg.norm(matrix @ x))
    return float(np.linalg.norm(matrix @ x - rhs) / nrm)


def solve_direct(sys, tol: float = 1e-10):
    """Cholesky solve; raises if the final relative residual exceeds ``tol``."""
    matrix, rhs = sys.matrix, sys.rhs
    start = time.perf_counter()
    factor = CholeskyFactor(matrix)
    x = factor.solve(rhs)
    res = _relative_residual(matrix, x, rhs)
    wall = time.perf_counter() - start
    if res > tol:
        raise SolverError(
            f"direct solve residual {res:.3e} above tolerance {tol:.1e} "
            "(severe ill-conditioning)"
        )
    return x, SolveReport("direct", 0, res, wall)


def solve_cg(sys, tol: float = 1e-10, maxit: int = 10_000):
    """Jacobi-preconditioned conjugate gradients in the x^H y inner product."""
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    matrix, rhs = sys.matrix, sys.rhs
    start = time.perf_counter()
    diag = matrix.diagonal().real
    if np.any(diag <= 0):
        raise NotPositiveDefiniteError("matrix has non-positive diagonal entries")
    inv_diag = 1.0 / diag

    x = np.zeros_like(rhs)
    r = rhs.copy()
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        return x, SolveReport("cg", 0, 0.0, time.perf_counter() - start)
    z = inv_diag * r
    p = z.copy()
    rz = np.vdot(r, z).real
    best_x, best_res = x.copy(), 1.0
    for it in range(1, maxit + 1):
        Ap = matrix @ p
        alpha = rz / np.vdot(p, Ap).real
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / rhs_norm
        if res < best_res:
            best_res, best_x = res, x.copy()
        if res <= tol:
            return x, SolveReport("cg", it, float(res), time.perf_counter() - start)
        z = inv_diag * r
        rz_new = np.vdot(r, z).real
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise MaxIterationsError(
        f"CG did not reach {tol:.1e} within {maxit} iterations "
        f"(best residual {best_res:.3e})",
        best=best_x,
        residual=best_res,
        iterations=maxit,
    )


#: above this many stored nonzeros the automatic path switches to CG
DIRECT_NNZ_BUDGET = 20_000_000


def solve_system(sys, method: str = "auto", tol: float = 1e-10, maxit: int = 10_000):
    """Dispatch to the direct or iterative solver."""
    if method == "auto":
        method = "direct" if sys.matrix.nnz <= DIRECT_NNZ_BUDGET else "cg"
    if method == "direct":
        return solve_direct(sys, tol=tol)
    if method == "cg":
        return solve_cg(sys, tol=tol, maxit=maxit)
    raise ValueError(f"unknown solver method {method!r}")

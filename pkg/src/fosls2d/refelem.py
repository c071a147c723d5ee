"""Reference-triangle machinery: quadrature, scalar and H(div) bases, Piola.

The reference triangle is {(x, y) : x, y >= 0, x + y <= 1}.  Local edge
``i`` is opposite vertex ``i`` and is traversed counterclockwise, i.e.

    edge 0: (1,0) -> (0,1)   (hypotenuse, length sqrt(2))
    edge 1: (0,1) -> (0,0)
    edge 2: (0,0) -> (1,0)

Scalar elements are nodal Lagrange of order ``p+1``.  Vector elements are
Raviart-Thomas of order ``p+1``: full vector polynomials of degree p+1
plus the radial bubble ``x * (homogeneous degree p+1)``.  The RT degrees
of freedom are edge moments of the normal trace against shifted Legendre
polynomials plus interior moments against vector polynomials one degree
down; the basis is recovered by inverting the functional/span Vandermonde.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import eval_legendre, roots_jacobi, roots_legendre

__all__ = [
    "QuadratureRule",
    "EdgeQuadratureRule",
    "LagrangeBasis",
    "RTBasis",
    "triangle_quadrature",
    "edge_quadrature",
    "lagrange_basis",
    "rt_basis",
    "piola_push",
    "rt_interpolate",
    "quadrature_degree",
    "REF_VERTICES",
    "REF_EDGE_VERTICES",
    "REF_EDGE_NORMALS",
    "REF_EDGE_LENGTHS",
    "edge_points",
    "shifted_legendre",
]

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
REF_EDGE_VERTICES = ((1, 2), (2, 0), (0, 1))
REF_EDGE_NORMALS = np.array(
    [[1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)], [-1.0, 0.0], [0.0, -1.0]]
)
REF_EDGE_LENGTHS = np.array([np.sqrt(2.0), 1.0, 1.0])

_MAX_DEGREE = 60


def quadrature_degree(p_plus_1: int) -> int:
    """Volume/edge exactness used throughout assembly for order ``p+1``.

    Integrands pair degree-(p+2) basis polynomials with each other and with
    smooth data; the +4 margin keeps the data-consistency error below the
    discretization error at all tested (k, h, p).
    """
    return 2 * (p_plus_1 + 1) + 4


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature on the reference triangle (weights sum to 1/2)."""

    points: np.ndarray
    weights: np.ndarray
    exact_degree: int


@dataclass(frozen=True)
class EdgeQuadratureRule:
    """Gauss-Legendre quadrature on [0, 1] (weights sum to 1)."""

    points: np.ndarray
    weights: np.ndarray
    exact_degree: int


@lru_cache(maxsize=None)
def triangle_quadrature(degree: int) -> QuadratureRule:
    """Collapsed (Duffy) Gauss rule exact for polynomials of ``degree``.

    Tensorizes Gauss-Legendre in the first square coordinate with
    Gauss-Jacobi (weight 1-eta) in the second, mapped by
    ``x = xi (1 - eta), y = eta``; the Jacobi weight absorbs the Jacobian.
    """
    if degree < 0:
        raise ValueError("quadrature degree must be nonnegative")
    if degree > _MAX_DEGREE:
        raise ValueError(f"quadrature degree {degree} above cap {_MAX_DEGREE}")
    n = degree // 2 + 1
    xg, wg = roots_legendre(n)
    xi = (xg + 1.0) / 2.0
    wxi = wg / 2.0
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    eta = (xj + 1.0) / 2.0
    weta = wj / 4.0
    X = np.outer(xi, 1.0 - eta).ravel()
    Y = np.tile(eta, n)
    W = np.outer(wxi, weta).ravel()
    return QuadratureRule(np.stack([X, Y], axis=1), W, degree)


@lru_cache(maxsize=None)
def edge_quadrature(degree: int) -> EdgeQuadratureRule:
    if degree < 0:
        raise ValueError("quadrature degree must be nonnegative")
    if degree > _MAX_DEGREE:
        raise ValueError(f"quadrature degree {degree} above cap {_MAX_DEGREE}")
    n = degree // 2 + 1
    xg, wg = roots_legendre(n)
    return EdgeQuadratureRule((xg + 1.0) / 2.0, wg / 2.0, degree)


def shifted_legendre(m: int, t: np.ndarray) -> np.ndarray:
    """Orthonormal Legendre polynomial of degree m on [0, 1]; odd degrees
    flip under t -> 1 - t, which is what the edge-orientation signs rely on."""
    return np.sqrt(2.0 * m + 1.0) * eval_legendre(m, 2.0 * np.asarray(t) - 1.0)


# -- monomial helpers ----------------------------------------------------------


def _monomial_exponents(max_degree: int) -> np.ndarray:
    exps = [
        (a, total - a)
        for total in range(max_degree + 1)
        for a in range(total, -1, -1)
    ]
    return np.array(exps, dtype=np.int64)


def _mono_eval(exps: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Values of each monomial at each point; shape (n_pts, n_mono)."""
    x = pts[:, 0][:, None]
    y = pts[:, 1][:, None]
    return x ** exps[:, 0][None, :] * y ** exps[:, 1][None, :]


def _mono_grad(exps: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Gradients of each monomial at each point; shape (n_pts, n_mono, 2)."""
    x = pts[:, 0][:, None]
    y = pts[:, 1][:, None]
    a = exps[:, 0][None, :]
    b = exps[:, 1][None, :]
    gx = np.where(a > 0, a * x ** np.maximum(a - 1, 0) * y ** b, 0.0)
    gy = np.where(b > 0, b * x ** a * y ** np.maximum(b - 1, 0), 0.0)
    return np.stack([gx, gy], axis=2)


def edge_points(local_edge: int, t: np.ndarray) -> np.ndarray:
    a = REF_VERTICES[REF_EDGE_VERTICES[local_edge][0]]
    b = REF_VERTICES[REF_EDGE_VERTICES[local_edge][1]]
    return a[None, :] + np.asarray(t)[:, None] * (b - a)[None, :]


# -- Lagrange basis -----------------------------------------------------------


class LagrangeBasis:
    """Nodal scalar basis of order ``p+1`` on the reference triangle.

    Node order: the 3 vertices, then ``p`` equispaced interior nodes per
    edge (edge-major, along the counterclockwise traversal), then interior
    lattice nodes.  Basis functions are dual to point evaluation at the
    nodes.
    """

    def __init__(self, p_plus_1: int):
        q = p_plus_1
        if q < 1:
            raise ValueError("order must be >= 1")
        self.order = q
        nodes = [tuple(v) for v in REF_VERTICES]
        for e in range(3):
            a = REF_VERTICES[REF_EDGE_VERTICES[e][0]]
            b = REF_VERTICES[REF_EDGE_VERTICES[e][1]]
            for i in range(1, q):
                nodes.append(tuple(a + (i / q) * (b - a)))
        interior = [
            (i / q, j / q)
            for j in range(1, q)
            for i in range(1, q - j)
        ]
        nodes.extend(interior)
        self.nodes = np.array(nodes)
        self.dim = len(nodes)
        self.n_edge_dofs = q - 1
        self.n_interior_dofs = len(interior)
        assert self.dim == (q + 1) * (q + 2) // 2

        self._exps = _monomial_exponents(q)
        V = _mono_eval(self._exps, self.nodes)
        self._coeff = np.linalg.inv(V)  # column j = monomial coefficients of basis j

    def eval(self, pts: np.ndarray) -> np.ndarray:
        """Basis values; shape (dim, n_pts)."""
        return (_mono_eval(self._exps, pts) @ self._coeff).T

    def grad(self, pts: np.ndarray) -> np.ndarray:
        """Basis gradients; shape (dim, n_pts, 2)."""
        G = _mono_grad(self._exps, pts)
        return np.einsum("pmd,mj->jpd", G, self._coeff)


@lru_cache(maxsize=None)
def lagrange_basis(p_plus_1: int) -> LagrangeBasis:
    if not 1 <= p_plus_1 <= 4:
        raise ValueError(f"supported orders are 1..4, got {p_plus_1}")
    return LagrangeBasis(p_plus_1)


# -- Raviart-Thomas basis ------------------------------------------------------


class RTBasis:
    """Raviart-Thomas basis of order ``q = p+1`` on the reference triangle.

    Span: 2 * dim(P_q) vector monomials plus q+1 radial fields
    ``x * x^a y^b`` with a+b = q; total dimension (q+1)(q+3).  Degrees of
    freedom, in order: for each edge, moments of the outward normal trace
    against shifted Legendre polynomials of degree 0..q (edge-major), then
    interior moments against the vector monomials of P_{q-1}^2.
    """

    #: construction fails above this Vandermonde condition number
    COND_LIMIT = 1e10

    def __init__(self, p_plus_1: int):
        q = p_plus_1
        if q < 1:
            raise ValueError("order must be >= 1")
        self.order = q
        self.n_edge_dofs = q + 1
        self.n_interior_dofs = q * (q + 1)
        self.dim = 3 * self.n_edge_dofs + self.n_interior_dofs
        assert self.dim == (q + 1) * (q + 3)

        self._exps_full = _monomial_exponents(q + 1)  # components live here
        self._exps_div = _monomial_exponents(q)
        nm = len(self._exps_full)
        exps_q = _monomial_exponents(q)

        # span functions as monomial coefficient rows (SX, SY) and their
        # divergences (SD)
        n_span = 2 * len(exps_q) + (q + 1)
        SX = np.zeros((n_span, nm))
        SY = np.zeros((n_span, nm))
        SD = np.zeros((n_span, len(self._exps_div)))
        full_index = {tuple(e): i for i, e in enumerate(self._exps_full)}
        div_index = {tuple(e): i for i, e in enumerate(self._exps_div)}
        s = 0
        for a, b in exps_q:
            SX[s, full_index[(a, b)]] = 1.0
            if a > 0:
                SD[s, div_index[(a - 1, b)]] = a
            s += 1
        for a, b in exps_q:
            SY[s, full_index[(a, b)]] = 1.0
            if b > 0:
                SD[s, div_index[(a, b - 1)]] = b
            s += 1
        for a in range(q, -1, -1):
            b = q - a
            SX[s, full_index[(a + 1, b)]] = 1.0
            SY[s, full_index[(a, b + 1)]] = 1.0
            SD[s, div_index[(a, b)]] = q + 2  # div(x * x^a y^b), a+b=q
            s += 1
        assert s == n_span == self.dim

        # L2-orthonormalize the span before inverting against the DOFs;
        # raw monomials condition the Vandermonde at ~1e8 for q = 4
        rule = triangle_quadrature(2 * (q + 1))
        mono = _mono_eval(self._exps_full, rule.points)
        vx = mono @ SX.T
        vy = mono @ SY.T
        G = (vx * rule.weights[:, None]).T @ vx + (vy * rule.weights[:, None]).T @ vy
        try:
            L = np.linalg.cholesky(G)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(
                f"RT order {q}: span is linearly dependent (Gram not SPD)"
            ) from exc
        A = np.linalg.inv(L)
        self._SX, self._SY, self._SD = A @ SX, A @ SY, A @ SD

        # interior moments taken against L2-orthonormal scalar polynomials
        # instead of raw monomials, again for conditioning
        exps_int = _monomial_exponents(q - 1)
        mono_int = _mono_eval(exps_int, rule.points)
        Gi = (mono_int * rule.weights[:, None]).T @ mono_int
        self._interior_weights = np.linalg.inv(np.linalg.cholesky(Gi))

        M = self._functional_matrix()
        cond = np.linalg.cond(M)
        if cond > self.COND_LIMIT:
            raise RuntimeError(
                f"RT order {q}: DOF/span matrix condition {cond:.2e} exceeds "
                f"{self.COND_LIMIT:.0e}; dual set is degenerate"
            )
        rank = np.linalg.matrix_rank(M)
        if rank != self.dim:
            raise RuntimeError(
                f"RT order {q}: span rank {rank} != expected dimension {self.dim}"
            )
        C = np.linalg.inv(M)
        self._coeff = C @ (2.0 * np.eye(self.dim) - M @ C)  # one refinement pass

    # span evaluation ----------------------------------------------------------

    def _span_values(self, pts: np.ndarray) -> np.ndarray:
        mono = _mono_eval(self._exps_full, pts)
        vx = mono @ self._SX.T
        vy = mono @ self._SY.T
        return np.stack([vx, vy], axis=2)  # (n_pts, n_span, 2)

    def _span_div(self, pts: np.ndarray) -> np.ndarray:
        return _mono_eval(self._exps_div, pts) @ self._SD.T

    def _functional_matrix(self) -> np.ndarray:
        q = self.order
        M = np.zeros((self.dim, self.dim))
        erule = edge_quadrature(2 * q + 2)
        t, wt = erule.points, erule.weights
        row = 0
        for e in range(3):
            pts = edge_points(e, t)
            vals = self._span_values(pts)  # (nq, n_span, 2)
            ntr = vals @ REF_EDGE_NORMALS[e]
            for m in range(q + 1):
                leg = shifted_legendre(m, t)
                M[row] = REF_EDGE_LENGTHS[e] * np.einsum("q,qs->s", wt * leg, ntr)
                row += 1
        vrule = triangle_quadrature(2 * q + 2)
        vals = self._span_values(vrule.points)
        poly_int = self._interior_polys(vrule.points)
        for comp in range(2):
            for im in range(poly_int.shape[1]):
                M[row] = np.einsum(
                    "q,qs->s", vrule.weights * poly_int[:, im], vals[:, :, comp]
                )
                row += 1
        assert row == self.dim
        return M

    def _interior_polys(self, pts: np.ndarray) -> np.ndarray:
        mono = _mono_eval(_monomial_exponents(self.order - 1), pts)
        return mono @ self._interior_weights.T

    # public evaluation ---------------------------------------------------------

    def eval(self, pts: np.ndarray) -> np.ndarray:
        """Basis field values; shape (dim, n_pts, 2)."""
        return np.einsum("psd,sj->jpd", self._span_values(pts), self._coeff)

    def div(self, pts: np.ndarray) -> np.ndarray:
        """Basis divergences; shape (dim, n_pts)."""
        return (self._span_div(pts) @ self._coeff).T

    def normal_trace(self, local_edge: int, t: np.ndarray) -> np.ndarray:
        """Outward normal trace on a reference edge; shape (dim, n_t)."""
        vals = self.eval(edge_points(local_edge, t))
        return vals @ REF_EDGE_NORMALS[local_edge]

    def dofs_of(self, fhat) -> np.ndarray:
        """Apply the dual functionals to a reference vector field.

        ``fhat(points) -> (n_pts, 2)`` may return complex values; the
        moments are then complex.
        """
        q = self.order
        # oracle-grade accuracy: the commuting-diagram identity holds only
        # as exactly as these moments are integrated
        erule = edge_quadrature(2 * q + 30)
        t, wt = erule.points, erule.weights
        out = []
        for e in range(3):
            vals = np.asarray(fhat(edge_points(e, t)))
            ntr = vals @ REF_EDGE_NORMALS[e]
            for m in range(q + 1):
                leg = shifted_legendre(m, t)
                out.append(REF_EDGE_LENGTHS[e] * np.sum(wt * leg * ntr))
        vrule = triangle_quadrature(2 * q + 30)
        vals = np.asarray(fhat(vrule.points))
        poly_int = self._interior_polys(vrule.points)
        for comp in range(2):
            for im in range(poly_int.shape[1]):
                out.append(np.sum(vrule.weights * poly_int[:, im] * vals[:, comp]))
        return np.array(out)


@lru_cache(maxsize=None)
def rt_basis(p_plus_1: int) -> RTBasis:
    if not 1 <= p_plus_1 <= 4:
        raise ValueError(f"supported orders are 1..4, got {p_plus_1}")
    return RTBasis(p_plus_1)


# -- Piola transform -----------------------------------------------------------


def piola_push(amap, ref_values, ref_divs, ref_edge_traces=None):
    """Push reference vector data to a physical triangle.

    Parameters
    ----------
    amap : AffineMap
    ref_values : (..., 2) array of reference field values
    ref_divs : (...) array of reference divergences
    ref_edge_traces : optional (3, ...) array of reference outward normal
        traces, one leading slot per local edge

    Returns
    -------
    (values, divs, traces) with

        values = B ref_values / detB
        divs = ref_divs / detB
        traces[e] = ref_edge_traces[e] * |ref edge e| / |physical edge e|

    The trace scaling is the pointwise form of flux preservation:
    (psi . n) |F| matches (psihat . nhat) |Fhat| on corresponding edges.
    """
    if amap.detB <= 0:
        raise ValueError("Piola transform requires an orientation-preserving map")
    values = np.asarray(ref_values) @ (amap.B.T / amap.detB)
    divs = np.asarray(ref_divs) / amap.detB
    traces = None
    if ref_edge_traces is not None:
        phys_verts = REF_VERTICES @ amap.B.T + amap.b
        scale = np.empty(3)
        for e, (i, j) in enumerate(REF_EDGE_VERTICES):
            scale[e] = REF_EDGE_LENGTHS[e] / np.linalg.norm(phys_verts[j] - phys_verts[i])
        traces = np.asarray(ref_edge_traces) * scale.reshape((3,) + (1,) * (np.ndim(ref_edge_traces) - 1))
    return values, divs, traces


def rt_interpolate(field, amap, basis: RTBasis) -> np.ndarray:
    """Canonical moment interpolant of a physical vector field.

    ``field(points) -> (n_pts, 2)`` is pulled back through the Piola map
    (``psihat = detB B^{-1} psi``) and hit with the dual functionals; the
    result are the local basis coefficients.
    """

    def fhat(pts_ref):
        phys = pts_ref @ amap.B.T + amap.b
        return np.asarray(field(phys)) @ (amap.invB.T * amap.detB)

    return basis.dofs_of(fhat)

"""Assembly of the least-squares system for the Helmholtz first-order form.

The sesquilinear form, conjugate-linear in its second argument, is

    b((phi, u), (psi, v)) = (i k phi + grad u, i k psi + grad v)
                          + (i k u + div phi, i k v + div psi)
                          + k < phi.n + sigma u, psi.n + sigma v >_boundary

and the load functional is

    F(psi, v) = (-i f / k, i k v + div psi) + < i g, psi.n + sigma v >_boundary.

With real-valued basis functions the diagonal blocks are real symmetric
and the V-W coupling splits into an imaginary volume part and a real
boundary part, so the assembled matrix is Hermitian; positive definiteness
follows from the form being a residual norm.  Basis tables are transformed
once per element (Piola for the vector block, inverse-transpose for the
scalar gradients) with the global orientation signs folded in, and all
blocks are accumulated through square-root-weighted products so symmetric
entries come out bitwise equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np
import scipy.sparse as sps

from .mesh import Mesh
from .refelem import (
    edge_points,
    edge_quadrature,
    quadrature_degree,
    triangle_quadrature,
)
from .space import FESpacePair

__all__ = [
    "ProblemSpec",
    "FoslsSystem",
    "assemble",
    "assemble_gram",
    "residual_functional",
    "residual_quadrature",
    "element_tables",
    "boundary_tables",
    "discrete_fields",
    "exact_fields",
    "b_form_value",
    "dump_system",
]


@dataclass(frozen=True)
class ProblemSpec:
    """Wave number, Robin sign and data of one Helmholtz problem.

    ``sigma`` encodes the boundary condition du/dn - sigma i k u = g,
    so sigma = -1 corresponds to du/dn + i k u = g.  ``f`` maps point
    arrays (..., 2) to complex values; ``g`` additionally receives the
    outward unit normals.
    """

    k: float
    sigma: int
    f: callable
    g: callable

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError(f"wave number must be positive, got {self.k}")
        if self.sigma not in (-1, 1):
            raise ValueError(f"sigma must be +-1, got {self.sigma}")

    @classmethod
    def from_exact(cls, exact) -> "ProblemSpec":
        return cls(k=exact.k, sigma=exact.sigma, f=exact.f, g=exact.g)


@dataclass
class FoslsSystem:
    """Assembled Hermitian positive definite system."""

    matrix: sps.csr_matrix
    rhs: np.ndarray
    mesh: Mesh
    spaces: FESpacePair
    k: float
    sigma: int

    @property
    def n_dof(self) -> int:
        return self.spaces.n_dof


def element_tables(mesh: Mesh, spaces: FESpacePair, degree: int | None = None):
    """Signed physical basis tables at volume quadrature points.

    Returns a namespace with quadrature data (``xq`` physical points,
    ``wq`` weights including the Jacobian) and, per element, the signed
    Piola-transformed vector basis ``V``/``DV`` and the scalar basis
    ``W``/``GW``.  Cached on the space pair per degree.
    """
    if degree is None:
        degree = quadrature_degree(spaces.order)
    key = ("volume", degree)
    if key in spaces._tables:
        return spaces._tables[key]

    rule = triangle_quadrature(degree)
    pts, w = rule.points, rule.weights
    Vhat = spaces.rt.eval(pts)  # (nbv, nq, 2)
    Dhat = spaces.rt.div(pts)  # (nbv, nq)
    What = spaces.lagrange.eval(pts)  # (nbw, nq)
    Ghat = spaces.lagrange.grad(pts)  # (nbw, nq, 2)

    xq = np.einsum("edc,qc->eqd", mesh.B, pts) + mesh.b[:, None, :]
    wq = w[None, :] * mesh.detB[:, None]
    V = (
        np.einsum("edc,iqc->eiqd", mesh.B, Vhat)
        / mesh.detB[:, None, None, None]
        * spaces.v_sign[:, :, None, None]
    )
    DV = Dhat[None, :, :] / mesh.detB[:, None, None] * spaces.v_sign[:, :, None]
    GW = np.einsum("ecd,iqc->eiqd", mesh.invB, Ghat)

    tables = SimpleNamespace(rule=rule, xq=xq, wq=wq, V=V, DV=DV, W=What, GW=GW)
    spaces._tables[key] = tables
    return tables


def boundary_tables(mesh: Mesh, spaces: FESpacePair, degree: int | None = None):
    """Signed trace tables on the boundary edges.

    ``TV[b]`` holds the outward normal traces of the incident element's
    signed vector basis, ``TW[b]`` the scalar basis values, at the edge
    quadrature points; ``wq`` includes the edge length.
    """
    if degree is None:
        degree = quadrature_degree(spaces.order)
    key = ("boundary", degree)
    if key in spaces._tables:
        return spaces._tables[key]

    rule = edge_quadrature(degree)
    t = rule.points
    ref_pts = [edge_points(e, t) for e in range(3)]
    Vhat = [spaces.rt.eval(p) for p in ref_pts]
    What = [spaces.lagrange.eval(p) for p in ref_pts]

    records = spaces.boundary
    nbe, nq = len(records), len(t)
    nbv, nbw = spaces.rt.dim, spaces.lagrange.dim
    xq = np.empty((nbe, nq, 2))
    wq = np.empty((nbe, nq))
    normals = np.empty((nbe, 2))
    TV = np.empty((nbe, nbv, nq))
    TW = np.empty((nbe, nbw, nq))
    tri = np.empty(nbe, dtype=np.int64)
    for b, rec in enumerate(records):
        e = rec.local_edge
        K = rec.tri
        tri[b] = K
        B, detB = mesh.B[K], mesh.detB[K]
        xq[b] = ref_pts[e] @ B.T + mesh.b[K]
        n_out = mesh.outward_normal(K, e)
        normals[b] = n_out
        length = mesh.edge_lengths[rec.edge]
        wq[b] = rule.weights * length
        phys = np.einsum("dc,iqc->iqd", B / detB, Vhat[e])
        TV[b] = spaces.v_sign[K][:, None] * (phys @ n_out)
        TW[b] = What[e]

    tables = SimpleNamespace(
        rule=rule, records=records, tri=tri, xq=xq, wq=wq, normals=normals, TV=TV, TW=TW
    )
    spaces._tables[key] = tables
    return tables


def _scatter(blocks, n):
    rows = np.concatenate([b[0].ravel() for b in blocks])
    cols = np.concatenate([b[1].ravel() for b in blocks])
    data = np.concatenate([b[2].astype(complex).ravel() for b in blocks])
    return sps.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def _volume_blocks(mesh, spaces, k, tables):
    nt = mesh.n_triangles
    sqw = np.sqrt(tables.wq)  # (nt, nq)
    Vw = (tables.V * sqw[:, None, :, None]).reshape(nt, spaces.rt.dim, -1)
    DVw = tables.DV * sqw[:, None, :]
    Ww = tables.W[None, :, :] * sqw[:, None, :]
    GWw = (tables.GW * sqw[:, None, :, None]).reshape(nt, spaces.lagrange.dim, -1)

    A_VV = k ** 2 * (Vw @ Vw.transpose(0, 2, 1)) + DVw @ DVw.transpose(0, 2, 1)
    A_WW = GWw @ GWw.transpose(0, 2, 1) + k ** 2 * (Ww @ Ww.transpose(0, 2, 1))
    # rows: W test, cols: V trial
    A_VW = 1j * k * (GWw @ Vw.transpose(0, 2, 1) - Ww @ DVw.transpose(0, 2, 1))
    return A_VV, A_WW, A_VW


def _boundary_blocks(k, sigma, btables):
    sqw = np.sqrt(k * btables.wq)  # (nbe, nq)
    TVw = btables.TV * sqw[:, None, :]
    TWw = btables.TW * sqw[:, None, :]
    A_VV = TVw @ TVw.transpose(0, 2, 1)
    A_WW = TWw @ TWw.transpose(0, 2, 1)
    A_VW = sigma * (TWw @ TVw.transpose(0, 2, 1))
    return A_VV, A_WW, A_VW


def _system_matrix(mesh, spaces, k, sigma, tables, btables):
    n_V = spaces.n_V
    vmap, wmap = spaces.v_map, spaces.w_map + n_V
    A_VV, A_WW, A_VW = _volume_blocks(mesh, spaces, k, tables)
    bA_VV, bA_WW, bA_VW = _boundary_blocks(k, sigma, btables)
    bvmap = vmap[btables.tri]
    bwmap = wmap[btables.tri]

    def pairs(rows, cols):
        return (
            np.broadcast_to(rows[:, :, None], rows.shape + (cols.shape[1],)),
            np.broadcast_to(cols[:, None, :], (cols.shape[0], rows.shape[1], cols.shape[1])),
        )

    blocks = []
    for rows, cols, data in (
        (vmap, vmap, A_VV),
        (wmap, wmap, A_WW),
        (wmap, vmap, A_VW),
        (bvmap, bvmap, bA_VV),
        (bwmap, bwmap, bA_WW),
        (bwmap, bvmap, bA_VW),
    ):
        r, c = pairs(rows, cols)
        blocks.append((r, c, data))
        if rows is not cols:  # mirror the coupling block conjugate-transposed
            blocks.append((c.swapaxes(1, 2), r.swapaxes(1, 2), np.conj(data.swapaxes(1, 2))))
    return _scatter(blocks, spaces.n_dof)


def _check_finite(name, values):
    if not np.all(np.isfinite(values.view(float) if np.iscomplexobj(values) else values)):
        raise ValueError(f"{name} evaluated to non-finite values at quadrature points")


def assemble(mesh: Mesh, spaces: FESpacePair, prob: ProblemSpec) -> FoslsSystem:
    """Assemble matrix and right-hand side of the least-squares system."""
    k, sigma = prob.k, prob.sigma
    tables = element_tables(mesh, spaces)
    btables = boundary_tables(mesh, spaces)

    matrix = _system_matrix(mesh, spaces, k, sigma, tables, btables)

    fq = np.asarray(prob.f(tables.xq), dtype=complex)
    _check_finite("f", fq)
    rhs = np.zeros(spaces.n_dof, dtype=complex)
    fw = fq * tables.wq
    rhs_V = (-1j / k) * np.einsum("eq,eiq->ei", fw, tables.DV)
    rhs_W = -np.einsum("eq,iq->ei", fw, tables.W)
    np.add.at(rhs, spaces.v_map, rhs_V)
    np.add.at(rhs, spaces.w_map + spaces.n_V, rhs_W)

    if len(btables.records) > 0:
        nrm = np.broadcast_to(btables.normals[:, None, :], btables.xq.shape)
        gq = np.asarray(prob.g(btables.xq, nrm), dtype=complex)
        _check_finite("g", gq)
        gw = gq * btables.wq
        np.add.at(rhs, spaces.v_map[btables.tri], 1j * np.einsum("bq,biq->bi", gw, btables.TV))
        np.add.at(
            rhs,
            spaces.w_map[btables.tri] + spaces.n_V,
            1j * sigma * np.einsum("bq,biq->bi", gw, btables.TW),
        )

    return FoslsSystem(matrix, rhs, mesh, spaces, k, sigma)


def assemble_gram(mesh: Mesh, spaces: FESpacePair, k: float, sigma: int) -> sps.csr_matrix:
    """Gram matrix of ||phi||^2 + ||u||^2 + k ||phi.n + sigma u||^2_boundary.

    This is the right-hand side of the wave-number-uniform coercivity
    bound; the probe computes the smallest eigenvalue of (B, M).
    """
    tables = element_tables(mesh, spaces)
    btables = boundary_tables(mesh, spaces)
    nt = mesh.n_triangles
    sqw = np.sqrt(tables.wq)
    Vw = (tables.V * sqw[:, None, :, None]).reshape(nt, spaces.rt.dim, -1)
    Ww = tables.W[None, :, :] * sqw[:, None, :]
    M_VV = Vw @ Vw.transpose(0, 2, 1)
    M_WW = Ww @ Ww.transpose(0, 2, 1)
    bM_VV, bM_WW, bM_VW = _boundary_blocks(k, sigma, btables)

    n_V = spaces.n_V
    vmap, wmap = spaces.v_map, spaces.w_map + n_V
    bvmap, bwmap = vmap[btables.tri], wmap[btables.tri]

    def pairs(rows, cols):
        return (
            np.broadcast_to(rows[:, :, None], rows.shape + (cols.shape[1],)),
            np.broadcast_to(cols[:, None, :], (cols.shape[0], rows.shape[1], cols.shape[1])),
        )

    blocks = []
    for rows, cols, data in (
        (vmap, vmap, M_VV),
        (wmap, wmap, M_WW),
        (bvmap, bvmap, bM_VV),
        (bwmap, bwmap, bM_WW),
        (bwmap, bvmap, bM_VW),
    ):
        r, c = pairs(rows, cols)
        blocks.append((r, c, data))
        if rows is not cols:
            blocks.append((c.swapaxes(1, 2), r.swapaxes(1, 2), np.conj(data.swapaxes(1, 2))))
    return _scatter(blocks, spaces.n_dof)


# -- field sampling and functionals ---------------------------------------------


def discrete_fields(mesh, spaces, coeff, tables=None, btables=None):
    """Sample a discrete pair (phi_h, u_h) at the quadrature tables."""
    if tables is None:
        tables = element_tables(mesh, spaces)
    if btables is None:
        btables = boundary_tables(mesh, spaces)
    cV, cW = spaces.split(np.asarray(coeff, dtype=complex))
    locV = cV[spaces.v_map]  # (nt, nbv)
    locW = cW[spaces.w_map]
    phi = np.einsum("ei,eiqd->eqd", locV, tables.V)
    dphi = np.einsum("ei,eiq->eq", locV, tables.DV)
    u = np.einsum("ei,iq->eq", locW, tables.W)
    gu = np.einsum("ei,eiqd->eqd", locW, tables.GW)
    locVb = cV[spaces.v_map[btables.tri]]
    locWb = cW[spaces.w_map[btables.tri]]
    phin = np.einsum("bi,biq->bq", locVb, btables.TV)
    ub = np.einsum("bi,biq->bq", locWb, btables.TW)
    return SimpleNamespace(u=u, gu=gu, phi=phi, dphi=dphi, ub=ub, phin=phin)


def exact_fields(mesh, spaces, exact, tables=None, btables=None):
    """Sample an analytic pair at the same quadrature tables."""
    if tables is None:
        tables = element_tables(mesh, spaces)
    if btables is None:
        btables = boundary_tables(mesh, spaces)
    u = np.asarray(exact.u(tables.xq), dtype=complex)
    gu = np.asarray(exact.grad_u(tables.xq), dtype=complex)
    phi = np.asarray(exact.phi(tables.xq), dtype=complex)
    # div phi = i/k Laplace(u) = -i/k (k^2 u + f) for the manufactured pairs
    dphi = (-1j / exact.k) * (exact.k ** 2 * u + np.asarray(exact.f(tables.xq)))
    ub = np.asarray(exact.u(btables.xq), dtype=complex)
    nrm = np.broadcast_to(btables.normals[:, None, :], btables.xq.shape)
    phin = np.einsum("bqd,bqd->bq", np.asarray(exact.phi(btables.xq), dtype=complex), nrm)
    return SimpleNamespace(u=u, gu=gu, phi=phi, dphi=dphi, ub=ub, phin=phin)


def b_form_value(mesh, spaces, fa, fb, k, sigma, tables=None, btables=None):
    """Evaluate b((phi_a, u_a), (phi_b, u_b)) by quadrature on field samples."""
    if tables is None:
        tables = element_tables(mesh, spaces)
    if btables is None:
        btables = boundary_tables(mesh, spaces)
    ra = 1j * k * fa.phi + fa.gu
    rb = 1j * k * fb.phi + fb.gu
    sa = 1j * k * fa.u + fa.dphi
    sb = 1j * k * fb.u + fb.dphi
    val = np.sum(tables.wq * np.einsum("eqd,eqd->eq", ra, np.conj(rb)))
    val += np.sum(tables.wq * sa * np.conj(sb))
    ta = fa.phin + sigma * fa.ub
    tb = fb.phin + sigma * fb.ub
    val += k * np.sum(btables.wq * ta * np.conj(tb))
    return complex(val)


def residual_functional(sys: FoslsSystem, coeff, prob: ProblemSpec) -> float:
    """Least-squares functional of a coefficient vector, by direct quadrature.

    The boundary residual is || k^{1/2} (phi.n + sigma u - i g / k) ||^2,
    the datum the variational problem is consistent with.  Agrees with
    c^H B c - 2 Re(c^H rhs) + ||f/k||^2 + ||g||^2 / k up to quadrature
    rounding.
    """
    return residual_quadrature(sys.mesh, sys.spaces, coeff, prob)


def residual_quadrature(mesh, spaces, coeff, prob: ProblemSpec) -> float:
    """residual_functional without requiring an assembled system."""
    tables = element_tables(mesh, spaces)
    btables = boundary_tables(mesh, spaces)
    fh = discrete_fields(mesh, spaces, coeff, tables, btables)
    k, sigma = prob.k, prob.sigma

    r1 = 1j * k * fh.phi + fh.gu
    fq = np.asarray(prob.f(tables.xq), dtype=complex)
    r2 = 1j * k * fh.u + fh.dphi + 1j * fq / k
    R = np.sum(tables.wq * np.einsum("eqd,eqd->eq", r1, np.conj(r1)).real)
    R += np.sum(tables.wq * np.abs(r2) ** 2)
    nrm = np.broadcast_to(btables.normals[:, None, :], btables.xq.shape)
    gq = np.asarray(prob.g(btables.xq, nrm), dtype=complex)
    r3 = fh.phin + sigma * fh.ub - 1j * gq / k
    R += k * np.sum(btables.wq * np.abs(r3) ** 2)
    return float(R)


def dump_system(sys: FoslsSystem, matrix_path, rhs_path):
    """Debug dump: matrix as 'row col re im' lines, rhs as 'index re im'."""
    coo = sys.matrix.tocoo()
    with open(matrix_path, "w", encoding="utf-8") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {float(v.real)!r} {float(v.imag)!r}\n")
    with open(rhs_path, "w", encoding="utf-8") as fh:
        for i, v in enumerate(sys.rhs):
            fh.write(f"{i} {float(v.real)!r} {float(v.imag)!r}\n")

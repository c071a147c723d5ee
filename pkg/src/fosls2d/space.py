"""Global degree-of-freedom maps for the conforming H(div) x H1 pair.

Unknowns are ordered [V-block; W-block].  Within V: all edge moments first
(by global edge index, then Legendre degree), then per-element interior
moments.  Within W: vertex nodes, then per-edge nodes (ordered along the
global vmin -> vmax direction), then per-element interior nodes.

Orientation: a global edge DOF is the moment of the normal trace against
the global edge normal and the global edge parameterization.  An element
whose counterclockwise traversal runs against the global direction sees
the sign (-1)^m on the degree-m moment; an element whose traversal agrees
with it sees -1 for every m (its outward normal is minus the global one).
Conformity of normal traces and of scalar point values then holds by
construction, which the tests verify numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh
from .refelem import (
    LagrangeBasis,
    RTBasis,
    edge_quadrature,
    lagrange_basis,
    quadrature_degree,
    rt_basis,
    shifted_legendre,
)

__all__ = [
    "FESpacePair",
    "BoundaryEdge",
    "build_spaces",
    "boundary_dofs",
    "w_node_coordinates",
    "interpolate_v",
    "interpolate_w",
]


@dataclass(frozen=True)
class BoundaryEdge:
    """A boundary edge with its incident element and trace DOFs."""

    edge: int
    tri: int
    local_edge: int
    v_dofs: np.ndarray  # the q+1 normal-moment DOFs of this edge
    w_nodes: np.ndarray  # the q+1 scalar trace nodes, ordered along the edge


class FESpacePair:
    """DOF layout of RT_{p+1} x P_{p+1} on a mesh.

    Attributes
    ----------
    n_V, n_W : int
        Global DOF counts of the H(div) and the H1 space.
    v_map : (n_triangles, rt.dim) int array
    v_sign : (n_triangles, rt.dim) float array of +-1
    w_map : (n_triangles, lag.dim) int array
    """

    def __init__(self, mesh: Mesh, p_plus_1: int):
        q = p_plus_1
        self.mesh = mesh
        self.order = q
        self.rt: RTBasis = rt_basis(q)
        self.lagrange: LagrangeBasis = lagrange_basis(q)

        nt = mesh.n_triangles
        ne = mesh.n_edges
        nv = mesh.n_vertices
        edge_v = q + 1
        int_v = self.rt.n_interior_dofs
        self.n_V = ne * edge_v + nt * int_v
        edge_w = q - 1
        int_w = self.lagrange.n_interior_dofs
        self.n_W = nv + ne * edge_w + nt * int_w

        self.v_map = np.empty((nt, self.rt.dim), dtype=np.int64)
        self.v_sign = np.empty((nt, self.rt.dim), dtype=float)
        self.w_map = np.empty((nt, self.lagrange.dim), dtype=np.int64)

        m_range = np.arange(edge_v)
        alternating = (-1.0) ** m_range
        slots = np.arange(edge_w)
        for e in range(3):
            E = mesh.tri_edges[:, e][:, None]
            rev = mesh.tri_edge_reversed[:, e][:, None]
            self.v_map[:, e * edge_v : (e + 1) * edge_v] = E * edge_v + m_range
            self.v_sign[:, e * edge_v : (e + 1) * edge_v] = np.where(
                rev, alternating, -1.0
            )
            self.w_map[:, 3 + e * edge_w : 3 + (e + 1) * edge_w] = (
                nv + E * edge_w + np.where(rev, edge_w - 1 - slots, slots)
            )
        tri_ids = np.arange(nt)[:, None]
        self.v_map[:, 3 * edge_v :] = ne * edge_v + tri_ids * int_v + np.arange(int_v)
        self.v_sign[:, 3 * edge_v :] = 1.0
        self.w_map[:, :3] = mesh.triangles
        self.w_map[:, 3 + 3 * edge_w :] = (
            nv + ne * edge_w + tri_ids * int_w + np.arange(int_w)
        )

        self._build_boundary()
        self._tables = {}

    def _build_boundary(self):
        mesh = self.mesh
        q = self.order
        records = []
        for E in mesh.boundary_edges:
            t = int(mesh.edge_tris[E, 0])
            local = int(np.flatnonzero(mesh.tri_edges[t] == E)[0])
            v_dofs = E * (q + 1) + np.arange(q + 1)
            lo, hi = mesh.edges[E]
            w_nodes = np.concatenate(
                ([lo], mesh.n_vertices + E * (q - 1) + np.arange(q - 1), [hi])
            )
            records.append(BoundaryEdge(int(E), t, local, v_dofs, w_nodes))
        self.boundary = records
        self.boundary_v_dofs = (
            np.concatenate([r.v_dofs for r in records])
            if records
            else np.empty(0, dtype=np.int64)
        )

    @property
    def n_dof(self) -> int:
        return self.n_V + self.n_W

    def split(self, coeff: np.ndarray):
        """Split a combined coefficient vector into (V part, W part)."""
        coeff = np.asarray(coeff)
        if coeff.shape != (self.n_dof,):
            raise ValueError(f"expected coefficient vector of length {self.n_dof}")
        return coeff[: self.n_V], coeff[self.n_V :]


def build_spaces(mesh: Mesh, p_plus_1: int) -> FESpacePair:
    if not 1 <= p_plus_1 <= 4:
        raise ValueError(f"supported orders are 1..4, got {p_plus_1}")
    return FESpacePair(mesh, p_plus_1)


def boundary_dofs(spaces: FESpacePair):
    """All H(div) DOFs on the boundary plus per-edge trace structure."""
    return spaces.boundary_v_dofs, spaces.boundary


def w_node_coordinates(spaces: FESpacePair) -> np.ndarray:
    """Physical coordinates of every H1 nodal DOF."""
    mesh = spaces.mesh
    q = spaces.order
    coords = np.empty((spaces.n_W, 2))
    coords[: mesh.n_vertices] = mesh.vertices
    if q > 1:
        lo = mesh.vertices[mesh.edges[:, 0]]
        hi = mesh.vertices[mesh.edges[:, 1]]
        ts = (np.arange(1, q) / q)[None, :, None]
        pts = lo[:, None, :] + ts * (hi - lo)[:, None, :]
        coords[mesh.n_vertices : mesh.n_vertices + mesh.n_edges * (q - 1)] = (
            pts.reshape(-1, 2)
        )
    n_int = spaces.lagrange.n_interior_dofs
    if n_int > 0:
        ref = spaces.lagrange.nodes[-n_int:]
        base = mesh.n_vertices + mesh.n_edges * (q - 1)
        phys = np.einsum("edc,ic->eid", mesh.B, ref) + mesh.b[:, None, :]
        coords[base:] = phys.reshape(-1, 2)
    return coords


def interpolate_w(spaces: FESpacePair, func) -> np.ndarray:
    """Nodal interpolant coefficients of a scalar function."""
    return np.asarray(func(w_node_coordinates(spaces)))


def interpolate_v(spaces: FESpacePair, field) -> np.ndarray:
    """Canonical (moment) interpolant coefficients of a vector field.

    Edge DOFs are physical moments against the global normal and edge
    parameterization; interior DOFs are reference moments of the Piola
    pull-back, matching the assembly convention.
    """
    mesh = spaces.mesh
    q = spaces.order
    rule = edge_quadrature(quadrature_degree(q) + 4)
    t, wt = rule.points, rule.weights
    lo = mesh.vertices[mesh.edges[:, 0]]
    hi = mesh.vertices[mesh.edges[:, 1]]
    pts = lo[:, None, :] + t[None, :, None] * (hi - lo)[:, None, :]
    vals = np.asarray(field(pts.reshape(-1, 2))).reshape(mesh.n_edges, len(t), 2)
    flux = np.einsum("eqd,ed->eq", vals, mesh.edge_normals)
    leg = np.stack([shifted_legendre(m, t) for m in range(q + 1)])
    moments = np.einsum("eq,mq,q,e->em", flux, leg, wt, mesh.edge_lengths)

    coeff = np.zeros(spaces.n_V, dtype=np.result_type(vals.dtype, float))
    coeff[: mesh.n_edges * (q + 1)] = moments.reshape(-1)

    n_int = spaces.rt.n_interior_dofs
    if n_int > 0:
        from .refelem import rt_interpolate
        from .mesh import element_map

        base = mesh.n_edges * (q + 1)
        for t_idx in range(mesh.n_triangles):
            local = rt_interpolate(field, element_map(mesh, t_idx), spaces.rt)
            coeff[base + t_idx * n_int : base + (t_idx + 1) * n_int] = local[-n_int:]
    return coeff

"""Uniform triangular meshes of an axis-aligned rectangle.

The mesh is the structured right-triangle triangulation of an ``n x n``
grid of cells, each cell split along the diagonal from its lower-left to
its upper-right corner.  Triangles are stored counterclockwise, edges are
keyed by their sorted vertex pair, and every edge carries a fixed global
normal (the +90 degree rotation of the unit vector from the smaller- to
the larger-indexed endpoint).  That global orientation is what the H(div)
degree-of-freedom maps hang off, so it is part of the mesh contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainBox",
    "AffineMap",
    "Mesh",
    "build_uniform_mesh",
    "element_map",
    "mesh_for_condition",
]


@dataclass(frozen=True)
class DomainBox:
    """Axis-aligned rectangle ``[xmin, xmax] x [ymin, ymax]``."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(
                f"degenerate box: [{self.xmin}, {self.xmax}] x [{self.ymin}, {self.ymax}]"
            )

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    @classmethod
    def centered_unit_square(cls) -> "DomainBox":
        """The benchmark domain ``[-0.5, 0.5]^2``."""
        return cls(-0.5, 0.5, -0.5, 0.5)


@dataclass(frozen=True)
class AffineMap:
    """Affine map ``x = B xhat + b`` from the reference triangle.

    The reference triangle has vertices (0,0), (1,0), (0,1); ``B`` sends
    them to the triangle's vertices in order, so ``detB = 2 * area > 0``
    for counterclockwise triangles.
    """

    B: np.ndarray
    b: np.ndarray
    detB: float
    invB: np.ndarray

    def apply(self, xhat: np.ndarray) -> np.ndarray:
        return xhat @ self.B.T + self.b

    def pull_back(self, x: np.ndarray) -> np.ndarray:
        return (x - self.b) @ self.invB.T


class Mesh:
    """Triangulation with globally oriented edges and boundary tags.

    Attributes
    ----------
    vertices : (n_vertices, 2) float array
    triangles : (n_triangles, 3) int array
        Vertex indices, counterclockwise.  Local edge ``i`` is the edge
        opposite local vertex ``i``.
    edges : (n_edges, 2) int array
        Sorted vertex pairs (vmin, vmax), lexicographically ordered.
    tri_edges : (n_triangles, 3) int array
        Global edge index of each local edge.
    tri_edge_reversed : (n_triangles, 3) bool array
        True where the triangle's counterclockwise traversal of the edge
        runs vmax -> vmin, i.e. against the global edge direction.  For a
        reversed edge the triangle's outward normal equals the global edge
        normal; otherwise it is its negative.
    edge_tris : (n_edges, 2) int array
        Incident triangles; second entry is -1 on the boundary.
    edge_is_boundary : (n_edges,) bool array
    h : float
        Maximum triangle diameter.
    """

    def __init__(self, box: DomainBox, n: int, vertices, triangles):
        self.box = box
        self.n = n
        self.vertices = np.asarray(vertices, dtype=float)
        self.triangles = np.asarray(triangles, dtype=np.int64)
        self._build_edges()
        self._build_geometry()

    # -- construction helpers -------------------------------------------------

    def _build_edges(self):
        tris = self.triangles
        # local edge i is opposite local vertex i
        a = np.stack([tris[:, 1], tris[:, 2], tris[:, 0]], axis=1)
        b = np.stack([tris[:, 2], tris[:, 0], tris[:, 1]], axis=1)
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        nv = len(self.vertices)
        keys = lo * nv + hi
        unique_keys, inverse = np.unique(keys.ravel(), return_inverse=True)
        self.edges = np.stack([unique_keys // nv, unique_keys % nv], axis=1)
        self.tri_edges = inverse.reshape(-1, 3)
        self.tri_edge_reversed = a > b

        n_edges = len(self.edges)
        counts = np.bincount(self.tri_edges.ravel(), minlength=n_edges)
        if counts.max() > 2:
            raise ValueError("edge shared by more than two triangles")
        self.edge_is_boundary = counts == 1
        self.edge_tris = np.full((n_edges, 2), -1, dtype=np.int64)
        slot = np.zeros(n_edges, dtype=np.int64)
        for t in range(len(tris)):
            for e in self.tri_edges[t]:
                self.edge_tris[e, slot[e]] = t
                slot[e] += 1
        self.boundary_edges = np.flatnonzero(self.edge_is_boundary)

    def _build_geometry(self):
        v = self.vertices[self.triangles]
        # columns of B are the two edge vectors out of local vertex 0
        self.B = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
        self.b = v[:, 0]
        self.detB = self.B[:, 0, 0] * self.B[:, 1, 1] - self.B[:, 0, 1] * self.B[:, 1, 0]
        if np.any(self.detB <= 0):
            raise ValueError("triangle with non-positive signed area")
        inv = np.empty_like(self.B)
        inv[:, 0, 0] = self.B[:, 1, 1]
        inv[:, 0, 1] = -self.B[:, 0, 1]
        inv[:, 1, 0] = -self.B[:, 1, 0]
        inv[:, 1, 1] = self.B[:, 0, 0]
        self.invB = inv / self.detB[:, None, None]

        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        self.edge_lengths = np.hypot(d[:, 0], d[:, 1])
        # +90 degree rotation of the vmin -> vmax direction
        self.edge_normals = np.stack([-d[:, 1], d[:, 0]], axis=1) / self.edge_lengths[:, None]

        sides = np.stack(
            [v[:, 1] - v[:, 0], v[:, 2] - v[:, 1], v[:, 0] - v[:, 2]], axis=1
        )
        self.h = float(np.sqrt((sides ** 2).sum(axis=2)).max())

    # -- queries ---------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def areas(self) -> np.ndarray:
        return 0.5 * self.detB

    def outward_normal(self, t: int, local_edge: int) -> np.ndarray:
        """Unit outward normal of triangle ``t`` on its local edge."""
        e = self.tri_edges[t, local_edge]
        sign = 1.0 if self.tri_edge_reversed[t, local_edge] else -1.0
        return sign * self.edge_normals[e]

    def summary(self, k: float | None = None, p_plus_1: int | None = None) -> dict:
        """JSON-ready mesh summary; includes kh/p when (k, p+1) are given."""
        out = {
            "n": self.n,
            "n_vertices": self.n_vertices,
            "n_triangles": self.n_triangles,
            "n_edges": self.n_edges,
            "n_boundary_edges": int(self.edge_is_boundary.sum()),
            "h": self.h,
        }
        if k is not None and p_plus_1 is not None:
            out["kh_over_p"] = k * self.h / p_plus_1
        return out


def build_uniform_mesh(box: DomainBox, n: int) -> Mesh:
    """Triangulate ``box`` by an n x n grid of cells split along the
    lower-left to upper-right diagonal.

    Returns a mesh with ``2 n^2`` counterclockwise triangles and
    ``h = cell diagonal``.
    """
    if n < 1:
        raise ValueError(f"cells per side must be >= 1, got {n}")
    xs = np.linspace(box.xmin, box.xmax, n + 1)
    ys = np.linspace(box.ymin, box.ymax, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return j * (n + 1) + i

    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    t = 0
    for j in range(n):
        for i in range(n):
            ll, lr = vid(i, j), vid(i + 1, j)
            ur, ul = vid(i + 1, j + 1), vid(i, j + 1)
            triangles[t] = (ll, lr, ur)
            triangles[t + 1] = (ll, ur, ul)
            t += 2
    return Mesh(box, n, vertices, triangles)


def element_map(mesh: Mesh, t: int) -> AffineMap:
    """Affine map of triangle ``t`` from the reference triangle."""
    if not 0 <= t < mesh.n_triangles:
        raise IndexError(f"triangle index {t} out of range")
    return AffineMap(
        B=mesh.B[t].copy(),
        b=mesh.b[t].copy(),
        detB=float(mesh.detB[t]),
        invB=mesh.invB[t].copy(),
    )


def locate_points(mesh: Mesh, points: np.ndarray, tol: float = 1e-10):
    """Find containing triangles and reference coordinates, structured-grid
    arithmetic only.

    Points may lie on the boundary; points outside the box by more than
    ``tol`` (relative to the box size) raise.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    box, n = mesh.box, mesh.n
    dx, dy = box.width / n, box.height / n
    sx = (points[:, 0] - box.xmin) / dx
    sy = (points[:, 1] - box.ymin) / dy
    pad = tol * max(n, 1)
    if np.any(sx < -pad) or np.any(sx > n + pad) or np.any(sy < -pad) or np.any(sy > n + pad):
        raise ValueError("points outside the mesh domain")
    i = np.clip(np.floor(sx).astype(np.int64), 0, n - 1)
    j = np.clip(np.floor(sy).astype(np.int64), 0, n - 1)
    xi = sx - i
    eta = sy - j
    upper = eta > xi  # cells are split along the lower-left/upper-right diagonal
    tri = 2 * (j * n + i) + upper
    diff = points - mesh.b[tri]
    ref = np.einsum("pdc,pc->pd", mesh.invB[tri], diff)
    return tri, ref


def mesh_for_condition(
    box: DomainBox,
    k: float,
    p_plus_1: int,
    c: float,
    max_cells_per_side: int = 4096,
) -> Mesh:
    """Smallest uniform mesh satisfying ``k h / (p+1) <= c``.

    Raises if the required cells-per-side exceeds ``max_cells_per_side``
    (resource guard for high wave numbers at low order).
    """
    if k <= 0:
        raise ValueError(f"wave number must be positive, got {k}")
    if c <= 0:
        raise ValueError(f"target ratio must be positive, got {c}")
    if p_plus_1 < 1:
        raise ValueError(f"order must be >= 1, got {p_plus_1}")
    diag = math.hypot(box.width, box.height)
    n = max(1, math.ceil(k * diag / (c * p_plus_1)))
    while k * (diag / n) / p_plus_1 > c:
        n += 1
    if n > max_cells_per_side:
        raise ValueError(
            f"mesh condition k h/p <= {c} at k={k}, p+1={p_plus_1} needs n={n} "
            f"cells per side, above the cap {max_cells_per_side}"
        )
    return build_uniform_mesh(box, n)

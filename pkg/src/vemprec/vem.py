"""Lowest-order (k=1) virtual element discretization of -div(kappa grad u) = f.

All local quantities use the scaled monomial basis
``{1, (x - x_K)/h_K, (y - y_K)/h_K[, (z - z_K)/h_K]}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .coefficients import CoefficientField
from .mesh import MeshError, PolytopalMesh
from .mesh.core import face_area_vector


@dataclass(frozen=True, eq=False)
class DofMap:
    """Vertex DOFs split into free (interior) and Dirichlet (boundary) sets."""

    n_dofs: int
    free: np.ndarray
    boundary: np.ndarray
    free_index: np.ndarray  # vertex -> position in `free`, or -1

    @classmethod
    def from_mesh(cls, mesh: PolytopalMesh) -> "DofMap":
        bnd = np.asarray(mesh.boundary_vertex)
        free = np.flatnonzero(~bnd)
        index = np.full(mesh.n_vertices, -1, dtype=np.int64)
        index[free] = np.arange(len(free))
        for a in (free, index):
            a.setflags(write=False)
        boundary = np.flatnonzero(bnd)
        boundary.setflags(write=False)
        return cls(mesh.n_vertices, free, boundary, index)

    @property
    def n_free(self) -> int:
        return len(self.free)

    def restrict(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v)[self.free]

    def extend(self, v_free: np.ndarray, boundary_values: np.ndarray | None = None) -> np.ndarray:
        out = np.zeros(self.n_dofs)
        if boundary_values is not None:
            out[self.boundary] = np.asarray(boundary_values)[self.boundary]
        out[self.free] = v_free
        return out


@dataclass(frozen=True, eq=False)
class LocalProjector:
    """Energy projection of the local virtual space onto linear polynomials.

    ``P_star`` (dim+1, n) maps vertex values to monomial coefficients of the
    projection; ``D`` (n, dim+1) evaluates the monomials at the vertices.
    """

    cell: int
    P_star: np.ndarray
    D: np.ndarray
    B: np.ndarray
    G: np.ndarray
    h: float
    measure: float

    @property
    def Pi(self) -> np.ndarray:
        """Projection in vertex-value form, D @ P_star."""
        return self.D @ self.P_star


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dof_map: DofMap
    full_matrix: sp.csr_matrix = field(repr=False)
    mesh: object = field(repr=False, default=None)
    coeff: CoefficientField | None = field(repr=False, default=None)

    @property
    def n_free(self) -> int:
        return self.dof_map.n_free


def _boundary_matrix_2d(pts: np.ndarray, h: float) -> np.ndarray:
    """Boundary integrals of each basis function against grad(m_a).n, a = 1, 2.

    The trace is linear on every edge, so the trapezoid rule is exact: vertex
    i collects half the scaled outward normal of both adjacent edges.
    """
    e = np.roll(pts, -1, axis=0) - pts
    nrm = np.stack([e[:, 1], -e[:, 0]], axis=1)  # |e| * outward normal for CCW loops
    return (0.5 / h) * (nrm + np.roll(nrm, 1, axis=0)).T


def _boundary_matrix_3d(mesh: PolytopalMesh, k: int, h: float) -> np.ndarray:
    cv = mesh.cell_vertices[k]
    local = {int(v): i for i, v in enumerate(cv)}
    Bg = np.zeros((3, len(cv)))
    for f in mesh.cells[k]:
        area_vec = face_area_vector(mesh.vertices[f])
        # face integral of the trace ~ |F| * mean of its vertex values
        share = area_vec / (len(f) * h)
        for v in f:
            Bg[:, local[int(v)]] += share
    return Bg


def local_projector(mesh: PolytopalMesh, k: int) -> LocalProjector:
    """Projector data for cell ``k``; raises MeshError for zero-measure cells."""
    h = float(mesh.diameter[k])
    vol = float(mesh.measure[k])
    if not (h > 0 and vol > 0):
        raise MeshError(f"cell {k} has zero measure")
    pts = mesh.cell_points(k)
    n = len(pts)
    B = np.empty((mesh.dim + 1, n))
    B[0] = 1.0 / n
    B[1:] = _boundary_matrix_2d(pts, h) if mesh.dim == 2 else _boundary_matrix_3d(mesh, k, h)
    D = np.ones((n, mesh.dim + 1))
    D[:, 1:] = (pts - mesh.centroid[k]) / h
    G = B @ D
    return LocalProjector(k, np.linalg.solve(G, B), D, B, G, h, vol)


def stabilization_scale(dim: int, measure):
    """Weight of the dofi-dofi term: h_K^(dim-2) with the size h_K = |K|^(1/dim).

    It is 1 in 2D. In 3D it tracks a(phi_i, phi_i) ~ h_K; the diameter would
    overweight the term by sqrt(3) on cubes.
    """
    return np.asarray(measure, dtype=float) ** ((dim - 2) / dim)


def _local_from_projectors(P_star, D, G, scale):
    """Batched consistency + stabilization (leading axis runs over cells)."""
    Gt = G.copy()
    Gt[:, 0, :] = 0.0
    cons = np.einsum("cai,cab,cbj->cij", P_star, Gt, P_star)
    n = D.shape[1]
    I_Pi = np.eye(n)[None] - D @ P_star
    stab = np.einsum("cri,crj->cij", I_Pi, I_Pi)
    return cons, stab * scale[:, None, None]


def local_stiffness(mesh: PolytopalMesh, k: int, kappa: float = 1.0, split: bool = False):
    """kappa * (consistency + stabilization) for cell ``k``.

    With ``split=True`` returns the unscaled (consistency, stabilization) pair.
    """
    lp = local_projector(mesh, k)
    cons, stab = _local_from_projectors(
        lp.P_star[None], lp.D[None], lp.G[None], np.atleast_1d(stabilization_scale(mesh.dim, lp.measure))
    )
    if split:
        return cons[0], stab[0]
    return kappa * (cons[0] + stab[0])


def _batched_local_matrices(mesh: PolytopalMesh):
    """Yield (cell ids, vertex ids, consistency, stabilization) per vertex-count group."""
    groups: dict[int, list[int]] = {}
    for k, cv in enumerate(mesh.cell_vertices):
        groups.setdefault(len(cv), []).append(k)
    dim = mesh.dim
    for n, ks in sorted(groups.items()):
        ks = np.asarray(ks)
        ids = np.stack([mesh.cell_vertices[k] for k in ks])
        pts = mesh.vertices[ids]
        h = mesh.diameter[ks]
        B = np.empty((len(ks), dim + 1, n))
        B[:, 0, :] = 1.0 / n
        if dim == 2:
            e = np.roll(pts, -1, axis=1) - pts
            nrm = np.stack([e[..., 1], -e[..., 0]], axis=-1)
            B[:, 1:, :] = np.transpose(0.5 * (nrm + np.roll(nrm, 1, axis=1)), (0, 2, 1)) / h[:, None, None]
        else:
            for c, k in enumerate(ks):
                B[c, 1:, :] = _boundary_matrix_3d(mesh, int(k), float(h[c]))
        D = np.ones((len(ks), n, dim + 1))
        D[:, :, 1:] = (pts - mesh.centroid[ks][:, None, :]) / h[:, None, None]
        G = B @ D
        P_star = np.linalg.solve(G, B)
        cons, stab = _local_from_projectors(P_star, D, G, stabilization_scale(dim, mesh.measure[ks]))
        yield ks, ids, cons, stab


def assemble_global(mesh: PolytopalMesh, coeff: CoefficientField) -> sp.csr_matrix:
    """Full (pre-elimination) VEM stiffness matrix on all vertices."""
    if len(coeff) != mesh.n_cells:
        raise ValueError(f"coefficient has {len(coeff)} values for {mesh.n_cells} cells")
    rows, cols, vals = [], [], []
    kappa = coeff.values
    for ks, ids, cons, stab in _batched_local_matrices(mesh):
        loc = kappa[ks][:, None, None] * (cons + stab)
        n = ids.shape[1]
        rows.append(np.repeat(ids, n, axis=1).ravel())
        cols.append(np.tile(ids, (1, n)).ravel())
        vals.append(loc.ravel())
    nv = mesh.n_vertices
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nv, nv)
    ).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def eliminate(A_full: sp.csr_matrix, dof_map: DofMap) -> sp.csr_matrix:
    A = A_full[dof_map.free][:, dof_map.free].tocsr()
    A.sort_indices()
    return A


def assemble(mesh: PolytopalMesh, coeff: CoefficientField) -> AssembledSystem:
    dof_map = DofMap.from_mesh(mesh)
    A_full = assemble_global(mesh, coeff)
    return AssembledSystem(
        matrix=eliminate(A_full, dof_map),
        rhs=np.zeros(dof_map.n_free),
        dof_map=dof_map,
        full_matrix=A_full,
        mesh=mesh,
        coeff=coeff,
    )


def assemble_load(mesh: PolytopalMesh, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Load vector on all vertices: |K| f(x_K) times the vertex average of v."""
    fc = np.asarray(f(mesh.centroid), dtype=float) * np.ones(mesh.n_cells)
    out = np.zeros(mesh.n_vertices)
    for k, cv in enumerate(mesh.cell_vertices):
        out[cv] += mesh.measure[k] * fc[k] / len(cv)
    return out


def assemble_rhs(mesh: PolytopalMesh, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Load vector restricted to the free DOFs. ``f`` maps an (m, dim) array to m values."""
    return assemble_load(mesh, f)[DofMap.from_mesh(mesh).free]


def solve_dirichlet(system: AssembledSystem, load_full: np.ndarray, g_boundary: np.ndarray, solver=None) -> np.ndarray:
    """Solve with u = g on boundary vertices; returns vertex values on all vertices.

    ``g_boundary`` is indexed by vertex (only boundary entries are read).
    """
    from .linalg import Factorization

    dm = system.dof_map
    g = np.zeros(dm.n_dofs)
    g[dm.boundary] = np.asarray(g_boundary)[dm.boundary]
    rhs = np.asarray(load_full)[dm.free] - (system.full_matrix @ g)[dm.free]
    if dm.n_free == 0:
        return g
    x = (solver or Factorization(system.matrix)).solve(rhs)
    return dm.extend(x, g)


def projected_l2_error(mesh: PolytopalMesh, u_vertex: np.ndarray, u_exact: Callable) -> float:
    """L2 norm of u_exact - Pi(u_h) over a 2D mesh, by fan-triangle Gauss quadrature."""
    if mesh.dim != 2:
        raise ValueError("projected_l2_error is implemented for 2D meshes")
    # Dunavant degree-5 7-point rule on the reference triangle (barycentric, weights sum to 1)
    a1, b1 = 0.059715871789770, 0.470142064105115
    a2, b2 = 0.797426985353087, 0.101286507323456
    bary = np.array(
        [[1 / 3, 1 / 3, 1 / 3]]
        + [[a1, b1, b1], [b1, a1, b1], [b1, b1, a1]]
        + [[a2, b2, b2], [b2, a2, b2], [b2, b2, a2]]
    )
    w = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)
    total = 0.0
    for k in range(mesh.n_cells):
        lp = local_projector(mesh, k)
        coef = lp.P_star @ u_vertex[mesh.cell_vertices[k]]
        pts = mesh.cell_points(k)
        c = mesh.centroid[k]
        for i in range(len(pts)):
            tri = np.stack([c, pts[i], pts[(i + 1) % len(pts)]])
            u, v = tri[1] - tri[0], tri[2] - tri[0]
            area = 0.5 * abs(u[0] * v[1] - u[1] * v[0])
            q = bary @ tri
            uh = coef[0] + ((q - c) / lp.h) @ coef[1:]
            total += area * float(w @ (u_exact(q) - uh) ** 2)
    return float(np.sqrt(total))

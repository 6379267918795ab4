"""Conforming P1 finite elements on the auxiliary simplicial mesh."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .coefficients import CoefficientField
from .mesh import MeshError, SimplicialMesh
from .vem import AssembledSystem, DofMap, eliminate


def p1_local_matrices(x: np.ndarray) -> np.ndarray:
    """Element stiffness matrices int grad(l_i).grad(l_j) for simplices ``x`` (m, d+1, d)."""
    d = x.shape[2]
    J = x[:, 1:, :] - x[:, :1, :]
    det = np.linalg.det(J)
    if np.any(det <= 0):
        bad = int(np.flatnonzero(det <= 0)[0])
        raise MeshError(f"simplex {bad} is inverted or degenerate (volume {det[bad]:.3e})")
    vol = det / (2.0 if d == 2 else 6.0)
    # rows of inv(J) columns give the gradients of l_1..l_d; l_0 takes minus their sum
    grads = np.empty((len(x), d + 1, d))
    grads[:, 1:, :] = np.transpose(np.linalg.inv(J), (0, 2, 1))
    grads[:, 0, :] = -grads[:, 1:, :].sum(axis=1)
    return vol[:, None, None] * np.einsum("eik,ejk->eij", grads, grads)


def assemble_p1(tri: SimplicialMesh, coeff: CoefficientField) -> AssembledSystem:
    """P1 stiffness of a(u, v) = int kappa grad u . grad v; kappa taken from the parent cell."""
    mesh = tri.parent
    if len(coeff) != mesh.n_cells:
        raise ValueError(f"coefficient has {len(coeff)} values for {mesh.n_cells} cells")
    simp = tri.simplices
    loc = p1_local_matrices(tri.vertices[simp]) * coeff.values[tri.parent_cell][:, None, None]
    m = simp.shape[1]
    rows = np.repeat(simp, m, axis=1).ravel()
    cols = np.tile(simp, (1, m)).ravel()
    nv = mesh.n_vertices
    A = sp.coo_matrix((loc.ravel(), (rows, cols)), shape=(nv, nv)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    dof_map = DofMap.from_mesh(mesh)
    return AssembledSystem(
        matrix=eliminate(A, dof_map),
        rhs=np.zeros(dof_map.n_free),
        dof_map=dof_map,
        full_matrix=A,
        mesh=tri,
        coeff=coeff,
    )

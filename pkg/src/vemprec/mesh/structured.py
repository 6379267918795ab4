"""Structured meshes of the unit square and unit cube."""

from __future__ import annotations

import numpy as np

from .core import MeshError, PolytopalMesh

# corner bit (x, y, z) -> local cube vertex, and the six outward faces
_CUBE_FACES = (
    (0, 4, 6, 2),  # x = lo
    (1, 3, 7, 5),  # x = hi
    (0, 1, 5, 4),  # y = lo
    (2, 6, 7, 3),  # y = hi
    (0, 2, 3, 1),  # z = lo
    (4, 5, 7, 6),  # z = hi
)


def generate_structured_quad_mesh(n_per_axis: int) -> PolytopalMesh:
    """n x n axis-aligned squares on the unit square."""
    n = int(n_per_axis)
    if n < 1:
        raise MeshError("n_per_axis must be positive")
    t = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(t, t, indexing="xy")
    verts = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return j * (n + 1) + i

    cells = [
        (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
        for j in range(n)
        for i in range(n)
    ]
    return PolytopalMesh.from_cells(verts, cells)


def generate_structured_hex_mesh(n_per_axis: int) -> PolytopalMesh:
    """n^3 congruent cubes of side 1/n on the unit cube."""
    n = int(n_per_axis)
    if n < 1:
        raise MeshError("n_per_axis must be positive")
    t = np.linspace(0.0, 1.0, n + 1)
    Z, Y, X = np.meshgrid(t, t, t, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def vid(i, j, k):
        return (k * (n + 1) + j) * (n + 1) + i

    cells = []
    for k in range(n):
        for j in range(n):
            for i in range(n):
                corner = [vid(i + (b & 1), j + (b >> 1 & 1), k + (b >> 2 & 1)) for b in range(8)]
                cells.append(tuple(tuple(corner[v] for v in f) for f in _CUBE_FACES))
    return PolytopalMesh.from_cells(verts, cells)

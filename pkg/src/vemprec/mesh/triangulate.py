"""Auxiliary simplicial meshes that reuse the polytopal vertex set."""

from __future__ import annotations

from itertools import permutations
from math import atan2

import numpy as np

from .core import GEOM_TOL, MeshError, PolytopalMesh, SimplicialMesh

ANGLE_TOL = 1e-12


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def is_convex(pts: np.ndarray) -> bool:
    n = len(pts)
    return all(_cross(pts[i - 1], pts[i], pts[(i + 1) % n]) >= -GEOM_TOL for i in range(n))


def _angle_at(c, a, b) -> float:
    """Interior angle a-c-b in [0, pi]."""
    u = (a[0] - c[0], a[1] - c[1])
    v = (b[0] - c[0], b[1] - c[1])
    return abs(atan2(u[0] * v[1] - u[1] * v[0], u[0] * v[0] + u[1] * v[1]))


def delaunay_convex_polygon(pts: np.ndarray, ids: np.ndarray) -> list[tuple[int, int, int]] | None:
    """Delaunay triangulation of a convex CCW polygon using only its vertices.

    For a chord (a, b) the apex forming the empty-circumcircle triangle is the
    vertex on the polygon side that sees (a, b) under the largest angle; ties
    go to the lowest global vertex id. Returns None when a sub-polygon has only
    degenerate apex candidates (straight-angle vertices), so the caller can
    fall back to ear clipping. The loop is rotated to start at its lowest id,
    so the result does not depend on where the input loop starts.
    """
    out: list[tuple[int, int, int]] = []
    start = int(np.argmin(ids))
    stack = [[(start + i) % len(pts) for i in range(len(pts))]]
    while stack:
        chain = stack.pop()
        if len(chain) < 3:
            continue
        a, b = chain[0], chain[-1]
        best, best_angle = None, -1.0
        for pos in range(1, len(chain) - 1):
            c = chain[pos]
            if _cross(pts[a], pts[c], pts[b]) <= GEOM_TOL**2:
                continue
            ang = _angle_at(pts[c], pts[a], pts[b])
            if ang > best_angle + ANGLE_TOL:
                best, best_angle = pos, ang
            elif ang > best_angle - ANGLE_TOL and ids[c] < ids[chain[best]]:
                best = pos
        if best is None:
            return None
        c = chain[best]
        out.append((int(ids[a]), int(ids[c]), int(ids[b])))
        stack.append(chain[: best + 1])
        stack.append(chain[best:])
    return out


def ear_clip(pts: np.ndarray, ids: np.ndarray) -> list[tuple[int, int, int]] | None:
    """Ear-clipping triangulation of a simple CCW polygon; None if it gets stuck."""
    ring = list(range(len(pts)))
    out = []
    while len(ring) > 3:
        for k in range(len(ring)):
            i, j, l = ring[k - 1], ring[k], ring[(k + 1) % len(ring)]
            if _cross(pts[i], pts[j], pts[l]) <= GEOM_TOL**2:
                continue
            inside = False
            for m in ring:
                if m in (i, j, l):
                    continue
                p = pts[m]
                if (
                    _cross(pts[i], pts[j], p) >= 0
                    and _cross(pts[j], pts[l], p) >= 0
                    and _cross(pts[l], pts[i], p) >= 0
                ):
                    inside = True
                    break
            if not inside:
                out.append((int(ids[i]), int(ids[j]), int(ids[l])))
                ring.pop(k)
                break
        else:
            return None
    i, j, l = ring
    if _cross(pts[i], pts[j], pts[l]) <= GEOM_TOL**2:
        return None
    out.append((int(ids[i]), int(ids[j]), int(ids[l])))
    return out


def _kuhn_tets(mesh: PolytopalMesh, k: int) -> list[tuple[int, int, int, int]]:
    cv = mesh.cell_vertices[k]
    pts = mesh.vertices[cv]
    if len(cv) != 8:
        raise MeshError(f"cell {k} is not a hexahedron; only box cells can be split")
    lo, hi = pts.min(0), pts.max(0)
    mid = 0.5 * (lo + hi)
    bits = ((pts > mid) * np.array([1, 2, 4])).sum(1)
    if sorted(bits.tolist()) != list(range(8)) or not np.allclose(
        np.abs(pts - mid), 0.5 * (hi - lo), atol=GEOM_TOL
    ):
        raise MeshError(f"cell {k} is not an axis-aligned box")
    corner = np.empty(8, dtype=np.int64)
    corner[bits] = cv
    tets = []
    for perm in permutations(range(3)):
        b1 = 1 << perm[0]
        b2 = b1 | (1 << perm[1])
        t = [int(corner[0]), int(corner[b1]), int(corner[b2]), int(corner[7])]
        x = mesh.vertices[t]
        if np.linalg.det(x[1:] - x[0]) < 0:
            t[2], t[3] = t[3], t[2]
        tets.append(tuple(t))
    return tets


def triangulate(mesh: PolytopalMesh) -> SimplicialMesh:
    """Split every cell into simplices without adding vertices.

    Polygons get a per-cell Delaunay triangulation (ear clipping for
    non-convex cells); boxes get the six-tetrahedron Kuhn split along the
    diagonal from their lowest to their highest corner, which matches across
    shared faces.
    """
    simplices: list[tuple] = []
    parent: list[int] = []
    for k in range(mesh.n_cells):
        if mesh.dim == 3:
            tets = _kuhn_tets(mesh, k)
        else:
            ids = mesh.cell_vertices[k]
            pts = mesh.vertices[ids]
            tets = delaunay_convex_polygon(pts, ids) if is_convex(pts) else None
            if tets is None:
                tets = ear_clip(pts, ids)
            if tets is None:
                raise MeshError(f"cell {k} could not be triangulated (ear clipping failed)")
        simplices.extend(tets)
        parent.extend([k] * len(tets))
    simp = np.asarray(simplices, dtype=np.int64)
    simp.setflags(write=False)
    par = np.asarray(parent, dtype=np.int64)
    par.setflags(write=False)
    return SimplicialMesh(parent=mesh, simplices=simp, parent_cell=par)

"""Polytopal and simplicial mesh containers with cached cell geometry."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations

import numpy as np

GEOM_TOL = 1e-12


class MeshError(ValueError):
    """Raised for invalid or degenerate mesh geometry/topology."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def polygon_area(xy: np.ndarray) -> float:
    """Signed shoelace area of a closed vertex loop (positive if CCW)."""
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(xy: np.ndarray) -> np.ndarray:
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * a)


def face_area_vector(xyz: np.ndarray) -> np.ndarray:
    """Area-weighted normal of a planar polygon in 3D (right-hand rule)."""
    return 0.5 * np.cross(xyz, np.roll(xyz, -1, axis=0)).sum(axis=0)


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return (d1 * d2 < -GEOM_TOL**2) and (d3 * d4 < -GEOM_TOL**2)


@dataclass(frozen=True, eq=False)
class PolytopalMesh:
    """A partition of the unit square (dim=2) or unit cube (dim=3) into polytopes.

    For ``dim == 2`` each entry of ``cells`` is a counter-clockwise vertex loop.
    For ``dim == 3`` each entry is a tuple of faces, every face being a vertex
    loop oriented counter-clockwise when seen from outside the cell.

    Use :meth:`from_cells` to build one; it fills the geometry caches and the
    boundary flags.
    """

    dim: int
    vertices: np.ndarray
    cells: tuple
    boundary_vertex: np.ndarray
    diameter: np.ndarray
    measure: np.ndarray
    centroid: np.ndarray
    cell_vertices: tuple

    @classmethod
    def from_cells(cls, vertices, cells, validate: bool = True) -> "PolytopalMesh":
        vertices = np.asarray(vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] not in (2, 3):
            raise MeshError("vertices must be an (nv, 2) or (nv, 3) array")
        dim = vertices.shape[1]
        nv = len(vertices)
        if dim == 2:
            cells = tuple(_readonly(np.asarray(c, dtype=np.int64)) for c in cells)
            cell_vertices = cells
        else:
            cells = tuple(
                tuple(_readonly(np.asarray(f, dtype=np.int64)) for f in c) for c in cells
            )
            cell_vertices = tuple(
                _readonly(np.array(list(dict.fromkeys(int(v) for f in c for v in f)), dtype=np.int64))
                for c in cells
            )
        for k, cv in enumerate(cell_vertices):
            if len(cv) < dim + 1:
                raise MeshError(f"cell {k} has only {len(cv)} vertices")
            if cv.min() < 0 or cv.max() >= nv:
                raise MeshError(f"cell {k} references a vertex outside [0, {nv})")

        diameter = _diameters(vertices, cell_vertices)
        if dim == 2:
            measure, centroid = _polygon_geometry(vertices, cells)
        else:
            measure, centroid = _polyhedron_geometry(vertices, cells, cell_vertices)

        boundary = np.zeros(nv, dtype=bool)
        for facet, count in _facet_counts(dim, cells).items():
            if count == 1:
                boundary[list(facet)] = True

        mesh = cls(
            dim=dim,
            vertices=_readonly(vertices),
            cells=cells,
            boundary_vertex=_readonly(boundary),
            diameter=_readonly(diameter),
            measure=_readonly(measure),
            centroid=_readonly(centroid),
            cell_vertices=cell_vertices,
        )
        if validate:
            mesh.validate()
        return mesh

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def validate(self) -> None:
        """Check positivity, simplicity and facet matching; raise MeshError on failure."""
        for k in range(self.n_cells):
            if not (self.diameter[k] > 0 and self.measure[k] > 0):
                raise MeshError(f"cell {k} has non-positive measure {self.measure[k]:.3e}")
            cv = self.cell_vertices[k]
            if self.dim == 2:
                if len(set(cv.tolist())) != len(cv):
                    raise MeshError(f"cell {k} repeats a vertex")
                _check_simple_polygon(k, self.vertices[cv])
            else:
                _check_closed_polyhedron(k, self.cells[k])
        # each facet used at most twice, and in opposite directions
        directed: Counter = Counter()
        for k in range(self.n_cells):
            for f in _cell_facets(self.dim, self.cells[k]):
                directed[f] += 1
        for f, count in directed.items():
            if count > 1:
                raise MeshError(f"facet {list(f)} appears {count} times with the same orientation")
        for facet, count in _facet_counts(self.dim, self.cells).items():
            if count > 2:
                raise MeshError(f"facet {sorted(facet)} shared by {count} cells")

    def cell_points(self, k: int) -> np.ndarray:
        return self.vertices[self.cell_vertices[k]]


def _cell_facets(dim: int, cell) -> list[tuple]:
    """Directed facets of a cell in a canonical rotation (edges in 2D, faces in 3D)."""
    if dim == 2:
        n = len(cell)
        return [(int(cell[i]), int(cell[(i + 1) % n])) for i in range(n)]
    out = []
    for f in cell:
        f = [int(v) for v in f]
        i = f.index(min(f))
        out.append(tuple(f[i:] + f[:i]))
    return out


def _facet_counts(dim: int, cells) -> Counter:
    counts: Counter = Counter()
    for c in cells:
        for f in _cell_facets(dim, c):
            counts[frozenset(f)] += 1
    return counts


def _check_simple_polygon(k: int, pts: np.ndarray) -> None:
    n = len(pts)
    if n <= 3:
        return
    edges = [(pts[i], pts[(i + 1) % n]) for i in range(n)]
    for i, j in combinations(range(n), 2):
        if j == i + 1 or (i == 0 and j == n - 1):
            continue
        if _segments_intersect(*edges[i], *edges[j]):
            raise MeshError(f"cell {k} is not a simple polygon (edges {i} and {j} cross)")


def _check_closed_polyhedron(k: int, faces) -> None:
    edges: Counter = Counter()
    for f in faces:
        if len(f) < 3:
            raise MeshError(f"cell {k} has a face with fewer than 3 vertices")
        n = len(f)
        for i in range(n):
            edges[(int(f[i]), int(f[(i + 1) % n]))] += 1
    for (a, b), count in edges.items():
        if count != 1 or edges.get((b, a), 0) != 1:
            raise MeshError(f"cell {k} is not closed: edge ({a}, {b}) is unmatched")


def _diameters(vertices, cell_vertices) -> np.ndarray:
    out = np.empty(len(cell_vertices))
    by_size: dict[int, list[int]] = {}
    for k, cv in enumerate(cell_vertices):
        by_size.setdefault(len(cv), []).append(k)
    for ks in by_size.values():
        pts = vertices[np.stack([cell_vertices[k] for k in ks])]
        d = pts[:, :, None, :] - pts[:, None, :, :]
        out[ks] = np.sqrt((d * d).sum(-1).max(axis=(1, 2)))
    return out


def _polygon_geometry(vertices, cells) -> tuple[np.ndarray, np.ndarray]:
    sizes = np.array([len(c) for c in cells])
    ptr = np.concatenate([[0], np.cumsum(sizes)])
    idx = np.concatenate(cells)
    nxt = np.arange(len(idx)) + 1
    nxt[ptr[1:] - 1] = ptr[:-1]
    p, q = vertices[idx], vertices[idx[nxt]]
    cross = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    cell_of = np.repeat(np.arange(len(cells)), sizes)
    area = 0.5 * np.bincount(cell_of, cross, minlength=len(cells))
    mx = np.bincount(cell_of, (p[:, 0] + q[:, 0]) * cross, minlength=len(cells))
    my = np.bincount(cell_of, (p[:, 1] + q[:, 1]) * cross, minlength=len(cells))
    safe = np.where(area != 0, area, 1.0)
    centroid = np.stack([mx, my], axis=1) / (6.0 * safe[:, None])
    mean = np.stack([np.bincount(cell_of, p[:, j], minlength=len(cells)) for j in range(2)], 1)
    centroid[area == 0] = (mean / sizes[:, None])[area == 0]
    return area, centroid


def _polyhedron_geometry(vertices, cells, cell_vertices) -> tuple[np.ndarray, np.ndarray]:
    # fan each face from its first vertex and close the tetrahedra at the vertex mean
    tri_cell, tri = [], []
    for k, faces in enumerate(cells):
        for f in faces:
            for i in range(1, len(f) - 1):
                tri_cell.append(k)
                tri.append((f[0], f[i], f[i + 1]))
    tri_cell = np.asarray(tri_cell)
    tri = np.asarray(tri, dtype=np.int64)
    apex = np.stack([vertices[cv].mean(0) for cv in cell_vertices])[tri_cell]
    a, b, c = (vertices[tri[:, j]] - apex for j in range(3))
    vol = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
    ctr = apex + (a + b + c) / 4.0
    nc = len(cells)
    volume = np.bincount(tri_cell, vol, minlength=nc)
    moment = np.stack([np.bincount(tri_cell, vol * ctr[:, j], minlength=nc) for j in range(3)], 1)
    safe = np.where(volume != 0, volume, 1.0)
    return volume, moment / safe[:, None]


@dataclass(frozen=True, eq=False)
class SimplicialMesh:
    """Conforming triangulation that reuses the parent mesh's vertex array."""

    parent: PolytopalMesh
    simplices: np.ndarray
    parent_cell: np.ndarray

    @property
    def vertices(self) -> np.ndarray:
        return self.parent.vertices

    @property
    def dim(self) -> int:
        return self.parent.dim

    @property
    def n_simplices(self) -> int:
        return len(self.simplices)

    def volumes(self) -> np.ndarray:
        """Signed simplex measures (positive for correctly oriented simplices)."""
        x = self.vertices[self.simplices]
        jac = x[:, 1:, :] - x[:, :1, :]
        fact = 2.0 if self.dim == 2 else 6.0
        return np.linalg.det(jac) / fact

    def as_polytopal(self) -> PolytopalMesh:
        """View a 2D triangulation as a polygonal mesh of triangles."""
        if self.dim != 2:
            raise MeshError("as_polytopal is only available for triangle meshes")
        return PolytopalMesh.from_cells(np.array(self.vertices), list(self.simplices))


@dataclass(frozen=True)
class MeshQualityReport:
    h_max: float
    h_min: float
    max_aspect_ratio: float
    measure_ratio: float

    def as_dict(self) -> dict:
        return {
            "h_max": self.h_max,
            "h_min": self.h_min,
            "max_aspect_ratio": self.max_aspect_ratio,
            "measure_ratio": self.measure_ratio,
        }


def _inradius_estimate(mesh: PolytopalMesh, k: int) -> float:
    """Distance from the centroid to the nearest facet plane."""
    c = mesh.centroid[k]
    if mesh.dim == 2:
        pts = mesh.cell_points(k)
        e = np.roll(pts, -1, axis=0) - pts
        nrm = np.stack([e[:, 1], -e[:, 0]], axis=1)
        lens = np.linalg.norm(nrm, axis=1)
        ok = lens > GEOM_TOL
        d = np.abs(((pts - c) * nrm).sum(1))[ok] / lens[ok]
        return float(d.min())
    best = np.inf
    for f in mesh.cells[k]:
        p = mesh.vertices[np.asarray(f)]
        n = face_area_vector(p)
        best = min(best, abs(np.dot(p[0] - c, n)) / np.linalg.norm(n))
    return float(best)


def mesh_quality(mesh: PolytopalMesh) -> MeshQualityReport:
    aspect = max(mesh.diameter[k] / _inradius_estimate(mesh, k) for k in range(mesh.n_cells))
    return MeshQualityReport(
        h_max=float(mesh.diameter.max()),
        h_min=float(mesh.diameter.min()),
        max_aspect_ratio=float(aspect),
        measure_ratio=float(mesh.measure.min() / mesh.measure.max()),
    )

"""Clipped (and optionally Lloyd-relaxed) Voronoi meshes of the unit square.

Seeds are mirrored across the four sides of the square before the diagram is
built. The bisector between a seed and its mirror image is the side itself, so
the bounded Voronoi region of every original seed is exactly its cell clipped
to the square.
"""

from __future__ import annotations

import logging
from itertools import chain

import numpy as np
from scipy.spatial import QhullError, Voronoi, cKDTree

from .core import GEOM_TOL, MeshError, PolytopalMesh

logger = logging.getLogger(__name__)

SEED_SEPARATION = 1e-9


def _mirror(pts: np.ndarray, band: float = np.inf) -> np.ndarray:
    """Append mirror images of the seeds lying within ``band`` of each side."""
    x, y = pts[:, 0], pts[:, 1]
    out = [pts]
    for near, img in (
        (x < band, np.stack([-x, y], 1)),
        (1.0 - x < band, np.stack([2.0 - x, y], 1)),
        (y < band, np.stack([x, -y], 1)),
        (1.0 - y < band, np.stack([x, 2.0 - y], 1)),
    ):
        out.append(img[near])
    return np.concatenate(out)


def _voronoi_flat(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Voronoi vertices plus CSR-style (ptr, idx) CCW loops of the clipped cells."""
    n = len(pts)
    if n == 1:
        # qhull needs a non-degenerate point set; a single seed owns the square
        square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        return square, np.array([0, 4]), np.arange(4)
    # Mirroring only a boundary band is exact whenever every resulting cell
    # stays inside the square (extra mirrors can only cut outside it).
    for band in (4.0 / np.sqrt(n), np.inf):
        vor = Voronoi(_mirror(pts, band))
        regions = [vor.regions[r] for r in vor.point_region[:n]]
        sizes = np.fromiter((len(r) for r in regions), dtype=np.int64, count=n)
        idx = np.fromiter(chain.from_iterable(regions), dtype=np.int64, count=int(sizes.sum()))
        bad = (sizes < 3) | (np.bincount(np.repeat(np.arange(n), sizes), idx < 0, minlength=n) > 0)
        if not bad.any():
            v = vor.vertices[idx]
            if v.min() >= -1e-9 and v.max() <= 1.0 + 1e-9:
                break
    if bad.any():
        raise MeshError(f"seed {int(np.argmax(bad))} has an unbounded or degenerate Voronoi region")
    owner = np.repeat(np.arange(n), sizes)
    d = vor.vertices[idx] - pts[owner]
    idx = idx[np.lexsort((np.arctan2(d[:, 1], d[:, 0]), owner))]
    return vor.vertices, np.concatenate([[0], np.cumsum(sizes)]), idx


def _voronoi_loops(pts: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    verts, ptr, idx = _voronoi_flat(pts)
    return verts, np.split(idx, ptr[1:-1])


def _flat_centroids(verts, ptr, idx) -> np.ndarray:
    sizes = np.diff(ptr)
    nxt = np.arange(len(idx)) + 1
    nxt[ptr[1:] - 1] = ptr[:-1]
    p, q = verts[idx], verts[idx[nxt]]
    cross = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    owner = np.repeat(np.arange(len(sizes)), sizes)
    n = len(sizes)
    area = np.bincount(owner, cross, minlength=n)
    cx = np.bincount(owner, (p[:, 0] + q[:, 0]) * cross, minlength=n)
    cy = np.bincount(owner, (p[:, 1] + q[:, 1]) * cross, minlength=n)
    return np.stack([cx, cy], 1) / (3.0 * area[:, None])


def _separate(pts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    pairs = cKDTree(pts).query_pairs(SEED_SEPARATION, output_type="ndarray")
    if len(pairs) == 0:
        return pts
    pts = pts.copy()
    moved = np.unique(pairs[:, 1])
    pts[moved] += 1e-6 * rng.standard_normal((len(moved), 2))
    return np.clip(pts, 1e-6, 1.0 - 1e-6)


def _weld(verts: np.ndarray, loops: list[np.ndarray]) -> tuple[np.ndarray, list[list[int]]]:
    """Snap to the boundary, merge coincident vertices, renumber compactly."""
    used = np.unique(np.concatenate(loops))
    V = verts[used].copy()
    if V.min() < -1e-9 or V.max() > 1.0 + 1e-9:
        raise MeshError("Voronoi vertex outside the unit square")
    V[np.abs(V) < GEOM_TOL] = 0.0
    V[np.abs(V - 1.0) < GEOM_TOL] = 1.0
    np.clip(V, 0.0, 1.0, out=V)

    parent = np.arange(len(V))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in cKDTree(V).query_pairs(GEOM_TOL):
        ra, rb = find(a), find(b)
        parent[max(ra, rb)] = min(ra, rb)
    local = np.full(len(verts), -1)
    local[used] = [find(a) for a in range(len(V))]

    new_id: dict[int, int] = {}
    cells = []
    for loop in loops:
        ids = [int(v) for v in local[loop]]
        ids = [v for i, v in enumerate(ids) if v != ids[i - 1]] if len(set(ids)) > 1 else ids[:1]
        cells.append([new_id.setdefault(v, len(new_id)) for v in ids])
    order = np.empty(len(new_id), dtype=np.int64)
    for old, new in new_id.items():
        order[new] = old
    return V[order], cells


def _on_boundary(p: np.ndarray) -> int:
    """Number of square sides the point lies on (2 at a corner)."""
    return int(np.sum((p == 0.0) | (p == 1.0)))


def collapse_short_edges(
    verts: np.ndarray, cells: list[list[int]], tol: float = 0.1, max_rounds: int = 50
) -> tuple[np.ndarray, list[list[int]]]:
    """Merge the endpoints of edges that subtend a small angle at the cell centre.

    An edge of an n-gon is collapsed when the angle it subtends at the vertex
    mean is below ``tol * 2*pi/n`` (the PolyMesher rule). Triangles are never
    reduced. Merged vertices go to the midpoint, except that boundary vertices
    (and corners above all) keep their position so the domain is preserved.
    """
    verts = verts.copy()
    cells = [list(c) for c in cells]
    for _ in range(max_rounds):
        short: set[tuple[int, int]] = set()
        for c in cells:
            n = len(c)
            if n < 4:
                continue
            p = verts[c]
            d = p - p.mean(0)
            beta = np.mod(np.roll(np.arctan2(d[:, 1], d[:, 0]), -1) - np.arctan2(d[:, 1], d[:, 0]), 2 * np.pi)
            for i in np.flatnonzero(beta < tol * 2 * np.pi / n):
                a, b = c[i], c[(i + 1) % n]
                short.add((min(a, b), max(a, b)))
        if not short:
            break
        target = np.arange(len(verts))

        def root(v):
            while target[v] != v:
                v = target[v]
            return v

        for a, b in sorted(short):
            ra, rb = root(a), root(b)
            if ra == rb:
                continue
            keep, drop = (ra, rb) if ra < rb else (rb, ra)
            pa, pb = verts[keep], verts[drop]
            ba, bb = _on_boundary(pa), _on_boundary(pb)
            if bb > ba:
                verts[keep] = pb
            elif ba == bb and not (ba == 2 and bb == 2):
                verts[keep] = 0.5 * (pa + pb)
            target[drop] = keep
        new_cells = []
        for c in cells:
            ids = [root(v) for v in c]
            ids = [v for i, v in enumerate(ids) if v != ids[i - 1]]
            new_cells.append(ids)
        cells = new_cells

    used = sorted({v for c in cells for v in c})
    remap = {old: new for new, old in enumerate(used)}
    return verts[used], [[remap[v] for v in c] for c in cells]


def lloyd_step(pts: np.ndarray) -> np.ndarray:
    """Move every seed to the centroid of its clipped Voronoi cell."""
    return _flat_centroids(*_voronoi_flat(pts))


def generate_voronoi_mesh(
    n_cells: int,
    lloyd_iters: int = 100,
    seed: int = 0,
    *,
    seeds: np.ndarray | None = None,
    collapse_tol: float | None = None,
    max_retries: int = 10,
) -> PolytopalMesh:
    """Voronoi mesh of ``n_cells`` convex cells on the unit square.

    Seeds are drawn uniformly with ``numpy.random.default_rng(seed)`` unless
    given explicitly, then moved to their cell centroids ``lloyd_iters``
    times. ``lloyd_iters=0`` gives the raw (non quasi-uniform) diagram.

    ``collapse_tol`` controls the final short-edge collapse (see
    :func:`collapse_short_edges`); it defaults to 0.1 for relaxed meshes and
    to 0 (no collapse) for raw diagrams.
    """
    n = int(n_cells)
    if collapse_tol is None:
        collapse_tol = 0.1 if lloyd_iters > 0 else 0.0
    if n < 1:
        raise MeshError("n_cells must be positive")
    if lloyd_iters < 0:
        raise MeshError("lloyd_iters must be non-negative")
    rng = np.random.default_rng(seed)
    if seeds is None:
        pts = rng.random((n, 2))
    else:
        pts = np.array(seeds, dtype=float)
        if pts.shape != (n, 2):
            raise MeshError(f"expected seeds of shape ({n}, 2), got {pts.shape}")

    last_error: Exception | None = None
    for attempt in range(max_retries + 1):
        try:
            p = _separate(pts, rng)
            for _ in range(lloyd_iters):
                p = _separate(lloyd_step(p), rng)
            verts, cells = _weld(*_voronoi_loops(p))
            if collapse_tol > 0:
                verts, cells = collapse_short_edges(verts, cells, collapse_tol)
            return PolytopalMesh.from_cells(verts, cells)
        except (MeshError, QhullError) as exc:
            last_error = exc
            logger.warning("Voronoi attempt %d failed (%s); perturbing seeds", attempt, exc)
            pts = np.clip(pts + 1e-7 * rng.standard_normal(pts.shape), 1e-6, 1.0 - 1e-6)
    raise MeshError(
        f"could not build a valid Voronoi mesh with {n} cells after {max_retries + 1} attempts: {last_error}"
    )

"""Independent reference computations used by the tests.

None of these share code with the package: Voronoi cells come from brute
force half-plane clipping, element matrices from closed forms or dense
quadrature.
"""

from __future__ import annotations

import numpy as np


def clip_halfplane(poly: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Sutherland-Hodgman: keep the part of ``poly`` with normal . x <= offset."""
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp, fq = normal @ p - offset, normal @ q - offset
        if fp <= 0:
            out.append(p)
        if fp * fq < 0:
            t = fp / (fp - fq)
            out.append(p + t * (q - p))
    return np.array(out).reshape(-1, 2)


def voronoi_cell_by_clipping(seeds: np.ndarray, i: int) -> np.ndarray:
    """Voronoi cell of seed i in the unit square, O(n) bisector clips."""
    poly = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    p = seeds[i]
    for j, q in enumerate(seeds):
        if j == i:
            continue
        normal = q - p
        offset = 0.5 * (q @ q - p @ p)
        poly = clip_halfplane(poly, normal, offset)
        if len(poly) == 0:
            break
    return poly


def shoelace(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def in_circumcircle(a, b, c, d) -> float:
    """Positive when d lies strictly inside the circumcircle of CCW (a, b, c)."""
    m = np.array(
        [
            [a[0] - d[0], a[1] - d[1], (a[0] - d[0]) ** 2 + (a[1] - d[1]) ** 2],
            [b[0] - d[0], b[1] - d[1], (b[0] - d[0]) ** 2 + (b[1] - d[1]) ** 2],
            [c[0] - d[0], c[1] - d[1], (c[0] - d[0]) ** 2 + (c[1] - d[1]) ** 2],
        ]
    )
    return float(np.linalg.det(m))


def p1_triangle_matrix(x: np.ndarray) -> np.ndarray:
    """Closed-form P1 stiffness: K_ij = cot-weights, via edge vectors."""
    e = np.array([x[2] - x[1], x[0] - x[2], x[1] - x[0]])  # edge opposite vertex i
    area = 0.5 * abs(e[1, 0] * e[2, 1] - e[1, 1] * e[2, 0])
    return (e @ e.T) / (4.0 * area)


def gauss_legendre_edge_integrals(poly: np.ndarray, values: np.ndarray, order: int = 12):
    """Integrals over the boundary of v * n_x and v * n_y, where v is linear
    along each edge with the given vertex values (dense quadrature)."""
    t, w = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    total = np.zeros(2)
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        edge = q - p
        normal = np.array([edge[1], -edge[0]])  # outward for CCW, scaled by |e|
        v = (1 - t) * values[i] + t * values[(i + 1) % n]
        total += (w @ v) * normal
    return total


def dense_sgs(A: np.ndarray, sweeps: int = 1) -> np.ndarray:
    """Dense matrix of the m-sweep symmetric Gauss-Seidel smoother.

    One sweep: R1 = L^-T D L^-1 with L = D + strict lower part (A symmetric).
    m sweeps: I - R_m A = (I - R1 A)^m.
    """
    L = np.tril(A)
    D = np.diag(np.diag(A))
    Li = np.linalg.inv(L)
    R1 = Li.T @ D @ Li
    n = len(A)
    E = np.linalg.matrix_power(np.eye(n) - R1 @ A, sweeps)
    return (np.eye(n) - E) @ np.linalg.inv(A)

"""Sparse SPD linear algebra: CSR helpers, direct coarse solves, PCG with
Lanczos eigenvalue estimates, and small dense eigen-oracles."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import splu


class NotSPDError(np.linalg.LinAlgError):
    """The matrix (or preconditioner) is not symmetric positive definite."""


class PcgBreakdown(NotSPDError):
    pass


def as_csr(A) -> sp.csr_matrix:
    """Canonical CSR copy: float64, duplicates summed, column indices sorted."""
    A = sp.csr_matrix(A, dtype=float, copy=True)
    A.sum_duplicates()
    A.sort_indices()
    return A


def symmetry_error(A) -> float:
    """max |A - A^T| relative to max |A|."""
    A = sp.csr_matrix(A)
    scale = abs(A).max() if A.nnz else 0.0
    if scale == 0:
        return 0.0
    d = A - A.T
    return float(abs(d).max() / scale) if d.nnz else 0.0


def spmv(A, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if A.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {A.shape} times vector of length {x.shape[0]}")
    return A @ x


def write_coo(A, path) -> None:
    """Dump nonzeros as ``i j value`` lines (0-based); first line ``n m nnz``."""
    C = sp.coo_matrix(A)
    with Path(path).open("w") as fh:
        fh.write(f"{C.shape[0]} {C.shape[1]} {C.nnz}\n")
        for i, j, v in zip(C.row.tolist(), C.col.tolist(), C.data.tolist()):
            fh.write(f"{i} {j} {v:.17g}\n")


def read_coo(path) -> sp.csr_matrix:
    with Path(path).open() as fh:
        n, m, nnz = (int(t) for t in fh.readline().split())
        data = np.loadtxt(fh, ndmin=2) if nnz else np.zeros((0, 3))
    if len(data) != nnz:
        raise ValueError(f"expected {nnz} entries, found {len(data)}")
    return as_csr(sp.coo_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(n, m)))


class Factorization:
    """Sparse LDL^T-equivalent factorization of an SPD matrix.

    SuperLU runs in symmetric mode with a minimum-degree ordering on A + A^T
    and no threshold pivoting, so it performs a symmetrically permuted
    Gaussian elimination whose pivots are the Cholesky pivots squared. Any
    row interchange or non-positive pivot means A is not SPD.
    """

    def __init__(self, A):
        A = as_csr(A)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("matrix must be square")
        self.n = n
        if n == 0:
            self._lu = None
            return
        if symmetry_error(A) > 1e-12:
            raise NotSPDError("matrix not SPD: it is not symmetric")
        try:
            lu = splu(
                A.tocsc(),
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise NotSPDError(f"matrix not SPD: {exc}") from exc
        pivots = lu.U.diagonal()
        if not np.array_equal(lu.perm_r, lu.perm_c) or not np.all(pivots > 0):
            raise NotSPDError("matrix not SPD: non-positive pivot encountered")
        self._lu = lu

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise ValueError(f"right-hand side has length {b.shape[0]}, expected {self.n}")
        if self.n == 0:
            return b.copy()
        return self._lu.solve(b)

    __call__ = solve


def cholesky_factorize(A) -> Factorization:
    return Factorization(A)


def solve(fact: Factorization, b: np.ndarray) -> np.ndarray:
    return fact.solve(b)


class CoarseSolver(Protocol):
    def __call__(self, b: np.ndarray) -> np.ndarray: ...


def make_coarse_solver(A, kind: str = "direct") -> CoarseSolver:
    """Coarse-space solver factory: ``direct`` (exact) or ``amg`` (one SA V-cycle)."""
    if kind == "direct":
        return Factorization(A)
    if kind == "amg":
        import pyamg

        sgs = ("gauss_seidel", {"sweep": "symmetric"})
        ml = pyamg.smoothed_aggregation_solver(
            as_csr(A), symmetry="symmetric", presmoother=sgs, postsmoother=sgs
        )
        op = ml.aspreconditioner(cycle="V")
        return lambda b: op @ np.asarray(b, dtype=float)
    raise ValueError(f"unknown coarse solver {kind!r}")


@dataclass
class PcgReport:
    iterations: int
    residuals: list[float] = field(repr=False)
    converged: bool
    lambda_min: float
    lambda_max: float

    @property
    def condition(self) -> float:
        return self.lambda_max / self.lambda_min

    CSV_FIELDS = ("iterations", "converged", "lambda_min", "lambda_max", "condition", "final_residual")

    def csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow(
            [
                self.iterations,
                int(self.converged),
                f"{self.lambda_min:.17g}",
                f"{self.lambda_max:.17g}",
                f"{self.condition:.17g}",
                f"{self.residuals[-1]:.17g}" if self.residuals else "",
            ]
        )
        return buf.getvalue()

    def as_dict(self) -> dict:
        d = asdict(self)
        d["condition"] = self.condition
        return d


def lanczos_tridiagonal(alphas, betas) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the Lanczos matrix implied by CG scalars.

    ``alphas[j]`` is the step length of iteration j and ``betas[j]`` the
    direction update coefficient computed after it.
    """
    a = np.asarray(alphas, dtype=float)
    b = np.asarray(betas, dtype=float)[: len(a) - 1]
    diag = 1.0 / a
    diag[1:] += b / a[:-1]
    off = np.sqrt(b) / a[:-1]
    return diag, off


def lanczos_extremes(alphas, betas) -> tuple[float, float]:
    if len(alphas) == 0:
        return float("nan"), float("nan")
    d, e = lanczos_tridiagonal(alphas, betas)
    if len(d) == 1:
        return float(d[0]), float(d[0])
    ev = sla.eigh_tridiagonal(d, e, eigvals_only=True)
    return float(ev[0]), float(ev[-1])


def pcg(
    A,
    b: np.ndarray,
    apply_B: Callable[[np.ndarray], np.ndarray] | None = None,
    tol: float = 1e-12,
    max_iter: int = 1200,
    x0: np.ndarray | None = None,
    callback: Callable[[np.ndarray], None] | None = None,
) -> tuple[np.ndarray, PcgReport]:
    """Preconditioned conjugate gradients stopped on ||r_k|| / ||r_0|| < tol.

    Extreme eigenvalues of B A are estimated from the Lanczos tridiagonal
    assembled from the CG step lengths and direction coefficients.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"dimension mismatch: matrix {A.shape}, rhs {n}")
    apply_B = apply_B or (lambda r: r.copy())
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x if x0 is not None else b.copy()
    r0 = np.linalg.norm(r)
    if r0 == 0.0:
        return x, PcgReport(0, [], True, float("nan"), float("nan"))

    residuals = [1.0]
    alphas: list[float] = []
    betas: list[float] = []
    z = apply_B(r)
    rz = float(r @ z)
    if not rz > 0:
        raise PcgBreakdown(f"(B r, r) = {rz:.3e} <= 0: preconditioner is not SPD")
    p = z.copy()
    converged = False
    for _ in range(max_iter):
        q = A @ p
        pq = float(p @ q)
        if not pq > 0:
            raise PcgBreakdown(f"(A p, p) = {pq:.3e} <= 0: matrix is not SPD")
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        alphas.append(alpha)
        rel = float(np.linalg.norm(r) / r0)
        residuals.append(rel)
        if callback is not None:
            callback(x)
        if rel < tol:
            converged = True
            break
        z = apply_B(r)
        rz_new = float(r @ z)
        if not rz_new > 0:
            raise PcgBreakdown(f"(B r, r) = {rz_new:.3e} <= 0: preconditioner is not SPD")
        beta = rz_new / rz
        betas.append(beta)
        rz = rz_new
        p = z + beta * p

    lmin, lmax = lanczos_extremes(alphas, betas)
    return x, PcgReport(len(alphas), residuals, converged, lmin, lmax)


def _dense(A) -> np.ndarray:
    return A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)


def dense_generalized_eigs(A, M) -> np.ndarray:
    """All eigenvalues of A v = lambda M v, ascending (dense; small n only)."""
    A, M = _dense(A), _dense(M)
    try:
        L = np.linalg.cholesky(0.5 * (M + M.T))
    except np.linalg.LinAlgError as exc:
        raise NotSPDError("M is not SPD") from exc
    C = sla.solve_triangular(L, sla.solve_triangular(L, 0.5 * (A + A.T), lower=True).T, lower=True)
    return np.linalg.eigvalsh(0.5 * (C + C.T))


def operator_matrix(apply: Callable[[np.ndarray], np.ndarray], n: int) -> np.ndarray:
    """Dense matrix of a linear operator obtained by applying it to unit vectors."""
    out = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        out[:, j] = apply(e)
        e[j] = 0.0
    return out


def dense_preconditioned_spectrum(A, apply_B: Callable[[np.ndarray], np.ndarray] | None = None) -> np.ndarray:
    """Eigenvalues of B A via the symmetric form L^T A L with B = L L^T."""
    A = _dense(A)
    n = A.shape[0]
    if apply_B is None:
        return np.linalg.eigvalsh(A)
    Bd = operator_matrix(apply_B, n)
    try:
        L = np.linalg.cholesky(0.5 * (Bd + Bd.T))
    except np.linalg.LinAlgError as exc:
        raise NotSPDError("preconditioner is not SPD") from exc
    S = L.T @ A @ L
    return np.linalg.eigvalsh(0.5 * (S + S.T))


def dense_condition_number(A, apply_B=None) -> float:
    ev = dense_preconditioned_spectrum(A, apply_B)
    return float(ev[-1] / ev[0])

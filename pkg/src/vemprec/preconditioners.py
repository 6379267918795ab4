"""Smoothers, the VEM/P1 transfer, and auxiliary-space preconditioners.

Every preconditioner is a callable ``r -> z`` acting on free-DOF vectors, so
it can be handed directly to :func:`vemprec.linalg.pcg`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .linalg import CoarseSolver, as_csr, make_coarse_solver
from .vem import AssembledSystem

VARIANTS = ("none", "sgs", "fict", "add", "mul")
LABELS = {
    "none": "K(A)",
    "sgs": "K(B_sgs A)",
    "fict": "K(B_fict A)",
    "add": "K(B_add A)",
    "mul": "K(B_mul A)",
}


def _triangular_solver(T: sp.spmatrix):
    """Exact solver for a sparse triangular matrix (SuperLU in natural order)."""
    lu = splu(
        sp.csc_matrix(T),
        permc_spec="NATURAL",
        diag_pivot_thresh=0.0,
        options={"SymmetricMode": True},
    )
    return lu.solve


class Smoother:
    """m-sweep symmetric smoother R acting on residuals (zero initial guess).

    ``sgs``: each sweep is a forward then a backward Gauss-Seidel pass, so
    I - R A = [(I - U^-1 A)(I - L^-1 A)]^m with L = D + lower, U = D + upper.
    ``jacobi``: m steps of x <- x + omega D^-1 (r - A x).
    ``sweeps=0`` gives R = 0.
    """

    def __init__(self, A, kind: str = "sgs", sweeps: int = 2, omega: float = 1.0):
        if kind not in ("sgs", "jacobi"):
            raise ValueError(f"unknown smoother kind {kind!r}")
        if sweeps < 0:
            raise ValueError("sweeps must be non-negative")
        self.A = as_csr(A)
        self.kind = kind
        self.sweeps = int(sweeps)
        self.omega = float(omega)
        diag = self.A.diagonal()
        if self.A.shape[0] and np.any(diag == 0):
            raise ZeroDivisionError(f"zero diagonal entry at row {int(np.flatnonzero(diag == 0)[0])}")
        self.inv_diag = 1.0 / diag
        if kind == "sgs" and self.A.shape[0] and self.sweeps:
            self._lower = _triangular_solver(sp.tril(self.A, format="csc"))
            self._upper = _triangular_solver(sp.triu(self.A, format="csc"))

    def __call__(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        x = np.zeros_like(r)
        if self.sweeps == 0 or r.size == 0:
            return x
        A = self.A
        if self.kind == "jacobi":
            x = self.omega * self.inv_diag * r
            for _ in range(self.sweeps - 1):
                x += self.omega * self.inv_diag * (r - A @ x)
            return x
        x = self._lower(r)
        x += self._upper(r - A @ x)
        for _ in range(self.sweeps - 1):
            x += self._lower(r - A @ x)
            x += self._upper(r - A @ x)
        return x

    apply = __call__


def smoother_apply(S: Smoother, r: np.ndarray) -> np.ndarray:
    return S(r)


class Transfer:
    """Map between coarse (P1) and fine (VEM) free DOFs.

    Both spaces carry one DOF per interior vertex, so the map is an index
    permutation; with matching free-vertex orderings it is the identity.
    """

    def __init__(self, fine_free: np.ndarray, coarse_free: np.ndarray):
        fine_free = np.asarray(fine_free)
        coarse_free = np.asarray(coarse_free)
        if len(fine_free) != len(coarse_free) or set(fine_free.tolist()) != set(coarse_free.tolist()):
            raise ValueError("fine and coarse free DOF sets differ; the transfer is undefined")
        self.identity = bool(np.array_equal(fine_free, coarse_free))
        pos = {int(v): i for i, v in enumerate(coarse_free)}
        # fine[i] = coarse[perm[i]]
        self.perm = np.array([pos[int(v)] for v in fine_free], dtype=np.int64)
        self.n = len(fine_free)

    @classmethod
    def between(cls, fine: AssembledSystem, coarse: AssembledSystem) -> "Transfer":
        return cls(fine.dof_map.free, coarse.dof_map.free)

    def apply(self, w_coarse: np.ndarray) -> np.ndarray:
        w = np.asarray(w_coarse, dtype=float)
        if w.shape[0] != self.n:
            raise ValueError(f"coarse vector has length {w.shape[0]}, expected {self.n}")
        return w.copy() if self.identity else w[self.perm]

    def apply_adjoint(self, r_fine: np.ndarray) -> np.ndarray:
        r = np.asarray(r_fine, dtype=float)
        if r.shape[0] != self.n:
            raise ValueError(f"fine vector has length {r.shape[0]}, expected {self.n}")
        if self.identity:
            return r.copy()
        out = np.empty_like(r)
        out[self.perm] = r
        return out

    def matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix((np.ones(self.n), (np.arange(self.n), self.perm)), shape=(self.n, self.n))


def transfer_apply(T: Transfer, w_coarse: np.ndarray) -> np.ndarray:
    return T.apply(w_coarse)


def transfer_apply_adjoint(T: Transfer, r_fine: np.ndarray) -> np.ndarray:
    return T.apply_adjoint(r_fine)


@dataclass
class AuxPreconditioner:
    """B_sgs = R, B_fict = P A_c^-1 P^t, B_add = R + B_fict, and B_mul with
    I - B_mul A = (I - R A)(I - P A_c^-1 P^t A)(I - R A)."""

    variant: str
    A: sp.csr_matrix
    smoother: Smoother | None = None
    transfer: Transfer | None = None
    coarse: CoarseSolver | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown preconditioner {self.variant!r}; choose from {VARIANTS}")
        needs_smoother = self.variant in ("sgs", "add", "mul")
        needs_coarse = self.variant in ("fict", "add", "mul")
        if needs_smoother and self.smoother is None:
            raise ValueError(f"variant {self.variant!r} needs a smoother")
        if needs_coarse and (self.coarse is None or self.transfer is None):
            raise ValueError(f"variant {self.variant!r} needs a coarse solver and a transfer")

    def coarse_correction(self, r: np.ndarray) -> np.ndarray:
        return self.transfer.apply(self.coarse(self.transfer.apply_adjoint(r)))

    def __call__(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        v = self.variant
        if v == "none":
            return r.copy()
        if v == "sgs":
            return self.smoother(r)
        if v == "fict":
            return self.coarse_correction(r)
        if v == "add":
            return self.smoother(r) + self.coarse_correction(r)
        x = self.smoother(r)
        x = x + self.coarse_correction(r - self.A @ x)
        return x + self.smoother(r - self.A @ x)

    @property
    def label(self) -> str:
        return LABELS[self.variant]


def apply_fictitious(P: AuxPreconditioner, r: np.ndarray) -> np.ndarray:
    if P.variant != "fict":
        raise ValueError("apply_fictitious needs a 'fict' preconditioner")
    return P(r)


def apply_additive(P: AuxPreconditioner, r: np.ndarray) -> np.ndarray:
    if P.variant != "add":
        raise ValueError("apply_additive needs an 'add' preconditioner")
    return P(r)


def apply_multiplicative(P: AuxPreconditioner, r: np.ndarray) -> np.ndarray:
    if P.variant != "mul":
        raise ValueError("apply_multiplicative needs a 'mul' preconditioner")
    return P(r)


class PreconditionerFactory:
    """Shares one smoother, transfer and coarse factorization across variants."""

    def __init__(
        self,
        fine: AssembledSystem,
        coarse: AssembledSystem,
        smoother: str = "sgs",
        sweeps: int = 2,
        coarse_solver: str = "direct",
    ):
        self.A = fine.matrix
        self._smoother_args = (smoother, sweeps)
        self._coarse_args = (coarse.matrix, coarse_solver)
        self._fine, self._coarse_sys = fine, coarse
        self._smoother: Smoother | None = None
        self._coarse: CoarseSolver | None = None
        self._transfer: Transfer | None = None

    @property
    def smoother(self) -> Smoother:
        if self._smoother is None:
            self._smoother = Smoother(self.A, *self._smoother_args)
        return self._smoother

    @property
    def coarse(self) -> CoarseSolver:
        if self._coarse is None:
            self._coarse = make_coarse_solver(*self._coarse_args)
        return self._coarse

    @property
    def transfer(self) -> Transfer:
        if self._transfer is None:
            self._transfer = Transfer.between(self._fine, self._coarse_sys)
        return self._transfer

    def build(self, variant: str) -> AuxPreconditioner:
        if variant not in VARIANTS:
            raise ValueError(f"unknown preconditioner {variant!r}; choose from {VARIANTS}")
        smoother = self.smoother if variant in ("sgs", "add", "mul") else None
        coarse = self.coarse if variant in ("fict", "add", "mul") else None
        transfer = self.transfer if coarse is not None else None
        return AuxPreconditioner(variant, self.A, smoother, transfer, coarse)

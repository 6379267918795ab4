"""Piecewise-constant diffusion coefficients, one value per polytopal cell."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mesh import PolytopalMesh

INCLUSION_BOXES = (((0.25, 0.5),) * 3, ((0.5, 0.75),) * 3)


@dataclass(frozen=True, eq=False)
class CoefficientField:
    values: np.ndarray
    descriptor: str = "custom"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("coefficient values must be a non-empty 1D array")
        if not np.all(v > 0) or not np.all(np.isfinite(v)):
            raise ValueError("coefficient values must be finite and positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def jump(self) -> float:
        """max(kappa) / min(kappa)."""
        return float(self.values.max() / self.values.min())

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cell_index", "kappa"])
            for k, v in enumerate(self.values.tolist()):
                w.writerow([k, f"{v:.17g}"])

    @classmethod
    def read_csv(cls, path) -> "CoefficientField":
        with Path(path).open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        order = np.argsort([int(r["cell_index"]) for r in rows])
        return cls(np.array([float(rows[i]["kappa"]) for i in order]), descriptor=f"csv:{path}")


def constant_field(mesh: PolytopalMesh, value: float = 1.0) -> CoefficientField:
    if not value > 0:
        raise ValueError("coefficient value must be positive")
    return CoefficientField(np.full(mesh.n_cells, float(value)), descriptor=f"const:{value:g}")


def random_exponent_field(
    mesh: PolytopalMesh, seed: int, k_min: int = 0, k_max: int = 6
) -> CoefficientField:
    """kappa_K = 10**k_K with k_K uniform on the integers k_min..k_max."""
    if k_min > k_max:
        raise ValueError("k_min must not exceed k_max")
    rng = np.random.default_rng(seed)
    k = rng.integers(k_min, k_max, size=mesh.n_cells, endpoint=True)
    return CoefficientField(10.0 ** k.astype(float), descriptor=f"random:{seed}")


def in_inclusions(points: np.ndarray) -> np.ndarray:
    inside = np.zeros(len(points), dtype=bool)
    for box in INCLUSION_BOXES:
        hit = np.ones(len(points), dtype=bool)
        for axis, (lo, hi) in enumerate(box):
            hit &= (points[:, axis] >= lo) & (points[:, axis] <= hi)
        inside |= hit
    return inside


def inclusion_field_3d(mesh: PolytopalMesh, kappa1: float) -> CoefficientField:
    """kappa1 on cells whose centroid lies in [0.25,0.5]^3 or [0.5,0.75]^3, else 1."""
    if mesh.dim != 3:
        raise ValueError("inclusion field needs a 3D mesh")
    if not kappa1 > 0:
        raise ValueError("kappa1 must be positive")
    values = np.where(in_inclusions(mesh.centroid), float(kappa1), 1.0)
    return CoefficientField(values, descriptor=f"inclusion:{kappa1:g}")

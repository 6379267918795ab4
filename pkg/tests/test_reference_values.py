"""Reference magnitudes at the largest default sizes.

Meshes and coefficients in the 2D references are random, so these check
magnitudes (order of the condition number, iteration window), not digits.
"""

import pytest

from vemprec.bench import ExperimentSpec, run_suite

pytestmark = pytest.mark.slow


def _one(mesh, coef, precond, dim=2):
    (row,) = run_suite(ExperimentSpec(dim=dim, meshes=[mesh], coefs=[coef], preconds=[precond]))
    return row


def test_fict_random_jump_10k():
    # reference: 11.6 (44)
    r = _one("voronoi:10000:seed=1", "random:1", "fict")
    assert r.converged
    assert 3 <= r.condition <= 30
    assert 30 <= r.iterations <= 60


def test_add_constant_10k():
    # reference: 1.99 (14)
    r = _one("voronoi:10000:seed=0", "const:1", "add")
    assert r.condition == pytest.approx(2.0, rel=0.1)
    assert 10 <= r.iterations <= 18


def test_mul_3d_finest_high_contrast():
    # reference: 1.00 (4)
    r = _one("hex:32", "inclusion:1e6", "mul", dim=3)
    assert r.condition == pytest.approx(1.0, abs=0.05)
    assert r.iterations <= 5

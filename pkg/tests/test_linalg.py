import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from vemprec.coefficients import constant_field
from vemprec.linalg import (
    NotSPDError,
    PcgBreakdown,
    PcgReport,
    as_csr,
    cholesky_factorize,
    dense_condition_number,
    dense_generalized_eigs,
    lanczos_extremes,
    pcg,
    read_coo,
    solve,
    spmv,
    symmetry_error,
    write_coo,
)
from vemprec.mesh import generate_voronoi_mesh
from vemprec.vem import assemble


def tridiag(n):
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")


@pytest.fixture(scope="module")
def vem1000():
    m = generate_voronoi_mesh(1000, 100, 0)
    return assemble(m, constant_field(m))


def test_as_csr_canonical():
    A = sp.coo_matrix(([1.0, 2.0, 3.0], ([0, 0, 1], [1, 1, 0])), shape=(2, 2))
    C = as_csr(A)
    assert C.has_canonical_format and C[0, 1] == 3.0


def test_spmv_dimension_check():
    with pytest.raises(ValueError):
        spmv(sp.eye(3, format="csr"), np.ones(4))
    np.testing.assert_array_equal(spmv(tridiag(3), np.ones(3)), [1, 0, 1])


def test_coo_roundtrip(tmp_path):
    A = tridiag(5)
    write_coo(A, tmp_path / "a.coo")
    B = read_coo(tmp_path / "a.coo")
    assert abs(A - B).max() == 0


def test_factorization_diagonal():
    d = np.array([1.0, 4.0, 9.0])
    f = cholesky_factorize(sp.diags(d))
    np.testing.assert_allclose(solve(f, d), np.ones(3), rtol=1e-15)


def test_factorization_tridiagonal(rng):
    A = tridiag(50)
    x = rng.standard_normal(50)
    np.testing.assert_allclose(cholesky_factorize(A)(A @ x), x, rtol=1e-10)


def test_factorization_vem(vem1000, rng):
    A = vem1000.matrix
    x = rng.standard_normal(A.shape[0])
    np.testing.assert_allclose(cholesky_factorize(A).solve(A @ x), x, rtol=1e-8)


@pytest.mark.parametrize(
    "M",
    [
        np.diag([1.0, -1.0]),
        np.array([[1.0, 2.0], [2.0, 1.0]]),
        np.array([[0.0, 1.0], [1.0, 0.0]]),
        np.array([[1.0, 1.0], [0.0, 1.0]]),
    ],
)
def test_factorization_rejects_non_spd(M):
    with pytest.raises(NotSPDError, match="not SPD"):
        cholesky_factorize(sp.csr_matrix(M))


def test_factorization_empty():
    f = cholesky_factorize(sp.csr_matrix((0, 0)))
    assert f.solve(np.zeros(0)).shape == (0,)


def test_symmetry_error():
    assert symmetry_error(tridiag(4)) == 0.0
    assert symmetry_error(sp.csr_matrix(np.array([[1.0, 1.0], [0.0, 1.0]]))) == 1.0


def test_pcg_identity():
    b = np.arange(1.0, 6.0)
    x, rep = pcg(sp.eye(5, format="csr"), b)
    np.testing.assert_allclose(x, b)
    assert rep.iterations == 1 and rep.converged
    assert rep.condition == pytest.approx(1.0)


def test_pcg_tridiagonal_condition():
    _, rep = pcg(tridiag(3), np.array([1.0, 0.3, -0.7]))
    expected = (2 + np.sqrt(2)) / (2 - np.sqrt(2))
    dense = dense_condition_number(tridiag(3).toarray())
    assert dense == pytest.approx(expected, rel=1e-12)
    assert rep.condition == pytest.approx(expected, rel=1e-8)
    assert rep.iterations == 3


def test_pcg_zero_rhs():
    x, rep = pcg(tridiag(4), np.zeros(4))
    assert np.all(x == 0) and rep.iterations == 0 and rep.converged


def test_pcg_unconverged_is_reported():
    _, rep = pcg(tridiag(200), np.ones(200), max_iter=5)
    assert not rep.converged and rep.iterations == 5
    assert len(rep.residuals) == 6


def test_pcg_detects_indefinite_preconditioner():
    with pytest.raises(PcgBreakdown):
        pcg(tridiag(5), np.ones(5), lambda r: -r)


def test_pcg_detects_indefinite_matrix():
    A = sp.diags([1.0, -1.0, 2.0], format="csr")
    with pytest.raises(NotSPDError):
        pcg(A, np.array([0.0, 1.0, 0.0]))


def test_pcg_solution_and_energy_monotone(vem1000, rng):
    A = vem1000.matrix
    x_true = rng.standard_normal(A.shape[0])
    b = A @ x_true
    errs = []
    x, rep = pcg(A, b, callback=lambda xk: errs.append(float((xk - x_true) @ (A @ (xk - x_true)))))
    assert rep.converged
    assert np.all(np.diff(errs) <= 1e-12 * errs[0])
    assert np.linalg.norm(x - x_true) <= 1e-8 * np.linalg.norm(x_true)
    # order-of-magnitude check against the constant-coefficient reference at 10^3 cells
    assert 1e2 <= rep.condition <= 2e3
    assert 50 <= rep.iterations <= 400


def test_lanczos_matches_dense_on_vem(rng):
    m = generate_voronoi_mesh(100, 100, 1)
    A = assemble(m, constant_field(m)).matrix
    _, rep = pcg(A, rng.standard_normal(A.shape[0]))
    ev = np.linalg.eigvalsh(A.toarray())
    assert rep.lambda_min == pytest.approx(ev[0], rel=1e-6)
    assert rep.lambda_max == pytest.approx(ev[-1], rel=1e-6)


def test_lanczos_extremes_cross_check_inverse_iteration(rng):
    # shifted inverse iteration on the dense matrix gives the smallest eigenvalue
    n = 40
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.linspace(0.5, 30.0, n)
    A = Q @ np.diag(lam) @ Q.T
    _, rep = pcg(sp.csr_matrix(A), rng.standard_normal(n))
    v = rng.standard_normal(n)
    for _ in range(200):
        v = np.linalg.solve(A - 0.4 * np.eye(n), v)
        v /= np.linalg.norm(v)
    assert rep.lambda_min == pytest.approx(v @ A @ v, rel=1e-8)
    assert rep.lambda_max == pytest.approx(30.0, rel=1e-8)


def test_lanczos_extremes_single_step():
    assert lanczos_extremes([0.5], []) == (2.0, 2.0)
    assert all(np.isnan(lanczos_extremes([], [])))


def test_report_serialization():
    rep = PcgReport(3, [1.0, 0.1, 1e-13], True, 0.5, 2.0)
    assert rep.condition == 4.0
    assert rep.csv_row().split(",")[:2] == ["3", "1"]
    assert rep.as_dict()["condition"] == 4.0


def test_dense_generalized_eigs():
    A = np.diag([2.0, 6.0])
    M = np.diag([1.0, 2.0])
    np.testing.assert_allclose(dense_generalized_eigs(A, M), [2.0, 3.0])
    with pytest.raises(NotSPDError):
        dense_generalized_eigs(A, -M)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 30), seed=st.integers(0, 2**31))
def test_pcg_random_spd(n, seed):
    r = np.random.default_rng(seed)
    X = r.standard_normal((n, n))
    A = X @ X.T + n * np.eye(n)
    b = r.standard_normal(n)
    x, rep = pcg(sp.csr_matrix(A), b)
    assert rep.converged
    np.testing.assert_allclose(A @ x, b, atol=1e-9 * np.linalg.norm(b))
    ev = np.linalg.eigvalsh(A)
    assert rep.lambda_min >= ev[0] * (1 - 1e-8) and rep.lambda_max <= ev[-1] * (1 + 1e-8)

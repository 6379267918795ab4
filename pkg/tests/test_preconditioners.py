import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp

from oracles import dense_sgs
from vemprec.coefficients import constant_field, random_exponent_field
from vemprec.fem import assemble_p1
from vemprec.linalg import Factorization, operator_matrix, pcg
from vemprec.mesh import generate_structured_quad_mesh, generate_voronoi_mesh, triangulate
from vemprec.preconditioners import (
    LABELS,
    AuxPreconditioner,
    PreconditionerFactory,
    Smoother,
    Transfer,
    apply_additive,
    apply_fictitious,
    apply_multiplicative,
    smoother_apply,
    transfer_apply,
    transfer_apply_adjoint,
)
from vemprec.vem import assemble


@pytest.fixture(scope="module")
def jump_case():
    m = generate_voronoi_mesh(60, 50, 4)
    c = random_exponent_field(m, 4)
    return assemble(m, c), assemble_p1(triangulate(m), c)


@pytest.fixture(scope="module")
def tri_case():
    # triangle-only mesh: the VEM and P1 matrices coincide
    tm = triangulate(generate_voronoi_mesh(30, 20, 1)).as_polytopal()
    c = constant_field(tm)
    return assemble(tm, c), assemble_p1(triangulate(tm), c)


def test_jacobi_one_sweep_is_diagonal_inverse(rng):
    A = sp.diags([2.0, 5.0, 0.5], format="csr")
    r = rng.standard_normal(3)
    np.testing.assert_allclose(smoother_apply(Smoother(A, "jacobi", 1), r), r / [2.0, 5.0, 0.5])


def test_sgs_2x2_closed_form(rng):
    A = np.array([[4.0, 1.0], [1.0, 3.0]])
    L = np.array([[4.0, 0.0], [1.0, 3.0]])
    D = np.diag([4.0, 3.0])
    R_closed = np.linalg.inv(L).T @ D @ np.linalg.inv(L)
    S = Smoother(sp.csr_matrix(A), "sgs", 1)
    np.testing.assert_allclose(operator_matrix(S, 2), R_closed, atol=1e-15)


@pytest.mark.parametrize("sweeps", [1, 2, 3])
def test_sgs_matches_dense_oracle(jump_case, sweeps):
    A = jump_case[0].matrix
    R = operator_matrix(Smoother(A, "sgs", sweeps), A.shape[0])
    ref = dense_sgs(A.toarray(), sweeps)
    np.testing.assert_allclose(R, ref, atol=1e-9 * np.abs(ref).max())


@pytest.mark.parametrize("kind,sweeps", [("sgs", 1), ("sgs", 2), ("jacobi", 2)])
def test_smoother_symmetric(jump_case, rng, kind, sweeps):
    A = jump_case[0].matrix
    S = Smoother(A, kind, sweeps)
    for _ in range(100):
        u, v = rng.standard_normal((2, A.shape[0]))
        lhs, rhs = S(u) @ v, u @ S(v)
        assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), np.linalg.norm(S(u)) * np.linalg.norm(v))


def test_smoother_zero_diagonal():
    with pytest.raises(ZeroDivisionError):
        Smoother(sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 2.0]])))


def test_smoother_bad_args():
    with pytest.raises(ValueError):
        Smoother(sp.eye(2), "chebyshev")
    with pytest.raises(ValueError):
        Smoother(sp.eye(2), "sgs", -1)


def test_transfer_identity_and_adjoint(jump_case, rng):
    fine, coarse = jump_case
    T = Transfer.between(fine, coarse)
    assert T.identity
    w, r = rng.standard_normal((2, fine.n_free))
    np.testing.assert_array_equal(transfer_apply(T, w), w)
    assert transfer_apply(T, w) @ r == pytest.approx(w @ transfer_apply_adjoint(T, r), rel=1e-14)


def test_transfer_permutation_adjoint(rng):
    T = Transfer(np.array([3, 7, 9, 12]), np.array([9, 3, 12, 7]))
    assert not T.identity
    w, r = rng.standard_normal((2, 4))
    assert T.apply(w) @ r == pytest.approx(w @ T.apply_adjoint(r))
    np.testing.assert_array_equal(T.matrix().toarray() @ w, T.apply(w))
    with pytest.raises(ValueError):
        Transfer(np.array([1, 2]), np.array([1, 3]))
    with pytest.raises(ValueError):
        T.apply(np.ones(3))


def test_fict_is_exact_inverse_when_spaces_coincide(tri_case, rng):
    fine, coarse = tri_case
    B = PreconditionerFactory(fine, coarse).build("fict")
    b = rng.standard_normal(fine.n_free)
    _, rep = pcg(fine.matrix, b, B)
    assert rep.iterations == 1


def test_mul_zero_sweeps_is_exact(tri_case, rng):
    fine, coarse = tri_case
    B = PreconditionerFactory(fine, coarse, sweeps=0).build("mul")
    r = rng.standard_normal(fine.n_free)
    np.testing.assert_allclose(fine.matrix @ apply_multiplicative(B, r), r, atol=1e-10)
    _, rep = pcg(fine.matrix, r, B)
    assert rep.iterations == 1


@pytest.mark.parametrize("variant", ["fict", "add", "mul"])
def test_preconditioners_symmetric_positive(jump_case, rng, variant):
    fine, coarse = jump_case
    B = PreconditionerFactory(fine, coarse).build(variant)
    for _ in range(100):
        u, v = rng.standard_normal((2, fine.n_free))
        Bu, Bv = B(u), B(v)
        assert abs(Bu @ v - u @ Bv) <= 1e-12 * np.linalg.norm(Bu) * np.linalg.norm(v)
        assert Bu @ u > 0


def test_zero_sweep_add_equals_fict(jump_case, rng):
    fine, coarse = jump_case
    f = PreconditionerFactory(fine, coarse, sweeps=0)
    r = rng.standard_normal(fine.n_free)
    np.testing.assert_array_equal(apply_additive(f.build("add"), r), apply_fictitious(f.build("fict"), r))


def test_mul_error_propagation_identity(jump_case):
    fine, coarse = jump_case
    f = PreconditionerFactory(fine, coarse)
    n = fine.n_free
    A = fine.matrix.toarray()
    Bm = operator_matrix(f.build("mul"), n)
    R = operator_matrix(f.smoother, n)
    P = f.transfer.matrix().toarray()
    C = P @ np.linalg.inv(coarse.matrix.toarray()) @ P.T
    I = np.eye(n)
    rhs = (I - R @ A) @ (I - C @ A) @ (I - R @ A)
    np.testing.assert_allclose(I - Bm @ A, rhs, atol=1e-12)


def test_variant_guards(jump_case):
    fine, coarse = jump_case
    f = PreconditionerFactory(fine, coarse)
    with pytest.raises(ValueError):
        apply_fictitious(f.build("add"), np.ones(fine.n_free))
    with pytest.raises(ValueError):
        apply_additive(f.build("mul"), np.ones(fine.n_free))
    with pytest.raises(ValueError):
        apply_multiplicative(f.build("fict"), np.ones(fine.n_free))
    with pytest.raises(ValueError):
        f.build("ilu")
    with pytest.raises(ValueError):
        AuxPreconditioner("add", fine.matrix)


def test_labels():
    assert LABELS["add"] == "K(B_add A)" and LABELS["none"] == "K(A)"


def test_amg_coarse_solver_runs(jump_case, rng):
    pytest.importorskip("pyamg")
    fine, coarse = jump_case
    B = PreconditionerFactory(fine, coarse, coarse_solver="amg").build("add")
    _, rep = pcg(fine.matrix, rng.standard_normal(fine.n_free), B)
    assert rep.converged


@pytest.mark.parametrize("kind,sweeps", [("jacobi", 1), ("jacobi", 2), ("sgs", 1), ("sgs", 2)])
def test_smoothing_property_across_levels(kind, sweeps):
    """a(v,v) <= c0 s(v,v) and s(v,v) ~ h^-2 ||v||_kappa^2 with level-stable constants."""
    lo, hi, top = [], [], []
    for n in (4, 8, 16):
        m = generate_structured_quad_mesh(n)
        c = random_exponent_field(m, 2)
        s = assemble(m, c)
        A = s.matrix.toarray()
        R = operator_matrix(Smoother(s.matrix, kind, sweeps), s.n_free)
        R = 0.5 * (R + R.T)
        top.append(np.linalg.eigvals(R @ A).real.max())
        lump = np.zeros(m.n_vertices)
        for k, cv in enumerate(m.cell_vertices):
            lump[cv] += c.values[k] * m.measure[k] / len(cv)
        M = np.diag(lump[s.dof_map.free]) * n**2
        ev = sla.eigh(np.linalg.inv(R), M, eigvals_only=True)
        lo.append(ev[0])
        hi.append(ev[-1])
    assert max(top) <= 2.0
    assert min(lo) > 0.2 and max(hi) < 10.0
    assert max(hi) / min(hi) < 2 and max(lo) / min(lo) < 2.5


def test_factory_shares_components(jump_case):
    fine, coarse = jump_case
    f = PreconditionerFactory(fine, coarse)
    a, b = f.build("add"), f.build("mul")
    assert a.smoother is b.smoother and a.coarse is b.coarse
    assert isinstance(a.coarse, Factorization)

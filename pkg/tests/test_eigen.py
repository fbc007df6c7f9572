"""Eigenvalue routines against numpy/scipy oracles."""
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latspec.eigen import (SpectralReport, Tridiagonal, bisect_eigenvalues, count_outside_band, dense_eigh,
                           eigenvalue_sum_monotonicity_check, eigenvalues_outside_band,
                           householder_tridiagonalize, moment_bracket, moment_sum, sturm_count,
                           trace_inequality_check, tridiagonal_eigh)
from latspec.errors import HypothesisError, SizeCapError
from latspec.lattice import JacobiOperator, LatticeDomain, LatticeOperator, Potential


def _random_sym(rng, n):
    A = rng.normal(size=(n, n))
    return (A + A.T) / 2


@pytest.mark.parametrize("n", [1, 2, 3, 10, 60])
def test_dense_eigh_matches_numpy(n):
    A = _random_sym(np.random.default_rng(n), n)
    w, Q = dense_eigh(A, vectors=True)
    assert np.allclose(w, np.linalg.eigvalsh(A), atol=1e-11)
    assert np.allclose(Q.T @ Q, np.eye(n), atol=1e-11)
    assert np.allclose(A @ Q, Q * w, atol=1e-10)


def test_householder_is_similarity():
    A = _random_sym(np.random.default_rng(5), 25)
    d, e, Q = householder_tridiagonalize(A, vectors=True)
    T = Tridiagonal(d, e).dense()
    assert np.allclose(Q @ T @ Q.T, A, atol=1e-12)


def test_size_cap_enforced():
    with pytest.raises(SizeCapError):
        dense_eigh(np.eye(5), size_cap=4)


def test_bisection_and_ql_agree_with_numpy():
    rng = np.random.default_rng(7)
    T = Tridiagonal(rng.normal(size=300), rng.normal(size=299))
    ref = np.linalg.eigvalsh(T.dense())
    assert np.allclose(tridiagonal_eigh(T), ref, atol=1e-11)
    got = bisect_eigenvalues(T, -1.0, 1.5)
    assert np.allclose(got, ref[(ref >= -1.0) & (ref < 1.5)], atol=1e-10)
    assert sturm_count(T, 0.0) == int(np.sum(ref < 0.0))


def test_outside_band_one_dimensional():
    rng = np.random.default_rng(1)
    V = Potential.from_sequence(rng.normal(size=150) * 2)
    rep = eigenvalues_outside_band(LatticeOperator(V.domain, V))
    ref = np.linalg.eigvalsh(LatticeOperator(V.domain, V).dense_matrix())
    assert np.allclose(rep.eigenvalues_above, ref[ref > 2 + 1e-8], atol=1e-10)
    assert np.allclose(rep.eigenvalues_below, ref[ref < -2 - 1e-8], atol=1e-10)
    assert (rep.count_above, rep.count_below) == count_outside_band(LatticeOperator(V.domain, V))


def test_outside_band_box_uses_dense_path():
    dom = LatticeDomain.box(3, nu=2)
    V = Potential.from_sites(dom, [((0, 0), 6.0)])
    rep = eigenvalues_outside_band(LatticeOperator(dom, V))
    ref = np.linalg.eigvalsh(LatticeOperator(dom, V).dense_matrix())
    assert rep.method == "dense" and rep.band_edge == 4.0
    assert np.allclose(rep.eigenvalues_above, ref[ref > 4 + 1e-8])


def test_zero_potential_has_empty_lists():
    V = Potential.zero(LatticeDomain.half_line(100))
    rep = eigenvalues_outside_band(LatticeOperator(V.domain, V))
    assert rep.eigenvalues_above == [] and rep.eigenvalues_below == []


def test_jacobi_operator_spectrum():
    rng = np.random.default_rng(2)
    a = rng.uniform(0.5, 1.5, 79)
    b = rng.normal(size=80)
    J = JacobiOperator(a, b)
    ref = np.linalg.eigvalsh(np.diag(b) + np.diag(a, 1) + np.diag(a, -1))
    rep = eigenvalues_outside_band(J)
    assert np.allclose(rep.eigenvalues_above, ref[ref > 2 + 1e-8], atol=1e-10)


def test_moment_bracket_contains_exact_sum():
    n = np.arange(1, 3001, dtype=float)
    V = Potential.from_sequence(n ** -0.5)
    op = LatticeOperator(V.domain, V)
    ref = np.linalg.eigvalsh(op.dense_matrix()) if V.domain.size <= 3000 else None
    for gamma in (0.3, 1.0):
        exact = math.fsum((np.abs(ref[np.abs(ref) > 2 + 1e-8]) - 2) ** gamma)
        lo, up, cnt = moment_bracket(op, gamma)
        assert lo <= exact <= up
        assert up <= 1.05 * lo + 1e-12
        assert cnt == int(np.sum(np.abs(ref) > 2 + 1e-8))


def test_moment_sum_of_report():
    rep = SpectralReport([2.5, 3.0], [-2.25], 2.0, 10, 1e-8)
    assert moment_sum(rep, 1.0) == pytest.approx(0.5 + 1.0 + 0.25)


def test_trace_inequality_convex_function():
    rng = np.random.default_rng(4)
    A = _random_sym(rng, 8)
    # basis vectors of a diagonal block satisfy the diagonality hypothesis
    w, Q = np.linalg.eigh(A[:3, :3])
    P = np.zeros((3, 8))
    P[:, :3] = Q.T
    B = A.copy()
    B[:3, 3:] = 0
    B[3:, :3] = 0
    res = trace_inequality_check(B, P, lambda x: np.maximum(x, 0.0) ** 2)
    assert res.holds and res.lhs >= res.rhs


def test_trace_inequality_rejects_non_orthonormal():
    with pytest.raises(HypothesisError):
        trace_inequality_check(np.eye(3), np.array([[1.0, 1.0, 0.0]]), lambda x: x)


@given(st.integers(3, 30), st.integers(0, 10_000))
def test_eigenvalue_sums_grow_with_couplings(N, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.1, 1.0, N - 1)
    bump = rng.uniform(0.0, 1.0, N - 1)
    b = rng.normal(size=N)
    assert eigenvalue_sum_monotonicity_check(a, a + bump, b, N)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=40), st.floats(-7, 7))
def test_sturm_count_matches_eigvalsh(diag, shift):
    d = np.array(diag)
    e = np.ones(d.size - 1)
    T = Tridiagonal(d, e)
    w = np.linalg.eigvalsh(T.dense())
    if np.min(np.abs(w - shift)) > 1e-9:
        assert sturm_count(T, shift) == int(np.sum(w < shift))

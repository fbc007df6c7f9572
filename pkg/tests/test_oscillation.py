"""Oscillation counting against exact recursions and dense eigenvalue counts."""
from fractions import Fraction

import numpy as np
import pytest
from scipy.linalg import eigvalsh_tridiagonal
from hypothesis import given
from hypothesis import strategies as st

from latspec.lattice import JacobiOperator, LatticeDomain, Potential
from latspec.oscillation import (altex_closed_form, altex_exact_check, altex_solution, band_edge_solve,
                                 count_bound_states, dipole_potential, dipole_solution, dipole_threshold,
                                 example_54_closed_forms, example_54_limit, example_54_potential,
                                 example_54_staircase, jacobi_band_edge_counts, parity_dual_counts,
                                 single_site_potential, single_site_solution, single_site_threshold,
                                 sweep_counts)


def exact_solution(V: dict, n_max: int) -> list:
    """u(0..n_max) of u(n+1) = (2 - V(n)) u(n) - u(n-1) in rationals, V given as {site: value}."""
    u = [Fraction(0), Fraction(1)]
    for n in range(1, n_max):
        u.append((2 - V.get(n, 0)) * u[n] - u[n - 1])
    return u


def dense_counts(V: Potential):
    d = V.sequence()
    w = eigvalsh_tridiagonal(d, np.ones(d.size - 1)) if d.size > 1 else d
    return int(np.sum(w > 2)), int(np.sum(w < -2))


@pytest.mark.parametrize("n0", [1, 3, 7])
def test_single_site_closed_form(n0):
    lam = Fraction(2, 5)
    u = exact_solution({n0: lam}, 40)
    assert all(single_site_solution(n0, lam, n) == u[n] for n in range(40))


@pytest.mark.parametrize("n0", [1, 2, 6])
def test_dipole_closed_form(n0):
    lam = Fraction(3, 7)
    u = exact_solution({n0: lam, n0 + 1: -lam}, 40)
    assert all(dipole_solution(n0, lam, n) == u[n] for n in range(40))


@pytest.mark.parametrize("n0", range(1, 21))
def test_single_site_threshold_is_exact(n0):
    assert single_site_threshold(n0) == Fraction(1, n0)
    lam = float(Fraction(1, n0))
    at = count_bound_states(single_site_potential(n0, lam, 1000))
    past = count_bound_states(single_site_potential(n0, lam + 1e-6, 1000))
    assert (at.above, at.below, at.stable) == (0, 0, True)
    assert (past.above, past.below, past.stable) == (1, 0, True)


@pytest.mark.parametrize("n0", [1, 2, 5, 17, 50])
def test_dipole_threshold_root(n0):
    # positive root of n0 x^2 + x - 1 from numpy as the oracle
    root = max(np.roots([n0, 1.0, -1.0]).real)
    assert dipole_threshold(n0) == pytest.approx(root, rel=1e-14)
    lam = dipole_threshold(n0)
    assert count_bound_states(dipole_potential(n0, lam, 1000)).as_tuple()[:2] == (0, 0)
    c = count_bound_states(dipole_potential(n0, lam + 1e-6, 1000))
    assert c.above + c.below >= 1


def test_dipole_threshold_half_at_two():
    assert dipole_threshold(2) == 0.5


def test_dirichlet_counts_equal_dense_counts():
    rng = np.random.default_rng(8)
    for _ in range(40):
        N = int(rng.integers(5, 200))
        V = Potential.from_sequence(rng.normal(0, 1.5, N) * (rng.random(N) < 0.3))
        c = count_bound_states(V, boundary="dirichlet", check_double=False)
        assert (c.above, c.below) == dense_counts(V)


def test_free_counts_are_large_window_limit():
    rng = np.random.default_rng(9)
    for _ in range(20):
        vals = np.zeros(20)
        vals[:8] = rng.normal(0, 2, 8)
        V = Potential.from_sequence(vals)
        free = count_bound_states(V, boundary="free", check_double=False)
        big = dense_counts(V.resize(3000))
        assert (free.above, free.below) == big


def test_no_overflow_for_strong_potential():
    sol = band_edge_solve(np.full(20000, -4.0), "above")
    assert sol.overflow_rescales > 0 and sol.sign_changes == 0
    assert np.all(np.isfinite(sol.u))


def test_sparse_path_on_huge_domain():
    V = example_54_potential(10, 4)  # window of 2e8 sites handled sparsely
    assert V.domain.shape[0] == 2 * 10 ** 8
    c = count_bound_states(V, check_double=False)
    assert (c.above, c.below) == (0, 0)
    big = Potential(LatticeDomain.half_line(10 ** 8), sparse=(((5,), 0.25),))
    assert count_bound_states(big, check_double=False).above == 1


def test_staircase_matches_exact_recursion():
    st_ = example_54_staircase(2, 3)
    V = {n: v for n, v in zip(st_.sites, st_.potential_at_sites)}
    u = exact_solution(V, st_.sites[-1] + 2)
    for k, n in enumerate(st_.sites, start=1):
        uk, vk = example_54_closed_forms(2, k)
        assert u[n] == uk == st_.u_at_sites[k - 1]
        assert V[n] == vk
    assert min(u[1:]) > 0


@pytest.mark.parametrize("base", [2, 10, 100])
def test_staircase_limit(base):
    deep = example_54_staircase(base, 30)
    assert float(deep.sites[-1] * deep.potential_at_sites[-1]) == pytest.approx(example_54_limit(base), rel=1e-9)


@pytest.mark.parametrize("s", [1, -1])
def test_alternating_closed_form(s):
    assert altex_exact_check(s, 3000)
    r = altex_solution(s, 200_000, exact_limit=0)
    assert r.max_relative_error < 1e-9
    assert r.counting.sign_changes == 0
    closed = altex_closed_form(s, 10)
    u = exact_solution({n: Fraction(s * (1 if n % 2 == 0 else -1), n) for n in range(1, 11)}, 11)
    if s > 0:
        # closed form is seeded with u(0) = u(1) = 1
        u = [Fraction(1), Fraction(1)]
        for n in range(1, 10):
            u.append((2 - Fraction(s * (1 if n % 2 == 0 else -1), n)) * u[n] - u[n - 1])
    assert np.allclose(closed[:11], [float(x) for x in u[:11]])


def test_jacobi_counts_match_dense():
    rng = np.random.default_rng(12)
    for _ in range(20):
        N = 60
        J = JacobiOperator(rng.uniform(0.6, 1.6, N - 1), rng.normal(0, 1, N))
        w = np.linalg.eigvalsh(np.diag(J.b) + np.diag(J.a, 1) + np.diag(J.a, -1))
        assert jacobi_band_edge_counts(J) == (int(np.sum(w > 2)), int(np.sum(w < -2)))


def test_sweep_finds_transition():
    rows = sweep_counts(lambda lam, N: single_site_potential(3, lam, N), [0.33, 0.34], 1000)
    assert [r[1] for r in rows] == [0, 1]


def test_solution_report():
    d = band_edge_solve(np.zeros(10)).to_dict()
    assert d["report_type"] == "band_edge_solution" and d["u_head"][:4] == [0.0, 1.0, 2.0, 3.0]


@given(st.lists(st.floats(-4, 4), min_size=1, max_size=60))
def test_parity_duality(values):
    below, above_neg = parity_dual_counts(values)
    assert below == above_neg


@given(st.lists(st.floats(0, 3), min_size=1, max_size=40), st.floats(0.1, 1.0), st.floats(1.0, 3.0))
def test_counts_monotone_in_coupling(values, c1, ratio):
    v = np.array(values)
    small = count_bound_states(Potential.from_sequence(c1 * v), boundary="dirichlet", check_double=False)
    large = count_bound_states(Potential.from_sequence(c1 * ratio * v), boundary="dirichlet", check_double=False)
    assert large.above >= small.above

"""Pair functional, trial pairs, test functions and trial families."""
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import dblquad

from latspec.errors import DomainMismatchError, HypothesisError, InsufficientSpectrumError
from latspec.lattice import (JacobiOperator, LatticeDomain, LatticeOperator, Potential, TrialFunction, inner,
                             kinetic_energy, parity_conjugate, quadratic_form)
from latspec.suites import (jacobi_suite, pair_inequality_suite, tent_identity_suite, trial_pair_suite,
                            witness_suite)
from latspec.variational import (CutoffF, delta_functional, disjoint_family, jacobi_trial_pair,
                                 lemma_witness, log_limit_integral, log_limit_integral_2d, log_trial_2d,
                                 log_trial_radial, moment_trial_family, support_distance, tent_1d,
                                 tent_energy, trial_pair)

SLACK = -1e-10


def _instance(seed: int, nu: int, half: int = 3):
    rng = np.random.default_rng(seed)
    dom = LatticeDomain.box(half, nu=nu)
    V = Potential(dom, values=rng.normal(0, 2.0 * nu, dom.shape))
    shape = tuple(int(rng.integers(1, 4)) for _ in range(nu))
    lo = tuple(int(rng.integers(-half, half - s + 2)) for s in shape)
    phi = TrialFunction(dom, lo, rng.normal(size=shape))
    return rng, dom, V, phi


# ---------------------------------------------------------------------------
# pair functional


def test_delta_of_delta_function():
    dom = LatticeDomain.whole_line(5)
    phi = TrialFunction.delta(dom, (0,))
    # <d, (H0 - 2) d> + <d, (-H0 - 2) d> = -2 - 2
    assert delta_functional(phi, phi, LatticeOperator(dom)) == pytest.approx(-4.0)
    c = trial_pair(phi, Potential.zero(dom))
    assert c.delta == pytest.approx(-4.0) and c.lower_bound_rhs == pytest.approx(-4.0)


def test_single_site_certificate_is_positive():
    dom = LatticeDomain.whole_line(20)
    V = Potential.from_sites(dom, [((0,), 3.0)])
    c = trial_pair(TrialFunction.delta(dom, (0,)), V)
    # (1 + 3/4)^2 (3 - 2) + (1 - 3/4)^2 (-3 - 2) = 49/16 - 5/16
    assert c.delta == pytest.approx(44 / 16)
    assert c.lower_bound_rhs == pytest.approx(2 * (-2 + 9 / 4))
    assert c.sound() and c.witness == "plus" and c.quotient_plus == pytest.approx(3.0)


def test_domain_mismatch():
    d1, d2 = LatticeDomain.half_line(5), LatticeDomain.half_line(6)
    with pytest.raises(DomainMismatchError):
        delta_functional(TrialFunction.delta(d1, (1,)), TrialFunction.delta(d1, (1,)), LatticeOperator(d2))


def test_certificate_serializes():
    dom = LatticeDomain.whole_line(3)
    c = trial_pair(TrialFunction.delta(dom, (1,)), Potential.from_sites(dom, [((1,), 5.0)]))
    d = c.to_dict()
    assert d["report_type"] == "delta_certificate" and set(d["phi_plus"]) == {"1"}


# ---------------------------------------------------------------------------
# inequalities as properties


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2, 3]))
def test_pair_inequality(seed, nu):
    rng, dom, V, f = _instance(seed, nu)
    _, _, _, g = _instance(seed + 1, nu)
    d = delta_functional(f + g, parity_conjugate(f - g), LatticeOperator(dom, V))
    Vg = g.multiplied(V.window(g.lo, g.shape))
    rhs = (2 * (quadratic_form(LatticeOperator(dom), f) - 2 * nu * f.norm2()) - 8 * nu * g.norm2()
           + 4 * inner(f, Vg))
    assert d - rhs >= SLACK * (1 + abs(rhs))


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2, 3]), st.booleans())
def test_trial_pair_bound(seed, nu, cutoff):
    rng, dom, V, phi = _instance(seed, nu)
    F = CutoffF.from_array(dom, rng.random(dom.shape)) if cutoff else None
    c = trial_pair(phi, V, F)
    assert c.delta - c.lower_bound_rhs >= SLACK * (1 + abs(c.delta))


@given(st.integers(0, 2 ** 32 - 1))
def test_jacobi_pair_bound(seed):
    rng = np.random.default_rng(seed)
    J = JacobiOperator(rng.uniform(0.5, 2.0, 29), rng.normal(0, 2, 30))
    phi = TrialFunction(J.domain, (int(rng.integers(1, 20)),), rng.normal(size=8))
    c = jacobi_trial_pair(phi, J)
    assert c.delta - c.lower_bound_rhs >= SLACK * (1 + abs(c.delta))


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2, 3]))
def test_witness_bound_with_nonnegative_bracket(seed, nu):
    rng = np.random.default_rng(seed)
    dom = LatticeDomain.box(2, nu=nu)
    V = Potential(dom, values=rng.uniform(-4 * nu, 4 * nu, dom.shape))
    phi = TrialFunction.delta(dom, (0,) * nu, 1.0)
    psi, lhs, rhs = lemma_witness(phi, V)
    if rhs >= 0:
        assert lhs - rhs >= SLACK


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2]))
def test_positive_delta_is_sound(seed, nu):
    """Delta > 0 puts an eigenvalue of the truncation outside the band."""
    rng, dom, V, phi = _instance(seed, nu, half=2)
    c = trial_pair(phi, V)
    assert c.sound()
    if c.delta > 1e-9:
        w = np.linalg.eigvalsh(LatticeOperator(dom, V).dense_matrix())
        assert w[-1] > 2 * nu or w[0] < -2 * nu


def test_randomized_suites_pass():
    for r in (pair_inequality_suite(1, 60), trial_pair_suite(2, 60), trial_pair_suite(3, 60, cutoff=True),
              jacobi_suite(4, 60), witness_suite(5, 60)):
        assert r.passed, r.to_dict()


# ---------------------------------------------------------------------------
# test functions


def test_tent_values_and_energy():
    t = tent_1d(1, 1)
    assert np.allclose(t.values, [0.5, 1.0, 0.5])
    assert kinetic_energy(t) == pytest.approx(1.0) == tent_energy(1, 1)
    assert kinetic_energy(tent_1d(1, 3)) == pytest.approx(0.75)
    assert tent_identity_suite(0, 50).min_slack >= -1e-12


def test_log_trial_radial_matches_grid():
    for L in (3, 10, 33):
        phi = log_trial_2d(L)
        e, n2 = log_trial_radial(L)
        assert kinetic_energy(phi) == pytest.approx(e, rel=1e-12)
        assert phi.norm2() == pytest.approx(n2, rel=1e-12)


def test_log_limit_integral_is_one():
    ref, _ = dblquad(lambda y, x: math.log(x + y) ** 2, 0, 1, 0, lambda x: 1 - x)
    assert 4 * ref == pytest.approx(1.0, abs=1e-8)
    assert log_limit_integral() == pytest.approx(1.0, abs=1e-10)
    assert log_limit_integral_2d() == pytest.approx(1.0, abs=1e-3)


def test_log_energy_scaled_is_bounded_and_increasing():
    vals = [log_trial_radial(L)[0] * math.log(L + 1) for L in (16, 64, 256, 1024, 4096)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert max(vals) <= 8.0


# ---------------------------------------------------------------------------
# families


def test_disjoint_family_for_slow_decay():
    W = Potential.from_rule(LatticeDomain.half_line(4000), lambda n: 2.0 / n)
    fam = disjoint_family(W, 3, box_cap=4000)
    op = LatticeOperator(W.domain, W)
    assert len(fam) == 3
    for f in fam:
        assert quadratic_form(op, f) / f.norm2() > 2.0
    for i in range(3):
        for j in range(i + 1, 3):
            assert support_distance(fam[i], fam[j]) >= 2


def test_disjoint_family_exhausts():
    W = Potential.from_sites(LatticeDomain.half_line(200), [((1,), 5.0)])
    with pytest.raises(InsufficientSpectrumError) as err:
        disjoint_family(W, 2, box_cap=200)
    assert err.value.achieved == 1


def test_moment_family_rejects_bad_exponent():
    with pytest.raises(HypothesisError):
        moment_trial_family(1.0, 0.5, 0.9, 20)


def test_moment_family_decay_rate():
    fam = moment_trial_family(1.0, 0.5, 3.0, 60, m_min=10)
    assert fam.m0 is not None
    assert fam.fitted_exponent == pytest.approx(fam.expected_exponent, abs=0.05)
    ms = fam.members
    for a, b in zip(ms, ms[1:]):
        assert (b.center - b.half_width) - (a.center + a.half_width) >= 2
    # spot-check one member against an explicit tent
    mm = ms[0]
    phi = mm.trial()
    n = np.arange(phi.lo[0], phi.lo[0] + phi.shape[0], dtype=float)
    pot = 0.25 * float(np.sum(n ** -1.0 * phi.values ** 2))
    assert mm.potential_term == pytest.approx(pot, rel=1e-12)
    assert mm.kinetic == pytest.approx(kinetic_energy(phi), rel=1e-12)

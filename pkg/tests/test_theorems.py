"""Theorem checkers: comparison, certificates, decay bounds, infinitude, moments."""
import math

import numpy as np
import pytest

from latspec.corpus import corpus_specs, load_corpus, random_bargmann_potentials, random_decaying_potentials
from latspec.errors import HypothesisError, InsufficientSpectrumError
from latspec.lattice import JacobiOperator, LatticeDomain, LatticeOperator, Potential
from latspec.oscillation import count_bound_states, single_site_potential
from latspec.theorems import (bargmann_check, bargmann_sum, certificate_scale, certificates_disjoint,
                              decay_bound_check, default_nk, essential_spectrum_certificates,
                              infinitude_check, jacobi_comparison, longest_increasing_run,
                              moment_divergence_experiment, tent_kinetic_bound, v_squared_comparison,
                              whole_line_split_counts, zero_potential_check)
from latspec.variational import log_trial_radial


def test_comparison_single_site():
    V = Potential.from_sites(LatticeDomain.half_line(400), [((1,), 3.0)])
    v = v_squared_comparison(V)
    # V^2/4 = 9/4 at site 1 exceeds the single-site threshold 1
    assert (v.hypothesis_count, v.conclusion_count, v.status) == (1, 1, "pass")
    assert len(v.certificates) == 1 and v.certificates[0].delta > 0


def test_comparison_zero_potential():
    v = v_squared_comparison(Potential.zero(LatticeDomain.half_line(100)))
    assert v.status == "pass" and v.hypothesis_count == 0


def test_comparison_random_decaying():
    for V in random_decaying_potentials(3, 40):
        v = v_squared_comparison(V)
        assert v.holds, v.notes


def test_comparison_certificates_for_slow_decay():
    V = Potential.from_rule(LatticeDomain.half_line(4000), lambda n: np.sqrt(8.0 / n))
    v = v_squared_comparison(V, m=3)
    assert len(v.certificates) == 3
    assert all(c.delta > 0 and c.sound() for c in v.certificates)


def test_comparison_two_dimensions():
    dom = LatticeDomain.box(6, nu=2)
    V = Potential.from_sites(dom, [((0, 0), 7.0)])
    v = v_squared_comparison(V)
    assert v.holds and v.hypothesis_count >= 1


def test_jacobi_comparison_reduces_to_schroedinger():
    b = np.zeros(300)
    b[0] = 3.0
    J = JacobiOperator(np.ones(299), b)
    v = jacobi_comparison(J)
    assert v.holds and v.hypothesis_count == 1 and v.certificates[0].delta > 0


def test_certificate_scale_brute_force():
    for a in (0.3, 1.0, 2.5):
        target = min(a * a, 2 * a) / 8
        L = next(L for L in range(1, 10 ** 6) if 2 / (L + 1) < target)
        assert certificate_scale(a, 1) == L
    assert certificate_scale(1.0, 1) == 16
    target = min(64.0, 32.0) / 16
    L2 = next(L for L in range(1, 1000) if log_trial_radial(L)[0] < target)
    assert certificate_scale(8.0, 2) == L2 == 15
    with pytest.raises(HypothesisError):
        certificate_scale(1.0, 2)


def test_essential_certificates_one_dimension():
    V = Potential.from_rule(LatticeDomain.whole_line(600), lambda n: np.ones(n.shape))
    certs = essential_spectrum_certificates(V, 1.0, 5)
    assert len(certs) == 5 and certificates_disjoint(certs)
    assert all(c.delta > 0 and c.sound() for c in certs)
    with pytest.raises(InsufficientSpectrumError):
        essential_spectrum_certificates(V, 1.0, 100)


def test_essential_certificates_two_dimensions():
    V = Potential.from_rule(LatticeDomain.box(20, nu=2), lambda i, j: np.full(i.shape, 8.0))
    certs = essential_spectrum_certificates(V, 8.0, 1)
    assert certs[0].delta > 0 and certs[0].sound()


def test_zero_potential_bounds():
    rep = zero_potential_check(Potential.zero(LatticeDomain.half_line(200)), L_max=50)
    assert rep.hypothesis_holds and not rep.violations
    # deep inside the window both arms are capped at L_max
    assert rep.bounds[100] == pytest.approx(tent_kinetic_bound(50))
    assert tent_kinetic_bound(7) == pytest.approx(1.0)


def test_zero_potential_bound_respected_by_corpus():
    for name, V in load_corpus():
        if V.domain.shape[0] <= 5000 and not V.is_sparse:
            rep = zero_potential_check(V)
            assert rep.hypothesis_holds and not rep.violations, name


def test_zero_potential_bound_exceeded_when_binding():
    V = Potential.from_sites(LatticeDomain.half_line(200), [((100,), 3.0)])
    rep = zero_potential_check(V)
    assert not rep.hypothesis_holds and rep.violations == [(100,)]


def test_bargmann_threshold_is_sharp():
    for n0 in (1, 3, 7):
        r = bargmann_check(single_site_potential(n0, 1.0 / n0, 1000))
        assert r.total == pytest.approx(1.0) and r.predicts_no_bound_states and r.counts == (0, 0)
        r2 = bargmann_check(single_site_potential(n0, 1.01 / n0, 1000))
        assert not r2.predicts_no_bound_states and r2.counts == (1, 0) and r2.consistent


def test_bargmann_random_class():
    for V in random_bargmann_potentials(0, 50):
        assert bargmann_sum(V) <= 1.0 + 1e-15
        assert bargmann_check(V).consistent


def test_decay_bounds_on_corpus():
    for name, V in load_corpus():
        r = decay_bound_check(V, name)
        assert r.counts == (0, 0) and r.passes, name


def test_decay_bound_vacuous_with_bound_states():
    r = decay_bound_check(single_site_potential(1, 5.0, 100))
    assert r.counts != (0, 0) and r.passes


def test_corpus_is_named_and_large():
    specs = corpus_specs()
    assert len(specs) >= 30 and len({s["name"] for s in specs}) == len(specs)


def test_infinitude_slow_decay():
    V = Potential.from_rule(LatticeDomain.half_line(100_000), lambda n: 1.5 / n)
    ev = infinitude_check(V, "Thm5.7", [1000, 10_000, 100_000])
    assert ev.hypotheses_hold and ev.strictly_increasing and ev.status == "pass"


def test_infinitude_fast_decay_fails_hypotheses():
    V = Potential.from_rule(LatticeDomain.half_line(100_000), lambda n: 0.25 / n.astype(float) ** 2)
    ev = infinitude_check(V, "Thm5.7", [1000, 100_000])
    assert not ev.hypotheses_hold and ev.status == "hypotheses-fail"
    assert set(ev.witness_count_at_N.values()) == {0}


def test_infinitude_averaged_criteria():
    V = Potential.from_rule(LatticeDomain.half_line(100_000), lambda n: 60.0 / n.astype(float) ** 2)
    ev = infinitude_check(V, "Thm5.5", [1000, 100_000])
    assert ev.parameters["threshold"] == 48.0 and ev.parameters["epsilon"] > 0
    ev6 = infinitude_check(V, "Thm5.6", [1000, 100_000])
    assert ev6.parameters["threshold"] == pytest.approx(8 * math.sqrt(3))


def test_increasing_run_and_nk():
    assert longest_increasing_run([2, 2, 2, 4]) == [0, 3]
    assert default_nk(100) == [16, 32, 64]


def test_moment_growth():
    ex = moment_divergence_experiment(1.0, 0.5, 0.3, [1000, 10_000, 100_000])
    assert ex.predicted_divergent and ex.report.growth_ratio() > 2
    above = moment_divergence_experiment(1.0, 0.5, 0.6, [1000, 10_000])
    assert above.passed is None
    with pytest.raises(HypothesisError):
        moment_divergence_experiment(1.0, 1.5, 0.3, [100])


def test_whole_line_split():
    rng = np.random.default_rng(0)
    dom = LatticeDomain.whole_line(80)
    V = Potential(dom, values=rng.normal(0, 1.5, dom.shape) * (np.abs(dom.axis_coords()) < 10))
    r = whole_line_split_counts(V)
    assert r["within_tolerance"]
    ops = np.linalg.eigvalsh(LatticeOperator(dom, V).dense_matrix())
    assert r["direct"] == (int(np.sum(ops > 2 + 1e-8)), int(np.sum(ops < -2 - 1e-8)))


def test_counts_of_corpus_are_stable():
    for name, V in load_corpus():
        if V.domain.shape[0] <= 100_000:
            c = count_bound_states(V)
            assert (c.above, c.below) == (0, 0), name

"""Every quantitative check of the library bundled into one deterministic report.

Each check returns a :class:`Check` with status ``pass``, ``fail``,
``unstable`` or ``skipped``.  ``quick=True`` shrinks the randomized suites and
truncation ladders so the whole board runs in well under a minute.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .corpus import load_corpus, random_bargmann_potentials, random_compact_potentials, random_decaying_potentials
from .eigen import dense_eigh
from .lattice import LatticeDomain, LatticeOperator, Potential
from .oscillation import (altex_solution, count_bound_states, dipole_potential, dipole_threshold,
                          example_54_closed_forms, example_54_limit, example_54_potential, example_54_staircase,
                          single_site_potential)


@dataclass
class Check:
    name: str
    theorem: str
    status: str
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {"name": self.name, "theorem": self.theorem, "status": self.status,
                "detail": self.detail}


@dataclass
class Scoreboard:
    checks: list
    quick: bool
    seed: int

    @property
    def all_pass(self) -> bool:
        return all(c.status == "pass" for c in self.checks)

    def to_dict(self) -> dict:
        return {"report_type": "scoreboard", "quick": self.quick, "seed": self.seed,
                "all_pass": self.all_pass, "checks": [c.to_dict() for c in self.checks]}

    CSV_COLUMNS = ("name", "theorem", "status")

    def csv_rows(self):
        return [(c.name, c.theorem, c.status) for c in self.checks]


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


# ---------------------------------------------------------------------------
# individual checks


def check_single_site(quick: bool, seed: int, workers: int) -> Check:
    bad = []
    for n0 in range(1, 21):
        lam = float(Fraction(1, n0))
        for N in ((1000,) if quick else (1000, 2000)):
            at = count_bound_states(single_site_potential(n0, lam, N), N)
            past = count_bound_states(single_site_potential(n0, lam + 1e-6, N), N)
            if (at.above, at.below) != (0, 0) or (past.above, past.below) != (1, 0) or not (at.stable and past.stable):
                bad.append(n0)
    return Check("single-site-threshold", "single-site binding threshold", _status(not bad),
                 {"n0_range": [1, 20], "failures": bad})


def check_dipole(quick: bool, seed: int, workers: int) -> Check:
    bad = []
    top = 20 if quick else 50
    for n0 in range(1, top + 1):
        lam = dipole_threshold(n0)
        at = count_bound_states(dipole_potential(n0, lam, 1000), 1000)
        past = count_bound_states(dipole_potential(n0, lam + 1e-6, 1000), 1000)
        if (at.above, at.below) != (0, 0) or (past.above + past.below) == 0:
            bad.append(n0)
    half = dipole_threshold(2) == 0.5
    return Check("dipole-threshold", "dipole binding threshold", _status(not bad and half),
                 {"n0_range": [1, top], "failures": bad, "threshold_n0_2_is_half": half})


def check_alternating(quick: bool, seed: int, workers: int) -> Check:
    N = 100_000 if quick else 1_000_000
    detail = {"N": N}
    ok = True
    for s in (1, -1):
        r = altex_solution(s, N, exact_limit=2000 if quick else 100_000)
        detail[f"beta_{s:+d}"] = {"max_relative_error": r.max_relative_error,
                                  "exact_verified": r.exact_verified}
        ok &= r.max_relative_error <= 1e-9 and bool(r.exact_verified)
        V = Potential.from_rule(LatticeDomain.half_line(N),
                                lambda n, s=s: s * np.where(n % 2 == 0, 1.0, -1.0) / n, label="alternating")
        c = count_bound_states(V, N, check_double=False)
        detail[f"counts_beta_{s:+d}"] = [c.above, c.below]
        ok &= (c.above, c.below) == (0, 0)
    Nb = 1_000_000
    Vb = Potential.from_rule(LatticeDomain.half_line(Nb),
                             lambda n: 1.05 * np.where(n % 2 == 0, 1.0, -1.0) / n, label="alternating")
    cb = count_bound_states(Vb, Nb, check_double=False)
    detail["counts_beta_1.05"] = [cb.above, cb.below]
    ok &= cb.above + cb.below >= 1
    return Check("alternating-borderline", "alternating borderline potential", _status(ok), detail)


def check_staircase(quick: bool, seed: int, workers: int) -> Check:
    ok = True
    detail = {}
    for base in (2, 10, 100):
        kmax = 5 if base < 100 else 3
        V = example_54_potential(base, kmax)
        c = count_bound_states(V, check_double=False)
        st = example_54_staircase(base, kmax)
        rel = max(abs(float(v) - float(example_54_closed_forms(base, k)[1])) / float(v)
                  for k, v in enumerate(st.potential_at_sites, start=1))
        deep = example_54_staircase(base, 40 if base < 100 else 12)
        lim = float(deep.sites[-1] * deep.potential_at_sites[-1])
        lim_err = abs(lim - example_54_limit(base))
        detail[str(base)] = {"counts": [c.above, c.below], "closed_form_rel": rel, "limit_err": lim_err}
        ok &= (c.above, c.below) == (0, 0) and rel <= 1e-12 and lim_err <= 1e-9
    return Check("staircase-sharpness", "sharpness of the 1/n decay bound", _status(ok), detail)


def check_variational(quick: bool, seed: int, workers: int) -> Check:
    from .suites import all_variational_suites

    res = all_variational_suites(seed, 100 if quick else 500)
    return Check("variational-inequalities", "variational lower bounds for Delta",
                 _status(all(r.passed for r in res)), {r.name: r.to_dict() for r in res})


def check_test_functions(quick: bool, seed: int, workers: int) -> Check:
    from .suites import tent_identity_suite
    from .variational import log_limit_integral, log_trial_radial

    tent = tent_identity_suite(seed, 100)
    Ls = [16, 64, 256, 1024, 4096]
    scaled = []
    for L in Ls:
        e, _ = log_trial_radial(L)
        scaled.append(e * math.log(L + 1))
    _, n2 = log_trial_radial(4096)
    norm_scaled = (math.log(4096) / 4096) ** 2 * n2
    limit = log_limit_integral()
    norm_ok = abs(norm_scaled - limit) <= 0.05 * limit
    bounded = max(scaled) <= 8.0
    ok = tent.min_slack >= -1e-12 and bounded and norm_ok
    return Check("test-functions", "tent and logarithmic trial functions", _status(ok),
                 {"tent_max_error": -tent.min_slack, "energy_log_L": dict(zip(map(str, Ls), scaled)),
                  "norm_scaled_4096": norm_scaled, "limit_integral": limit})


def check_v_squared(quick: bool, seed: int, workers: int) -> Check:
    from .theorems import v_squared_comparison

    fails = unstable = 0
    for V in random_decaying_potentials(seed, 30 if quick else 100):
        v = v_squared_comparison(V)
        if v.status == "fail":
            fails += 1
        elif v.status == "unstable":
            unstable += 1
    # V^2 / 4 = 2/n, so the comparison potential is W = 2/n
    V = Potential.from_rule(LatticeDomain.half_line(4000), lambda n: np.sqrt(8.0 / n), label="power-law")
    cert = v_squared_comparison(V, m=3)
    positive = sum(1 for c in cert.certificates if c.delta > 0)
    ok = fails == 0 and positive >= 3
    status = _status(ok) if unstable == 0 or not ok else "unstable"
    return Check("v-squared-comparison", "V^2 comparison theorem", status,
                 {"failures": fails, "unstable": unstable, "positive_certificates_W_2_over_n": positive})


def check_oscillation_oracle(quick: bool, seed: int, workers: int) -> Check:
    mismatches = []
    pots = random_compact_potentials(seed, 30 if quick else 100)
    for i, V in enumerate(pots):
        c = count_bound_states(V, boundary="dirichlet", check_double=False)
        w = dense_eigh(LatticeOperator(V.domain, V).dense_matrix())
        ref = (int(np.sum(w > 2.0)), int(np.sum(w < -2.0)))
        if (c.above, c.below) != ref:
            mismatches.append(i)
    return Check("oscillation-vs-eigensolver", "oscillation counting of bound states",
                 _status(not mismatches), {"instances": len(pots), "mismatches": mismatches})


def check_birman_schwinger(quick: bool, seed: int, workers: int) -> Check:
    from .greens import GreenTable, green_zero_random_walk, operator_norm_power_iteration, sparse_counterexample

    table = GreenTable.load_or_create(3)
    ce = sparse_counterexample(3, 5, 1.0, table)
    op = LatticeOperator(ce.potential.domain, ce.potential)
    pi = operator_norm_power_iteration(op, iters=4000 if quick else 20000)
    g0 = table((0, 0, 0))
    rw = green_zero_random_walk(3)
    ok = ce.bs.schur_bound < 1 and pi.estimate <= 6 + 1e-6 and abs(g0 - rw) <= 1e-3
    return Check("birman-schwinger", "Birman-Schwinger counterexample in three dimensions", _status(ok),
                 {"sites": [list(s) for s in ce.sites], "schur_bound": ce.bs.schur_bound,
                  "power_iteration_top": pi.estimate, "power_iteration_converged": pi.converged,
                  "G0_quadrature": g0, "G0_random_walk": rw})


def check_infinitude(quick: bool, seed: int, workers: int) -> Check:
    from .theorems import infinitude_check

    Ns = [1000, 10_000, 100_000, 1_000_000]
    dom = LatticeDomain.half_line(Ns[-1])
    res = {}
    V1 = Potential.from_rule(dom, lambda n: 1.5 / n, label="power-law")
    e1 = infinitude_check(V1, "Thm5.7", Ns, workers=workers)
    V2 = Potential.from_rule(dom, lambda n: 1.2 * np.where(n % 2 == 0, 1.0, -1.0) / n, label="alternating")
    e2 = infinitude_check(V2, "Thm5.7", Ns, workers=workers)
    V3 = Potential.from_rule(dom, lambda n: 0.25 / n.astype(float) ** 2, label="power-law")
    e3 = infinitude_check(V3, "Thm5.7", Ns, workers=workers)
    counts3 = list(e3.witness_count_at_N.values())
    res["beta_1.5"] = {"counts": list(e1.witness_count_at_N.values()), "strict": e1.strictly_increasing}
    res["alternating_1.2"] = {"counts": list(e2.witness_count_at_N.values()),
                              "strict": e2.strictly_increasing,
                              "increasing_subsequence": e2.increasing_subsequence}
    res["inverse_square_quarter"] = {"counts": counts3}
    ok = e1.strictly_increasing and e1.hypotheses_hold and e2.evidence and len(set(counts3)) == 1
    return Check("infinitude", "infinitely many bound states for slow decay", _status(ok), res)


def check_moments(quick: bool, seed: int, workers: int) -> Check:
    from .theorems import moment_divergence_experiment

    Ns = [1000, 10_000, 100_000, 1_000_000]
    ex = moment_divergence_experiment(1.0, 0.5, 0.3, Ns, workers=workers)
    return Check("moment-divergence", "divergence of eigenvalue moments", _status(bool(ex.passed)),
                 {"growth_ratio": ex.report.growth_ratio(), "threshold": ex.threshold})


def check_decay_bounds(quick: bool, seed: int, workers: int) -> Check:
    from .theorems import decay_bound_check

    bad = []
    members = load_corpus("no_bound_state")
    for name, V in members:
        r = decay_bound_check(V, name)
        if r.counts != (0, 0) or not r.passes:
            bad.append(name)
    return Check("decay-bounds", "decay bounds without bound states", _status(not bad),
                 {"members": len(members), "failures": bad})


def check_bargmann(quick: bool, seed: int, workers: int) -> Check:
    from .theorems import bargmann_check

    bad = 0
    pots = random_bargmann_potentials(seed, 50 if quick else 200)
    for V in pots:
        if not bargmann_check(V).consistent:
            bad += 1
    sharp = []
    for n0 in (1, 2, 5, 10):
        at = bargmann_check(single_site_potential(n0, 1.0 / n0, 1000))
        past = count_bound_states(single_site_potential(n0, (1 + 1e-6) / n0, 1000), check_double=False)
        if not (at.predicts_no_bound_states and at.counts == (0, 0) and past.above == 1):
            sharp.append(n0)
    return Check("bargmann-bound", "Bargmann-type bound", _status(bad == 0 and not sharp),
                 {"instances": len(pots), "inconsistent": bad, "sharpness_failures": sharp})


def check_zero_potential(quick: bool, seed: int, workers: int) -> Check:
    from .theorems import zero_potential_check

    reports = [zero_potential_check(Potential.zero(LatticeDomain.half_line(200))),
               zero_potential_check(Potential.zero(LatticeDomain.box(6, nu=2)))]
    ok = all(not r.violations for r in reports)
    return Check("zero-potential-bound", "no bound states forces decay", _status(ok),
                 {"violations": sum(len(r.violations) for r in reports)})


def check_essential_spectrum(quick: bool, seed: int, workers: int) -> Check:
    from .theorems import certificates_disjoint, essential_spectrum_certificates

    V1 = Potential.from_rule(LatticeDomain.whole_line(4000), lambda n: np.ones(n.shape), label="constant")
    c1 = essential_spectrum_certificates(V1, 1.0, 5)
    V2 = Potential.from_rule(LatticeDomain.box(20, nu=2), lambda i, j: np.full(i.shape, 8.0), label="constant")
    c2 = essential_spectrum_certificates(V2, 8.0, 1)
    ok = (len(c1) == 5 and all(c.delta > 0 for c in c1) and certificates_disjoint(c1)
          and len(c2) == 1 and c2[0].delta > 0)
    return Check("essential-spectrum-certificates", "certificates at the essential-spectrum edge", _status(ok),
                 {"deltas_1d": [c.delta for c in c1], "deltas_2d": [c.delta for c in c2]})


def check_green_stencil(quick: bool, seed: int, workers: int) -> Check:
    from .greens import GreenTable, stencil_residual

    t = GreenTable.load_or_create(3, radius=4)
    r = float(np.max(np.abs(stencil_residual(t, 3))))
    return Check("green-function-stencil", "lattice Green function", _status(r <= 1e-6), {"max_residual": r})


CHECKS = (check_single_site, check_dipole, check_alternating, check_staircase, check_variational,
          check_test_functions, check_v_squared, check_oscillation_oracle, check_birman_schwinger,
          check_infinitude, check_moments, check_decay_bounds, check_bargmann, check_zero_potential,
          check_essential_spectrum, check_green_stencil)


def run_scoreboard(quick: bool = False, seed: int = 0, workers: int = 1, only=None) -> Scoreboard:
    """Run every check (or the named subset) in a fixed order."""
    out = []
    for fn in CHECKS:
        name = fn.__name__[len("check_"):]
        if only and name not in only:
            continue
        t = time.perf_counter()
        try:
            c = fn(quick, seed, workers)
        except Exception as exc:  # a crashing check is reported, not fatal
            c = Check(name, fn.__doc__ or name, "fail", {"error": f"{type(exc).__name__}: {exc}"})
        c.seconds = time.perf_counter() - t
        out.append(c)
    return Scoreboard(out, quick, seed)

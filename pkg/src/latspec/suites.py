"""Seeded randomized suites for the variational inequalities.

Every suite returns a :class:`SuiteResult` with the smallest observed slack
(left side minus right side); the inequality holds on the sample when
``min_slack >= -1e-10``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import (JacobiOperator, LatticeDomain, LatticeOperator, Potential, TrialFunction, inner,
                      kinetic_energy, parity_conjugate, quadratic_form)
from .variational import CutoffF, delta_functional, jacobi_trial_pair, lemma_witness, trial_pair

SLACK_TOL = -1e-10


@dataclass
class SuiteResult:
    name: str
    instances: int
    min_slack: float
    skipped: int = 0
    worst: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.instances > 0 and self.min_slack >= SLACK_TOL

    def to_dict(self) -> dict:
        return {"name": self.name, "instances": self.instances, "min_slack": self.min_slack,
                "skipped": self.skipped, "passed": self.passed}


def _random_setup(rng, nu: int, half: int = 4):
    dom = LatticeDomain.box(half, nu=nu)
    V = Potential(dom, values=rng.normal(0.0, rng.uniform(0.1, 3.0 * nu), dom.shape), label="random")
    return dom, V


def _random_trial(rng, dom: LatticeDomain, max_side: int = 5) -> TrialFunction:
    shape = tuple(int(rng.integers(1, min(max_side, s) + 1)) for s in dom.shape)
    lo = tuple(int(rng.integers(l, l + s - w + 1)) for l, s, w in zip(dom.lo, dom.shape, shape))
    return TrialFunction(dom, lo, rng.normal(size=shape))


def _nu_cycle(i: int, nus) -> int:
    return nus[i % len(nus)]


def pair_inequality_suite(seed: int, count: int = 500, nus=(1, 2, 3)) -> SuiteResult:
    """``Delta(f + g, U(f - g)) >= 2<f,(H_0 - 2nu)f> - 8nu||g||^2 + 4<f, V g>``."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    for i in range(count):
        nu = _nu_cycle(i, nus)
        dom, V = _random_setup(rng, nu)
        op = LatticeOperator(dom, V)
        f = _random_trial(rng, dom)
        g = _random_trial(rng, dom)
        d = delta_functional(f + g, parity_conjugate(f - g), op)
        free = LatticeOperator(dom)
        Vg = g.multiplied(V.window(g.lo, g.shape))
        rhs = 2.0 * (quadratic_form(free, f) - 2.0 * nu * f.norm2()) - 8.0 * nu * g.norm2() + 4.0 * inner(f, Vg)
        worst = min(worst, d - rhs)
    return SuiteResult("pair-inequality", count, float(worst))


def trial_pair_suite(seed: int, count: int = 500, nus=(1, 2, 3), cutoff: bool = False) -> SuiteResult:
    """``Delta`` of the trial pair is at least its lower bound (optionally with a random cutoff)."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    for i in range(count):
        nu = _nu_cycle(i, nus)
        dom, V = _random_setup(rng, nu)
        phi = _random_trial(rng, dom)
        F = CutoffF.from_array(dom, rng.random(dom.shape)) if cutoff else None
        c = trial_pair(phi, V, F)
        worst = min(worst, c.delta - c.lower_bound_rhs)
    return SuiteResult("trial-pair-cutoff" if cutoff else "trial-pair", count, float(worst))


def jacobi_suite(seed: int, count: int = 500, N: int = 40) -> SuiteResult:
    """Jacobi trial pair bound with couplings in ``[0.5, 2]``."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(count):
        a = rng.uniform(0.5, 2.0, N - 1)
        b = rng.normal(0.0, rng.uniform(0.1, 3.0), N)
        J = JacobiOperator(a, b)
        L = int(rng.integers(1, 15))
        lo = int(rng.integers(1, N - L + 2))
        phi = TrialFunction(J.domain, (lo,), rng.normal(size=L))
        c = jacobi_trial_pair(phi, J)
        worst = min(worst, c.delta - c.lower_bound_rhs)
    return SuiteResult("jacobi-trial-pair", count, float(worst))


def witness_suite(seed: int, count: int = 500, nus=(1, 2, 3), max_draws: int = 200000) -> SuiteResult:
    """Normalized witness bound for ``|V| <= 4nu`` on the support, positive bracket only.

    The right side ``(<phi,(H_0 + V^2/4nu)phi>/||phi||^2 - 2nu)/4`` must be
    nonnegative for the inequality to be meaningful; draws with a negative
    bracket are skipped and counted.
    """
    rng = np.random.default_rng(seed)
    worst = np.inf
    done = skipped = 0
    draws = 0
    while done < count and draws < max_draws:
        draws += 1
        nu = _nu_cycle(draws, nus)
        dom = LatticeDomain.box(3, nu=nu)
        shape = tuple(int(rng.integers(1, 3)) for _ in range(nu))
        lo = tuple(int(rng.integers(-3, 4 - s + 1)) for s in shape)
        phi = TrialFunction(dom, lo, rng.uniform(0.2, 1.0, shape) * rng.choice([-1.0, 1.0], shape))
        vals = rng.uniform(-4.0 * nu, 4.0 * nu, dom.shape)
        V = Potential(dom, values=vals, label="random")
        psi, lhs, rhs = lemma_witness(phi, V)
        if rhs < 0:
            skipped += 1
            continue
        worst = min(worst, lhs - rhs)
        done += 1
    return SuiteResult("witness", done, float(worst), skipped)


def tent_identity_suite(seed: int, count: int = 100, max_arm: int = 500) -> SuiteResult:
    """Tent energy equals ``1/(L1+1) + 1/(L2+1)``; slack is minus the absolute error."""
    from .variational import tent_1d, tent_energy

    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(count):
        L1, L2 = (int(x) for x in rng.integers(1, max_arm + 1, 2))
        err = abs(kinetic_energy(tent_1d(L1, L2)) - tent_energy(L1, L2))
        worst = min(worst, -err)
    return SuiteResult("tent-identity", count, float(worst))


def all_variational_suites(seed: int, count: int = 500) -> list:
    return [
        pair_inequality_suite(seed, count),
        trial_pair_suite(seed + 1, count),
        trial_pair_suite(seed + 2, count, cutoff=True),
        jacobi_suite(seed + 3, count),
        witness_suite(seed + 4, count),
    ]

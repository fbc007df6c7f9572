"""Shipped potentials and seeded random families used by the checks."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import numpy as np

from ..lattice import LatticeDomain, Potential, make_potential


@lru_cache(maxsize=None)
def _raw(name: str) -> dict:
    return json.loads(resources.files(__package__).joinpath(f"{name}.json").read_text())


def corpus_specs(name: str = "no_bound_state") -> list:
    """Potential specifications of a shipped corpus (``name`` keys included)."""
    return [dict(m) for m in _raw(name)["members"]]


def load_corpus(name: str = "no_bound_state") -> list:
    """``(name, Potential)`` pairs of a shipped corpus."""
    out = []
    for spec in corpus_specs(name):
        label = spec.pop("name")
        out.append((label, make_potential(spec)))
    return out


def random_bargmann_potentials(seed: int, count: int, N: int = 200, max_support: int = 40) -> list:
    """Nonnegative potentials with ``sum n V(n) <= 1`` (random supports and weights)."""
    rng = np.random.default_rng(seed)
    dom = LatticeDomain.half_line(N)
    out = []
    for _ in range(count):
        k = int(rng.integers(1, 8))
        sites = np.sort(rng.choice(np.arange(1, max_support + 1), size=k, replace=False))
        w = rng.dirichlet(np.ones(k)) * rng.uniform(0.2, 1.0)  # weights of n V(n)
        vals = np.zeros(N)
        vals[sites - 1] = w / sites
        out.append(Potential(dom, values=vals, label="bargmann-class"))
    return out


def random_decaying_potentials(seed: int, count: int, N: int = 400) -> list:
    """Mixed-sign potentials that are compactly supported or decay fast.

    Half of them are supported on the first 30 sites with amplitudes up to 3;
    the rest are ``A s(n) n^-2`` with random signs ``s``.
    """
    rng = np.random.default_rng(seed)
    dom = LatticeDomain.half_line(N)
    n = np.arange(1, N + 1, dtype=float)
    out = []
    for i in range(count):
        if i % 2 == 0:
            vals = np.zeros(N)
            L = int(rng.integers(1, 31))
            vals[:L] = rng.uniform(-3.0, 3.0, L) * (rng.random(L) < 0.5)
        else:
            vals = rng.uniform(0.5, 6.0) * rng.choice([-1.0, 1.0], N) / n ** 2
        out.append(Potential(dom, values=vals, label="random-decaying"))
    return out


def random_compact_potentials(seed: int, count: int, max_window: int = 300) -> list:
    """Compactly supported potentials on windows of at most ``max_window`` sites."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        N = int(rng.integers(5, max_window + 1))
        L = int(rng.integers(1, min(N, 40) + 1))
        vals = np.zeros(N)
        start = int(rng.integers(0, N - L + 1))
        vals[start:start + L] = rng.normal(0.0, rng.uniform(0.2, 3.0), L)
        out.append(Potential(LatticeDomain.half_line(N), values=vals, label="random-compact"))
    return out

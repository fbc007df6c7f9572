"""Executable checks of the comparison, certificate and counting theorems.

Each checker evaluates the hypotheses on the data it is given, computes the
conclusion independently, and reports both.  A conclusion that fails while
the hypotheses hold on a stable truncation is a genuine counterexample and
is reported as such, never silently dropped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eigen import (MomentReport, count_outside_band, moment_bracket)
from .errors import HypothesisError, InsufficientSpectrumError
from .lattice import (JacobiOperator, LatticeDomain, LatticeOperator, Potential, TrialFunction,
                      rayleigh_quotient)
from .oscillation import (band_edge_solve, count_bound_states, jacobi_band_edge_counts, tail_decays)
from .variational import (CutoffF, DeltaCertificate, disjoint_family, jacobi_trial_pair,
                          log_trial_2d, log_trial_radial, support_distance, tent_1d, trial_pair)


# ---------------------------------------------------------------------------
# helpers


def _doubled(domain: LatticeDomain) -> LatticeDomain:
    if domain.kind == "half_line":
        return LatticeDomain.half_line(2 * domain.shape[0])
    if domain.kind == "whole_line":
        return LatticeDomain.whole_line(2 * -domain.lo[0], 2 * domain.hi[0])
    lo = tuple(l - s // 2 for l, s in zip(domain.lo, domain.shape))
    return LatticeDomain.window(lo, tuple(2 * s for s in domain.shape))


def _counts(V: Potential, boundary: str = "free") -> tuple:
    """``(above, below)`` on ``V``'s own window."""
    if V.domain.kind == "half_line":
        c = count_bound_states(V, boundary=boundary, check_double=False)
        return c.above, c.below
    return count_outside_band(LatticeOperator(V.domain, V))


def _stable_counts(V: Potential, boundary: str = "free"):
    a = _counts(V, boundary)
    b = _counts(V.resize(_doubled(V.domain)), boundary)
    return a, b, a == b and tail_decays_any(V)


def tail_decays_any(V: Potential) -> bool:
    if V.domain.kind == "half_line":
        return tail_decays(V)
    if V.is_sparse:
        return True
    arr = np.abs(V.dense())
    if arr.max(initial=0.0) == 0:
        return True
    edge = np.ones(arr.shape, dtype=bool)
    inner = tuple(slice(max(1, s // 10), s - max(1, s // 10)) for s in arr.shape)
    edge[inner] = False
    return bool(arr[edge].max(initial=0.0) <= 0.1 * arr.max())


def _default_center(V: Potential) -> tuple:
    dom = V.domain
    if dom.kind == "half_line":
        return (1,)
    return tuple(l + s // 2 for l, s in zip(dom.lo, dom.shape))


# ---------------------------------------------------------------------------
# V^2 comparison


@dataclass
class ComparisonVerdict:
    """Outcome of comparing ``H_0 + V^2/(4nu)`` (hypothesis side) with ``H_0 + V``."""

    hypothesis_count: int
    conclusion_count: int
    conclusion_above: int
    conclusion_below: int
    stable: bool
    holds: bool
    certificates: list = field(default_factory=list)
    N: int = 0
    notes: list = field(default_factory=list)

    @property
    def status(self) -> str:
        if not self.holds:
            return "fail" if self.stable else "unstable"
        return "pass" if self.stable else "unstable"

    def to_dict(self) -> dict:
        return {
            "report_type": "comparison_verdict",
            "hypothesis_count": self.hypothesis_count,
            "conclusion_count": self.conclusion_count,
            "conclusion_above": self.conclusion_above,
            "conclusion_below": self.conclusion_below,
            "stable": self.stable,
            "holds": self.holds,
            "status": self.status,
            "N": self.N,
            "certificates": [{"delta": c.delta, "lower_bound_rhs": c.lower_bound_rhs, "witness": c.witness,
                              "witness_gap": c.witness_gap} for c in self.certificates],
            "notes": list(self.notes),
        }


def _certificate_consistency(certs, dirichlet_counts) -> tuple:
    """Winners on each side are disjoint, non-interacting trial vectors, so min-max bounds the counts."""
    plus = sum(1 for c in certs if c.delta > 0 and c.witness == "plus" and c.witness_gap > 0)
    minus = sum(1 for c in certs if c.delta > 0 and c.witness == "minus" and c.witness_gap > 0)
    ok = plus <= dirichlet_counts[0] and minus <= dirichlet_counts[1]
    ok = ok and all(c.delta > 0 and c.sound() for c in certs)
    return ok, plus, minus


def v_squared_comparison(V: Potential, nu: int | None = None, m: int = 1, boundary: str = "free",
                         box_cap: int | None = None) -> ComparisonVerdict:
    """Compare bound states of ``H_0 + V^2/(4nu)`` and ``H_0 + V`` on matched truncations.

    When the hypothesis side has at least ``m`` eigenvalues above ``2nu``,
    ``m`` certificates are built from disjoint top eigenvectors of the
    hypothesis operator, each turned into a trial pair for ``V``.
    """
    dom = V.domain
    nu = dom.nu if nu is None else nu
    if nu != dom.nu:
        raise ValueError("nu must match the potential's domain")
    W = V.map(lambda v: v * v / (4.0 * nu), label="v-squared")
    notes = []
    hw1, hw2, hstable = _stable_counts(W, boundary)
    cv1, cv2, cstable = _stable_counts(V, boundary)
    hyp = hw1[0]
    concl_above, concl_below = cv1
    concl = concl_above + concl_below
    stable = hstable and cstable
    if not hstable:
        notes.append(f"hypothesis counts {hw1} -> {hw2} under doubling")
    if not cstable:
        notes.append(f"conclusion counts {cv1} -> {cv2} under doubling")
    holds = hyp == 0 or concl >= 1
    certs = []
    if m > 0 and hyp >= m:
        cap = box_cap if box_cap is not None else max(dom.shape)
        try:
            fam = disjoint_family(W, m, cap, center=_default_center(V))
        except InsufficientSpectrumError as exc:
            fam = exc.found
            notes.append(f"disjoint family stopped at {exc.achieved} of {m} functions")
        certs = [trial_pair(phi, V) for phi in fam]
        dcounts = _counts(V, "dirichlet") if dom.kind == "half_line" else cv1
        ok, p, q = _certificate_consistency(certs, dcounts)
        if not ok:
            notes.append(f"certificate winners ({p} above, {q} below) exceed truncated counts {dcounts}")
        holds = holds and ok
    N = dom.shape[0] if dom.nu == 1 else dom.size
    return ComparisonVerdict(hyp, concl, concl_above, concl_below, stable, holds, certs, N, notes)


def _jacobi_extend(J: JacobiOperator, N: int) -> JacobiOperator:
    a = np.concatenate([J.a, np.ones(N - J.N)])
    b = np.concatenate([J.b, np.zeros(N - J.N)])
    return JacobiOperator(a, b)


def _jacobi_family(J: JacobiOperator, m: int, start: int = 8) -> list:
    """Top eigenvectors of ``J`` on consecutive disjoint intervals with quotient above 2."""
    from scipy.linalg import eigh_tridiagonal

    out = []
    lo, R = 1, start
    dom = J.domain
    while len(out) < m and lo <= J.N:
        hi = min(J.N, max(lo, R))
        d = J.b[lo - 1:hi]
        e = J.a[lo - 1:hi - 1]
        if d.size == 1:
            w, v = np.array([d[0]]), np.ones((1, 1))
        else:
            w, v = eigh_tridiagonal(d, e, select="i", select_range=(d.size - 1, d.size - 1))
        if w[-1] > 2.0 + 1e-12:
            vec = v[:, -1] * (1.0 if v[:, -1].sum() >= 0 else -1.0)
            out.append(TrialFunction(dom, (lo,), vec))
            lo = hi + 2
        if hi == J.N:
            break
        R *= 2
    return out


def jacobi_comparison(J: JacobiOperator, m: int = 1, boundary: str = "free") -> ComparisonVerdict:
    """Jacobi version: hypothesis operator ``J({a_n}, {gamma b_n^2})`` with ``gamma = 1/(2 + alpha)``."""
    gam = J.gamma
    Jw = J.with_diagonal(gam * J.b ** 2)
    notes = []
    h1 = jacobi_band_edge_counts(Jw, boundary)
    c1 = jacobi_band_edge_counts(J, boundary)
    h2 = jacobi_band_edge_counts(_jacobi_extend(Jw, 2 * J.N), boundary)
    c2 = jacobi_band_edge_counts(_jacobi_extend(J, 2 * J.N), boundary)
    stable = h1 == h2 and c1 == c2
    if not stable:
        notes.append(f"counts change under doubling: hypothesis {h1}->{h2}, conclusion {c1}->{c2}")
    hyp = h1[0]
    concl = c1[0] + c1[1]
    holds = hyp == 0 or concl >= 1
    certs = []
    if m > 0 and hyp >= m:
        fam = _jacobi_family(Jw, m)
        if len(fam) < m:
            notes.append(f"disjoint family stopped at {len(fam)} of {m} functions")
        certs = [jacobi_trial_pair(phi, J) for phi in fam]
        ok, p, q = _certificate_consistency(certs, jacobi_band_edge_counts(J, "dirichlet"))
        if not ok:
            notes.append(f"certificate winners ({p} above, {q} below) exceed truncated counts")
        holds = holds and ok
    return ComparisonVerdict(hyp, concl, c1[0], c1[1], stable, holds, certs, J.N, notes)


# ---------------------------------------------------------------------------
# essential spectrum certificates


def certificate_scale(a: float, nu: int = 1) -> int:
    """Smallest trial-function scale ``L`` that makes the certificate bound positive.

    ``nu = 1``: smallest ``L`` with ``2/(L+1) < min(a^2, 2a)/8`` (tent energy).
    ``nu = 2``: smallest ``L`` with ``E(L) < min(a^2, 4a)/16`` where ``E`` is the
    energy of the logarithmic trial function.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if nu == 1:
        target = min(a * a, 2.0 * a) / 8.0
        L = max(1, math.floor(2.0 / target - 1.0))
        while 2.0 / (L + 1) >= target:
            L += 1
        while L > 1 and 2.0 / L < target:
            L -= 1
        return L
    if nu == 2:
        target = 0.5 * min(a * a, 4.0 * a) / 8.0
        L = 1
        while log_trial_radial(L)[0] >= target:
            L *= 2
            if L > 1 << 22:
                raise HypothesisError(f"no logarithmic trial scale reaches energy {target:.3g}; "
                                      "a is too small for a desk-scale certificate")
        lo, hi = L // 2, L
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if log_trial_radial(mid)[0] < target:
                hi = mid
            else:
                lo = mid
        return hi
    raise ValueError("certificates are implemented for nu = 1 and nu = 2")


def essential_spectrum_certificates(V: Potential, a: float, m: int, tolerance: float = 1e-12) -> list:
    """``m`` positive-``Delta`` certificates at well separated sites where ``|V| >= a``.

    One dimension uses tents of half-width ``L`` at sites separated by
    ``2(L + 2)``; two dimensions use logarithmic trial functions of radius
    ``L`` with the same ``l1`` separation.  The cutoff ``F = min(1, 2nu/|V|)``
    tames large values of ``V``.
    """
    dom = V.domain
    nu = dom.nu
    L = certificate_scale(a, nu)
    sep = 2 * (L + 2)
    if V.is_sparse:
        cand = [(tuple(s), v) for s, v in V.support()]
    else:
        arr = V.dense()
        idx = np.argwhere(np.abs(arr) >= a - tolerance)
        cand = [(tuple(int(x) + l for x, l in zip(i, dom.lo)), float(arr[tuple(i)])) for i in idx]
    cand = [(s, v) for s, v in cand if abs(v) >= a - tolerance]
    reach = L  # trial window spans center +- L
    fits = [s for s, _ in cand
            if all(l + reach <= x <= h - reach for x, l, h in zip(s, dom.lo, dom.hi))]
    chosen = []
    for s in sorted(fits):
        if all(sum(abs(x - y) for x, y in zip(s, t)) >= sep for t in chosen):
            chosen.append(s)
        if len(chosen) == m:
            break
    if len(chosen) < m:
        raise InsufficientSpectrumError(f"qualifying sites with |V| >= {a} exhausted (L = {L}, separation {sep})",
                                        len(chosen), chosen)
    F = CutoffF.from_potential(V.resize(dom) if not V.is_sparse else _densified(V), cap=2.0 * nu)
    certs = []
    for s in chosen:
        if nu == 1:
            psi = tent_1d(L, L, center=s[0], domain=dom)
        else:
            psi = log_trial_2d(L, center=s, domain=dom)
        certs.append(trial_pair(psi, V, F))
    return certs


def _densified(V: Potential) -> Potential:
    return Potential(V.domain, values=V.dense(), label=V.label)


def certificates_disjoint(certs) -> bool:
    """Pairwise support distance at least 2."""
    fns = [c.phi_plus for c in certs]
    return all(support_distance(fns[i], fns[j]) >= 2 for i in range(len(fns)) for j in range(i + 1, len(fns)))


# ---------------------------------------------------------------------------
# zero-potential argument


@dataclass
class ZeroPotentialReport:
    """Per-site bounds ``|V(s)| <= sqrt(4 nu kin_L(s))`` forced by the absence of bound states."""

    nu: int
    L_max: int
    sites: np.ndarray
    bounds: np.ndarray
    values: np.ndarray
    hypothesis_holds: bool
    counts: tuple

    @property
    def violations(self) -> list:
        bad = np.abs(self.values) > self.bounds * (1 + 1e-12) + 1e-15
        return [tuple(int(x) for x in s) for s in self.sites[bad]]

    def to_dict(self) -> dict:
        return {
            "report_type": "zero_potential_report",
            "nu": self.nu,
            "L_max": self.L_max,
            "hypothesis_holds": self.hypothesis_holds,
            "counts": list(self.counts),
            "max_bound": float(self.bounds.max(initial=0.0)),
            "min_bound": float(self.bounds.min(initial=0.0)),
            "violations": [list(v) for v in self.violations],
        }


def tent_kinetic_bound(L: int) -> float:
    """``|V(s)|`` bound from a symmetric tent of half-width ``L``: ``sqrt(8/(L+1))``."""
    return math.sqrt(8.0 / (L + 1))


def zero_potential_check(V: Potential, nu: int | None = None, L_max: int = 1024) -> ZeroPotentialReport:
    """Bounds on ``|V|`` implied by the absence of spectrum outside ``[-2nu, 2nu]``.

    With no bound states every trial pair has ``Delta <= 0``, hence
    ``V(s)^2 phi(s)^2 / (4 nu) <= <phi, (2nu - H_0) phi>`` for every trial
    function.  Taking ``phi(s) = 1`` (tents in one dimension, logarithmic
    functions in two) and minimizing over scales ``L <= L_max`` that fit in
    the window gives the reported bounds.
    """
    dom = V.domain
    nu = dom.nu if nu is None else nu
    if nu != dom.nu or nu not in (1, 2):
        raise ValueError("zero_potential_check supports nu = 1 and nu = 2 matching the domain")
    counts = _counts(V, "free")
    if nu == 1:
        n = dom.axis_coords()
        # an arm may end on the first site outside the window, where phi is zero anyway
        L1 = np.minimum(n - dom.lo[0], L_max)
        L2 = np.minimum(dom.hi[0] - n, L_max)
        kin = 1.0 / (L1 + 1.0) + 1.0 / (L2 + 1.0)
        bounds = np.sqrt(4.0 * kin)
        sites = n.reshape(-1, 1)
        vals = V.window(dom.lo, dom.shape).reshape(-1)
    else:
        energies = np.array([np.inf] + [log_trial_radial(L)[0] for L in range(1, L_max + 1)])
        best = np.minimum.accumulate(energies)
        grids = np.meshgrid(*[dom.axis_coords(ax) for ax in range(2)], indexing="ij")
        dist = np.minimum.reduce([np.minimum(g - l, h - g) for g, l, h in zip(grids, dom.lo, dom.hi)])
        Ls = np.minimum(dist + 1, L_max)
        bounds = np.sqrt(8.0 * best[Ls]).reshape(-1)
        sites = np.stack([g.reshape(-1) for g in grids], axis=1)
        vals = V.window(dom.lo, dom.shape).reshape(-1)
    return ZeroPotentialReport(nu, L_max, sites, bounds, vals, counts == (0, 0), counts)


# ---------------------------------------------------------------------------
# Bargmann-type bound and decay bounds


@dataclass
class BargmannResult:
    total: float
    predicts_no_bound_states: bool
    counts: tuple
    consistent: bool

    def to_dict(self) -> dict:
        return {"report_type": "bargmann_result", "sum": self.total,
                "predicts_no_bound_states": self.predicts_no_bound_states,
                "counts": list(self.counts), "consistent": self.consistent}


BARGMANN_RTOL = 4 * np.finfo(float).eps


def bargmann_sum(V: Potential) -> float:
    if V.domain.kind != "half_line":
        raise ValueError("the Bargmann-type sum is defined on the half-line")
    return math.fsum(float(s[0]) * abs(v) for s, v in V.support())


def bargmann_check(V: Potential, N: int | None = None) -> BargmannResult:
    """``sum n |V(n)| <= 1`` predicts no bound states; cross-checked by oscillation.

    The comparison allows ``4 eps`` relative rounding, so ``W_{n0} / n0``
    (sum exactly one in exact arithmetic) is classified as predicted.
    """
    total = bargmann_sum(V)
    pred = bool(total <= 1.0 + BARGMANN_RTOL)
    c = count_bound_states(V, N, check_double=False)
    counts = (c.above, c.below)
    return BargmannResult(total, pred, counts, (not pred) or counts == (0, 0))


@dataclass
class DecayBoundReport:
    name: str
    nonnegative: bool
    counts: tuple
    max_ratio_inverse: float  # max n |V(n)|   (nonnegative V)
    max_ratio_sqrt: float  # max sqrt(n) |V(n)| / 2
    passes: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "nonnegative": self.nonnegative, "counts": list(self.counts),
                "max_n_V": self.max_ratio_inverse, "max_sqrt_n_V_over_2": self.max_ratio_sqrt,
                "passes": self.passes}


def decay_bound_check(V: Potential, name: str = "") -> DecayBoundReport:
    """``V >= 0`` without bound states has ``V(n) <= 1/n``; any sign has ``|V(n)| <= 2 n^-1/2``."""
    c = count_bound_states(V, check_double=False)
    counts = (c.above, c.below)
    if V.is_sparse:
        n = np.array([float(s[0]) for s, _ in V.support()])
        v = np.array([abs(x) for _, x in V.support()])
    else:
        seq = V.sequence()
        n = np.arange(1, seq.size + 1, dtype=float)
        v = np.abs(seq)
    r1 = float(np.max(n * v, initial=0.0))
    r2 = float(np.max(np.sqrt(n) * v / 2.0, initial=0.0))
    tol = 1 + BARGMANN_RTOL
    passes = True
    if counts == (0, 0):
        passes = r2 <= tol and (not V.nonnegative or r1 <= tol)
    return DecayBoundReport(name, V.nonnegative, counts, r1, r2, passes)


# ---------------------------------------------------------------------------
# infinitude criteria


CRITERIA = ("Thm5.5", "Thm5.6", "Thm5.7")


@dataclass
class InfinitudeEvidence:
    criterion: str
    parameters: dict
    hypotheses_hold: bool
    witness_count_at_N: dict
    strictly_increasing: bool
    increasing_subsequence: list
    notes: list = field(default_factory=list)

    @property
    def evidence(self) -> bool:
        return len(self.increasing_subsequence) >= 2

    @property
    def status(self) -> str:
        if not self.hypotheses_hold:
            return "hypotheses-fail"
        return "pass" if self.evidence else "fail"

    def to_dict(self) -> dict:
        return {
            "report_type": "infinitude_evidence",
            "criterion": self.criterion,
            "parameters": dict(self.parameters),
            "hypotheses_hold": self.hypotheses_hold,
            "witness_count_at_N": {str(k): v for k, v in self.witness_count_at_N.items()},
            "strictly_increasing": self.strictly_increasing,
            "increasing_subsequence": list(self.increasing_subsequence),
            "status": self.status,
            "notes": list(self.notes),
        }

    CSV_COLUMNS = ("N", "count")

    def csv_rows(self) -> list:
        return [[int(k), int(v)] for k, v in self.witness_count_at_N.items()]


def _values(V: Potential, N: int) -> np.ndarray:
    return (V if V.domain.shape[0] == N else V.resize(N)).sequence()


def default_nk(N_max: int, start: int = 16) -> list:
    out, n = [], start
    while n <= N_max:
        out.append(n)
        n *= 2
    return out


def estimate_thm55(v: np.ndarray, nk) -> dict:
    """Largest ``epsilon`` satisfying the averaged-lower-bound condition along ``nk``."""
    cs = np.concatenate([[0.0], np.cumsum(v)])
    eps = []
    for n in nk:
        lo = n // 2
        avg = 2.0 / n * (cs[n] - cs[lo - 1])
        eps.append(avg / v[n - 1] if v[n - 1] > 0 else math.inf)
    epsilon = float(min(eps)) if eps else 0.0
    last = nk[-1]
    return {"epsilon": epsilon, "n_k": list(nk), "limsup_value": epsilon * last * last * float(v[last - 1]),
            "threshold": 48.0}


def estimate_thm56(v: np.ndarray, nk) -> dict:
    a2 = v * v
    cs = np.concatenate([[0.0], np.cumsum(a2)])
    eps = []
    for n in nk:
        lo = n // 2
        avg = 2.0 / n * (cs[n] - cs[lo - 1])
        eps.append(math.sqrt(avg / a2[n - 1]) if a2[n - 1] > 0 else math.inf)
    epsilon = float(min(eps)) if eps else 0.0
    last = nk[-1]
    return {"epsilon": epsilon, "n_k": list(nk), "limsup_value": epsilon * last * abs(float(v[last - 1])),
            "threshold": 8.0 * math.sqrt(3.0)}


def estimate_thm57(v: np.ndarray, tail_start: int) -> dict:
    n = np.arange(1, v.size + 1, dtype=float)
    beta = float(np.min((n * np.abs(v))[tail_start - 1:]))
    return {"beta": beta, "tail_start": tail_start, "threshold": 1.0}


def longest_increasing_run(counts) -> list:
    """Indices of record highs: a strictly increasing subsequence starting at the first entry."""
    if not counts:
        return []
    idx = [0]
    for i in range(1, len(counts)):
        if counts[i] > counts[idx[-1]]:
            idx.append(i)
    return idx


def infinitude_check(V: Potential, criterion: str, N_list, nk=None, tail_start: int | None = None,
                     boundary: str = "free", workers: int = 1) -> InfinitudeEvidence:
    """Evaluate an infinitude criterion on the data and count bound states along ``N_list``.

    ``V`` must be a half-line potential that can be resized (a rule, or a
    window at least ``max(N_list)`` long).
    """
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}")
    N_list = sorted(int(n) for n in N_list)
    Nmax = N_list[-1]
    v = _values(V, Nmax)
    notes = []
    decays = tail_decays(V if V.domain.shape[0] == Nmax else V.resize(Nmax))
    if criterion == "Thm5.5":
        nk = list(nk) if nk is not None else default_nk(Nmax)
        params = estimate_thm55(v, nk)
        hold = bool(np.all(v >= 0)) and params["epsilon"] > 0 and params["limsup_value"] > 48.0
        if not np.all(v >= 0):
            notes.append("criterion needs V >= 0")
    elif criterion == "Thm5.6":
        nk = list(nk) if nk is not None else default_nk(Nmax)
        params = estimate_thm56(v, nk)
        hold = params["epsilon"] > 0 and params["limsup_value"] > 8.0 * math.sqrt(3.0)
    else:
        ts = tail_start if tail_start is not None else max(1, N_list[0] // 2)
        params = estimate_thm57(v, ts)
        hold = params["beta"] > 1.0 and decays
    if not decays:
        notes.append("potential does not decay on the window")
    from .parallel import ordered_map

    # cells get plain arrays so they pickle for the worker pool
    counts = ordered_map(_count_total, [(v[:N], boundary) for N in N_list], workers)
    wc = dict(zip(N_list, counts))
    strict = all(b > a for a, b in zip(counts, counts[1:]))
    sub = longest_increasing_run(counts)
    return InfinitudeEvidence(criterion, params, bool(hold), wc, strict, [N_list[i] for i in sub], notes)


def _count_total(args):
    values, boundary = args
    c = count_bound_states(values, boundary=boundary, check_double=False)
    return c.above + c.below


def whole_line_split_counts(V: Potential) -> dict:
    """Dirichlet decoupling at the origin: counts of the two half-lines and of the full window.

    The right half-line carries ``V(0), V(1), ...`` and the left one
    ``V(-1), V(-2), ...``.  Removing the two couplings across the cut is a
    rank-two change, so the total differs from the direct count by at most 2
    per side.
    """
    dom = V.domain
    if dom.kind != "whole_line":
        raise ValueError("need a whole-line potential")
    full = V.dense()
    zero = -dom.lo[0]
    right = full[zero:]
    left = full[:zero][::-1]
    r = count_bound_states(right, boundary="dirichlet", check_double=False)
    lft = count_bound_states(left, boundary="dirichlet", check_double=False) if left.size else None
    direct = count_outside_band(LatticeOperator(dom, V))
    split = (r.above + (lft.above if lft else 0), r.below + (lft.below if lft else 0))
    return {"split": split, "direct": tuple(direct),
            "within_tolerance": abs(split[0] - direct[0]) <= 2 and abs(split[1] - direct[1]) <= 2}


# ---------------------------------------------------------------------------
# eigenvalue moments


@dataclass
class MomentExperiment:
    report: MomentReport
    threshold: float  # (1 - alpha) / (2 alpha)
    predicted_divergent: bool
    growth_factor: float
    passed: bool | None

    def to_dict(self) -> dict:
        d = self.report.to_dict()
        d.update({"threshold": self.threshold, "predicted_divergent": self.predicted_divergent,
                  "growth_factor": self.growth_factor, "passed": self.passed})
        return d

    CSV_COLUMNS = MomentReport.CSV_COLUMNS

    def csv_rows(self) -> list:
        return self.report.csv_rows()


def moment_divergence_experiment(decay_C: float, decay_alpha: float, gamma: float, N_list,
                                 growth_factor: float = 2.0, V: Potential | None = None,
                                 tolerance: float = 1e-8, workers: int = 1) -> MomentExperiment:
    """Moment sums ``sum (|E_j| - 2)^gamma`` on a truncation ladder for ``V(n) = C n^-alpha``.

    Each sum is bracketed rigorously from Sturm counts (see
    :func:`latspec.eigen.moment_bracket`); the growth ratio divides the last
    lower bound by the first upper bound.
    """
    if not 0 < decay_alpha < 1:
        raise HypothesisError("decay exponent must lie in (0, 1)")
    N_list = sorted(int(n) for n in N_list)
    if V is None:
        C, a = float(decay_C), float(decay_alpha)
        V = Potential.from_rule(LatticeDomain.half_line(N_list[-1]), lambda n: C * n.astype(float) ** (-a),
                                label="power-law")
    else:
        v = np.abs(_values(V, N_list[-1]))
        n = np.arange(1, v.size + 1, dtype=float)
        if np.any(v < decay_C * n ** (-decay_alpha) * (1 - 1e-12)):
            raise HypothesisError("supplied V violates |V(n)| >= C n^-alpha")
    from .parallel import ordered_map

    v = _values(V, N_list[-1])
    rows = ordered_map(_moment_cell, [(v[:N], gamma, tolerance) for N in N_list], workers)
    rep = MomentReport(gamma, decay_C, decay_alpha, [(N,) + r for N, r in zip(N_list, rows)])
    rep.check_monotone()
    thr = (1.0 - decay_alpha) / (2.0 * decay_alpha)
    pred = gamma < thr
    ratio = rep.growth_ratio()
    if pred:
        passed = bool(ratio >= growth_factor)
        rep.notes.append(f"divergence predicted for gamma < {thr:.6g}")
    else:
        passed = None
        rep.notes.append("gamma at or above the divergence threshold: growth reported for information only")
    return MomentExperiment(rep, thr, pred, growth_factor, passed)


def _moment_cell(args):
    values, gamma, tol = args
    W = Potential.from_sequence(values)
    lo, up, cnt = moment_bracket(LatticeOperator(W.domain, W), gamma, tol)
    return lo, up, cnt


# ---------------------------------------------------------------------------
# convenience


def quotient(op, phi) -> float:
    return rayleigh_quotient(op, phi)


def rayleigh_gap_positive(cert: DeltaCertificate) -> bool:
    return cert.delta > 0 and cert.witness_gap > 0


def single_band_edge_changes(V, side="above", boundary="free") -> int:
    return band_edge_solve(V, side, boundary=boundary, store=False).sign_changes

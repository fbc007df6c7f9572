"""Eigenvalue oracles: Sturm counts, bisection, a dense symmetric solver.

All solvers here are written out in full (no LAPACK), so the spectral counts
used to check the theorems do not depend on an external eigensolver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import HypothesisError, SizeCapError
from .lattice import JacobiOperator, LatticeOperator

EPS = float(np.finfo(np.float64).eps)
DEFAULT_TOL = 1e-8
DENSE_SIZE_CAP = 12_000


@dataclass(frozen=True, eq=False)
class Tridiagonal:
    """Symmetric tridiagonal matrix with diagonal ``d`` and off-diagonal ``e``."""

    d: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(self.d, dtype=np.float64).reshape(-1)
        e = np.ascontiguousarray(self.e, dtype=np.float64).reshape(-1)
        if e.size != max(d.size - 1, 0):
            raise ValueError("off-diagonal must have length n - 1")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "e", e)

    @classmethod
    def of(cls, obj) -> "Tridiagonal":
        if isinstance(obj, Tridiagonal):
            return obj
        if isinstance(obj, (JacobiOperator, LatticeOperator)):
            return cls(*obj.tridiagonal())
        if isinstance(obj, tuple) and len(obj) == 2:
            return cls(*obj)
        raise TypeError(f"cannot form a tridiagonal matrix from {type(obj).__name__}")

    @property
    def n(self) -> int:
        return self.d.size

    def norm_bound(self) -> float:
        """Cheap upper bound on the spectral norm (max absolute row sum)."""
        if self.n == 0:
            return 0.0
        ae = np.abs(self.e)
        row = np.abs(self.d).copy()
        row[:-1] += ae
        row[1:] += ae
        return float(row.max())

    def gershgorin(self):
        ae = np.abs(self.e)
        r = np.zeros(self.n)
        r[:-1] += ae
        r[1:] += ae
        return float(np.min(self.d - r)), float(np.max(self.d + r))

    def pivmin(self) -> float:
        return max(EPS * self.norm_bound(), np.finfo(np.float64).tiny)

    def dense(self) -> np.ndarray:
        return np.diag(self.d) + np.diag(self.e, 1) + np.diag(self.e, -1)


def sturm_counts(T, shifts) -> np.ndarray:
    """Number of eigenvalues strictly below each shift.

    Degenerate pivots are replaced by ``-eps * ||T||``; this moves a shift that
    coincides with an eigenvalue by a relative machine epsilon, which cannot
    change any count by more than the multiplicity at that point.
    """
    T = Tridiagonal.of(T)
    return kernels.sturm_counts(T.d, T.e * T.e, np.atleast_1d(np.asarray(shifts, float)), T.pivmin())


def sturm_count(T, E: float) -> int:
    """``#{eigenvalues < E}`` of a symmetric tridiagonal matrix."""
    return int(sturm_counts(T, [E])[0])


def bisect_eigenvalues(T, lo: float, hi: float, xtol: float = 1e-12) -> np.ndarray:
    """All eigenvalues in ``[lo, hi)``, each located to ``xtol`` by bisection."""
    T = Tridiagonal.of(T)
    glo, ghi = T.gershgorin()
    lo = max(lo, glo - 1.0)
    hi = min(hi, ghi + 1.0)
    if T.n == 0 or hi <= lo:
        return np.zeros(0)
    c = sturm_counts(T, [lo, hi])
    k = np.arange(c[0], c[1])
    if k.size == 0:
        return np.zeros(0)
    a = np.full(k.size, float(lo))
    b = np.full(k.size, float(hi))
    while True:
        width = b - a
        scale = np.maximum(np.abs(a), np.abs(b))
        active = width > np.maximum(xtol, 4 * EPS * scale)
        if not active.any():
            break
        mid = 0.5 * (a[active] + b[active])
        cm = sturm_counts(T, mid)
        above = cm > k[active]
        ai = np.flatnonzero(active)
        b[ai[above]] = mid[above]
        a[ai[~above]] = mid[~above]
    return 0.5 * (a + b)


def tridiagonal_eigh(T, vectors: bool = False):
    """All eigenvalues (ascending) of a tridiagonal matrix by implicit QL."""
    T = Tridiagonal.of(T)
    z = np.eye(T.n) if vectors else None
    w = kernels.tql_implicit(T.d, T.e, z)
    order = np.argsort(w, kind="stable")
    if vectors:
        return w[order], np.ascontiguousarray(z[:, order])
    return w[order]


def householder_tridiagonalize(A: np.ndarray, vectors: bool = False):
    """Reduce a symmetric matrix to tridiagonal form ``A = Q T Q^T``.

    Returns ``(d, e, Q)`` with ``Q`` None unless ``vectors``.
    """
    A = np.array(A, dtype=np.float64, copy=True)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    Q = np.eye(n) if vectors else None
    for k in range(n - 2):
        x = A[k + 1:, k]
        sigma = float(np.linalg.norm(x))
        if sigma == 0.0:
            continue
        alpha = -sigma if x[0] >= 0 else sigma
        v = x.copy()
        v[0] -= alpha
        vn = float(np.linalg.norm(v))
        if vn == 0.0:
            continue
        v /= vn
        B = A[k + 1:, k + 1:]
        p = B @ v
        K = float(v @ p)
        q = p - K * v
        B -= 2.0 * (np.outer(v, q) + np.outer(q, v))
        A[k + 1:, k] = 0.0
        A[k, k + 1:] = 0.0
        A[k + 1, k] = alpha
        A[k, k + 1] = alpha
        if vectors:
            Qs = Q[:, k + 1:]
            Qs -= 2.0 * np.outer(Qs @ v, v)
    d = np.ascontiguousarray(np.diag(A))
    e = np.ascontiguousarray(np.diag(A, -1))
    return d, e, Q


def dense_eigh(A: np.ndarray, vectors: bool = False, size_cap: int = DENSE_SIZE_CAP):
    """Eigen-decomposition of a symmetric matrix: Householder reduction then implicit QL.

    Eigenvalues are ascending; eigenvectors, when requested, are the columns
    of the second return value.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if n > size_cap:
        raise SizeCapError(f"dense solver limited to {size_cap} sites, got {n}; "
                           "use a smaller box or raise size_cap")
    if n == 0:
        return (np.zeros(0), np.zeros((0, 0))) if vectors else np.zeros(0)
    d, e, Q = householder_tridiagonalize(A, vectors)
    w = kernels.tql_implicit(d, e, Q)
    order = np.argsort(w, kind="stable")
    if vectors:
        return w[order], np.ascontiguousarray(Q[:, order])
    return w[order]


# ---------------------------------------------------------------------------
# spectral reports


@dataclass
class SpectralReport:
    """Eigenvalues of a finite truncation lying outside ``[-2 nu, 2 nu]``."""

    eigenvalues_above: list
    eigenvalues_below: list
    band_edge: float
    truncation_size: int
    tolerance: float
    method: str = "bisection"

    @property
    def band(self):
        return [-self.band_edge, self.band_edge]

    @property
    def count_above(self) -> int:
        return len(self.eigenvalues_above)

    @property
    def count_below(self) -> int:
        return len(self.eigenvalues_below)

    def to_dict(self) -> dict:
        return {
            "report_type": "spectral_report",
            "band": self.band,
            "truncation_size": self.truncation_size,
            "tolerance": self.tolerance,
            "method": self.method,
            "count_above": self.count_above,
            "count_below": self.count_below,
            "eigenvalues_above": [float(x) for x in self.eigenvalues_above],
            "eigenvalues_below": [float(x) for x in self.eigenvalues_below],
        }

    CSV_COLUMNS = ("index", "eigenvalue", "side", "gap_to_band")

    def csv_rows(self) -> list:
        rows = []
        i = 0
        for E in self.eigenvalues_below:
            rows.append((i, float(E), "below", float(-self.band_edge - E)))
            i += 1
        for E in self.eigenvalues_above:
            rows.append((i, float(E), "above", float(E - self.band_edge)))
            i += 1
        return rows


def eigenvalues_outside_band(op, tolerance: float = DEFAULT_TOL, size_cap: int = DENSE_SIZE_CAP,
                             xtol: float | None = None) -> SpectralReport:
    """Eigenvalues clearing the band ``[-2 nu, 2 nu]`` by more than ``tolerance``.

    One-dimensional operators use Sturm bisection; boxes use the dense solver
    (size-capped).
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if isinstance(op, LatticeOperator) and op.nu > 1:
        edge = op.band_edge
        w = dense_eigh(op.dense_matrix(), size_cap=size_cap)
        return SpectralReport(sorted(w[w > edge + tolerance].tolist()),
                              sorted(w[w < -edge - tolerance].tolist()),
                              edge, op.domain.size, tolerance, method="dense")
    edge = 2.0
    T = Tridiagonal.of(op)
    xtol = xtol if xtol is not None else max(min(tolerance * 1e-3, 1e-10), 1e-14)
    glo, ghi = T.gershgorin()
    above = bisect_eigenvalues(T, edge + tolerance, ghi + 1.0, xtol)
    below = bisect_eigenvalues(T, glo - 1.0, -edge - tolerance, xtol)
    return SpectralReport(sorted(above.tolist()), sorted(below.tolist()), edge, T.n, tolerance)


def count_outside_band(op, tolerance: float = DEFAULT_TOL):
    """``(above, below)`` counts without locating eigenvalues."""
    if isinstance(op, LatticeOperator) and op.nu > 1:
        r = eigenvalues_outside_band(op, tolerance)
        return r.count_above, r.count_below
    T = Tridiagonal.of(op)
    c = sturm_counts(T, [-2.0 - tolerance, 2.0 + tolerance])
    return int(T.n - c[1]), int(c[0])


def moment_sum(report: SpectralReport, gamma: float) -> float:
    """``sum_j (|E_j| - 2 nu)^gamma`` over the report's eigenvalues."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    edge = report.band_edge
    gaps = [abs(E) - edge for E in list(report.eigenvalues_above) + list(report.eigenvalues_below)]
    return float(math.fsum(g ** gamma for g in gaps))


def moment_bracket(op, gamma: float, tolerance: float = DEFAULT_TOL, ratio: float | None = None):
    """Lower and upper bounds for the moment sum from counting-function values.

    The gap axis is cut at ``tolerance * ratio**i``; every eigenvalue whose
    gap lies in ``(delta_i, delta_{i+1}]`` contributes between
    ``delta_i**gamma`` and ``delta_{i+1}**gamma``.  With the default ratio the
    bracket is tight to about 3 percent and needs a few hundred Sturm sweeps,
    independent of how many eigenvalues there are.

    Returns ``(lower, upper, count)``.
    """
    T = Tridiagonal.of(op)
    if ratio is None:
        ratio = 1.0 + 0.03 / gamma
    glo, ghi = T.gershgorin()
    top = max(ghi - 2.0, -2.0 - glo, tolerance) * 1.0001
    m = int(math.ceil(math.log(top / tolerance) / math.log(ratio))) + 1
    deltas = tolerance * ratio ** np.arange(m + 1)
    shifts = np.concatenate([2.0 + deltas, -2.0 - deltas])
    c = sturm_counts(T, shifts)
    n_above = T.n - c[: m + 1]
    n_below = c[m + 1:]
    lower = upper = 0.0
    for counts in (n_above, n_below):
        drop = counts[:-1] - counts[1:]
        lower += float(np.sum(drop * deltas[:-1] ** gamma))
        upper += float(np.sum(drop * deltas[1:] ** gamma))
    return lower, upper, int(n_above[0] + n_below[0])


@dataclass
class MomentReport:
    """Moment sums ``sum_j (|E_j| - 2)^gamma`` along a truncation ladder."""

    gamma: float
    decay_C: float
    decay_alpha: float
    partial_sums: list = field(default_factory=list)  # (N, lower, upper, count)
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def nondecreasing(self) -> bool:
        return not self.violations

    def check_monotone(self):
        """Record ladder steps where the sum provably decreased."""
        self.violations = []
        for (n0, lo0, up0, _), (n1, lo1, up1, _) in zip(self.partial_sums, self.partial_sums[1:]):
            if up1 < lo0 * (1 - 1e-12):
                self.violations.append((n0, n1))
        return self.nondecreasing

    def growth_ratio(self) -> float:
        """Rigorous lower bound of last/first: last lower bound over first upper bound."""
        if len(self.partial_sums) < 2:
            return float("nan")
        first_up = self.partial_sums[0][2]
        last_lo = self.partial_sums[-1][1]
        if first_up == 0:
            return float("inf") if last_lo > 0 else float("nan")
        return last_lo / first_up

    def to_dict(self) -> dict:
        return {
            "report_type": "moment_report",
            "gamma": self.gamma,
            "decay_C": self.decay_C,
            "decay_alpha": self.decay_alpha,
            "partial_sums": [{"N": int(n), "lower": lo, "upper": up, "count": int(c)}
                             for n, lo, up, c in self.partial_sums],
            "nondecreasing": self.nondecreasing,
            "violations": [list(v) for v in self.violations],
            "growth_ratio": self.growth_ratio(),
            "notes": list(self.notes),
        }

    CSV_COLUMNS = ("N", "lower", "upper", "count")

    def csv_rows(self) -> list:
        return [[int(n), lo, up, int(c)] for n, lo, up, c in self.partial_sums]


# ---------------------------------------------------------------------------
# trace inequality and eigenvalue-sum monotonicity


@dataclass
class TraceCheck:
    lhs: float
    rhs: float
    holds: bool


def trace_inequality_check(A, phis, F: Callable, offdiag_tol: float = 1e-10) -> TraceCheck:
    """Compare ``Tr F(A)`` with ``sum_j F(<phi_j, A phi_j>)``.

    ``phis`` is a sequence of orthonormal vectors (or a matrix whose rows are
    the vectors) with ``<phi_j, A phi_k>`` diagonal.  A violated precondition
    raises :class:`HypothesisError` naming the offending pair.
    """
    A = np.asarray(A, dtype=np.float64)
    P = np.asarray(phis, dtype=np.float64).reshape(-1, A.shape[0]) if len(phis) else np.zeros((0, A.shape[0]))
    G = P @ P.T
    M = P @ A @ P.T
    k = P.shape[0]
    for j in range(k):
        for l in range(k):
            if abs(G[j, l] - (1.0 if j == l else 0.0)) > offdiag_tol:
                err = HypothesisError(f"family not orthonormal at pair ({j}, {l})")
                err.pair = (j, l)
                raise err
            if j != l and abs(M[j, l]) > offdiag_tol:
                err = HypothesisError(f"<phi_j, A phi_k> not diagonal at pair ({j}, {l})")
                err.pair = (j, l)
                raise err
    w = dense_eigh(A)
    lhs = float(math.fsum(np.asarray(F(w), dtype=float).tolist()))
    rhs = float(math.fsum(np.asarray(F(np.diag(M)), dtype=float).tolist())) if k else 0.0
    return TraceCheck(lhs, rhs, lhs >= rhs - 1e-10)


def _positive_partial_sums(a, b):
    w = tridiagonal_eigh(Tridiagonal(b, a))
    pos = np.sort(np.maximum(w, 0.0))[::-1]
    return np.cumsum(pos)


def eigenvalue_sum_monotonicity_check(a: Sequence[float], a_prime: Sequence[float],
                                      b: Sequence[float], N: int, slack: float = 1e-10) -> bool:
    """True iff every partial sum of the largest positive eigenvalues grows from ``a`` to ``a'``.

    Sequences are truncated to a Jacobi matrix of size ``N`` (``N-1``
    couplings).  Requires ``a' >= a`` pointwise.
    """
    a = np.asarray(a, dtype=float)[: N - 1]
    a2 = np.asarray(a_prime, dtype=float)[: N - 1]
    b = np.asarray(b, dtype=float)[:N]
    if np.any(a2 < a):
        raise HypothesisError("a' must dominate a pointwise")
    s1 = _positive_partial_sums(a, b)
    s2 = _positive_partial_sums(a2, b)
    return bool(np.all(s2 >= s1 - slack * (1 + np.abs(s1))))

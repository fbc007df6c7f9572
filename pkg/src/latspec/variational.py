"""Variational certificates for spectrum outside ``[-2 nu, 2 nu]``.

The central object is the pair functional

    Delta(phi_+, phi_-) = <phi_+, (H - 2nu) phi_+> + <phi_-, (-H - 2nu) phi_->,

whose positivity forces a Rayleigh quotient of ``H`` outside the band.  The
trial pairs built here make ``Delta`` at least twice the form of
``H_0 - 2nu + V^2/(4nu)``, which is how bound states of ``V^2/(4nu)`` are
transferred to ``V``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainMismatchError, HypothesisError, InsufficientSpectrumError
from .lattice import (
    JacobiOperator,
    LatticeDomain,
    LatticeOperator,
    Potential,
    TrialFunction,
    form_parts,
    kinetic_energy,
    parity_conjugate,
    parity_signs,
    quadratic_form,
)


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True, eq=False)
class CutoffF:
    """Site function with values in ``[0, 1]`` that damps large potentials."""

    values: Potential

    def __post_init__(self):
        for _, v in self.values.support():
            if not 0.0 <= v <= 1.0:
                raise ValueError("cutoff values must lie in [0, 1]")
        if not self.values.is_sparse and self.values.values.size:
            if self.values.values.min() < 0 or self.values.values.max() > 1:
                raise ValueError("cutoff values must lie in [0, 1]")

    @classmethod
    def from_potential(cls, V: Potential, cap: float = 2.0) -> "CutoffF":
        """``F(n) = min(1, cap / |V(n)|)`` (and 1 where ``V = 0``)."""
        def f(v):
            a = np.abs(v)
            return np.where(a > cap, cap / np.where(a > cap, a, 1.0), 1.0)
        if V.is_sparse:
            raise ValueError("use a dense potential for cutoffs")
        return cls(Potential(V.domain, values=f(V.values), label="cutoff"))

    @classmethod
    def from_array(cls, domain: LatticeDomain, arr) -> "CutoffF":
        return cls(Potential(domain, values=np.asarray(arr, dtype=float), label="cutoff"))

    def window(self, lo, shape) -> np.ndarray:
        # sites of a dense cutoff outside its domain never occur in practice;
        # a cutoff of 1 there keeps the construction identical to no cutoff
        out = self.values.window(lo, shape)
        cl = self.values.domain.clip(lo, shape)
        if cl is None or cl != (tuple(lo), tuple(shape)):
            mask = np.zeros(tuple(shape), dtype=bool)
            if cl is not None:
                clo, cshape = cl
                mask[tuple(slice(a - l, a - l + s) for a, l, s in zip(clo, lo, cshape))] = True
            out = np.where(mask, out, 1.0)
        return out


@dataclass(eq=False)
class DeltaCertificate:
    """A trial pair with its ``Delta`` value and the bound it was built to satisfy."""

    phi_plus: TrialFunction
    phi_minus: TrialFunction
    delta: float
    lower_bound_rhs: float | None
    band_edge: float
    gap_plus: float = 0.0  # <phi_+, (H - 2nu) phi_+>
    gap_minus: float = 0.0  # <phi_-, (-H - 2nu) phi_->
    quotient_plus: float = float("nan")
    quotient_minus: float = float("nan")
    witness: str = "plus"

    @property
    def witness_gap(self) -> float:
        """Distance of the better normalized Rayleigh quotient beyond the band edge."""
        gp = self.quotient_plus - self.band_edge
        gm = -self.band_edge - self.quotient_minus
        return gp if self.witness == "plus" else gm

    @property
    def witness_function(self) -> TrialFunction:
        return self.phi_plus if self.witness == "plus" else self.phi_minus

    def sound(self) -> bool:
        """``delta > 0`` must put a Rayleigh quotient outside the band."""
        if self.delta <= 0:
            return True
        return self.quotient_plus > self.band_edge or self.quotient_minus < -self.band_edge

    def to_dict(self) -> dict:
        return {
            "report_type": "delta_certificate",
            "delta": self.delta,
            "lower_bound_rhs": self.lower_bound_rhs,
            "band_edge": self.band_edge,
            "gap_plus": self.gap_plus,
            "gap_minus": self.gap_minus,
            "quotient_plus": self.quotient_plus,
            "quotient_minus": self.quotient_minus,
            "witness": self.witness,
            "phi_plus": self.phi_plus.to_dict()["values"],
            "phi_minus": self.phi_minus.to_dict()["values"],
        }


def _op_of(V_or_op):
    if isinstance(V_or_op, (LatticeOperator, JacobiOperator)):
        return V_or_op
    if isinstance(V_or_op, Potential):
        return LatticeOperator(V_or_op.domain, V_or_op)
    raise TypeError("expected a Potential or an operator")


def _gaps(op, phi_plus, phi_minus):
    edge = op.band_edge
    qp = quadratic_form(op, phi_plus)
    qm = quadratic_form(op, phi_minus)
    gp = qp - edge * phi_plus.norm2()
    gm = -qm - edge * phi_minus.norm2()
    return qp, qm, gp, gm


def delta_functional(phi_plus: TrialFunction, phi_minus: TrialFunction, op) -> float:
    """``<phi_+, (H - 2nu) phi_+> + <phi_-, (-H - 2nu) phi_->``."""
    op = _op_of(op)
    if phi_plus.domain != op.domain or phi_minus.domain != op.domain:
        raise DomainMismatchError("trial functions and operator live on different domains")
    _, _, gp, gm = _gaps(op, phi_plus, phi_minus)
    return gp + gm


def make_certificate(op, phi_plus, phi_minus, rhs=None) -> DeltaCertificate:
    op = _op_of(op)
    qp, qm, gp, gm = _gaps(op, phi_plus, phi_minus)
    np_, nm = phi_plus.norm2(), phi_minus.norm2()
    rq_p = qp / np_ if np_ > 0 else float("nan")
    rq_m = qm / nm if nm > 0 else float("nan")
    edge = op.band_edge
    wp = rq_p - edge if np_ > 0 else -math.inf
    wm = -edge - rq_m if nm > 0 else -math.inf
    return DeltaCertificate(phi_plus, phi_minus, gp + gm, rhs, edge, gp, gm, rq_p, rq_m,
                            "plus" if wp >= wm else "minus")


def trial_pair(phi: TrialFunction, V, F: CutoffF | None = None) -> DeltaCertificate:
    """Pair ``((1 + FV/4nu) phi, U (1 - FV/4nu) phi)`` and its lower bound.

    ``lower_bound_rhs = 2 <phi, (H_0 - 2nu + F V^2 / 4nu) phi>`` and the
    certificate satisfies ``delta >= lower_bound_rhs`` up to rounding.
    """
    op = _op_of(V)
    if phi.domain != op.domain:
        raise DomainMismatchError("trial function and potential live on different domains")
    nu = op.nu
    Vw = op.potential.window(phi.lo, phi.shape)
    Fw = np.ones_like(Vw) if F is None else F.window(phi.lo, phi.shape)
    g = Fw * Vw / (4.0 * nu)
    plus = phi.multiplied(1.0 + g)
    minus = parity_conjugate(phi.multiplied(1.0 - g))
    hop, _ = form_parts(LatticeOperator(op.domain), phi)
    x = phi.values
    rhs = 2.0 * (hop - 2.0 * nu * float(np.sum(x * x)) + float(np.sum(Fw * Vw * Vw * x * x)) / (4.0 * nu))
    return make_certificate(op, plus, minus, rhs)


def jacobi_trial_pair(phi: TrialFunction, J: JacobiOperator) -> DeltaCertificate:
    """Pair ``((1 + gamma b) phi, U (1 - gamma b) phi)`` for a Jacobi matrix.

    ``gamma = 1 / (2 + alpha)`` and the bound is ``2 <phi, (J_1 - 2 + gamma b^2) phi>``
    with ``J_1`` the same couplings and zero diagonal.
    """
    if phi.domain != J.domain:
        raise DomainMismatchError("trial function must live on the Jacobi matrix's half-line")
    gam = J.gamma
    sites = np.arange(phi.lo[0], phi.lo[0] + phi.shape[0])
    bw = J.b[sites - 1]
    plus = phi.multiplied(1.0 + gam * bw)
    minus = parity_conjugate(phi.multiplied(1.0 - gam * bw))
    J1 = J.without_diagonal()
    x = phi.values
    rhs = 2.0 * (quadratic_form(J1, phi) - 2.0 * float(np.sum(x * x)) + gam * float(np.sum(bw * bw * x * x)))
    return make_certificate(J, plus, minus, rhs)


def lemma_witness(phi: TrialFunction, V: Potential):
    """Witness ``psi`` in ``{phi_+, U phi_-}`` and both sides of the normalized bound.

    Returns ``(psi, lhs, rhs)`` with
    ``lhs = |<psi, H psi>| / ||psi||^2 - 2nu`` and
    ``rhs = (<phi, (H_0 + V^2/4nu) phi> / ||phi||^2 - 2nu) / 4``.
    The ``1/4`` comes from ``||psi||^2 <= 4 ||phi||^2``, valid when
    ``|V| <= 4nu`` on the support of ``phi``.  The inequality needs the bracket
    on the right to be nonnegative.
    """
    cert = trial_pair(phi, V)
    op = _op_of(V)
    nu = op.nu
    W = V.map(lambda v: v * v / (4.0 * nu))
    rhs = 0.25 * (quadratic_form(LatticeOperator(op.domain, W), phi) / phi.norm2() - 2.0 * nu)
    best = None
    for psi in (cert.phi_plus, cert.phi_minus):
        n2 = psi.norm2()
        if n2 == 0:
            continue
        val = abs(quadratic_form(op, psi)) / n2 - 2.0 * nu
        if best is None or val > best[1]:
            best = (psi, val)
    return best[0], best[1], rhs


# ---------------------------------------------------------------------------
# test functions


def tent_1d(L1: int, L2: int, center: int = 0, domain: LatticeDomain | None = None) -> TrialFunction:
    """Tent equal to 1 at ``center``, falling linearly to 0 at ``center - L1 - 1`` and ``center + L2 + 1``."""
    if L1 < 1 or L2 < 1:
        raise ValueError("L1 and L2 must be >= 1")
    if domain is None:
        domain = LatticeDomain.whole_line(L1 + 1 - center, L2 + 1 + center)
    k = np.arange(-L1, L2 + 1, dtype=np.float64)
    vals = np.where(k < 0, 1.0 + k / (L1 + 1), 1.0 - k / (L2 + 1))
    return TrialFunction(domain, (center - L1,), vals)


def tent_energy(L1: int, L2: int) -> float:
    """``<phi, (2 - H_0) phi>`` of the tent: ``1/(L1+1) + 1/(L2+1)``."""
    return 1.0 / (L1 + 1) + 1.0 / (L2 + 1)


def log_profile(L: int) -> np.ndarray:
    """Radial values ``phi(r) = -ln((1 + r)/(L + 1)) / ln(L + 1)`` for ``r = 0..L``."""
    r = np.arange(L + 1, dtype=np.float64)
    return -np.log((1.0 + r) / (L + 1.0)) / math.log(L + 1.0)


def log_trial_2d(L: int, center=(0, 0), domain: LatticeDomain | None = None) -> TrialFunction:
    """Logarithmic test function on ``Z^2`` supported in ``|n_1| + |n_2| < L``."""
    if L < 1:
        raise ValueError("L must be >= 1")
    if domain is None:
        domain = LatticeDomain.box([L + 1, L + 1], origin=center)
    prof = log_profile(L)
    k = np.arange(-L, L + 1)
    r = np.abs(k)[:, None] + np.abs(k)[None, :]
    vals = np.where(r <= L, prof[np.minimum(r, L)], 0.0)
    return TrialFunction(domain, (center[0] - L, center[1] - L), vals)


def log_trial_radial(L: int):
    """``(energy, norm2)`` of :func:`log_trial_2d` on the whole plane by shell sums.

    Shell ``r`` (``|n_1| + |n_2| = r``) has ``max(1, 4r)`` sites and is joined
    to shell ``r + 1`` by ``8r + 4`` edges.
    """
    prof = log_profile(L)
    r = np.arange(L + 1, dtype=np.float64)
    shells = np.where(r == 0, 1.0, 4.0 * r)
    edges = 8.0 * r[:-1] + 4.0
    energy = float(np.sum(edges * np.diff(prof) ** 2))
    norm2 = float(np.sum(shells * prof * prof))
    return energy, norm2


def log_limit_integral() -> float:
    """``\\iint_{|x|+|y| <= 1} ln(|x|+|y|)^2 dx dy`` by one-dimensional quadrature (equals 1)."""
    from scipy.integrate import quad

    # the level set |x|+|y| = r has length 4r * sqrt(2), but dx dy = 4r dr
    val, _ = quad(lambda r: 4.0 * r * math.log(r) ** 2, 0.0, 1.0, limit=200)
    return val


def log_limit_integral_2d(n: int = 2000) -> float:
    """Same integral by a midpoint rule in two dimensions (independent cross-check)."""
    h = 1.0 / n
    x = (np.arange(n) + 0.5) * h
    s = x[:, None] + x[None, :]
    f = np.where(s <= 1.0, np.log(s) ** 2, 0.0)
    return float(4.0 * f.sum() * h * h)


# ---------------------------------------------------------------------------
# disjoint families


def _top_eigpair_region(W: Potential, mask: np.ndarray, lo, use_tridiagonal: bool):
    """Top eigenpair of ``H_0 + W`` with Dirichlet conditions off ``mask`` (a window at ``lo``)."""
    shape = mask.shape
    Ww = W.window(lo, shape)
    if use_tridiagonal:
        from scipy.linalg import eigh_tridiagonal

        d = Ww.reshape(-1)
        n = d.size
        if n == 1:
            return float(d[0]), np.ones(1)
        w, v = eigh_tridiagonal(d, np.ones(n - 1), select="i", select_range=(n - 1, n - 1))
        return float(w[0]), v[:, 0]
    idx = -np.ones(shape, dtype=np.int64)
    sites = np.argwhere(mask)
    idx[tuple(sites.T)] = np.arange(len(sites))
    rows, cols = [], []
    for ax in range(len(shape)):
        for step in (-1, 1):
            nb = sites.copy()
            nb[:, ax] += step
            ok = (nb[:, ax] >= 0) & (nb[:, ax] < shape[ax])
            src = np.flatnonzero(ok)
            tgt = idx[tuple(nb[ok].T)]
            keep = tgt >= 0
            rows.append(src[keep])
            cols.append(tgt[keep])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    n = len(sites)
    diag = Ww[tuple(sites.T)]
    if n <= 1500:
        A = np.zeros((n, n))
        A[rows, cols] = 1.0
        A[np.arange(n), np.arange(n)] = diag
        w, v = np.linalg.eigh(A)
        vec = v[:, -1]
        top = float(w[-1])
    else:
        import scipy.sparse as sp
        from scipy.sparse.linalg import eigsh

        A = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n)) + sp.diags(diag)
        w, v = eigsh(A, k=1, which="LA", v0=np.ones(n))
        vec = v[:, 0]
        top = float(w[0])
    out = np.zeros(shape)
    out[tuple(sites.T)] = vec
    return top, out


def disjoint_family(W: Potential, m: int, box_cap: int, start: int = 8, margin: float = 1e-12,
                    center=None) -> list:
    """Finitely supported functions with pairwise support distance >= 2 and quotient > 2 nu.

    Nested boxes ``Lambda_k`` around ``center`` are grown by doubling; each new
    member is the top Dirichlet eigenvector of ``H_0 + W`` on the shell
    between the previous box (plus one site) and the current box.

    Raises :class:`InsufficientSpectrumError` if fewer than ``m`` members are
    found before the box radius exceeds ``box_cap``.
    """
    if m <= 0:
        return []
    if not W.nonnegative:
        raise HypothesisError("W must be nonnegative")
    dom = W.domain
    nu = dom.nu
    edge = 2.0 * nu
    if center is None:
        center = tuple(min(max(0, l), h) for l, h in zip(dom.lo, dom.hi))
    center = tuple(center)
    found = []
    inner = -1  # radius of the last box used (sup-norm around center); -1 = nothing yet
    R = max(start, 1)
    while len(found) < m:
        if R > box_cap:
            raise InsufficientSpectrumError(f"only {len(found)} of {m} trial functions within box_cap={box_cap}",
                                            len(found), found)
        lo = tuple(c - R for c in center)
        shape = tuple(2 * R + 1 for _ in center)
        cl = dom.clip(lo, shape)
        if cl is None:
            raise InsufficientSpectrumError("boxes left the domain", len(found), found)
        wlo, wshape = cl
        coords = np.meshgrid(*[np.arange(a, a + s) for a, s in zip(wlo, wshape)], indexing="ij")
        dist = np.zeros(wshape, dtype=np.int64)
        for c, x in zip(center, coords):
            dist = np.maximum(dist, np.abs(x - c))
        mask = dist >= inner + 2 if inner >= 0 else np.ones(wshape, dtype=bool)
        if not mask.any():
            R *= 2
            continue
        contiguous = nu == 1 and (inner < 0 or dom.kind == "half_line" and center[0] <= dom.lo[0])
        if contiguous and nu == 1:
            sel = np.flatnonzero(mask)
            sub_lo = (wlo[0] + int(sel[0]),)
            sub = np.ones(sel.size, dtype=bool)
            top, vec = _top_eigpair_region(W, sub, sub_lo, True)
            region_lo = sub_lo
        else:
            top, vec = _top_eigpair_region(W, mask, wlo, False)
            region_lo = wlo
        if top > edge + margin:
            vec = vec * (1.0 if vec.sum() >= 0 else -1.0)
            found.append(TrialFunction(dom, region_lo, vec))
            inner = R
            R *= 2
        else:
            R *= 2
            if R > box_cap and (R // 2) < box_cap:
                R = box_cap
    return found


def support_distance(u: TrialFunction, v: TrialFunction) -> int:
    """Smallest l1 distance between the supports (large if either is zero)."""
    a = u.support_sites()
    b = v.support_sites()
    if len(a) == 0 or len(b) == 0:
        return 10 ** 18
    # bounding boxes first: cheap and exact when the boxes are separated along an axis
    best = None
    if len(a) * len(b) <= 4_000_000:
        d = np.abs(a[:, None, :] - b[None, :, :]).sum(axis=2)
        return int(d.min())
    alo, ahi = a.min(0), a.max(0)
    blo, bhi = b.min(0), b.max(0)
    gap = np.maximum(0, np.maximum(blo - ahi, alo - bhi))
    best = int(gap.sum())
    return best


# ---------------------------------------------------------------------------
# moment trial family


@dataclass
class MomentMember:
    m: int
    center: int
    half_width: int
    gap: float  # <phi, (H_0 + V^2/4 - 2) phi> / ||phi||^2
    kinetic: float  # <phi, (2 - H_0) phi>
    potential_term: float  # <phi, V^2/4 phi>
    norm2: float
    domain: LatticeDomain = field(repr=False, default=None)

    @property
    def support(self):
        return (self.center - self.half_width, self.center + self.half_width)

    def trial(self) -> TrialFunction:
        """Materialize the tent (can be large for big ``m``)."""
        return tent_1d(self.half_width, self.half_width, self.center, self.domain)


@dataclass
class MomentFamily:
    decay_C: float
    decay_alpha: float
    p: float
    C1: float
    members: list
    m0: int | None
    fitted_exponent: float | None
    expected_exponent: float
    constants: dict

    def pairs(self):
        """``(trial function, gap)`` pairs."""
        return [(mm.trial(), mm.gap) for mm in self.members]

    def to_dict(self) -> dict:
        return {
            "report_type": "moment_trial_family",
            "decay_C": self.decay_C,
            "decay_alpha": self.decay_alpha,
            "p": self.p,
            "C1": self.C1,
            "m0": self.m0,
            "fitted_exponent": self.fitted_exponent,
            "expected_exponent": self.expected_exponent,
            "constants": dict(self.constants),
            "members": [{"m": mm.m, "center": mm.center, "half_width": mm.half_width, "gap": mm.gap}
                        for mm in self.members],
        }


def _choose_C1(ms: np.ndarray, centers: np.ndarray, p: float) -> float:
    """Largest ``C1`` keeping consecutive supports at distance >= 2.

    At the optimum the tightest gap, normally the one at the smallest ``m``,
    is exactly 2 sites.
    """
    def min_gap(C1):
        h = np.floor(C1 * ms.astype(float) ** p).astype(np.int64)
        if ms.size < 2:
            return 10 ** 9
        return int(((centers[1:] - h[1:]) - (centers[:-1] + h[:-1])).min())

    lo, hi = 0.0, p + 1.0
    if min_gap(lo) < 2:
        raise HypothesisError("centers too close: supports cannot be separated")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if min_gap(mid) >= 2:
            lo = mid
        else:
            hi = mid
    return lo


def moment_trial_family(decay_C: float, decay_alpha: float, p: float, m_max: int,
                        m_min: int = 1) -> MomentFamily:
    """Tents centred at ``m^(p+1)`` of half-width ``floor(C1 m^p)`` for ``V(n) = C n^-alpha``.

    Requires ``alpha (p + 1) < p`` (equivalently ``p > alpha / (1 - alpha)``),
    which makes the potential term beat the kinetic term for large ``m``.
    """
    a = decay_alpha
    if not 0 < a < 1:
        raise HypothesisError("decay exponent must lie in (0, 1)")
    if not a * (p + 1) < p:
        raise HypothesisError(f"need alpha (p + 1) < p, i.e. p > {a / (1 - a):.6g}; got p = {p}")
    if m_max < m_min or m_min < 1:
        raise ValueError("need 1 <= m_min <= m_max")
    ms = np.arange(m_min, m_max + 1)
    centers = np.round(ms.astype(float) ** (p + 1)).astype(np.int64)
    C1 = _choose_C1(ms, centers, p)
    halfw = np.floor(C1 * ms.astype(float) ** p).astype(np.int64)
    if np.any(halfw < 1) or np.any(centers - halfw < 1):
        raise HypothesisError("family too small: some tents are degenerate; increase m_min")
    N = int(centers[-1] + halfw[-1] + 1)
    dom = LatticeDomain.half_line(N)
    members = []
    for m, c, h in zip(ms, centers, halfw):
        k = np.arange(-h, h + 1, dtype=np.float64)
        phi = 1.0 - np.abs(k) / (h + 1.0)
        n = c + k
        kin = 2.0 / (h + 1.0)
        pot = 0.25 * float(np.sum(decay_C ** 2 * n ** (-2.0 * a) * phi * phi))
        nrm = float(np.sum(phi * phi))
        members.append(MomentMember(int(m), int(c), int(h), (pot - kin) / nrm, kin, pot, nrm, dom))
    gaps = np.array([mm.gap for mm in members])
    m0 = None
    neg = np.flatnonzero(gaps <= 0)
    if neg.size == 0:
        m0 = int(ms[0])
    elif neg[-1] + 1 < ms.size:
        m0 = int(ms[neg[-1] + 1])
    expo = -2.0 * a * (p + 1)
    fitted = None
    if m0 is not None:
        sel = ms >= m0
        if sel.sum() >= 3:
            fitted = float(np.polyfit(np.log(ms[sel]), np.log(gaps[sel]), 1)[0])
    msf = ms.astype(float)
    kins = np.array([mm.kinetic for mm in members])
    pots = np.array([mm.potential_term for mm in members])
    norms = np.array([mm.norm2 for mm in members])
    constants = {
        "C2": float(np.max(kins * msf ** p)),
        "C3": float(np.min(pots * msf ** (-expo) / msf ** p)),
        "C4": float(np.min(norms / msf ** p)),
    }
    if m0 is not None:
        sel = ms >= m0
        constants["C5"] = float(np.min(gaps[sel] * msf[sel] ** (-expo)))
    return MomentFamily(decay_C, decay_alpha, p, C1, members, m0, fitted, expo, constants)


def kinetic_form(phi: TrialFunction) -> float:
    """``<phi, (2 nu - H_0) phi>``."""
    return kinetic_energy(phi)

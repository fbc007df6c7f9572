"""Band-edge lattice Green functions for ``nu >= 3`` and Birman-Schwinger tools.

``G_nu(n) = <delta_n, (2nu - H_0)^{-1} delta_0>`` is evaluated by integrating
one momentum axis in closed form,

    (1/2pi) \\int cos(k n) / (a - 2 cos k) dk = z^|n| / sqrt(a^2 - 4),
    z = 2 / (a + sqrt(a^2 - 4)),

and the remaining ``nu - 1`` axes with a midpoint rule (which never samples
the singular point ``k = 0``), extrapolated in the grid spacing.
"""
from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import HypothesisError, LatspecError
from .lattice import LatticeDomain, LatticeOperator, Potential

CACHE_ENV = "LATSPEC_CACHE_DIR"
CACHE_MAGIC = b"LATGREEN"
CACHE_VERSION = 1
_HEADER = struct.Struct("<8sIIII")  # magic, version, nu, resolution, entry count
NONCONVERGENCE_TOL = 1e-4
DEFAULT_RESOLUTION = {3: 1024, 4: 256}


def default_resolution(nu: int) -> int:
    return DEFAULT_RESOLUTION.get(nu, 64)


def richardson_order(nu: int) -> int:
    """Leading error order of the midpoint rule for the reduced integrand."""
    return min(nu - 2, 2)


def canonical_offset(n) -> tuple:
    """Representative of ``n`` under sign flips and permutations (descending ``|n_j|``)."""
    return tuple(sorted((abs(int(x)) for x in n), reverse=True))


def _midpoint_values(nu: int, half_points: int, offsets) -> np.ndarray:
    """Midpoint-rule values for canonical offsets with ``half_points`` nodes on ``[0, pi]``."""
    k = (np.arange(half_points) + 0.5) * (math.pi / half_points)
    s = np.sin(0.5 * k) ** 2
    m = nu - 1
    grid = np.zeros((half_points,) * m)
    for ax in range(m):
        shape = [1] * m
        shape[ax] = half_points
        grid = grid + 4.0 * s.reshape(shape)
    root = np.sqrt(grid * (grid + 4.0))  # sqrt(a^2 - 4) with a = 2 + grid
    z = 2.0 / (2.0 + grid + root)
    inv_root = 1.0 / root
    out = np.empty(len(offsets))
    by_axis = {}
    for i, off in enumerate(offsets):
        by_axis.setdefault(off[0], []).append(i)
    logz = np.log(z)
    for n1, idxs in by_axis.items():
        F = inv_root if n1 == 0 else np.exp(n1 * logz) * inv_root
        for i in idxs:
            T = F
            for nj in reversed(offsets[i][1:]):
                T = T @ np.cos(k * nj) if nj else T.sum(axis=-1)
            out[i] = float(T) / half_points ** m
    return out


@dataclass
class GreenValue:
    value: float
    error_estimate: float
    converged: bool


def green_values(nu: int, offsets, resolution: int | None = None) -> list:
    """:class:`GreenValue` for each offset, extrapolated from ``R`` and ``2R``."""
    if nu < 3:
        raise ValueError("the band-edge Green function is finite only for nu >= 3")
    R = default_resolution(nu) if resolution is None else int(resolution)
    if R < 64 or R % 2:
        raise ValueError("resolution must be an even integer >= 64")
    canon = [canonical_offset(n) for n in offsets]
    for c in canon:
        if len(c) != nu:
            raise ValueError(f"offset {c} does not have {nu} components")
    coarse = _midpoint_values(nu, R // 2, canon)
    fine = _midpoint_values(nu, R, canon)
    p = richardson_order(nu)
    corr = (fine - coarse) / (2.0 ** p - 1.0)
    return [GreenValue(float(f + c), float(abs(c)), bool(abs(f - g) <= NONCONVERGENCE_TOL))
            for f, g, c in zip(fine, coarse, corr)]


def green_function(nu: int, n, resolution: int | None = None) -> float:
    """``G_nu(n)`` by quadrature; see :func:`green_values` for the error estimate."""
    return green_values(nu, [n], resolution)[0].value


# ---------------------------------------------------------------------------
# independent oracles


def return_probabilities(nu: int, steps: int) -> np.ndarray:
    """``P(simple random walk on Z^nu is at 0 after k steps)`` for ``k = 0..steps``.

    Built one dimension at a time: each step moves along the new axis with
    probability ``1/d``, mixing the new axis' 1-d law with the old ``(d-1)``-dim
    return probabilities binomially.
    """
    from scipy.special import gammaln
    from scipy.stats import binom

    k = np.arange(steps + 1)
    one = np.zeros(steps + 1)
    ev = k[::2]
    one[::2] = np.exp(gammaln(ev + 1) - 2 * gammaln(ev // 2 + 1) - ev * math.log(2.0))
    p = one.copy()
    for d in range(2, nu + 1):
        q = np.zeros(steps + 1)
        for t in range(0, steps + 1, 2):
            j = np.arange(0, t + 1, 2)  # steps along the new axis (even, or no return)
            q[t] = float(np.sum(binom.pmf(j, t, 1.0 / d) * one[j] * p[t - j]))
        p = q
    return p


def green_zero_random_walk(nu: int, steps: int = 4000, fit_points: int = 400) -> float:
    """``G_nu(0) = (2nu)^-1 sum_k P(return at k)`` with a fitted power-law tail.

    The even-step return probabilities behave like ``(A + B/m) m^(-nu/2)``
    with ``m = k/2``; the tail beyond ``steps`` is summed with Hurwitz zeta
    functions after fitting ``A`` and ``B`` on the last ``fit_points`` terms.
    """
    from scipy.special import zeta

    p = return_probabilities(nu, steps)
    pe = p[::2]
    M = pe.size - 1
    m = np.arange(M - fit_points + 1, M + 1, dtype=float)
    y = pe[-fit_points:]
    X = np.stack([m ** (-nu / 2), m ** (-nu / 2 - 1)], axis=1)
    (A, B), *_ = np.linalg.lstsq(X, y, rcond=None)
    tail = A * zeta(nu / 2, M + 1) + B * zeta(nu / 2 + 1, M + 1)
    return float((pe.sum() + tail) / (2.0 * nu))


def green_function_bessel(nu: int, n) -> float:
    """``G_nu(n) = \\int_0^inf prod_j e^{-2t} I_{n_j}(2t) dt`` by adaptive quadrature."""
    from scipy.integrate import quad
    from scipy.special import ive

    n = [abs(int(x)) for x in n]

    def f(t):
        return float(np.prod([ive(nj, 2.0 * t) for nj in n]))

    total = 0.0
    edges = [0.0, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6]
    for a, b in zip(edges[:-1], edges[1:]):
        v, _ = quad(f, a, b, limit=400, epsabs=1e-14, epsrel=1e-12)
        total += v
    # beyond T the integrand is (4 pi t)^{-nu/2} (1 + O(1/t))
    T = edges[-1]
    total += (4.0 * math.pi) ** (-nu / 2) * T ** (1 - nu / 2) / (nu / 2 - 1)
    return total


# ---------------------------------------------------------------------------
# tables and cache


def cache_dir() -> Path:
    d = os.environ.get(CACHE_ENV)
    return Path(d) if d else Path.home() / ".cache" / "latspec"


@dataclass
class GreenTable:
    """``G_nu`` on canonical offsets, filled on demand."""

    nu: int
    quadrature_resolution: int
    entries: dict = field(default_factory=dict)  # canonical offset -> value
    errors: dict = field(default_factory=dict)
    nonconverged: set = field(default_factory=set)

    def __post_init__(self):
        if self.nu < 3:
            raise ValueError("GreenTable needs nu >= 3")

    @property
    def error_estimate(self) -> float:
        return max(self.errors.values(), default=0.0)

    def __len__(self):
        return len(self.entries)

    def ensure(self, offsets) -> None:
        need = sorted({canonical_offset(n) for n in offsets} - self.entries.keys())
        if not need:
            return
        for off, gv in zip(need, green_values(self.nu, need, self.quadrature_resolution)):
            self.entries[off] = gv.value
            self.errors[off] = gv.error_estimate
            if not gv.converged:
                self.nonconverged.add(off)

    def __call__(self, n) -> float:
        c = canonical_offset(n)
        if c not in self.entries:
            self.ensure([c])
        return self.entries[c]

    def fill_box(self, radius: int) -> "GreenTable":
        """All offsets with ``max |n_j| <= radius``."""
        import itertools

        offs = [c for c in itertools.combinations_with_replacement(range(radius, -1, -1), self.nu)]
        self.ensure(offs)
        return self

    def fill_axis(self, length: int) -> "GreenTable":
        self.ensure([(d,) + (0,) * (self.nu - 1) for d in range(length + 1)])
        return self

    def column(self, radius: int) -> np.ndarray:
        """Dense array of ``G_nu(n)`` on ``[-radius, radius]^nu``."""
        self.fill_box(radius)
        r = np.arange(-radius, radius + 1)
        grids = np.meshgrid(*([r] * self.nu), indexing="ij")
        absg = np.sort(np.abs(np.stack([g.ravel() for g in grids], axis=1)), axis=1)[:, ::-1]
        vals = np.array([self.entries[tuple(int(x) for x in row)] for row in absg])
        return vals.reshape((2 * radius + 1,) * self.nu)

    # -- persistence

    def path(self, directory: Path | None = None) -> Path:
        return (directory or cache_dir()) / f"green_nu{self.nu}_R{self.quadrature_resolution}.bin"

    def save(self, path: Path | None = None) -> Path:
        path = Path(path) if path else self.path()
        path.parent.mkdir(parents=True, exist_ok=True)
        rec = struct.Struct(f"<{self.nu}idd")
        keys = sorted(self.entries)
        buf = bytearray(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, self.nu, self.quadrature_resolution, len(keys)))
        for k in keys:
            buf += rec.pack(*k, self.entries[k], self.errors.get(k, 0.0))
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(bytes(buf))
        os.replace(tmp, path)
        return path

    @classmethod
    def load(cls, path) -> "GreenTable":
        data = Path(path).read_bytes()
        magic, version, nu, res, count = _HEADER.unpack_from(data, 0)
        if magic != CACHE_MAGIC:
            raise LatspecError(f"{path}: not a Green table cache")
        if version != CACHE_VERSION:
            raise LatspecError(f"{path}: cache version {version}, expected {CACHE_VERSION}")
        rec = struct.Struct(f"<{nu}idd")
        if len(data) != _HEADER.size + count * rec.size:
            raise LatspecError(f"{path}: truncated cache file")
        t = cls(nu, res)
        for i in range(count):
            *off, val, err = rec.unpack_from(data, _HEADER.size + i * rec.size)
            t.entries[tuple(off)] = val
            t.errors[tuple(off)] = err
            if err * (2.0 ** richardson_order(nu) - 1.0) > NONCONVERGENCE_TOL:
                t.nonconverged.add(tuple(off))
        return t

    @classmethod
    def load_or_create(cls, nu: int, resolution: int | None = None, radius: int = 0,
                       axis_length: int = 0, directory: Path | None = None,
                       persist: bool = True) -> "GreenTable":
        """Load the cached table for ``(nu, resolution)``, extend it as requested, save back."""
        res = default_resolution(nu) if resolution is None else int(resolution)
        t = cls(nu, res)
        p = t.path(directory)
        if p.exists():
            try:
                t = cls.load(p)
            except (LatspecError, struct.error):
                t = cls(nu, res)
        before = len(t)
        t.fill_box(radius)
        if axis_length:
            t.fill_axis(axis_length)
        if persist and len(t) != before:
            try:
                t.save(p)
            except OSError:
                pass
        return t

    def csv_rows(self):
        for k in sorted(self.entries):
            yield {**{f"n{j + 1}": k[j] for j in range(self.nu)},
                   "value": self.entries[k], "error": self.errors.get(k, 0.0)}

    def csv_columns(self):
        return [f"n{j + 1}" for j in range(self.nu)] + ["value", "error"]

    def to_dict(self) -> dict:
        return {
            "report_type": "green_table",
            "nu": self.nu,
            "quadrature_resolution": self.quadrature_resolution,
            "error_estimate": self.error_estimate,
            "nonconverged": [list(k) for k in sorted(self.nonconverged)],
            "entries": [{"offset": list(k), "value": self.entries[k], "error": self.errors.get(k, 0.0)}
                        for k in sorted(self.entries)],
        }


def stencil_residual(table: GreenTable, radius: int) -> np.ndarray:
    """``(2nu - H_0) G - delta_0`` on the interior of ``[-radius, radius]^nu``."""
    G = table.column(radius)
    nu = table.nu
    inner = tuple(slice(1, -1) for _ in range(nu))
    res = 2.0 * nu * G[inner]
    for ax in range(nu):
        for sh in (slice(0, -2), slice(2, None)):
            idx = [slice(1, -1)] * nu
            idx[ax] = sh
            res = res - G[tuple(idx)]
    res[(radius - 1,) * nu] -= 1.0
    return res


# ---------------------------------------------------------------------------
# Birman-Schwinger


@dataclass
class BSMatrix:
    sites: list
    entries: np.ndarray
    schur_bound: float

    def spectral_radius(self) -> float:
        if not self.sites:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvalsh(self.entries))))

    def to_dict(self) -> dict:
        return {
            "report_type": "bs_matrix",
            "sites": [list(s) for s in self.sites],
            "entries": self.entries.tolist(),
            "schur_bound": self.schur_bound,
        }


def birman_schwinger(V: Potential, table: GreenTable) -> BSMatrix:
    """``M_nm = V(n)^1/2 G_nu(n - m) V(m)^1/2`` over the support of ``V``."""
    if V.domain.nu != table.nu:
        raise ValueError("potential and table dimensions differ")
    supp = V.support()
    if any(v < 0 for _, v in supp):
        raise HypothesisError("Birman-Schwinger construction needs V >= 0")
    sites = [tuple(int(x) for x in s) for s, _ in supp]
    if not sites:
        return BSMatrix([], np.zeros((0, 0)), 0.0)
    root = np.sqrt([v for _, v in supp])
    arr = np.array(sites)
    diffs = [tuple(arr[i] - arr[j]) for i in range(len(sites)) for j in range(len(sites))]
    table.ensure(diffs)
    G = np.array([table(d) for d in diffs]).reshape(len(sites), len(sites))
    M = root[:, None] * G * root[None, :]
    return BSMatrix(sites, M, float(np.max(np.abs(M).sum(axis=1))))


def critical_coupling(table: GreenTable) -> float:
    """Largest single-site coupling allowed by ``lambda G_nu(0) < 1/2``."""
    return 0.5 / table((0,) * table.nu)


@dataclass
class Counterexample:
    potential: Potential
    sites: list
    coupling: float
    bs: BSMatrix
    pair_sum: float  # sum over j != k of G(n_j - n_k)

    def to_dict(self) -> dict:
        return {
            "report_type": "bs_counterexample",
            "sites": [list(s) for s in self.sites],
            "coupling": self.coupling,
            "schur_bound": self.bs.schur_bound,
            "pair_sum": self.pair_sum,
        }


def place_sites(nu: int, site_count: int, table: GreenTable, max_gap: int = 100000) -> list:
    """Greedy sites on the first axis with ``sum_{j<k} G(n_j - n_k) < 2^(-k-2)``."""
    xs = [0]
    filled = 64
    table.fill_axis(filled)
    for k in range(2, site_count + 1):
        bound = 2.0 ** (-k - 2)
        x = xs[-1] + 1
        while True:
            if x - xs[-1] > max_gap:
                raise LatspecError("site placement did not terminate")
            if x > filled:
                filled *= 2
                table.fill_axis(filled)
            if sum(table((x - xj,) + (0,) * (nu - 1)) for xj in xs) < bound:
                break
            x += 1
        xs.append(x)
    return [(x,) + (0,) * (nu - 1) for x in xs]


def sparse_counterexample(nu: int, site_count: int, lam: float, table: GreenTable | None = None,
                          domain: LatticeDomain | None = None) -> Counterexample:
    """Non-decaying sparse ``V >= 0`` whose Birman-Schwinger kernel has Schur bound < 1."""
    if site_count < 1:
        raise ValueError("site_count must be >= 1")
    table = table if table is not None else GreenTable.load_or_create(nu)
    g0 = table((0,) * nu)
    if lam * g0 >= 0.5:
        raise HypothesisError(f"lambda G(0) = {lam * g0:.6g} >= 1/2; need lambda < {0.5 / g0:.12g}")
    sites = place_sites(nu, site_count, table)
    if domain is None:
        span = sites[-1][0]
        domain = LatticeDomain.window((-10,) + (-10,) * (nu - 1), (span + 21,) + (21,) * (nu - 1))
    val = min(1.0, lam)
    V = Potential.from_sites(domain, [(s, val) for s in sites], label="sparse-3d")
    bs = birman_schwinger(V, table)
    arr = np.array(sites)
    pair = sum(table(tuple(arr[i] - arr[j])) for i in range(len(sites)) for j in range(len(sites)) if i != j)
    return Counterexample(V, sites, val, bs, float(pair))


# ---------------------------------------------------------------------------
# power iteration


@dataclass
class PowerIterationResult:
    estimate: float
    iterations: int
    converged: bool


def operator_norm_power_iteration(op: LatticeOperator, shift: float | None = None, iters: int = 20000,
                                  seed: int = 0, tol: float = 1e-10) -> PowerIterationResult:
    """Top eigenvalue of ``op`` on a finite box by power iteration on ``op + shift``.

    The Rayleigh quotient of the iterate never exceeds the true top eigenvalue.
    """
    if shift is None:
        shift = op.band_edge + op.potential.max_abs
    A = op.sparse_matrix()
    rng = np.random.default_rng(seed)
    x = rng.random(A.shape[0]) + 0.5  # positive start overlaps the Perron vector
    x /= np.linalg.norm(x)
    prev = -math.inf
    est = prev
    for it in range(1, iters + 1):
        y = A @ x + shift * x
        est = float(x @ y) - shift
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return PowerIterationResult(-shift, it, True)
        x = y / nrm
        if abs(est - prev) < tol:
            return PowerIterationResult(est, it, True)
        prev = est
    return PowerIterationResult(est, iters, False)


def free_box_top(shape) -> float:
    """Largest Dirichlet eigenvalue of ``H_0`` on a box: ``sum_j 2 cos(pi/(L_j + 1))``."""
    return float(sum(2.0 * math.cos(math.pi / (L + 1)) for L in shape))

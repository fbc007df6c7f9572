"""Lattice domains, potentials, operators and finitely supported vectors.

Everything here acts on finite Dirichlet truncations: sites outside a domain
are treated as zero.  A half-line of size ``N`` holds the sites ``1..N`` (the
site ``0`` is the implicit zero boundary), a whole-line window holds
``-N1..N2``, and a box is a product of integer intervals indexed row-major.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainMismatchError, SpecError

DENSE_CAP = 50_000_000


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class LatticeDomain:
    """A finite window of ``Z^nu`` with Dirichlet boundary.

    Parameters
    ----------
    kind : {"half_line", "whole_line", "box"}
    lo : tuple of int
        Smallest coordinate along each axis.
    shape : tuple of int
        Number of sites along each axis.
    """

    kind: str
    lo: tuple
    shape: tuple
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.kind not in ("half_line", "whole_line", "box"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        lo = tuple(int(x) for x in self.lo)
        shape = tuple(int(x) for x in self.shape)
        if len(lo) != len(shape) or not shape:
            raise ValueError("lo and shape must have the same positive length")
        if any(s <= 0 for s in shape):
            raise ValueError("site counts must be positive")
        if self.kind != "box" and len(shape) != 1:
            raise ValueError(f"{self.kind} domains are one-dimensional")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def half_line(cls, N: int) -> "LatticeDomain":
        """Sites ``1..N``."""
        return cls("half_line", (1,), (N,))

    @classmethod
    def whole_line(cls, N1: int, N2: int | None = None) -> "LatticeDomain":
        """Sites ``-N1..N2``."""
        N2 = N1 if N2 is None else N2
        return cls("whole_line", (-N1,), (N1 + N2 + 1,))

    @classmethod
    def box(cls, half_widths: Sequence[int] | int, nu: int | None = None,
            origin: Sequence[int] | None = None) -> "LatticeDomain":
        """Box ``prod_j [origin_j - h_j, origin_j + h_j]``."""
        if isinstance(half_widths, (int, np.integer)):
            half_widths = [int(half_widths)] * (nu or 1)
        h = [int(x) for x in half_widths]
        if any(x < 0 for x in h):
            raise ValueError("half-widths must be nonnegative")
        o = [0] * len(h) if origin is None else [int(x) for x in origin]
        return cls("box", tuple(oj - hj for oj, hj in zip(o, h)), tuple(2 * hj + 1 for hj in h))

    @classmethod
    def window(cls, lo: Sequence[int], shape: Sequence[int]) -> "LatticeDomain":
        """Box with explicit corner and extent."""
        return cls("box", tuple(lo), tuple(shape))

    @property
    def nu(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def hi(self) -> tuple:
        """Largest coordinate along each axis (inclusive)."""
        return tuple(l + s - 1 for l, s in zip(self.lo, self.shape))

    @property
    def band_edge(self) -> float:
        return 2.0 * self.nu

    def contains(self, site) -> bool:
        site = _as_site(site, self.nu)
        return all(l <= x <= h for x, l, h in zip(site, self.lo, self.hi))

    def index(self, site) -> int:
        """Row-major linear index of ``site``."""
        site = _as_site(site, self.nu)
        if not self.contains(site):
            raise IndexError(f"site {site} outside domain")
        idx = 0
        for x, l, s in zip(site, self.lo, self.shape):
            idx = idx * s + (x - l)
        return idx

    def site(self, index: int) -> tuple:
        """Inverse of :meth:`index`."""
        if not 0 <= index < self.size:
            raise IndexError(index)
        out = []
        for l, s in zip(reversed(self.lo), reversed(self.shape)):
            index, r = divmod(index, s)
            out.append(l + r)
        return tuple(reversed(out))

    def axis_coords(self, axis: int = 0, lo=None, n=None) -> np.ndarray:
        lo = self.lo[axis] if lo is None else lo
        n = self.shape[axis] if n is None else n
        return np.arange(lo, lo + n, dtype=np.int64)

    def clip(self, lo, shape):
        """Intersect a window with the domain; returns ``(lo, shape)`` or ``None``."""
        nlo, nshape = [], []
        for a, s, dl, dh in zip(lo, shape, self.lo, self.hi):
            a2 = max(a, dl)
            b2 = min(a + s - 1, dh)
            if b2 < a2:
                return None
            nlo.append(a2)
            nshape.append(b2 - a2 + 1)
        return tuple(nlo), tuple(nshape)

    def to_dict(self) -> dict:
        if self.kind == "half_line":
            return {"kind": "half_line", "N": self.shape[0]}
        if self.kind == "whole_line":
            return {"kind": "whole_line", "N1": -self.lo[0], "N2": self.hi[0]}
        return {"kind": "box", "lo": list(self.lo), "shape": list(self.shape)}


def _as_site(site, nu):
    if isinstance(site, (int, np.integer)):
        site = (int(site),)
    site = tuple(int(x) for x in site)
    if len(site) != nu:
        raise ValueError(f"site {site} has wrong dimension for nu={nu}")
    return site


def parity_signs(lo: Sequence[int], shape: Sequence[int]) -> np.ndarray:
    """``(-1)^{|n_1|+...+|n_nu|}`` on a window, as a float array."""
    total = np.zeros(tuple(shape), dtype=np.int64)
    for ax, (l, s) in enumerate(zip(lo, shape)):
        c = np.abs(np.arange(l, l + s, dtype=np.int64)) % 2
        sh = [1] * len(shape)
        sh[ax] = s
        total = total + c.reshape(sh)
    return np.where(total % 2 == 0, 1.0, -1.0)


def _grid_coords(lo, shape):
    """Coordinate arrays broadcastable over a window."""
    out = []
    for ax, (l, s) in enumerate(zip(lo, shape)):
        sh = [1] * len(shape)
        sh[ax] = s
        out.append(np.arange(l, l + s, dtype=np.int64).reshape(sh))
    return out


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True, eq=False)
class Potential:
    """A real site function on a domain.

    Storage is dense (``values`` with the domain's shape) or sparse
    (``sparse``: sorted tuple of ``(site, value)``).  A potential built from a
    formula also keeps ``rule`` so it can be regenerated on a larger domain.
    """

    domain: LatticeDomain
    values: np.ndarray | None = None
    sparse: tuple | None = None
    rule: Callable | None = field(default=None, repr=False)
    label: str = "custom"

    def __post_init__(self):
        if (self.values is None) == (self.sparse is None):
            raise ValueError("exactly one of values/sparse must be given")
        if self.values is not None:
            v = np.array(self.values, dtype=np.float64)
            if v.shape != self.domain.shape:
                v = v.reshape(self.domain.shape)
            if not np.all(np.isfinite(v)):
                raise ValueError("potential values must be finite")
            v.setflags(write=False)
            object.__setattr__(self, "values", v)
        else:
            items = []
            for site, val in self.sparse:
                site = _as_site(site, self.domain.nu)
                val = float(val)
                if not math.isfinite(val):
                    raise ValueError("potential values must be finite")
                if not self.domain.contains(site):
                    raise ValueError(f"support site {site} outside domain")
                if val != 0.0:
                    items.append((site, val))
            items.sort()
            object.__setattr__(self, "sparse", tuple(items))

    # constructors -----------------------------------------------------------
    @classmethod
    def zero(cls, domain: LatticeDomain) -> "Potential":
        return cls(domain, sparse=(), rule=lambda *c: np.zeros(np.broadcast(*c).shape), label="zero")

    @classmethod
    def from_sequence(cls, values, domain: LatticeDomain | None = None, label="custom") -> "Potential":
        """Half-line potential from ``V(1), ..., V(N)`` (or any dense array)."""
        values = np.asarray(values, dtype=np.float64)
        if domain is None:
            domain = LatticeDomain.half_line(values.size)
        return cls(domain, values=values, label=label)

    @classmethod
    def from_rule(cls, domain: LatticeDomain, rule: Callable, label="rule") -> "Potential":
        """Dense potential ``V(n) = rule(n_1, ..., n_nu)`` evaluated on the domain."""
        coords = _grid_coords(domain.lo, domain.shape)
        vals = np.broadcast_to(np.asarray(rule(*coords), dtype=np.float64), domain.shape)
        return cls(domain, values=np.array(vals), rule=rule, label=label)

    @classmethod
    def from_sites(cls, domain: LatticeDomain, items: Iterable, label="sparse") -> "Potential":
        return cls(domain, sparse=tuple(items), label=label)

    # queries ----------------------------------------------------------------
    @property
    def is_sparse(self) -> bool:
        return self.sparse is not None

    @property
    def nonnegative(self) -> bool:
        if self.is_sparse:
            return all(v >= 0 for _, v in self.sparse)
        return bool(np.all(self.values >= 0))

    @property
    def max_abs(self) -> float:
        if self.is_sparse:
            return max((abs(v) for _, v in self.sparse), default=0.0)
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def at(self, site) -> float:
        site = _as_site(site, self.domain.nu)
        if not self.domain.contains(site):
            return 0.0
        if self.is_sparse:
            for s, v in self.sparse:
                if s == site:
                    return v
            return 0.0
        return float(self.values[tuple(x - l for x, l in zip(site, self.domain.lo))])

    def dense(self) -> np.ndarray:
        """Values on the whole domain as an array of the domain's shape."""
        if not self.is_sparse:
            return self.values
        if self.domain.size > DENSE_CAP:
            raise MemoryError(f"domain of {self.domain.size} sites too large for dense storage")
        out = np.zeros(self.domain.shape)
        for site, v in self.sparse:
            out[tuple(x - l for x, l in zip(site, self.domain.lo))] = v
        return out

    def sequence(self) -> np.ndarray:
        """``V(1..N)`` for a one-dimensional potential (flattened dense values)."""
        return self.dense().reshape(-1)

    def support(self) -> list:
        """Sorted ``(site, value)`` pairs with nonzero value."""
        if self.is_sparse:
            return list(self.sparse)
        idx = np.argwhere(self.values != 0)
        lo = np.array(self.domain.lo)
        return [(tuple(int(x) for x in (i + lo)), float(self.values[tuple(i)])) for i in idx]

    def window(self, lo, shape) -> np.ndarray:
        """Values on a window (zero outside the domain)."""
        lo = tuple(lo)
        shape = tuple(shape)
        out = np.zeros(shape)
        if self.is_sparse:
            for site, v in self.sparse:
                rel = tuple(x - l for x, l in zip(site, lo))
                if all(0 <= r < s for r, s in zip(rel, shape)):
                    out[rel] = v
            return out
        cl = self.domain.clip(lo, shape)
        if cl is None:
            return out
        clo, cshape = cl
        src = tuple(slice(a - d, a - d + s) for a, d, s in zip(clo, self.domain.lo, cshape))
        dst = tuple(slice(a - l, a - l + s) for a, l, s in zip(clo, lo, cshape))
        out[dst] = self.values[src]
        return out

    # transformations --------------------------------------------------------
    def map(self, f: Callable[[np.ndarray], np.ndarray], label=None) -> "Potential":
        """Apply a sitewise function with ``f(0) == 0`` (for example ``V**2/4``)."""
        rule = None
        if self.rule is not None:
            base = self.rule
            rule = lambda *c: f(np.asarray(base(*c), dtype=np.float64))  # noqa: E731
        if self.is_sparse:
            items = [(s, float(f(np.float64(v)))) for s, v in self.sparse]
            return Potential(self.domain, sparse=tuple(items), rule=rule, label=label or self.label)
        return Potential(self.domain, values=f(self.values), rule=rule, label=label or self.label)

    def scaled(self, c: float) -> "Potential":
        return self.map(lambda v: c * v)

    def __neg__(self) -> "Potential":
        return self.map(lambda v: -v)

    def resize(self, domain: LatticeDomain | int) -> "Potential":
        """The same potential on another domain.

        A potential with a ``rule`` is re-evaluated; otherwise sites outside the
        original domain get the value zero (compact support is assumed).
        """
        if isinstance(domain, (int, np.integer)):
            if self.domain.kind != "half_line":
                raise ValueError("integer resize only applies to half-line domains")
            domain = LatticeDomain.half_line(int(domain))
        if domain.nu != self.domain.nu:
            raise DomainMismatchError("cannot resize across dimensions")
        if self.rule is not None and not self.is_sparse:
            return Potential.from_rule(domain, self.rule, label=self.label)
        if self.is_sparse:
            items = [(s, v) for s, v in self.sparse if domain.contains(s)]
            return Potential(domain, sparse=tuple(items), rule=self.rule, label=self.label)
        return Potential(domain, values=self.window(domain.lo, domain.shape), label=self.label)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "domain": self.domain.to_dict(),
            "support": [[list(s), v] for s, v in self.support()],
        }


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True, eq=False)
class LatticeOperator:
    """``H = H_0 + V`` on a Dirichlet window of ``Z^nu``."""

    domain: LatticeDomain
    potential: Potential | None = None

    def __post_init__(self):
        if self.potential is None:
            object.__setattr__(self, "potential", Potential.zero(self.domain))
        elif self.potential.domain != self.domain:
            raise DomainMismatchError("potential and operator domains differ")

    @classmethod
    def free(cls, domain: LatticeDomain) -> "LatticeOperator":
        return cls(domain)

    @property
    def nu(self) -> int:
        return self.domain.nu

    @property
    def band_edge(self) -> float:
        return 2.0 * self.nu

    def with_potential(self, V: Potential) -> "LatticeOperator":
        return LatticeOperator(self.domain, V)

    def tridiagonal(self):
        """Diagonal and off-diagonal of a one-dimensional operator."""
        if self.nu != 1:
            raise ValueError("tridiagonal form exists only for nu = 1")
        d = self.potential.sequence().astype(np.float64)
        return d, np.ones(d.size - 1)

    def dense_matrix(self) -> np.ndarray:
        """Full symmetric matrix (row-major site order)."""
        n = self.domain.size
        if n > 20_000:
            raise MemoryError("dense matrix too large")
        A = np.zeros((n, n))
        idx = np.arange(n).reshape(self.domain.shape)
        for ax in range(self.nu):
            a = np.take(idx, range(0, self.domain.shape[ax] - 1), axis=ax).ravel()
            b = np.take(idx, range(1, self.domain.shape[ax]), axis=ax).ravel()
            A[a, b] = 1.0
            A[b, a] = 1.0
        A[np.arange(n), np.arange(n)] = self.potential.dense().ravel()
        return A

    def sparse_matrix(self):
        """Same as :meth:`dense_matrix` in CSR format (scipy)."""
        import scipy.sparse as sp

        n = self.domain.size
        idx = np.arange(n).reshape(self.domain.shape)
        rows, cols = [], []
        for ax in range(self.nu):
            a = np.take(idx, range(0, self.domain.shape[ax] - 1), axis=ax).ravel()
            b = np.take(idx, range(1, self.domain.shape[ax]), axis=ax).ravel()
            rows += [a, b]
            cols += [b, a]
        rows = np.concatenate(rows) if rows else np.zeros(0, int)
        cols = np.concatenate(cols) if cols else np.zeros(0, int)
        off = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
        return off + sp.diags(self.potential.dense().ravel())


@dataclass(frozen=True, eq=False)
class JacobiOperator:
    """Half-line Jacobi matrix on sites ``1..N``.

    ``a[i]`` couples sites ``i+1`` and ``i+2`` (length ``N-1``), ``b[i]`` is
    the diagonal at site ``i+1``.
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=np.float64).reshape(-1)
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        if b.size < 1 or a.size != b.size - 1:
            raise ValueError("need len(a) == len(b) - 1 >= 0")
        if np.any(a <= 0):
            raise ValueError("off-diagonal entries must be positive")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("entries must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def free_with_diagonal(cls, b) -> "JacobiOperator":
        b = np.asarray(b, dtype=np.float64)
        return cls(np.ones(b.size - 1), b)

    @property
    def N(self) -> int:
        return self.b.size

    @property
    def domain(self) -> LatticeDomain:
        return LatticeDomain.half_line(self.N)

    @property
    def alpha(self) -> float:
        """Largest sum of two consecutive couplings in the stored window."""
        if self.a.size == 0:
            return 0.0
        if self.a.size == 1:
            return float(self.a[0])
        return float(np.max(self.a[:-1] + self.a[1:]))

    @property
    def gamma(self) -> float:
        return 1.0 / (2.0 + self.alpha)

    @property
    def band_edge(self) -> float:
        return 2.0

    def without_diagonal(self) -> "JacobiOperator":
        return JacobiOperator(self.a, np.zeros_like(self.b))

    def with_diagonal(self, b) -> "JacobiOperator":
        return JacobiOperator(self.a, b)

    def tridiagonal(self):
        return np.array(self.b), np.array(self.a)


# ---------------------------------------------------------------------------
# trial functions


@dataclass(frozen=True, eq=False)
class TrialFunction:
    """Finitely supported vector stored on a window ``[lo, lo + shape)``."""

    domain: LatticeDomain
    lo: tuple
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim == 0:
            v = v.reshape((1,) * self.domain.nu)
        lo = _as_site(self.lo, self.domain.nu)
        if v.ndim != self.domain.nu:
            raise ValueError("values must have one axis per lattice dimension")
        cl = self.domain.clip(lo, v.shape)
        if v.size and (cl is None or cl != (lo, v.shape)):
            raise ValueError("trial function window extends outside its domain")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "lo", lo)

    @classmethod
    def delta(cls, domain: LatticeDomain, site, value: float = 1.0) -> "TrialFunction":
        site = _as_site(site, domain.nu)
        return cls(domain, site, np.full((1,) * domain.nu, float(value)))

    @classmethod
    def from_dense(cls, domain: LatticeDomain, arr) -> "TrialFunction":
        arr = np.asarray(arr, dtype=np.float64).reshape(domain.shape)
        return cls(domain, domain.lo, arr)

    @classmethod
    def from_dict(cls, domain: LatticeDomain, mapping: Mapping) -> "TrialFunction":
        sites = [_as_site(s, domain.nu) for s in mapping]
        if not sites:
            return cls(domain, domain.lo, np.zeros((0,) * domain.nu))
        lo = tuple(min(s[a] for s in sites) for a in range(domain.nu))
        hi = tuple(max(s[a] for s in sites) for a in range(domain.nu))
        arr = np.zeros(tuple(h - l + 1 for l, h in zip(lo, hi)))
        for s, v in zip(sites, mapping.values()):
            arr[tuple(x - l for x, l in zip(s, lo))] = v
        return cls(domain, lo, arr)

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def hi(self) -> tuple:
        return tuple(l + s - 1 for l, s in zip(self.lo, self.shape))

    def norm2(self) -> float:
        return float(np.sum(self.values * self.values))

    def at(self, site) -> float:
        site = _as_site(site, self.domain.nu)
        rel = tuple(x - l for x, l in zip(site, self.lo))
        if all(0 <= r < s for r, s in zip(rel, self.shape)):
            return float(self.values[rel])
        return 0.0

    def embed(self, lo, shape) -> np.ndarray:
        """Values on another window (zero outside this function's window)."""
        out = np.zeros(tuple(shape))
        src, dst = [], []
        for a, s, b, t in zip(self.lo, self.shape, lo, shape):
            x0, x1 = max(a, b), min(a + s, b + t)
            if x1 <= x0:
                return out
            src.append(slice(x0 - a, x1 - a))
            dst.append(slice(x0 - b, x1 - b))
        out[tuple(dst)] = self.values[tuple(src)]
        return out

    def dense(self) -> np.ndarray:
        return self.embed(self.domain.lo, self.domain.shape)

    def support_bounds(self):
        """Tight ``(lo, hi)`` of the nonzero entries, or ``None`` if zero."""
        nz = np.argwhere(self.values != 0)
        if nz.size == 0:
            return None
        lo = tuple(int(x) + l for x, l in zip(nz.min(axis=0), self.lo))
        hi = tuple(int(x) + l for x, l in zip(nz.max(axis=0), self.lo))
        return lo, hi

    def support_sites(self) -> np.ndarray:
        """Coordinates of nonzero entries, shape ``(k, nu)``."""
        return np.argwhere(self.values != 0) + np.array(self.lo)

    def as_dict(self) -> dict:
        return {tuple(int(x) for x in s): float(self.values[tuple(s - np.array(self.lo))])
                for s in self.support_sites()}

    def grown(self, width: int = 1) -> "TrialFunction":
        """Zero-padded copy whose window is larger by ``width`` (clipped to the domain)."""
        lo = tuple(l - width for l in self.lo)
        shape = tuple(s + 2 * width for s in self.shape)
        lo, shape = self.domain.clip(lo, shape)
        return TrialFunction(self.domain, lo, self.embed(lo, shape))

    def _combine(self, other: "TrialFunction", op) -> "TrialFunction":
        if other.domain != self.domain:
            raise DomainMismatchError("trial functions on different domains")
        lo = tuple(min(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(max(a, b) for a, b in zip(self.hi, other.hi))
        shape = tuple(h - l + 1 for l, h in zip(lo, hi))
        return TrialFunction(self.domain, lo, op(self.embed(lo, shape), other.embed(lo, shape)))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c: float):
        return TrialFunction(self.domain, self.lo, self.values * float(c))

    __rmul__ = __mul__

    def multiplied(self, site_values: np.ndarray) -> "TrialFunction":
        """Pointwise product with an array given on this function's window."""
        return TrialFunction(self.domain, self.lo, self.values * site_values)

    def translated(self, offset, domain: LatticeDomain | None = None) -> "TrialFunction":
        offset = _as_site(offset, self.domain.nu)
        return TrialFunction(domain or self.domain,
                             tuple(l + o for l, o in zip(self.lo, offset)), self.values)

    def to_dict(self) -> dict:
        return {"domain": self.domain.to_dict(),
                "values": {",".join(map(str, k)): v for k, v in sorted(self.as_dict().items())}}


def inner(u: TrialFunction, v: TrialFunction) -> float:
    """Euclidean inner product of two trial functions."""
    if u.domain != v.domain:
        raise DomainMismatchError("trial functions on different domains")
    return float(np.sum(u.values * v.embed(u.lo, u.shape)))


def _check_domain(op, v: TrialFunction):
    dom = op.domain
    if dom != v.domain:
        raise DomainMismatchError(f"operator domain {dom} differs from vector domain {v.domain}")


def _hop_window(arr: np.ndarray) -> np.ndarray:
    """``H_0`` applied to an array that is zero outside its window border."""
    out = np.zeros_like(arr)
    for ax in range(arr.ndim):
        n = arr.shape[ax]
        if n < 2:
            continue
        lo = [slice(None)] * arr.ndim
        hi = [slice(None)] * arr.ndim
        lo[ax] = slice(0, n - 1)
        hi[ax] = slice(1, n)
        out[tuple(hi)] += arr[tuple(lo)]
        out[tuple(lo)] += arr[tuple(hi)]
    return out


def apply_operator(op, v: TrialFunction) -> TrialFunction:
    """``(H_0 + V) v`` for a lattice operator or ``J v`` for a Jacobi matrix.

    The result's window is ``v``'s grown by one site in each direction,
    clipped to the domain.
    """
    _check_domain(op, v)
    g = v.grown(1)
    if isinstance(op, JacobiOperator):
        u = g.values
        n0 = g.lo[0]  # site number of u[0]
        sites = np.arange(n0, n0 + u.size)
        # coupling between site s and s+1 is a[s-1]; zero past the ends
        a_full = np.concatenate(([0.0], op.a, [0.0]))
        right = a_full[sites]  # a_s
        left = a_full[sites - 1]  # a_{s-1}
        out = op.b[sites - 1] * u
        out[:-1] += right[:-1] * u[1:]
        out[1:] += left[1:] * u[:-1]
        return TrialFunction(g.domain, g.lo, out)
    Vw = op.potential.window(g.lo, g.shape)
    return TrialFunction(g.domain, g.lo, _hop_window(g.values) + Vw * g.values)


def form_parts(op, v: TrialFunction):
    """``(<v, K v>, <v, D v>)`` split into off-diagonal and diagonal parts."""
    _check_domain(op, v)
    x = v.values
    if isinstance(op, JacobiOperator):
        sites = np.arange(v.lo[0], v.lo[0] + x.size)
        hop = 2.0 * float(np.sum(op.a[sites[:-1] - 1] * x[:-1] * x[1:])) if x.size > 1 else 0.0
        pot = float(np.sum(op.b[sites - 1] * x * x))
        return hop, pot
    hop = 0.0
    for ax in range(x.ndim):
        n = x.shape[ax]
        if n < 2:
            continue
        lo = [slice(None)] * x.ndim
        hi = [slice(None)] * x.ndim
        lo[ax] = slice(0, n - 1)
        hi[ax] = slice(1, n)
        hop += 2.0 * float(np.sum(x[tuple(lo)] * x[tuple(hi)]))
    pot = float(np.sum(op.potential.window(v.lo, v.shape) * x * x))
    return hop, pot


def quadratic_form(op, v: TrialFunction) -> float:
    """``<v, op v>``."""
    hop, pot = form_parts(op, v)
    return hop + pot


def kinetic_energy(v: TrialFunction) -> float:
    """``<v, (2 nu - H_0) v>`` as the sum of squared nearest-neighbour differences.

    Differences across the domain boundary count with the outside value zero,
    which is exactly the Dirichlet form.
    """
    x = v.values
    total = 0.0
    for ax in range(x.ndim):
        pad = [(0, 0)] * x.ndim
        pad[ax] = (1, 1)
        y = np.pad(x, pad)
        d = np.diff(y, axis=ax)
        total += float(np.sum(d * d))
    return total


def parity_conjugate(v: TrialFunction) -> TrialFunction:
    """``(U v)(n) = (-1)^{|n|} v(n)``."""
    return TrialFunction(v.domain, v.lo, v.values * parity_signs(v.lo, v.shape))


def rayleigh_quotient(op, v: TrialFunction) -> float:
    n2 = v.norm2()
    if n2 == 0:
        raise ZeroDivisionError("Rayleigh quotient of the zero vector")
    return quadratic_form(op, v) / n2


# ---------------------------------------------------------------------------
# potential specifications

FAMILIES = ("zero", "single-site", "dipole", "alternating", "power-law", "example-5.4",
            "periodic-sites", "sparse-3d", "custom")


def domain_from_spec(d: Mapping, pointer="/domain") -> LatticeDomain:
    kind = d.get("kind")
    try:
        if kind == "half_line":
            return LatticeDomain.half_line(int(d["N"]))
        if kind == "whole_line":
            if "N" in d:
                return LatticeDomain.whole_line(int(d["N"]))
            return LatticeDomain.whole_line(int(d["N1"]), int(d["N2"]))
        if kind == "box":
            if "lo" in d:
                return LatticeDomain.window(d["lo"], d["shape"])
            hw = d["half_widths"]
            if isinstance(hw, int):
                hw = [hw] * int(d.get("nu", 1))
            return LatticeDomain.box(hw, origin=d.get("origin"))
    except KeyError as exc:
        raise SpecError(f"missing domain field {exc.args[0]!r}", f"{pointer}/{exc.args[0]}") from None
    except (TypeError, ValueError) as exc:
        raise SpecError(str(exc), pointer) from None
    raise SpecError(f"unknown domain kind {kind!r}", f"{pointer}/kind")


def parse_domain_string(text: str) -> LatticeDomain:
    """``half_line:100``, ``whole_line:50`` or ``whole_line:20:30``, ``box:3x3x3`` (half-widths)."""
    kind, _, rest = text.partition(":")
    parts = rest.split(":") if rest else []
    if kind == "half_line" and len(parts) == 1:
        return LatticeDomain.half_line(int(parts[0]))
    if kind == "whole_line" and len(parts) in (1, 2):
        return LatticeDomain.whole_line(*[int(p) for p in parts])
    if kind == "box" and len(parts) == 1:
        return LatticeDomain.box([int(p) for p in parts[0].split("x")])
    raise SpecError(f"cannot parse domain {text!r}", "/domain")


def _param(params, name, pointer, cast=float, default=None, check=None, why=""):
    if name not in params:
        if default is None:
            raise SpecError(f"missing parameter {name!r}", f"{pointer}/{name}")
        return default
    try:
        value = cast(params[name])
    except (TypeError, ValueError):
        raise SpecError(f"parameter {name!r} has the wrong type", f"{pointer}/{name}") from None
    if check is not None and not check(value):
        raise SpecError(f"parameter {name!r} out of range{': ' + why if why else ''}",
                        f"{pointer}/{name}")
    return value


def _one_d_abs(n):
    return np.maximum(np.abs(n), 1)


def read_values_csv(path: str) -> list:
    """``(index, value)`` rows; a header row is skipped if present."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                idx = [int(x) for x in row[0].split(";")] if ";" in row[0] else [int(row[0])]
                rows.append((tuple(idx), float(row[1])))
            except ValueError:
                if rows:
                    raise
    return rows


def make_potential(spec: Mapping) -> Potential:
    """Build a potential from a specification mapping.

    ``spec = {"family": ..., "params": {...}, "domain": {...}}``.  Raises
    :class:`SpecError` carrying a JSON pointer for malformed input.
    """
    from .schemas import validate

    validate(spec, "potential_spec")
    family = spec["family"]
    params = spec.get("params", {}) or {}
    pp = "/params"
    if family == "example-5.4":
        from .oscillation import example_54_potential

        base = _param(params, "N", pp, int, check=lambda x: x >= 2, why="need N >= 2")
        kmax = _param(params, "k_max", pp, int, check=lambda x: x >= 1)
        window = None
        if "domain" in spec:
            window = domain_from_spec(spec["domain"])
        try:
            return example_54_potential(base, kmax, domain=window)
        except ValueError as exc:
            raise SpecError(str(exc), "/domain") from None
    if family == "sparse-3d":
        from .greens import GreenTable, sparse_counterexample

        nu = _param(params, "nu", pp, int, default=3, check=lambda x: x >= 3)
        count = _param(params, "site_count", pp, int, default=5, check=lambda x: x >= 1)
        lam = _param(params, "lambda", pp, float, default=1.0, check=lambda x: x > 0)
        res = None
        if "resolution" in params:
            res = _param(params, "resolution", pp, int, check=lambda x: x >= 64 and x % 2 == 0,
                         why="an even integer >= 64")
        table = GreenTable.load_or_create(nu, res)
        try:
            return sparse_counterexample(nu, count, lam, table).potential
        except ValueError as exc:
            raise SpecError(str(exc), f"{pp}/lambda") from None

    if "domain" not in spec:
        raise SpecError("missing domain", "/domain")
    dom = domain_from_spec(spec["domain"])
    nu = dom.nu

    if family == "zero":
        return Potential.zero(dom)
    if family in ("single-site", "dipole"):
        lam = _param(params, "lambda", pp, float)
        n0 = params.get("n0")
        if n0 is None:
            raise SpecError("missing parameter 'n0'", f"{pp}/n0")
        site = _as_site(n0 if not isinstance(n0, list) else tuple(n0), nu)
        if not dom.contains(site):
            raise SpecError("n0 outside domain", f"{pp}/n0")
        items = [(site, lam)]
        if family == "dipole":
            nxt = (site[0] + 1,) + site[1:]
            if not dom.contains(nxt):
                raise SpecError("n0 + 1 outside domain", f"{pp}/n0")
            items.append((nxt, -lam))
        return Potential.from_sites(dom, items, label=family)
    if family == "alternating":
        if nu != 1:
            raise SpecError("alternating family is one-dimensional", "/domain/kind")
        beta = _param(params, "beta", pp, float)
        rule = lambda n: beta * np.where(np.abs(n) % 2 == 0, 1.0, -1.0) / _one_d_abs(n)  # noqa: E731
        return Potential.from_rule(dom, rule, label="alternating")
    if family == "power-law":
        C = _param(params, "C", pp, float)
        alpha = _param(params, "alpha", pp, float, check=lambda x: x >= 0)
        alternate = bool(params.get("alternate", False))

        def rule(*c):
            r = sum(np.abs(x) for x in c)
            val = C / np.maximum(r, 1).astype(np.float64) ** alpha
            if alternate:
                val = val * np.where(r % 2 == 0, 1.0, -1.0)
            return val

        return Potential.from_rule(dom, rule, label="power-law")
    if family == "periodic-sites":
        a = _param(params, "a", pp, float)
        period = _param(params, "period", pp, int, check=lambda x: x >= 1)
        offset = _param(params, "offset", pp, int, default=0)
        if nu == 1:
            n = dom.axis_coords()
            sel = n[(n - offset) % period == 0]
            return Potential.from_sites(dom, [((int(s),), a) for s in sel], label="periodic-sites")
        coords = np.array(np.meshgrid(*[dom.axis_coords(ax) for ax in range(nu)], indexing="ij"))
        mask = np.all((coords - offset) % period == 0, axis=0)
        items = [(tuple(int(x) for x in coords[(slice(None),) + tuple(i)]), a) for i in np.argwhere(mask)]
        return Potential.from_sites(dom, items, label="periodic-sites")
    if family == "custom":
        if "values" in params:
            vals = params["values"]
            try:
                arr = np.asarray(vals, dtype=np.float64)
            except (TypeError, ValueError):
                raise SpecError("values must be numbers", f"{pp}/values") from None
            if arr.size != dom.size:
                raise SpecError(f"expected {dom.size} values, got {arr.size}", f"{pp}/values")
            return Potential(dom, values=arr.reshape(dom.shape), label="custom")
        path = params.get("values_file")
        if path is None:
            raise SpecError("custom family needs values_file or values", f"{pp}/values_file")
        if path == "none":
            return Potential.zero(dom)
        try:
            rows = read_values_csv(path)
        except OSError as exc:
            raise SpecError(f"cannot read values file: {exc}", f"{pp}/values_file") from None
        except ValueError:
            raise SpecError("values file has malformed rows", f"{pp}/values_file") from None
        items = []
        for site, v in rows:
            if len(site) != nu or not dom.contains(site):
                raise SpecError(f"site {site} outside domain", f"{pp}/values_file")
            items.append((site, v))
        return Potential.from_sites(dom, items, label="custom")
    raise SpecError(f"unknown family {family!r}", "/family")


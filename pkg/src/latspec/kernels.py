"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting the environment
variable ``LATSPEC_PURE_PYTHON=1`` forces the numpy/Python fallback.
``BACKEND`` records which one is active.
"""
import os

import numpy as np

from . import _pykernels

_force_py = os.environ.get("LATSPEC_PURE_PYTHON", "").strip() not in ("", "0")

if _force_py:
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _pykernels
        BACKEND = "python"

_EMPTY = np.zeros(0, dtype=np.float64)


def _c(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def sturm_counts(d, e2, shifts, pivmin, impl=None):
    """Eigenvalues strictly below each shift of a symmetric tridiagonal matrix.

    Parameters
    ----------
    d : array_like
        Diagonal, length n.
    e2 : array_like
        Squared off-diagonals, length n-1.
    shifts : array_like
        Points at which to count.
    pivmin : float
        Pivots smaller than this in magnitude are replaced by ``-pivmin``.
    """
    impl = impl or _impl
    return impl.sturm_counts(_c(d), _c(e2), _c(np.atleast_1d(shifts)), float(pivmin))


def band_edge_recursion(b, a, E, u0, u1, store=True, impl=None):
    """Three-term recursion at energy ``E``; see ``_ckernels.band_edge_recursion``."""
    impl = impl or _impl
    a = _EMPTY if a is None else _c(a)
    return impl.band_edge_recursion(_c(b), a, float(E), float(u0), float(u1), bool(store))


def band_edge_recursion_dd(b, E, u0, u1, store=True, impl=None):
    """Unit-coupling recursion in double-double arithmetic.

    Returns ``(u_hi, u_lo, exps, sign_changes, rescales, u_prev, u_last)``.
    """
    impl = impl or _impl
    return impl.band_edge_recursion_dd(_c(b), float(E), float(u0), float(u1), bool(store))


def tql_implicit(d, e, z=None, impl=None):
    """Eigenvalues (and optionally rotated ``z``) of a tridiagonal matrix.

    ``d`` is copied; ``z`` is modified in place when given.
    """
    impl = impl or _impl
    d = np.array(d, dtype=np.float64, copy=True)
    if z is not None and not (z.flags.c_contiguous and z.dtype == np.float64):
        raise ValueError("z must be a C-contiguous float64 array")
    impl.tql_implicit(d, _c(e), z)
    return d

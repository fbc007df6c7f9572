"""Compiled and pure-Python kernels agree with each other and with LAPACK."""
import importlib
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

from latspec import _pykernels, kernels

try:
    from latspec import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

needs_c = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def _tri(rng, n):
    return rng.normal(size=n) * 3, rng.normal(size=n - 1)


@pytest.mark.parametrize("n", [1, 2, 7, 200])
def test_sturm_counts_match_lapack(n):
    rng = np.random.default_rng(n)
    d, e = _tri(rng, n)
    w = eigh_tridiagonal(d, e, eigvals_only=True) if n > 1 else d
    shifts = np.linspace(w.min() - 1, w.max() + 1, 56)  # avoid hitting an eigenvalue exactly
    expect = np.array([np.sum(w < s) for s in shifts])
    for impl in filter(None, (_pykernels, _ckernels)):
        got = kernels.sturm_counts(d, e * e, shifts, 1e-300, impl=impl)
        assert np.array_equal(got, expect)


@needs_c
def test_recursion_backends_agree_bitwise():
    rng = np.random.default_rng(3)
    b = rng.normal(size=5000) * 0.5
    a = rng.uniform(0.5, 2.0, size=5001)
    for coup in (None, a):
        c = kernels.band_edge_recursion(b, coup, 2.0, 0.0, 1.0, impl=_ckernels)
        p = kernels.band_edge_recursion(b, coup, 2.0, 0.0, 1.0, impl=_pykernels)
        assert np.array_equal(c[0], p[0]) and np.array_equal(c[1], p[1])
        assert c[2:] == p[2:]


@needs_c
def test_double_double_backends_agree():
    b = np.where(np.arange(1, 20001) % 2 == 0, 1.0, -1.0) / np.arange(1, 20001)
    c = kernels.band_edge_recursion_dd(b, 2.0, 1.0, 1.0, impl=_ckernels)
    p = kernels.band_edge_recursion_dd(b, 2.0, 1.0, 1.0, impl=_pykernels)
    for x, y in zip(c[:3], p[:3]):
        assert np.array_equal(x, y)
    assert c[3:] == p[3:]


@pytest.mark.parametrize("vectors", [False, True])
def test_tql_matches_lapack(vectors):
    rng = np.random.default_rng(11)
    d, e = _tri(rng, 80)
    ref = eigh_tridiagonal(d, e, eigvals_only=True)
    for impl in filter(None, (_pykernels, _ckernels)):
        z = np.eye(80) if vectors else None
        w = kernels.tql_implicit(d, e, z, impl=impl)
        assert np.allclose(np.sort(w), ref, atol=1e-11)
        if vectors:
            T = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
            # columns of z are eigenvectors after rotation
            assert np.allclose(T @ z, z * w, atol=1e-9)


def test_recursion_rescales_instead_of_overflowing():
    b = np.full(3000, -3.0)  # growth rate about 5.8 per step overflows doubles
    u, ex, changes, rescales, *_ = kernels.band_edge_recursion(b, None, 2.0, 0.0, 1.0)
    assert rescales > 0 and np.all(np.isfinite(u)) and changes == 0


def test_pure_python_switch_selects_fallback():
    code = "import latspec.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, LATSPEC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_c
def test_default_backend_is_compiled():
    if os.environ.get("LATSPEC_PURE_PYTHON", "") not in ("", "0"):
        pytest.skip("fallback forced by environment")
    assert importlib.import_module("latspec.kernels").BACKEND == "cython"

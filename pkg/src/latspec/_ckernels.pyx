# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. ``latspec._pykernels`` mirrors every function here."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, ldexp, hypot

cnp.import_array()

cdef enum:
    BLOCK = 8
    BIG_EXP = 512

cdef double BIG = ldexp(1.0, BIG_EXP)
cdef double SMALL = ldexp(1.0, -BIG_EXP)


def sturm_counts(const double[::1] d, const double[::1] e2, const double[::1] shifts, double pivmin):
    """Number of eigenvalues strictly below each shift (LDL^T inertia)."""
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t m = shifts.shape[0]
    cdef Py_ssize_t i, j, jj, nb
    cdef double q[BLOCK]
    cdef double E[BLOCK]
    cdef long long c[BLOCK]
    cdef double t
    out = np.zeros(m, dtype=np.int64)
    cdef long long[::1] o = out
    if n == 0:
        return out
    j = 0
    while j < m:
        nb = m - j
        if nb > BLOCK:
            nb = BLOCK
        for jj in range(nb):
            E[jj] = shifts[j + jj]
            t = d[0] - E[jj]
            if fabs(t) < pivmin:
                t = -pivmin
            q[jj] = t
            c[jj] = 1 if t < 0 else 0
        for i in range(1, n):
            for jj in range(nb):
                t = (d[i] - E[jj]) - e2[i - 1] / q[jj]
                if fabs(t) < pivmin:
                    t = -pivmin
                q[jj] = t
                if t < 0:
                    c[jj] += 1
        for jj in range(nb):
            o[j + jj] = c[jj]
        j += nb
    return out


def band_edge_recursion(const double[::1] b, const double[::1] a, double E,
                        double u0, double u1, bint store):
    """Solve a_n u(n+1) + b_n u(n) + a_{n-1} u(n-1) = E u(n) for n = 1..N.

    ``b[n-1]`` is the diagonal at site n; ``a`` is either empty (all couplings 1)
    or has length N+1 with ``a[n]`` the coupling between n and n+1.  Returns
    ``(u, exps, sign_changes, rescales, u_prev, u_last)``; when ``store`` the
    true solution is ``u[n] * 2**exps[n]`` for n = 0..N+1.
    """
    cdef Py_ssize_t N = b.shape[0]
    cdef Py_ssize_t n
    cdef bint unit = a.shape[0] == 0
    cdef double up = u0, uc = u1, un, m
    cdef long long changes = 0, rescales = 0
    cdef int shift = 0
    cdef double[::1] us
    cdef int[::1] ex
    u_arr = None
    e_arr = None
    if store:
        u_arr = np.empty(N + 2, dtype=np.float64)
        e_arr = np.zeros(N + 2, dtype=np.int32)
        us = u_arr
        ex = e_arr
        us[0] = u0
        us[1] = u1
    for n in range(1, N + 1):
        if unit:
            un = (E - b[n - 1]) * uc - up
        else:
            un = ((E - b[n - 1]) * uc - a[n - 1] * up) / a[n]
        if (uc > 0 and un < 0) or (uc < 0 and un > 0) or (un == 0 and uc != 0):
            changes += 1
        up = uc
        uc = un
        m = fabs(uc) if fabs(uc) > fabs(up) else fabs(up)
        if m > BIG:
            up = ldexp(up, -BIG_EXP)
            uc = ldexp(uc, -BIG_EXP)
            shift += BIG_EXP
            rescales += 1
        elif m < SMALL and m > 0:
            up = ldexp(up, BIG_EXP)
            uc = ldexp(uc, BIG_EXP)
            shift -= BIG_EXP
            rescales += 1
        if store:
            us[n + 1] = uc
            ex[n + 1] = shift
    return u_arr, e_arr, int(changes), int(rescales), up, uc


def tql_implicit(double[::1] d, const double[::1] e, z):
    """Implicit-shift QL on a symmetric tridiagonal matrix, in place on ``d``.

    ``e`` holds the n-1 off-diagonals.  If ``z`` is an (n, n) array the plane
    rotations are accumulated into it (pass the identity, or the Householder
    basis, to obtain eigenvectors as columns).
    """
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t l, m, i, k, it
    cdef double dd, g, r, s, c, p, f, bb, zf
    cdef double eps = np.finfo(np.float64).eps
    cdef bint vec = z is not None
    cdef double[:, ::1] zz
    cdef bint underflow
    if vec:
        zz = z
    ee_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] ee = ee_arr
    for i in range(n - 1):
        ee[i] = e[i]
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = fabs(d[m]) + fabs(d[m + 1])
                if fabs(ee[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 60:
                raise ArithmeticError("implicit QL failed to converge")
            g = (d[l + 1] - d[l]) / (2.0 * ee[l])
            r = hypot(g, 1.0)
            g = d[m] - d[l] + ee[l] / (g + (r if g >= 0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            i = m - 1
            while i >= l:
                f = s * ee[i]
                bb = c * ee[i]
                r = hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ee[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * bb
                p = s * r
                d[i + 1] = g + p
                g = c * r - bb
                if vec:
                    for k in range(n):
                        zf = zz[k, i + 1]
                        zz[k, i + 1] = s * zz[k, i] + c * zf
                        zz[k, i] = c * zz[k, i] - s * zf
                i -= 1
            if underflow:
                continue
            d[l] -= p
            ee[l] = g
            ee[m] = 0.0
    return np.asarray(d)


cdef inline void _two_sum(double a, double b, double* s, double* e) nogil:
    cdef double t, bb
    t = a + b
    bb = t - a
    e[0] = (a - (t - bb)) + (b - bb)
    s[0] = t


cdef inline void _split(double a, double* hi, double* lo) nogil:
    cdef double c = 134217729.0 * a
    hi[0] = c - (c - a)
    lo[0] = a - hi[0]


cdef inline void _two_prod(double a, double b, double* p, double* e) nogil:
    cdef double ah, al, bh, bl, t
    t = a * b
    _split(a, &ah, &al)
    _split(b, &bh, &bl)
    e[0] = ((ah * bh - t) + ah * bl + al * bh) + al * bl
    p[0] = t


def band_edge_recursion_dd(const double[::1] b, double E, double u0, double u1, bint store):
    """Unit-coupling band-edge recursion in double-double arithmetic.

    Same contract as :func:`band_edge_recursion` (with ``a`` empty) but each
    value carries a low-order correction, so rounding error stays near
    ``1e-30`` relative per step.  Returns
    ``(u_hi, u_lo, exps, sign_changes, rescales, u_prev, u_last)``.
    """
    cdef Py_ssize_t N = b.shape[0]
    cdef Py_ssize_t n
    cdef double ph = u0, pl = 0.0, ch = u1, cl = 0.0
    cdef double kh, kl, th, tl, s, e, m
    cdef long long changes = 0, rescales = 0
    cdef int shift = 0
    cdef double[::1] uh
    cdef double[::1] ul
    cdef int[::1] ex
    hi_arr = None
    lo_arr = None
    e_arr = None
    if store:
        hi_arr = np.empty(N + 2, dtype=np.float64)
        lo_arr = np.zeros(N + 2, dtype=np.float64)
        e_arr = np.zeros(N + 2, dtype=np.int32)
        uh = hi_arr
        ul = lo_arr
        ex = e_arr
        uh[0] = u0
        uh[1] = u1
    for n in range(1, N + 1):
        # k = E - b[n-1] exactly as a double-double
        _two_sum(E, -b[n - 1], &kh, &kl)
        # t = k * u(n)
        _two_prod(kh, ch, &th, &tl)
        tl += kh * cl + kl * ch
        _two_sum(th, tl, &th, &tl)
        # t - u(n-1)
        _two_sum(th, -ph, &s, &e)
        e += tl - pl
        _two_sum(s, e, &s, &e)
        if (ch > 0 and s < 0) or (ch < 0 and s > 0) or (s == 0 and ch != 0):
            changes += 1
        ph = ch
        pl = cl
        ch = s
        cl = e
        m = fabs(ch) if fabs(ch) > fabs(ph) else fabs(ph)
        if m > BIG:
            ph = ldexp(ph, -BIG_EXP)
            pl = ldexp(pl, -BIG_EXP)
            ch = ldexp(ch, -BIG_EXP)
            cl = ldexp(cl, -BIG_EXP)
            shift += BIG_EXP
            rescales += 1
        elif m < SMALL and m > 0:
            ph = ldexp(ph, BIG_EXP)
            pl = ldexp(pl, BIG_EXP)
            ch = ldexp(ch, BIG_EXP)
            cl = ldexp(cl, BIG_EXP)
            shift -= BIG_EXP
            rescales += 1
        if store:
            uh[n + 1] = ch
            ul[n + 1] = cl
            ex[n + 1] = shift
    return hi_arr, lo_arr, e_arr, int(changes), int(rescales), ph + pl, ch + cl

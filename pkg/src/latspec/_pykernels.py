"""Pure-Python/numpy versions of the compiled kernels in ``_ckernels.pyx``.

Same signatures and results; used when the extension is unavailable or when
``LATSPEC_PURE_PYTHON=1`` is set.
"""
import math

import numpy as np

_BIG_EXP = 512
_BIG = math.ldexp(1.0, _BIG_EXP)
_SMALL = math.ldexp(1.0, -_BIG_EXP)


def sturm_counts(d, e2, shifts, pivmin):
    d = np.asarray(d, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    shifts = np.asarray(shifts, dtype=np.float64)
    n = d.shape[0]
    out = np.zeros(shifts.shape[0], dtype=np.int64)
    if n == 0 or shifts.shape[0] == 0:
        return out
    # vectorised over shifts, sequential over the matrix
    q = d[0] - shifts
    q[np.abs(q) < pivmin] = -pivmin
    out += q < 0
    for i in range(1, n):
        q = (d[i] - shifts) - e2[i - 1] / q
        q[np.abs(q) < pivmin] = -pivmin
        out += q < 0
    return out


def band_edge_recursion(b, a, E, u0, u1, store):
    b = np.asarray(b, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    N = b.shape[0]
    unit = a.shape[0] == 0
    bl = b.tolist()
    al = None if unit else a.tolist()
    up, uc = float(u0), float(u1)
    changes = rescales = shift = 0
    us = ex = None
    if store:
        us = [0.0] * (N + 2)
        ex = [0] * (N + 2)
        us[0], us[1] = up, uc
    for n in range(1, N + 1):
        if unit:
            un = (E - bl[n - 1]) * uc - up
        else:
            un = ((E - bl[n - 1]) * uc - al[n - 1] * up) / al[n]
        if (uc > 0 and un < 0) or (uc < 0 and un > 0) or (un == 0 and uc != 0):
            changes += 1
        up, uc = uc, un
        m = max(abs(uc), abs(up))
        if m > _BIG:
            up = math.ldexp(up, -_BIG_EXP)
            uc = math.ldexp(uc, -_BIG_EXP)
            shift += _BIG_EXP
            rescales += 1
        elif 0 < m < _SMALL:
            up = math.ldexp(up, _BIG_EXP)
            uc = math.ldexp(uc, _BIG_EXP)
            shift -= _BIG_EXP
            rescales += 1
        if store:
            us[n + 1] = uc
            ex[n + 1] = shift
    u_arr = np.array(us, dtype=np.float64) if store else None
    e_arr = np.array(ex, dtype=np.int32) if store else None
    return u_arr, e_arr, changes, rescales, up, uc


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    c = 134217729.0 * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def band_edge_recursion_dd(b, E, u0, u1, store):
    b = np.asarray(b, dtype=np.float64)
    N = b.shape[0]
    bl_ = b.tolist()
    ph, pl, ch, cl = float(u0), 0.0, float(u1), 0.0
    changes = rescales = shift = 0
    uh = ul = ex = None
    if store:
        uh = [0.0] * (N + 2)
        ul = [0.0] * (N + 2)
        ex = [0] * (N + 2)
        uh[0], uh[1] = ph, ch
    for n in range(1, N + 1):
        kh, kl = _two_sum(E, -bl_[n - 1])
        th, tl = _two_prod(kh, ch)
        tl += kh * cl + kl * ch
        th, tl = _two_sum(th, tl)
        s, e = _two_sum(th, -ph)
        e += tl - pl
        s, e = _two_sum(s, e)
        if (ch > 0 and s < 0) or (ch < 0 and s > 0) or (s == 0 and ch != 0):
            changes += 1
        ph, pl, ch, cl = ch, cl, s, e
        m = max(abs(ch), abs(ph))
        if m > _BIG:
            ph, pl = math.ldexp(ph, -_BIG_EXP), math.ldexp(pl, -_BIG_EXP)
            ch, cl = math.ldexp(ch, -_BIG_EXP), math.ldexp(cl, -_BIG_EXP)
            shift += _BIG_EXP
            rescales += 1
        elif 0 < m < _SMALL:
            ph, pl = math.ldexp(ph, _BIG_EXP), math.ldexp(pl, _BIG_EXP)
            ch, cl = math.ldexp(ch, _BIG_EXP), math.ldexp(cl, _BIG_EXP)
            shift -= _BIG_EXP
            rescales += 1
        if store:
            uh[n + 1] = ch
            ul[n + 1] = cl
            ex[n + 1] = shift
    if store:
        return (np.array(uh), np.array(ul), np.array(ex, dtype=np.int32),
                changes, rescales, ph + pl, ch + cl)
    return None, None, None, changes, rescales, ph + pl, ch + cl


def tql_implicit(d, e, z):
    n = d.shape[0]
    eps = np.finfo(np.float64).eps
    dl = [float(x) for x in d]
    ee = [float(x) for x in e] + [0.0]
    if n == 0:
        return d
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(dl[m]) + abs(dl[m + 1])
                if abs(ee[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 60:
                raise ArithmeticError("implicit QL failed to converge")
            g = (dl[l + 1] - dl[l]) / (2.0 * ee[l])
            r = math.hypot(g, 1.0)
            g = dl[m] - dl[l] + ee[l] / (g + (r if g >= 0 else -r))
            s = c = 1.0
            p = 0.0
            underflow = False
            i = m - 1
            while i >= l:
                f = s * ee[i]
                bb = c * ee[i]
                r = math.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    dl[i + 1] -= p
                    ee[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = dl[i + 1] - p
                r = (dl[i] - g) * s + 2.0 * c * bb
                p = s * r
                dl[i + 1] = g + p
                g = c * r - bb
                if z is not None:
                    zi = z[:, i].copy()
                    zi1 = z[:, i + 1]
                    z[:, i] = c * zi - s * zi1
                    z[:, i + 1] = s * zi + c * zi1
                i -= 1
            if underflow:
                continue
            dl[l] -= p
            ee[l] = g
            ee[m] = 0.0
    d[:] = dl
    return d

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Dormand-Prince stepping for polynomial vector
fields and int64 Smith-form diagonalisation with overflow detection.

Signatures match :mod:`morseflow._pykernels`.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, pow, isfinite, nextafter, INFINITY
from libc.stdlib cimport llabs

cnp.import_array()

cdef extern from *:
    """
    static int mf_mul_overflow(long long a, long long b, long long *r) {
        return __builtin_mul_overflow(a, b, r);
    }
    static int mf_sub_overflow(long long a, long long b, long long *r) {
        return __builtin_sub_overflow(a, b, r);
    }
    """
    int mf_mul_overflow(long long a, long long b, long long *r)
    int mf_sub_overflow(long long a, long long b, long long *r)

DEF SAFETY = 0.9
DEF MIN_FACTOR = 0.2
DEF MAX_FACTOR = 10.0

cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40


cdef void _poly(const double[::1] coef, const int[:, ::1] expo, const int[::1] out,
                double *x, double *res, int m) noexcept nogil:
    cdef Py_ssize_t j, i
    cdef int e
    cdef double v
    for i in range(m):
        res[i] = 0.0
    for j in range(coef.shape[0]):
        v = coef[j]
        for i in range(m):
            for e in range(expo[j, i]):
                v = v * x[i]
        res[out[j]] += v


cdef double _rms(double *v, int m) noexcept nogil:
    cdef double s = 0.0
    cdef int i
    if m == 0:
        return 0.0
    for i in range(m):
        s += v[i] * v[i]
    return sqrt(s / m)


def dp54_poly(coef, expo, out, x0, double t_end, double rtol, double atol,
              long max_steps, double bound):
    cdef const double[::1] c = np.ascontiguousarray(coef, dtype=np.float64)
    cdef const int[:, ::1] ex = np.ascontiguousarray(expo, dtype=np.int32)
    cdef const int[::1] o = np.ascontiguousarray(out, dtype=np.int32)
    cdef double[::1] xv = np.array(x0, dtype=np.float64)
    cdef int m = xv.shape[0]
    cdef double[:, ::1] k = np.zeros((7, max(m, 1)))
    cdef double[::1] x = xv.copy()
    cdef double[::1] tmp = np.zeros(max(m, 1))
    cdef double[::1] xn = np.zeros(max(m, 1))
    cdef double[::1] errv = np.zeros(max(m, 1))
    ts = [0.0]
    xs = [np.asarray(x).copy()]
    if t_end == 0.0:
        return np.array(ts), np.array(xs).reshape(1, m), 0
    cdef double direction = 1.0 if t_end > 0 else -1.0
    cdef double t = 0.0, h, hs, remaining, err, factor, d0, d1, d2, h0, h1, sc, mx, min_step
    cdef int i, status = -1
    cdef long steps = 0
    cdef bint rejected = False, last
    _poly(c, ex, o, &x[0], &k[0, 0], m)
    # initial step (Hairer)
    if m == 0:
        h = 1.0
    else:
        for i in range(m):
            sc = atol + fabs(x[i]) * rtol
            tmp[i] = x[i] / sc
            errv[i] = k[0, i] / sc
        d0 = _rms(&tmp[0], m)
        d1 = _rms(&errv[0], m)
        if d0 < 1e-5 or d1 < 1e-5:
            h0 = 1e-6
        else:
            h0 = 0.01 * d0 / d1
        for i in range(m):
            xn[i] = x[i] + h0 * direction * k[0, i]
        _poly(c, ex, o, &xn[0], &k[1, 0], m)
        for i in range(m):
            sc = atol + fabs(x[i]) * rtol
            tmp[i] = (k[1, i] - k[0, i]) / sc
        d2 = _rms(&tmp[0], m) / h0
        if d1 <= 1e-15 and d2 <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = pow(0.01 / max(d1, d2), 0.2)
        h = min(100 * h0, h1)
    while True:
        remaining = fabs(t_end - t)
        if remaining <= 0.0:
            status = 0
            break
        if steps >= max_steps:
            status = 2
            break
        min_step = 10 * nextafter(fabs(t), INFINITY) - 10 * fabs(t)
        last = h >= remaining
        if last:
            h = remaining
        if h < min_step:
            status = 3
            break
        hs = h * direction
        with nogil:
            for i in range(m):
                tmp[i] = x[i] + hs * (A21 * k[0, i])
            _poly(c, ex, o, &tmp[0], &k[1, 0], m)
            for i in range(m):
                tmp[i] = x[i] + hs * (A31 * k[0, i] + A32 * k[1, i])
            _poly(c, ex, o, &tmp[0], &k[2, 0], m)
            for i in range(m):
                tmp[i] = x[i] + hs * (A41 * k[0, i] + A42 * k[1, i] + A43 * k[2, i])
            _poly(c, ex, o, &tmp[0], &k[3, 0], m)
            for i in range(m):
                tmp[i] = x[i] + hs * (A51 * k[0, i] + A52 * k[1, i] + A53 * k[2, i] + A54 * k[3, i])
            _poly(c, ex, o, &tmp[0], &k[4, 0], m)
            for i in range(m):
                tmp[i] = x[i] + hs * (A61 * k[0, i] + A62 * k[1, i] + A63 * k[2, i]
                                      + A64 * k[3, i] + A65 * k[4, i])
            _poly(c, ex, o, &tmp[0], &k[5, 0], m)
            for i in range(m):
                xn[i] = x[i] + hs * (B1 * k[0, i] + B3 * k[2, i] + B4 * k[3, i]
                                     + B5 * k[4, i] + B6 * k[5, i])
            _poly(c, ex, o, &xn[0], &k[6, 0], m)
            for i in range(m):
                errv[i] = hs * (E1 * k[0, i] + E3 * k[2, i] + E4 * k[3, i] + E5 * k[4, i]
                                + E6 * k[5, i] + E7 * k[6, i])
                sc = atol + max(fabs(x[i]), fabs(xn[i])) * rtol
                errv[i] = errv[i] / sc
            err = _rms(&errv[0], m)
        if err <= 1.0:
            steps += 1
            t = t_end if last else t + hs
            mx = 0.0
            for i in range(m):
                x[i] = xn[i]
                k[0, i] = k[6, i]
                if fabs(x[i]) > mx or not isfinite(x[i]):
                    mx = fabs(x[i]) if isfinite(x[i]) else INFINITY
            ts.append(t)
            xs.append(np.asarray(x).copy())
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = min(MAX_FACTOR, SAFETY * pow(err, -0.2))
            if rejected:
                factor = min(1.0, factor)
            h = h * factor
            rejected = False
            if m and mx > bound:
                status = 1
                break
        else:
            h = h * max(MIN_FACTOR, SAFETY * pow(err, -0.2))
            rejected = True
    return np.array(ts), np.array(xs).reshape(len(xs), m), status


def snf_diagonal(rows):
    """int64 elimination; raises OverflowError when an entry would overflow."""
    cdef cnp.ndarray[cnp.int64_t, ndim=2] arr = np.array(rows, dtype=np.int64).reshape(
        len(rows), len(rows[0]) if len(rows) else 0)
    cdef long long[:, ::1] a = arr
    cdef Py_ssize_t n_rows = a.shape[0], n_cols = a.shape[1]
    cdef Py_ssize_t top = 0, i, j, pi, pj, bi, bj
    cdef long long v, q, piv, best, prod, tmpv
    cdef bint done, found
    diag = []
    while top < n_rows and top < n_cols:
        found = False
        best = 0
        pi = pj = top
        for i in range(top, n_rows):
            for j in range(top, n_cols):
                v = a[i, j]
                if v != 0 and (not found or llabs(v) < best):
                    found = True
                    best = llabs(v)
                    pi = i
                    pj = j
                    if best == 1:
                        break
            if found and best == 1:
                break
        if not found:
            break
        _swap_rows(a, top, pi)
        _swap_cols(a, top, pj)
        while True:
            piv = a[top, top]
            done = True
            for i in range(top + 1, n_rows):
                v = a[i, top]
                if v != 0:
                    q = _floordiv(v, piv)
                    for j in range(top, n_cols):
                        if a[top, j] != 0:
                            if mf_mul_overflow(q, a[top, j], &prod) or mf_sub_overflow(a[i, j], prod, &tmpv):
                                raise OverflowError("int64 overflow in elimination")
                            a[i, j] = tmpv
                    if a[i, top] != 0:
                        done = False
            for j in range(top + 1, n_cols):
                v = a[top, j]
                if v != 0:
                    q = _floordiv(v, piv)
                    for i in range(top, n_rows):
                        if a[i, top] != 0:
                            if mf_mul_overflow(q, a[i, top], &prod) or mf_sub_overflow(a[i, j], prod, &tmpv):
                                raise OverflowError("int64 overflow in elimination")
                            a[i, j] = tmpv
                    if a[top, j] != 0:
                        done = False
            if done:
                break
            best = llabs(piv)
            bi = bj = top
            for i in range(top + 1, n_rows):
                v = a[i, top]
                if v != 0 and llabs(v) < best:
                    best = llabs(v)
                    bi = i
                    bj = top
            for j in range(top + 1, n_cols):
                v = a[top, j]
                if v != 0 and llabs(v) < best:
                    best = llabs(v)
                    bi = top
                    bj = j
            _swap_rows(a, top, bi)
            _swap_cols(a, top, bj)
        diag.append(int(llabs(a[top, top])))
        top += 1
    return diag


cdef inline long long _floordiv(long long a, long long b) noexcept:
    cdef long long q = a / b
    if (a % b != 0) and ((a < 0) != (b < 0)):
        q -= 1
    return q


cdef void _swap_rows(long long[:, ::1] a, Py_ssize_t r1, Py_ssize_t r2) noexcept:
    cdef Py_ssize_t j
    cdef long long t
    if r1 == r2:
        return
    for j in range(a.shape[1]):
        t = a[r1, j]
        a[r1, j] = a[r2, j]
        a[r2, j] = t


cdef void _swap_cols(long long[:, ::1] a, Py_ssize_t c1, Py_ssize_t c2) noexcept:
    cdef Py_ssize_t i
    cdef long long t
    if c1 == c2:
        return
    for i in range(a.shape[0]):
        t = a[i, c1]
        a[i, c1] = a[i, c2]
        a[i, c2] = t

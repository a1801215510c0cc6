"""Pure-Python implementations of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable (or forced via
``MORSEFLOW_PURE=1``).  The compiled module mirrors these signatures and the
step-control logic exactly.
"""

from __future__ import annotations

import math

import numpy as np

# Dormand-Prince 5(4) tableau
C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
B = A[6]
E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0

STATUS_DONE = 0
STATUS_BOUND = 1
STATUS_MAX_STEPS = 2
STATUS_UNDERFLOW = 3


def poly_eval(coef, expo, out, n_out, x):
    """Evaluate a sparse polynomial map at ``x``."""
    mono = np.prod(np.power(x[None, :], expo), axis=1) * coef
    res = np.zeros(n_out)
    np.add.at(res, out, mono)
    return res


def _rms(v):
    return math.sqrt(float(np.dot(v, v)) / max(v.size, 1))


def _initial_step(fun, x0, f0, direction, rtol, atol):
    if x0.size == 0:
        return 1.0
    scale = atol + np.abs(x0) * rtol
    d0 = _rms(x0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    x1 = x0 + h0 * direction * f0
    f1 = fun(x1)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def dp54(fun, x0, t_end, rtol, atol, max_steps, bound):
    """Adaptive Dormand-Prince integration of ``x' = fun(x)`` from t=0.

    Returns ``(ts, xs, status)`` with every accepted step.  Integration stops
    early when the max-norm of the state exceeds ``bound`` (status 1).
    """
    x = np.array(x0, dtype=float)
    ts = [0.0]
    xs = [x.copy()]
    if t_end == 0.0:
        return np.array(ts), np.array(xs).reshape(1, x.size), STATUS_DONE
    direction = 1.0 if t_end > 0 else -1.0
    t = 0.0
    k = [None] * 7
    k[0] = fun(x)
    h = _initial_step(fun, x, k[0], direction, rtol, atol)
    rejected = False
    steps = 0
    while True:
        remaining = abs(t_end - t)
        if remaining <= 0.0:
            return np.array(ts), np.array(xs), STATUS_DONE
        if steps >= max_steps:
            return np.array(ts), np.array(xs), STATUS_MAX_STEPS
        min_step = 10 * np.nextafter(abs(t), np.inf) - 10 * abs(t)
        last = h >= remaining
        if last:
            h = remaining
        if h < min_step:
            return np.array(ts), np.array(xs), STATUS_UNDERFLOW
        hs = h * direction
        for i in range(1, 7):
            dx = np.zeros_like(x)
            for j, a in enumerate(A[i]):
                if a != 0.0:
                    dx = dx + a * k[j]
            k[i] = fun(x + hs * dx)
        x_new = x + hs * (
            B[0] * k[0] + B[2] * k[2] + B[3] * k[3] + B[4] * k[4] + B[5] * k[5]
        )
        k6 = fun(x_new)
        err_vec = hs * (
            E[0] * k[0] + E[2] * k[2] + E[3] * k[3] + E[4] * k[4] + E[5] * k[5] + E[6] * k6
        )
        scale = atol + np.maximum(np.abs(x), np.abs(x_new)) * rtol
        err = _rms(err_vec / scale)
        if err <= 1.0:
            steps += 1
            t = t_end if last else t + hs
            x = x_new
            k[0] = k6
            ts.append(t)
            xs.append(x.copy())
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = min(MAX_FACTOR, SAFETY * err ** -0.2)
            if rejected:
                factor = min(1.0, factor)
            h = h * factor
            rejected = False
            if x.size and float(np.max(np.abs(x))) > bound:
                return np.array(ts), np.array(xs), STATUS_BOUND
            if not np.all(np.isfinite(x)):
                return np.array(ts), np.array(xs), STATUS_BOUND
        else:
            h = h * max(MIN_FACTOR, SAFETY * err ** -0.2)
            rejected = True


def dp54_poly(coef, expo, out, x0, t_end, rtol, atol, max_steps, bound):
    """``dp54`` specialised to a sparse polynomial right-hand side."""
    coef = np.asarray(coef, dtype=float)
    expo = np.asarray(expo, dtype=np.int32)
    out = np.asarray(out, dtype=np.int32)
    n_out = len(x0)

    def fun(x):
        return poly_eval(coef, expo, out, n_out, x)

    return dp54(fun, x0, t_end, rtol, atol, max_steps, bound)


def snf_diagonal(rows):
    """Diagonalise an integer matrix by unimodular row/column operations.

    ``rows`` is a list of lists of Python ints (modified in place).  Returns
    the nonzero diagonal entries, not yet normalised for divisibility.
    """
    n_rows = len(rows)
    n_cols = len(rows[0]) if n_rows else 0
    diag = []
    top = 0
    while top < n_rows and top < n_cols:
        # pivot: smallest nonzero magnitude in the remaining block
        best = None
        for i in range(top, n_rows):
            row = rows[i]
            for j in range(top, n_cols):
                v = row[j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, pi, pj = best
        rows[top], rows[pi] = rows[pi], rows[top]
        if pj != top:
            for row in rows:
                row[top], row[pj] = row[pj], row[top]
        while True:
            piv = rows[top][top]
            done = True
            for i in range(top + 1, n_rows):
                v = rows[i][top]
                if v:
                    q = v // piv
                    ri, rt = rows[i], rows[top]
                    for j in range(top, n_cols):
                        if rt[j]:
                            ri[j] -= q * rt[j]
                    if ri[top]:
                        done = False
            rt = rows[top]
            for j in range(top + 1, n_cols):
                v = rt[j]
                if v:
                    q = v // piv
                    for i in range(top, n_rows):
                        if rows[i][top]:
                            rows[i][j] -= q * rows[i][top]
                    if rt[j]:
                        done = False
            if done:
                break
            # move the smallest remaining entry of the pivot row/column up
            best = (abs(piv), top, top)
            for i in range(top + 1, n_rows):
                v = rows[i][top]
                if v and abs(v) < best[0]:
                    best = (abs(v), i, top)
            for j in range(top + 1, n_cols):
                v = rows[top][j]
                if v and abs(v) < best[0]:
                    best = (abs(v), top, j)
            _, bi, bj = best
            if bi != top:
                rows[top], rows[bi] = rows[bi], rows[top]
            if bj != top:
                for row in rows:
                    row[top], row[bj] = row[bj], row[top]
        diag.append(abs(rows[top][top]))
        top += 1
    return diag

from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from morseflow import _pykernels, kernels
from morseflow.builtins import spiral_poly
from morseflow.finspace import invariant_factors
from morseflow.polynomial import PolyMap

needs_compiled = pytest.mark.skipif("compiled" not in kernels.available_backends(), reason="extension not built")

SADDLE = PolyMap.from_terms(2, [{(1, 0): -1.0}, {(0, 1): 1.0}])


def run_poly(poly, x0, t, bound=1e8):
    return kernels.dp54_poly(poly.coef, poly.expo, poly.out, np.asarray(x0, float), t, 1e-10, 1e-10, 100_000, bound)


def test_python_backend_matches_scipy():
    poly = spiral_poly()
    x0 = np.array([1.5, 0.0])
    with kernels.use_backend("python"):
        ts, xs, status = run_poly(poly, x0, 3.0)
    ref = solve_ivp(lambda t, x: poly(x), (0, 3.0), x0, method="DOP853", rtol=1e-12, atol=1e-12)
    assert status == 0 and ts[-1] == 3.0
    assert np.allclose(xs[-1], ref.y[:, -1], atol=1e-8)


@needs_compiled
@pytest.mark.parametrize("t", [1.0, -2.0, 7.5])
def test_backend_parity_dp54(t):
    for poly, x0 in ((SADDLE, [0.3, 0.2]), (spiral_poly(), [1.2, 0.4])):
        with kernels.use_backend("python"):
            a = run_poly(poly, x0, t)
        with kernels.use_backend("compiled"):
            b = run_poly(poly, x0, t)
        assert a[2] == b[2] and len(a[0]) == len(b[0])
        assert a[0][-1] == b[0][-1] == t
        assert np.allclose(a[1][-1], b[1][-1], rtol=1e-13, atol=1e-14)
        # rounding in the error estimate nudges the step sizes slightly
        assert np.allclose(a[0], b[0], rtol=1e-5, atol=1e-6)


@needs_compiled
def test_backend_parity_bound_status():
    for name in ("python", "compiled"):
        with kernels.use_backend(name):
            ts, xs, status = run_poly(SADDLE, [0.0, 1.0], 10.0, bound=5.0)
        assert status == 1 and np.max(np.abs(xs[-1])) > 5.0 and ts[-1] < 10.0


def test_closed_form_saddle():
    ts, xs, status = run_poly(SADDLE, [1.0, 1.0], 1.0)
    assert status == 0 and np.allclose(xs[-1], [np.exp(-1), np.e], atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.data())
def test_snf_backends_agree(r, c, data):
    rows = [data.draw(st.lists(st.integers(-5, 5), min_size=c, max_size=c)) for _ in range(r)]
    ref = invariant_factors(_pykernels.snf_diagonal([list(x) for x in rows]))
    for name in kernels.available_backends():
        with kernels.use_backend(name):
            assert invariant_factors(kernels.snf_diagonal([list(x) for x in rows])) == ref
    # rank agrees with floating-point rank for these small matrices
    assert len(ref) == np.linalg.matrix_rank(np.array(rows, dtype=float))
    # the product of invariant factors is the gcd-of-minors invariant for square full-rank input
    if r == c and len(ref) == r:
        assert np.prod(ref) == abs(round(np.linalg.det(np.array(rows, dtype=float))))


def test_snf_overflow_falls_back_to_exact():
    big = 2**62
    rows = [[big, big - 1], [big - 1, big]]
    # det = 2 big - 1 = 2^63 - 1; the matrix is unimodularly equivalent to diag(1, det)
    assert invariant_factors(kernels.snf_diagonal(rows)) == [1, 2 * big - 1]
    huge = [[3 * 2**80, 0], [0, 5]]
    assert invariant_factors(kernels.snf_diagonal(huge)) == [1, 15 * 2**80]


def test_use_backend_restores_and_rejects():
    before = kernels.BACKEND
    with kernels.use_backend("python"):
        assert kernels.BACKEND == "python"
    assert kernels.BACKEND == before
    with pytest.raises(ValueError):
        with kernels.use_backend("fortran"):
            pass


def test_pure_environment_variable():
    env = dict(os.environ, MORSEFLOW_PURE="1")
    code = "from morseflow import kernels; print(kernels.BACKEND, kernels.available_backends())"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout
    assert out.split()[0] == "python" and "compiled" not in out

from __future__ import annotations

import json

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from morseflow.builtins import get_builtin
from morseflow.errors import ConfigurationError, PreconditionError
from morseflow.gradients import (
    Sampler,
    directional_derivative,
    make_complete,
    rescale,
    verify_f_gradient,
    vf_hessian,
)

x, y = sp.symbols("x y")
F = (-(x**2) + y**2) / 2


def _vf_symbolic(vx, vy):
    return sp.expand(sp.diff(F, x) * vx + sp.diff(F, y) * vy)


def test_directional_derivative_matches_symbolic(quadratic):
    expr = _vf_symbolic(-x, y)
    assert expr == x**2 + y**2
    v = quadratic.field()
    assert directional_derivative(quadratic.model, v, [1, 1]) == 2
    assert directional_derivative(quadratic.model, v, [0, 0]) == 0
    rev = quadratic.field("reversed")
    assert _vf_symbolic(x, y) == -(x**2) + y**2
    assert directional_derivative(quadratic.model, rev, [1, 0]) == -1


def test_verify_passes_for_gradient(quadratic):
    rep = verify_f_gradient(quadratic.model, quadratic.field())
    assert rep.verdict and rep.failed == ()
    h = rep.condition2[0].hessian
    # symbolic oracle: Hessian of x^2 + y^2
    oracle = np.array(sp.hessian(_vf_symbolic(-x, y), (x, y)), dtype=float)
    assert np.allclose(h, oracle) and np.allclose(h, 2 * np.eye(2))


def test_cubic_field_fails_condition_two(quadratic):
    rep = verify_f_gradient(quadratic.model, quadratic.field("cubic"))
    assert _vf_symbolic(-(x**3), y**3) == x**4 + y**4
    assert not rep.verdict
    assert rep.failing_condition == 2 and 1 not in rep.failed
    assert np.allclose(rep.condition2[0].eigenvalues, 0.0)


def test_reversed_field_fails_condition_one_with_witness(quadratic):
    rep = verify_f_gradient(quadratic.model, quadratic.field("reversed"))
    assert rep.failing_condition == 1
    assert rep.condition1_min <= -1 + 1e-12
    assert np.allclose(rep.condition1_witness, [1.0, 0.0])


def test_report_json_schema(quadratic):
    doc = json.loads(verify_f_gradient(quadratic.model, quadratic.field()).to_json())
    assert set(doc) >= {"condition1", "condition2", "verdict"}
    assert set(doc["condition1"]) >= {"min", "witness"}
    assert set(doc["condition2"][0]) >= {"point", "eigenvalues"}
    assert doc["verdict"] == "pass"


def test_empty_sampler_is_configuration_error(quadratic):
    with pytest.raises(ConfigurationError):
        # every sample falls inside the excluded ball around the origin
        verify_f_gradient(quadratic.model, quadratic.field(), Sampler(radius=1e-4, grid=3, n_random=0))


def test_sphere_field_passes():
    for n in (1, 2, 3):
        b = get_builtin(f"sphere:{n}")
        assert verify_f_gradient(b.model, b.field()).verdict


def test_rescale_pointwise(quadratic):
    v = rescale(quadratic.field(), 2.0)
    assert np.array_equal(v.at("identity", [1, 1]), [-2.0, 2.0])


def test_rescale_rejects_nonpositive(quadratic):
    with pytest.raises(PreconditionError):
        rescale(quadratic.field(), 0.0)
    v = rescale(quadratic.field(), lambda p: p[0])
    with pytest.raises(PreconditionError):
        v.at("identity", [-1.0, 0.5])


def test_rescaled_hessian_scales_by_lambda(quadratic):
    v = rescale(quadratic.field(), lambda p: 3.0 + p[0] ** 2)
    h = vf_hessian(quadratic.model, v, "identity", np.zeros(2))
    assert np.allclose(h, 6 * np.eye(2), atol=1e-6)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0.1, 10.0),
    st.floats(0.1, 10.0),
    st.lists(st.floats(-3, 3), min_size=2, max_size=2),
)
def test_rescale_is_multiplicative(quadratic, a, b, pt):
    lam = lambda p: a * np.exp(0.1 * p[0])  # noqa: E731
    mu = lambda p: b / (1 + p[1] ** 2)  # noqa: E731
    v = quadratic.field()
    twice = rescale(rescale(v, lam), mu)
    once = rescale(v, lambda p: lam(p) * mu(p))
    assert np.array_equal(twice.at("identity", pt), once.at("identity", pt))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=2))
def test_make_complete_norm_bound(quadratic, pt):
    w = make_complete(quadratic.field())
    assert np.linalg.norm(w.at("identity", pt)) <= 0.5 + 1e-15


def test_make_complete_examples(quadratic):
    w = make_complete(quadratic.field())
    assert np.linalg.norm(w.at("identity", [3, 4])) <= 1
    assert np.array_equal(w.at("identity", [0, 0]), [0.0, 0.0])
    pp = get_builtin("punctured_plane")
    assert np.array_equal(make_complete(pp.field()).at("identity", [1.0, 2.0]), [0.0, 0.5])


def test_verdict_invariant_under_rescaling(quadratic):
    for name in ("default", "cubic", "reversed"):
        v = quadratic.field(name)
        base = verify_f_gradient(quadratic.model, v)
        for c in (0.5, 4.0):
            assert verify_f_gradient(quadratic.model, rescale(v, c)).failed == base.failed

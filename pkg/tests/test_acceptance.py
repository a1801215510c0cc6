"""Acceptance suite: one test (and one PASS/FAIL line) per criterion.

Run with ``pytest tests/test_acceptance.py -s`` or directly as a script.
"""

from __future__ import annotations

import math
import sys
import time

import numpy as np
import pytest

from conftest import record_criterion
from morseflow.builtins import get_builtin
from morseflow.cli import main as cli_main
from morseflow.finspace import (
    builtin_finite_spaces,
    homology,
    minimal_sphere_model,
    nh_suspension,
    order_complex,
    orbit_space_finite_model,
    separation_report,
)
from morseflow.flow import (
    Flow,
    HyperbolicModel,
    build_box_library,
    build_critical_flow_box,
    certify_bidisk_radius,
    chart_carrier,
    integrate,
    omega_equivalent,
    omega_flow,
    orbit_equivalent,
    saturation_probe,
    saturation_samples,
    trace_distance,
)
from morseflow.gradients import Sampler, make_complete, rescale, verify_f_gradient, vf_hessian
from morseflow.lifting import LiftProblem, OrbitPath, fiber_check, lift_path, refinement_study, spiral_counterexample_report


def ball_point(rng, m, radius=1.0):
    while True:
        x = rng.uniform(-radius, radius, m)
        if np.linalg.norm(x) < radius:
            return x


def test_criterion_01_hyperbolic_oracle():
    rng = np.random.default_rng(1)
    models = {(k, m): get_builtin(f"hyperbolic:{k}:{m}") for m in range(1, 5) for k in range(m + 1)}
    keys = list(models)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(1000):
        k, m = keys[rng.integers(len(keys))]
        b = models[(k, m)]
        x = ball_point(rng, m)
        t = rng.uniform(-2, 2)
        got = integrate(b.model, b.field(), x, t)
        worst = max(worst, float(np.max(np.abs(got - omega_flow(HyperbolicModel(m, k), x, t)))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 10
    record_criterion(1, "hyperbolic-flow oracle", ok, f"max error {worst:.2e}, {elapsed:.2f} s")
    assert worst <= 1e-8
    assert elapsed < 10


def test_criterion_02_sphere_model_homology():
    t0 = time.perf_counter()
    ok = True
    for n in range(1, 6):
        X = minimal_sphere_model(n)
        prof = homology(order_complex(X))
        expected = tuple((1 if i in (0, n) else 0, ()) for i in range(n + 1))
        ok &= len(X) == 2 * n + 2 and prof.padded(n + 1) == expected and len(prof.betti) == n + 1
    elapsed = time.perf_counter() - t0
    record_criterion(2, "sphere-model homology", ok and elapsed < 5, f"n = 1..5, {elapsed:.2f} s")
    assert ok
    assert elapsed < 5


def test_criterion_03_suspension_isomorphism():
    spaces = builtin_finite_spaces(12)
    bad = []
    for name, X in spaces.items():
        h = homology(order_complex(X)).reduced()
        hs = homology(order_complex(nh_suspension(X))).reduced()
        n = max(len(h.betti), len(hs.betti)) + 1
        if hs.padded(n + 1)[1:] != h.padded(n) or hs.padded(1)[0] != (0, ()):
            bad.append(name)
    record_criterion(3, "suspension isomorphism", not bad, f"{len(spaces)} spaces, failures: {bad or 'none'}")
    assert not bad


def test_criterion_04_fgradient_triple(capsys):
    codes = {f: cli_main(["verify-gradient", "--model", "quadratic", "--field", f]) for f in ("default", "cubic", "reversed")}
    capsys.readouterr()
    b = get_builtin("quadratic")
    reps = {f: verify_f_gradient(b.model, b.field(f), Sampler()) for f in codes}
    ok = (
        codes == {"default": 0, "cubic": 1, "reversed": 1}
        and reps["default"].verdict
        and reps["cubic"].failed == (2,)
        and reps["reversed"].failing_condition == 1
        and np.allclose(reps["reversed"].condition1_witness, [1.0, 0.0], atol=0.1)
    )
    record_criterion(4, "f-gradient verification triple", ok, f"exit codes {list(codes.values())}")
    assert ok


def test_criterion_05_rescaling_suite():
    rng = np.random.default_rng(5)
    b = get_builtin("quadratic")
    v = b.field()
    base = {f: verify_f_gradient(b.model, b.field(f), Sampler()).verdict for f in ("default", "cubic", "reversed")}
    verdicts_ok = True
    hess_err = 0.0
    h0 = vf_hessian(b.model, v, "identity", np.zeros(2))
    for _ in range(5):
        a, c, w = rng.uniform(0.1, 3.0, 3)
        lam = lambda p, a=a, c=c, w=w: a + c * math.sin(w * p[0]) ** 2 + 0.5 * p[1] ** 2  # noqa: E731
        for f in base:
            verdicts_ok &= verify_f_gradient(b.model, rescale(b.field(f), lam), Sampler()).verdict == base[f]
        hl = vf_hessian(b.model, rescale(v, lam), "identity", np.zeros(2))
        hess_err = max(hess_err, float(np.max(np.abs(hl - lam(np.zeros(2)) * h0))) / (a * np.max(np.abs(h0))))
    w = make_complete(v)
    trace = 0.0
    for seed in range(20):
        p = np.random.default_rng(seed).uniform(-2, 2, 2)
        trace = max(trace, trace_distance(b.model, v, w, p, 1.0, levels=20))
    ok = verdicts_ok and hess_err <= 1e-6 and trace <= 1e-6
    record_criterion(5, "rescaling suite", ok, f"hessian rel. error {hess_err:.1e}, trace distance {trace:.1e}")
    assert verdicts_ok
    assert hess_err <= 1e-6
    assert trace <= 1e-6


def test_criterion_06_certified_bidisk():
    b = get_builtin("hyperbolic:1:2")
    fl = Flow(b.model, b.field())
    box = certify_bidisk_radius(build_critical_flow_box(fl, [0, 0], 1.0), 0.5, 0.05)
    r = box.radius
    rng = np.random.default_rng(6)
    hm = box.hyperbolic

    def in_bidisk():
        return rng.uniform(-r, r, 2) * (1 - 1e-9)

    disagreements = 0
    for i in range(1000):
        x = in_bidisk()
        if i % 2:
            y = in_bidisk()
        else:
            lo, hi = chart_carrier(hm.k, x, r)
            y = omega_flow(hm, x, rng.uniform(max(lo, -10.0), min(hi, 10.0)))
        disagreements += omega_equivalent(hm.k, x, y) != bool(orbit_equivalent(fl, x, y))
    ok = r >= 0.45 - 1e-12 and disagreements == 0
    record_criterion(6, "certified bidisk", ok, f"r = {r:.3f}, {disagreements} disagreements in 1000 pairs")
    assert r >= 0.45 - 1e-12
    assert disagreements == 0


def test_criterion_07_case1_lift():
    b = get_builtin("punctured_plane")
    fl = Flow(b.model, b.field())
    s = np.linspace(0, 1, 33)
    reps = np.column_stack([s, np.ones_like(s)])
    reps[0] = [0.0, 3.0]
    e0, e1 = np.array([0.0, 3.0]), np.array([1.0, -5.0])
    res = lift_path(LiftProblem(OrbitPath(s, reps, (False,) * len(s)), e0, e1), fl)
    err = float(np.max(np.abs(res.points - np.column_stack([s, 3 - 8 * s]))))
    exact = np.array_equal(res.points[0], e0) and np.array_equal(res.points[-1], e1)
    record_criterion(7, "path lifting, regular case", err <= 1e-9 and exact, f"max error {err:.1e}, endpoints exact: {exact}")
    assert err <= 1e-9
    assert exact


def circle_path(s):
    if s == 0.5:
        return np.array([0.0, 1.0]), True
    ph = math.pi * s if s < 0.5 else math.pi * (1 - s)
    return np.array([-math.cos(ph) if s < 0.5 else math.cos(ph), math.sin(ph)]), False


def test_criterion_08_case2_lift():
    t0 = time.perf_counter()
    b = get_builtin("sphere:1")
    fl = Flow(b.model, b.field())
    lib = build_box_library(fl)
    results, fibers = [], True
    for level in range(3, 9):
        path = OrbitPath.from_function(circle_path, 2**level)
        res = lift_path(LiftProblem(path, np.array([-1.0, 0.0]), np.array([1.0, 0.0])), fl, lib)
        fibers &= all(fiber_check(fl, res, path))
        results.append((2.0**-level, res))
    study = refinement_study(results, tolerance=0.05)
    elapsed = time.perf_counter() - t0
    ok = fibers and study.monotone and elapsed < 30
    disp = ", ".join(f"{d:.3f}" for d in study.displacements)
    record_criterion(8, "path lifting through a critical class", ok, f"displacements {disp}; {elapsed:.1f} s")
    assert fibers
    assert study.monotone
    assert elapsed < 30


def test_criterion_09_spiral():
    rep = spiral_counterexample_report(range(4, 11))
    ok = rep.strictly_increasing and rep.max_tau[-1] > 1e3
    record_criterion(9, "spiral divergence witness", ok, "max|tau| " + ", ".join(f"{t:.0f}" for t in rep.max_tau))
    assert rep.strictly_increasing
    assert rep.max_tau[-1] > 1e3


def test_criterion_10_separation():
    ok = True
    spaces = builtin_finite_spaces(12)
    spaces["parallel"] = orbit_space_finite_model("parallel")
    for name, X in spaces.items():
        rep = separation_report(X)
        ok &= rep.t0
        if not name.startswith("X"):  # orbit-space models carry class annotations
            ok &= rep.t1 == ("critical" not in X.annotations)
        elif name != "X0":  # X_n for n >= 1 is a suspension
            ok &= tuple(X.points[-2:]) in rep.inseparable_pairs and not rep.t1
    record_criterion(10, "separation facts", ok, f"{len(spaces)} models")
    assert ok


def test_criterion_11_saturation():
    b = get_builtin("hyperbolic:1:2")
    fl = Flow(b.model, b.field())
    box = certify_bidisk_radius(build_critical_flow_box(fl, [0, 0], 1.0), 0.5, 0.05)
    samples = saturation_samples(box, 100, seed=11)
    rep = saturation_probe(box, samples, (-1.0, -0.5, 0.5, 1.0))
    ok = rep.max_residual < 1e-6 and rep.n_skipped == 0
    record_criterion(11, "flow equivariance of the saturation map", ok, f"residual {rep.max_residual:.1e} over {rep.n_samples} samples")
    assert rep.n_skipped == 0
    assert rep.max_residual < 1e-6


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))

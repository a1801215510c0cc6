"""Adaptive Dormand-Prince integration on charted manifolds.

Integration runs chart by chart: a segment stays in one chart until the
coordinates leave that chart's comfort radius, then continues in the best
chart at the exit point.  Events (level crossings, bidisk entry) are located
by bracketing on accepted steps and polishing with Brent's method on
re-integrated short spans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .errors import EscapeError, NumericError, StiffnessError
from .gradients import VectorField
from .models import MorseModel

STATUS_DONE, STATUS_BOUND, STATUS_MAX_STEPS, STATUS_UNDERFLOW = 0, 1, 2, 3


@dataclass(frozen=True)
class FlowConfig:
    rtol: float = 1e-9
    atol: float = 1e-9
    horizon: float = 1e3
    max_steps: int = 2_000_000
    merge_tol: float = 1e-6
    event_tol: float = 1e-12

    def __post_init__(self):
        for name in ("rtol", "atol", "horizon", "merge_tol", "event_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Accepted step samples of one integral curve.

    ``interval`` is the time span actually covered; ``escaped`` marks an
    integration that stopped because the curve left the manifold.
    """

    times: np.ndarray
    points: np.ndarray
    interval: tuple[float, float]
    tolerance: float
    escaped: bool = False

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def to_csv(self) -> str:
        d = self.points.shape[1]
        lines = [",".join(["t"] + [f"x{i + 1}" for i in range(d)])]
        for t, p in zip(self.times, self.points):
            lines.append(",".join([repr(float(t))] + [repr(float(v)) for v in p]))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Event:
    found: bool
    time: float
    point: np.ndarray | None
    reason: str = ""


class Flow:
    """Flow of ``field`` on ``model.manifold``."""

    def __init__(self, model: MorseModel, field: VectorField, config: FlowConfig | None = None):
        self.model = model
        self.field = field
        self.config = config or FlowConfig()
        self.manifold = model.manifold

    def _segment(self, chart, x, t_end):
        cfg = self.config
        bound = chart.comfort if math.isfinite(chart.comfort) else self.manifold.escape_radius
        poly = self.field.poly(chart.name)
        if poly is not None:
            return kernels.dp54_poly(poly.coef, poly.expo, poly.out, x, t_end, cfg.rtol, cfg.atol, cfg.max_steps, bound)
        return kernels.dp54(self.field.callable_for(chart.name), x, t_end, cfg.rtol, cfg.atol, cfg.max_steps, bound)

    def _to_ambient(self, chart, xs):
        if chart.to_coords is chart.from_coords:  # identity charts share one function
            return np.array(xs, dtype=float)
        return np.array([chart.from_coords(x) for x in xs])

    def trajectory(self, p, t: float, *, allow_escape: bool = False) -> Trajectory:
        p = np.asarray(p, dtype=float)
        chart = self.manifold.best_chart(p)
        times = [np.zeros(1)]
        points = [p[None, :]]
        t_done = 0.0
        x = chart.to_coords(p)
        while t_done != t:
            ts, xs, status = self._segment(chart, x, t - t_done)
            amb = self._to_ambient(chart, xs[1:])
            if len(amb):
                bad = self.manifold.first_invalid(np.vstack([points[-1][-1:], amb]))
                if bad is not None:
                    times.append(t_done + ts[1:bad])
                    points.append(amb[: bad - 1])
                    exit_time = float(t_done + ts[bad])
                    if allow_escape:
                        return self._pack(times, points, True)
                    raise EscapeError(f"trajectory from {p.tolist()} left the manifold near t={exit_time:.6g}", exit_time)
                times.append(t_done + ts[1:])
                points.append(amb)
            if status == STATUS_DONE:
                t_done = t
                break
            if status == STATUS_MAX_STEPS:
                raise NumericError(f"step budget exhausted at t={t_done + ts[-1]:.6g}")
            if status == STATUS_UNDERFLOW:
                raise StiffnessError(f"step size underflow at t={t_done + ts[-1]:.6g}")
            # left the chart comfort region: continue in the best chart
            t_done = float(t_done + ts[-1])
            last = points[-1][-1]
            new_chart = self.manifold.best_chart(last)
            if new_chart is chart:
                if allow_escape:
                    return self._pack(times, points, True)
                raise EscapeError(f"trajectory from {p.tolist()} escaped near t={t_done:.6g}", t_done)
            chart = new_chart
            x = chart.to_coords(last)
        return self._pack(times, points, False)

    def _pack(self, times, points, escaped):
        ts = np.concatenate(times)
        pts = np.vstack(points)
        return Trajectory(ts, pts, (float(min(ts[0], ts[-1])), float(max(ts[0], ts[-1]))), self.config.rtol, escaped)

    def point(self, p, t: float) -> np.ndarray:
        if t == 0:
            return np.array(p, dtype=float)
        return self.trajectory(p, t).end

    def until(self, p, g: Callable[[np.ndarray], float], direction: float, horizon: float | None = None) -> Event:
        """First time (in the sign of ``direction``) at which ``g`` changes
        sign along the orbit of ``p``."""
        horizon = self.config.horizon if horizon is None else horizon
        p = np.asarray(p, dtype=float)
        g0 = g(p)
        if g0 == 0.0:
            return Event(True, 0.0, p.copy())
        sign0 = g0 > 0
        sgn = 1.0 if direction >= 0 else -1.0
        t_now = 0.0
        cur = p
        chunk = 1.0
        while abs(t_now) < horizon:
            span = min(chunk, horizon - abs(t_now))
            traj = self.trajectory(cur, sgn * span, allow_escape=True)
            vals = [g(q) for q in traj.points[1:]]
            for i, v in enumerate(vals):
                if (v > 0) != sign0 or v == 0.0:
                    a = traj.points[i]
                    ta = float(traj.times[i])
                    dt = float(traj.times[i + 1]) - ta
                    if v == 0.0:
                        return Event(True, t_now + ta + dt, traj.points[i + 1].copy())
                    tau = brentq(lambda s: g(self.point(a, s)), 0.0, dt, xtol=self.config.event_tol, rtol=4 * np.finfo(float).eps)
                    return Event(True, t_now + ta + tau, self.point(a, tau))
            if traj.escaped:
                # the event may still lie between the last valid step and the
                # exit: back off with shorter spans before giving up
                t_now += float(traj.times[-1])
                cur = traj.end
                chunk = 0.5 * min(chunk, span)
                if chunk < 1e-9:
                    return Event(False, t_now, cur.copy(), "escape")
                continue
            t_now += sgn * span
            cur = traj.end
            chunk = min(chunk * 2, 64.0)
        return Event(False, t_now, cur.copy(), "horizon")

    def to_level(self, p, level: float, horizon: float | None = None) -> Event:
        """Flow ``p`` until f reaches ``level`` (f is increasing along orbits)."""
        f0 = self.model.value(p)
        if f0 == level:
            return Event(True, 0.0, np.array(p, dtype=float))
        direction = 1.0 if level > f0 else -1.0
        return self.until(p, lambda q: self.model.value(q) - level, direction, horizon)

"""Flows, the hyperbolic model, flow boxes and orbit equivalence.

Near a critical point the chart map itself plays the role of the
linearizing homeomorphism, so critical boxes are only built where the field
agrees with the standard hyperbolic field in chart coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .errors import (
    CertificationError,
    EmptyCarrierError,
    EscapeError,
    GeometryError,
    NumericError,
    PreconditionError,
)
from .gradients import VectorField
from .integrate import Flow, FlowConfig, Trajectory
from .models import MorseModel, morse_index

__all__ = [
    "Flow",
    "FlowConfig",
    "Trajectory",
    "HyperbolicModel",
    "omega_flow",
    "integrate",
    "OrbitMatch",
    "orbit_equivalent",
    "trace_distance",
    "RegularFlowBox",
    "build_regular_flow_box",
    "CriticalFlowBox",
    "build_critical_flow_box",
    "certify_bidisk_radius",
    "carrier",
    "select_time",
    "omega_equivalent",
    "saturation_probe",
    "saturation_samples",
    "scaling_class_check",
    "build_box_library",
]

LINEARITY_TOL = 1e-6


@dataclass(frozen=True)
class HyperbolicModel:
    """The standard hyperbolic field on R^m with k contracting directions."""

    m: int
    k: int

    def __post_init__(self):
        if self.m < 1 or not 0 <= self.k <= self.m:
            raise ValueError(f"need 0 <= k <= m and m >= 1, got k={self.k}, m={self.m}")

    @property
    def signs(self) -> np.ndarray:
        return np.array([-1.0] * self.k + [1.0] * (self.m - self.k))

    def omega(self, x) -> np.ndarray:
        return self.signs * np.asarray(x, dtype=float)

    def split(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        return x[: self.k], x[self.k :]

    def in_bidisk(self, x, radius: float) -> bool:
        xs, xu = self.split(x)
        return bool(np.linalg.norm(xs) < radius and np.linalg.norm(xu) < radius)


def omega_flow(model: HyperbolicModel, x, t: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if t == 0:
        return x.copy()
    return x * np.exp(model.signs * t)


def integrate(model: MorseModel, field: VectorField, p, t: float, config: FlowConfig | None = None) -> np.ndarray:
    """Phi_t(p) for the flow of ``field``."""
    config = config or FlowConfig()
    if abs(t) > config.horizon:
        raise PreconditionError(f"|t|={abs(t)} exceeds the horizon {config.horizon}")
    return Flow(model, field, config).point(p, t)


# ---------------------------------------------------------------------------
# orbit equivalence


@dataclass(frozen=True)
class OrbitMatch:
    """Outcome of an orbit-equivalence test.

    ``undecided`` marks a negative that only means "not matched within the
    horizon" (the level of the second point was never reached).
    """

    equivalent: bool
    time: float | None
    undecided: bool = False
    reason: str = ""

    def __bool__(self) -> bool:
        return self.equivalent

    def to_dict(self) -> dict:
        return {"equivalent": self.equivalent, "time": self.time, "undecided": self.undecided, "reason": self.reason}


def orbit_equivalent(flow: Flow, p1, p2) -> OrbitMatch:
    """Decide p1 ~ p2 using f as a clock along the orbit of ``p1``."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    model = flow.model
    tol = flow.config.merge_tol
    c1, c2 = model.is_critical(p1), model.is_critical(p2)
    if c1 is not None or c2 is not None:
        same = c1 is not None and c2 is not None and c1 is c2
        return OrbitMatch(same, 0.0 if same else None, reason="critical")
    if np.linalg.norm(p1 - p2) <= tol:
        return OrbitMatch(True, 0.0)
    ev = flow.to_level(p1, model.value(p2))
    if not ev.found:
        return OrbitMatch(False, None, undecided=True, reason=ev.reason)
    if np.linalg.norm(ev.point - p2) <= tol:
        return OrbitMatch(True, ev.time)
    return OrbitMatch(False, None, reason="level reached elsewhere")


def trace_distance(model: MorseModel, v: VectorField, w: VectorField, p, t: float, levels: int = 40,
                   config: FlowConfig | None = None) -> float:
    """Upper bound on the Hausdorff distance between the orbit arcs of ``v``
    and ``w`` from ``p`` over the f-range swept by ``v`` in time ``t``.

    Both arcs are parameterized by f, so points at equal f-levels are
    compared; the maximum of those gaps bounds the Hausdorff distance.
    """
    fv = Flow(model, v, config)
    fw = Flow(model, w, config)
    p = np.asarray(p, dtype=float)
    f0, f1 = model.value(p), model.value(fv.point(p, t))
    worst = 0.0
    for lv in np.linspace(f0, f1, levels)[1:]:
        a = fv.to_level(p, float(lv))
        b = fw.to_level(p, float(lv))
        if not (a.found and b.found):
            raise NumericError(f"level {lv} not reached by both flows")
        worst = max(worst, float(np.linalg.norm(a.point - b.point)))
    return worst


# ---------------------------------------------------------------------------
# regular flow boxes


def _complement_basis(n: np.ndarray) -> np.ndarray:
    """Orthonormal basis (as columns) of the complement of the unit vector n,
    obtained by Gram-Schmidt on the standard basis minus its most aligned
    member, so that the result is deterministic and sign-stable."""
    m = n.size
    drop = int(np.argmax(np.abs(n)))
    cols = []
    for i in range(m):
        if i == drop:
            continue
        e = np.zeros(m)
        e[i] = 1.0
        e -= (e @ n) * n
        for c in cols:
            e -= (e @ c) * c
        cols.append(e / np.linalg.norm(e))
    return np.array(cols).T if cols else np.zeros((m, 0))


@dataclass(frozen=True, eq=False)
class RegularFlowBox:
    """Flow box H(t, xi) = Phi_t(h(xi)) over a level-set transversal.

    ``h(xi) = y + E xi + g(xi) n`` in chart coordinates with ``n`` the unit
    gradient at ``y``; ``radius`` bounds the transversal disk and ``window``
    the time interval on which injectivity was checked.
    """

    flow: Flow
    base: np.ndarray
    chart: str
    x0: np.ndarray
    normal: np.ndarray
    basis: np.ndarray
    level: float
    radius: float
    window: float
    injectivity_pairs: int = 0

    @property
    def transversal_dim(self) -> int:
        return self.basis.shape[1]

    def _level_offset(self, xi) -> float:
        model = self.flow.model
        p = self.x0 + self.basis @ xi

        def g(s):
            return model.f_at(self.chart, p + s * self.normal) - self.level

        s = 0.0
        for _ in range(30):
            val = g(s)
            if abs(val) < 1e-14:
                return s
            slope = float(model.grad_at(self.chart, p + s * self.normal) @ self.normal)
            if slope <= 0:
                break
            step = val / slope
            s -= step
            if abs(step) < 1e-15:
                return s
        # Newton stalled: bracket along the normal and polish
        span = max(1.0, 4 * float(np.linalg.norm(xi)))
        try:
            return brentq(g, -span, span, xtol=1e-15)
        except ValueError:
            raise GeometryError(f"level set solve failed at xi={np.asarray(xi).tolist()}") from None

    def transversal(self, xi) -> np.ndarray:
        """h(xi) as an ambient point."""
        xi = np.asarray(xi, dtype=float).reshape(self.transversal_dim)
        x = self.x0 + self.basis @ xi + self._level_offset(xi) * self.normal
        return self.flow.manifold.chart(self.chart).from_coords(x)

    def H(self, t: float, xi) -> np.ndarray:
        return self.flow.point(self.transversal(xi), t)

    def inverse(self, e) -> tuple[float, np.ndarray] | None:
        """(t, xi) with H(t, xi) on the orbit of ``e`` at time matching ``e``,
        or None when the orbit of ``e`` misses the box transversal."""
        ev = self.flow.to_level(e, self.level)
        if not ev.found:
            return None
        q = ev.point
        man = self.flow.manifold
        ch = man.chart(self.chart)
        if not ch.contains(q):
            return None
        xq = ch.to_coords(q)
        xi = self.basis.T @ (xq - self.x0)
        if float(np.linalg.norm(xi)) >= self.radius:
            return None
        # on the same sheet of the level set as the transversal graph
        try:
            off = self._level_offset(xi)
        except GeometryError:
            return None
        if abs(float(self.normal @ (xq - self.x0)) - off) > 1e-6:
            return None
        return -ev.time, xi

    def contains_class(self, e) -> bool:
        return self.inverse(e) is not None

    def to_dict(self) -> dict:
        return {
            "base": self.base.tolist(),
            "chart": self.chart,
            "level": self.level,
            "radius": self.radius,
            "window": self.window,
        }


def _transversal_grid(dim: int, radius: float, n: int) -> np.ndarray:
    if dim == 0:
        return np.zeros((1, 0))
    axis = np.linspace(-radius, radius, n) * (1 - 1e-9)
    grid = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    return grid[np.linalg.norm(grid, axis=1) < radius]


def build_regular_flow_box(
    flow: Flow,
    y,
    *,
    radius: float = 0.5,
    window: float = 1.0,
    grid: int = 9,
    slide_step: float = 1e-3,
) -> RegularFlowBox:
    """Flow box through the regular point ``y``.

    If ``f(y)`` equals a critical value, ``y`` first slides a little along its
    orbit.  The transversal radius halves until the level-set graph solve,
    manifold membership and the injectivity grid check all succeed.
    """
    model = flow.model
    y = np.asarray(y, dtype=float)
    chart, x0 = model.manifold.coords(y)
    grad = model.grad_at(chart.name, x0)
    if float(np.linalg.norm(grad)) < model.grad_tol:
        raise PreconditionError(f"{y.tolist()} is a critical point; no regular flow box exists there")
    crit_values = [model.value(c) for c in model.critical_points]
    for _ in range(100):
        if all(abs(model.value(y) - c) > 1e-9 for c in crit_values):
            break
        y = flow.point(y, slide_step)
    chart, x0 = model.manifold.coords(y)
    grad = model.grad_at(chart.name, x0)
    normal = grad / np.linalg.norm(grad)
    basis = _complement_basis(normal)
    level = model.f_at(chart.name, x0)

    rho = radius
    last_err: Exception | None = None
    for _ in range(24):
        box = RegularFlowBox(flow, y.copy(), chart.name, x0, normal, basis, level, rho, window)
        try:
            pairs = _certify_regular(box, grid)
            return RegularFlowBox(flow, y.copy(), chart.name, x0, normal, basis, level, rho, window, pairs)
        except (GeometryError, EscapeError, NumericError, CertificationError) as exc:
            last_err = exc
            rho *= 0.5
    raise GeometryError(f"could not certify a transversal at {y.tolist()}: {last_err}")


def _certify_regular(box: RegularFlowBox, n: int) -> int:
    model = box.flow.model
    man = box.flow.manifold
    xis = _transversal_grid(box.transversal_dim, box.radius, n)
    ts = np.linspace(-box.window, box.window, n)
    pts, params = [], []
    for xi in xis:
        h = box.transversal(xi)
        if not man.contains(h):
            raise GeometryError("transversal leaves the manifold")
        chart = man.chart(box.chart)
        xh = chart.to_coords(h)
        if abs(model.f_at(box.chart, xh) - box.level) > 1e-9:
            raise GeometryError("transversal is off the level set")
        if float(model.grad_at(box.chart, xh) @ box.normal) <= 0.0:
            raise GeometryError("level set is not a graph over the tangent plane")
        fwd = box.flow.trajectory(h, box.window)
        bwd = box.flow.trajectory(h, -box.window)
        for t in ts:
            src = fwd if t >= 0 else bwd
            pts.append(_sample_at(box.flow, src, t))
            params.append(np.concatenate([[t], xi]))
    pts = np.array(pts)
    params = np.array(params)
    close = cKDTree(pts).query_pairs(box.flow.config.merge_tol)
    for i, j in close:
        d = np.abs(params[i] - params[j])
        if d[0] >= 1e-4 or (d.size > 1 and np.max(d[1:]) >= 1e-4):
            raise CertificationError("flow box is not injective on the sample grid")
    return len(close)


def _sample_at(flow: Flow, traj: Trajectory, t: float) -> np.ndarray:
    """Point of ``traj`` at time t, integrating from the nearest earlier step."""
    times = traj.times
    if t == 0:
        return traj.points[0]
    if t > 0:
        i = int(np.searchsorted(times, t, side="right")) - 1
    else:
        i = int(np.searchsorted(-times, -t, side="right")) - 1
    return flow.point(traj.points[i], t - float(times[i]))


# ---------------------------------------------------------------------------
# critical flow boxes


@dataclass(frozen=True, eq=False)
class CriticalFlowBox:
    """Bidisk chart around a critical point where the field is linear.

    ``radius`` is the certified r(p) (zero until certified); ``working``
    the current working radius r' <= r(p).
    """

    flow: Flow
    point: np.ndarray
    index: int
    chart: str
    R: float
    linearity_residual: float
    radius: float = 0.0
    working: float = 0.0
    grid_step: float | None = None

    @property
    def hyperbolic(self) -> HyperbolicModel:
        return HyperbolicModel(self.flow.manifold.dim, self.index)

    def with_radius(self, r: float, grid_step: float | None = None) -> "CriticalFlowBox":
        return CriticalFlowBox(
            self.flow, self.point, self.index, self.chart, self.R, self.linearity_residual, r, r, grid_step or self.grid_step
        )

    def with_working(self, r_work: float) -> "CriticalFlowBox":
        if not 0 < r_work <= self.radius:
            raise PreconditionError(f"working radius {r_work} outside (0, {self.radius}]")
        return CriticalFlowBox(
            self.flow, self.point, self.index, self.chart, self.R, self.linearity_residual, self.radius, r_work, self.grid_step
        )

    def to_chart(self, p) -> np.ndarray | None:
        ch = self.flow.manifold.chart(self.chart)
        p = np.asarray(p, dtype=float)
        if not ch.contains(p):
            return None
        return ch.to_coords(p)

    def psi(self, x) -> np.ndarray:
        return self.flow.manifold.chart(self.chart).from_coords(np.asarray(x, dtype=float))

    def block_norms(self, x) -> tuple[float, float]:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x[: self.index])), float(np.linalg.norm(x[self.index :]))

    def certificate(self) -> dict:
        return {
            "p": self.point.tolist(),
            "k": self.index,
            "R": self.R,
            "r": self.radius,
            "grid_step": self.grid_step,
            "linearity_residual": self.linearity_residual,
        }

    def to_json(self) -> str:
        return json.dumps(self.certificate(), indent=2, sort_keys=True)


def _linearity_residual(flow: Flow, chart: str, k: int, R: float, seed: int = 0, n: int = 400) -> float:
    m = flow.manifold.dim
    hm = HyperbolicModel(m, k)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-R, R, size=(n, m)) / math.sqrt(m)
    axis = np.linspace(-R, R, 5) * (1 - 1e-9)
    grid = np.stack(np.meshgrid(*([axis] * min(m, 3)), indexing="ij"), axis=-1).reshape(-1, min(m, 3))
    if m > 3:
        grid = np.hstack([grid, np.zeros((grid.shape[0], m - 3))])
    worst = 0.0
    for x in np.vstack([pts, grid]):
        if not hm.in_bidisk(x, R):
            continue
        worst = max(worst, float(np.max(np.abs(flow.field.at(chart, x) - hm.omega(x)))))
    return worst


def build_critical_flow_box(flow: Flow, p, R: float = 1.0, tol: float = LINEARITY_TOL) -> CriticalFlowBox:
    """Uncertified bidisk box at critical point ``p`` (chart centred at p)."""
    model = flow.model
    c = model.is_critical(p)
    if c is None:
        raise PreconditionError(f"{np.asarray(p).tolist()} is not a listed critical point")
    chart, x = model.manifold.coords(c)
    if float(np.linalg.norm(x)) > 1e-12:
        raise CertificationError(f"chart {chart.name!r} is not centred at the critical point")
    k = morse_index(model, c, chart.name)
    if not R < chart.comfort:
        R = min(R, chart.comfort)
    res = _linearity_residual(flow, chart.name, k, R)
    if res > tol:
        raise CertificationError(f"field is not linear in chart {chart.name!r} (residual {res:.3g} > {tol:g})")
    return CriticalFlowBox(flow, c.copy(), k, chart.name, R, res)


def _sphere_directions(d: int, n: int, rng) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        a = np.linspace(0, 2 * math.pi, n, endpoint=False)
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    v = rng.standard_normal((n, d))
    return np.vstack([np.eye(d), -np.eye(d), v / np.linalg.norm(v, axis=1, keepdims=True)])


def _disk_samples(d: int, rho: float, n: int, rng) -> np.ndarray:
    if d == 0:
        return np.zeros((1, 0))
    dirs = _sphere_directions(d, n, rng)
    radii = np.linspace(0.0, rho, 7)
    return np.vstack([r * dirs for r in radii])


def certify_bidisk_radius(
    box: CriticalFlowBox, R0: float, grid_step: float | None = None, *, n_dirs: int = 32, seed: int = 0
) -> CriticalFlowBox:
    """Grid search for r = min(rho1, rho2) separating the level of p.

    Candidates rho = j * grid_step < R0 are tried largest first; for k = 0
    or k = m one side is vacuous and r = R0 - grid_step.  Returns the box
    with its certified radius set.
    """
    if not 0 < R0 < box.R:
        raise PreconditionError(f"need 0 < R0 < R = {box.R}, got {R0}")
    step = grid_step if grid_step is not None else R0 / 20
    if not 0 < step < R0:
        raise PreconditionError(f"grid step {step} must lie in (0, R0)")
    model = box.flow.model
    m, k = box.flow.manifold.dim, box.index
    fp = model.f_at(box.chart, np.zeros(m))
    rng = np.random.default_rng(seed)
    n_cand = int(math.floor(R0 / step - 1e-9))
    while n_cand * step >= R0 - 1e-12:
        n_cand -= 1
    cands = [j * step for j in range(n_cand, 0, -1)]
    if not cands:
        raise CertificationError("no grid candidates below R0", step)

    def f_vals(stable, unstable):
        out = []
        for a in stable:
            for b in unstable:
                out.append(model.f_at(box.chart, np.concatenate([a, b])))
        return np.array(out)

    def admissible_A(rho):
        if m - k == 0:
            return True
        vals = f_vals(_disk_samples(k, rho, n_dirs, rng), R0 * _sphere_directions(m - k, n_dirs, rng))
        return bool(np.all(vals > fp))

    def admissible_B(rho):
        if k == 0:
            return True
        vals = f_vals(R0 * _sphere_directions(k, n_dirs, rng), _disk_samples(m - k, rho, n_dirs, rng))
        return bool(np.all(vals < fp))

    rho1 = next((c for c in cands if admissible_A(c)), None)
    rho2 = next((c for c in cands if admissible_B(c)), None)
    if rho1 is None or rho2 is None:
        raise CertificationError(f"no admissible radius at grid step {step}", step)
    return box.with_radius(min(rho1, rho2), step)


def omega_equivalent(k: int, x, y, rtol: float = 1e-9) -> bool:
    """Closed-form test that x and y lie on one orbit of omega.

    Inside a bidisk each orbit meets the bidisk in a connected arc, so
    sharing an orbit is the same as sharing a class of the bidisk relation.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xs, xu, ys, yu = x[:k], x[k:], y[:k], y[k:]
    times = []
    for a, b, sign in ((xs, ys, -1.0), (xu, yu, 1.0)):
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if na == 0.0 or nb == 0.0:
            if na != nb:
                return False
            continue
        if np.linalg.norm(a / na - b / nb) > rtol:
            return False
        times.append(sign * math.log(nb / na))
    if len(times) < 2:
        return True
    return abs(times[0] - times[1]) <= rtol * max(1.0, abs(times[0]))


# ---------------------------------------------------------------------------
# carriers


@dataclass(frozen=True)
class Entry:
    """A point of the orbit inside the chart ball B(R) and the flow time
    from the original start point to it."""

    x: np.ndarray
    offset: float


def enter_chart_ball(box: CriticalFlowBox, start) -> Entry:
    """Move ``start`` along its orbit into the linear region B(R) of the box."""
    start = np.asarray(start, dtype=float)
    x = box.to_chart(start)
    R_in = 0.999 * box.R
    if x is not None and max(box.block_norms(x)) < R_in:
        return Entry(x, 0.0)
    flow = box.flow
    fp = flow.model.value(box.point)
    direction = 1.0 if flow.model.value(start) < fp else -1.0

    def g(q):
        xq = box.to_chart(q)
        if xq is None:
            return 1.0
        return max(box.block_norms(xq)) - R_in

    ev = flow.until(start, g, direction)
    if not ev.found:
        raise EmptyCarrierError(f"orbit of {start.tolist()} never enters the bidisk chart ball ({ev.reason})")
    return Entry(box.to_chart(ev.point), ev.time)


def chart_carrier(k: int, x, radius: float) -> tuple[float, float]:
    """Open interval of t with Omega_t(x) in the open bidisk of ``radius``."""
    x = np.asarray(x, dtype=float)
    a = float(np.linalg.norm(x[:k]))
    b = float(np.linalg.norm(x[k:]))
    lo = math.log(a / radius) if a > 0 else -math.inf
    hi = math.log(radius / b) if b > 0 else math.inf
    if not lo < hi:
        raise EmptyCarrierError(f"orbit misses the bidisk of radius {radius}")
    return lo, hi


def min_meeting_radius(k: int, m: int, x) -> float:
    """Infimum of radii whose bidisk meets the omega-orbit of x."""
    if k == 0 or k == m:
        return 0.0
    x = np.asarray(x, dtype=float)
    return math.sqrt(float(np.linalg.norm(x[:k])) * float(np.linalg.norm(x[k:])))


def carrier(box: CriticalFlowBox, start, radius: float | None = None) -> tuple[float, float]:
    """Times t with Phi_t(start) inside psi(B(p, r')), r' the working radius."""
    radius = box.working if radius is None else radius
    if not radius > 0:
        raise PreconditionError("box has no working radius; certify it first")
    entry = enter_chart_ball(box, start)
    lo, hi = chart_carrier(box.index, entry.x, radius)
    return lo + entry.offset, hi + entry.offset


def select_time(interval: tuple[float, float]) -> float:
    """Selection from a carrier: midpoint, or one unit inside a half-line."""
    lo, hi = interval
    if math.isinf(lo) and math.isinf(hi):
        return 0.0
    if math.isinf(hi):
        return lo + 1.0
    if math.isinf(lo):
        return hi - 1.0
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# saturation and scaling


@dataclass(frozen=True)
class SaturationReport:
    max_residual: float
    n_samples: int
    n_skipped: int
    residuals: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"max_residual": self.max_residual, "samples": self.n_samples, "skipped": self.n_skipped}


def _saturation_map(box: CriticalFlowBox, y) -> np.ndarray:
    """Psi(y) = Phi_t(psi(x)) for a decomposition y = Omega_t(x), x in B."""
    k = box.index
    lo, hi = chart_carrier(k, y, box.working)  # times s with Omega_s(y) in B
    s = select_time((lo, hi))
    hm = box.hyperbolic
    x = omega_flow(hm, y, s)
    return box.flow.point(box.psi(x), -s)


def saturation_probe(box: CriticalFlowBox, samples, s_values) -> SaturationReport:
    """Max over samples y and times s of |Phi_s(Psi(y)) - Psi(Omega_s(y))|."""
    hm = box.hyperbolic
    res = []
    skipped = 0
    for y in samples:
        try:
            base = _saturation_map(box, y)
            for s in s_values:
                lhs = box.flow.point(base, s)
                rhs = _saturation_map(box, omega_flow(hm, y, s))
                res.append(float(np.linalg.norm(lhs - rhs)))
        except (EmptyCarrierError, NumericError):
            skipped += 1
    arr = np.array(res)
    return SaturationReport(float(arr.max()) if arr.size else 0.0, len(samples) - skipped, skipped, arr)


def saturation_samples(box: CriticalFlowBox, n: int, t_window: float = 1.0, seed: int = 0) -> np.ndarray:
    """Points Omega_t(x) with x uniform in B(r') and |t| <= t_window."""
    rng = np.random.default_rng(seed)
    hm = box.hyperbolic
    m, k = hm.m, hm.k
    out = []
    while len(out) < n:
        x = rng.uniform(-box.working, box.working, m)
        if not hm.in_bidisk(x, box.working):
            continue
        out.append(omega_flow(hm, x, rng.uniform(-t_window, t_window)))
    return np.array(out).reshape(n, m) if m else np.zeros((n, 0))


@dataclass(frozen=True)
class ScalingReport:
    passed: bool
    max_deviation: float
    trials: int

    def to_dict(self) -> dict:
        return {"passed": self.passed, "max_deviation": self.max_deviation, "trials": self.trials}


def scaling_class_check(model: HyperbolicModel, trials: int = 1000, seed: int = 0) -> ScalingReport:
    """Check Omega_t(s x) = s Omega_t(x) and s x in B(1) on random samples."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    ok = True
    eps = np.finfo(float).eps
    done = 0
    while done < trials:
        x = rng.uniform(-1, 1, model.m)
        if not model.in_bidisk(x, 1.0):
            continue
        s = rng.uniform(0.0, 1.0)
        t = rng.uniform(-3.0, 3.0)
        lhs = omega_flow(model, s * x, t)
        rhs = s * omega_flow(model, x, t)
        dev = float(np.max(np.abs(lhs - rhs))) if model.m else 0.0
        worst = max(worst, dev)
        if dev > 8 * eps * max(1.0, float(np.max(np.abs(rhs)))):
            ok = False
        if not model.in_bidisk(s * x, 1.0):
            ok = False
        done += 1
    return ScalingReport(ok, worst, trials)


# ---------------------------------------------------------------------------
# box library


def build_box_library(
    flow: Flow, R: float = 1.0, R0: float | None = None, grid_step: float | None = None
) -> dict[int, CriticalFlowBox]:
    """Certified critical boxes for every listed critical point, keyed by
    position in ``model.critical_points``."""
    R0 = 0.9 * R if R0 is None else R0
    lib = {}
    for i, p in enumerate(flow.model.critical_points):
        box = build_critical_flow_box(flow, p, R)
        lib[i] = certify_bidisk_radius(box, min(R0, 0.9 * box.R), grid_step)
    return lib


"""Path lifting through the orbit-space quotient.

A path in M/v is given by sampled representatives.  Away from critical
classes the lift runs through regular flow boxes with a linear time
function; near a critical class it runs through certified bidisks whose
radius shrinks linearly with the parameter distance to the critical sample,
with times picked from the (interval-valued) carrier.

Every lift sample is reported with its time ``tau``: the lift equals the
flow of the representative for time ``tau``.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .builtins import annulus_spiral
from .errors import (
    CoverError,
    EmptyCarrierError,
    InputError,
    PreconditionError,
    ScheduleError,
)
from .flow import (
    CriticalFlowBox,
    Flow,
    FlowConfig,
    RegularFlowBox,
    build_box_library,
    build_regular_flow_box,
    chart_carrier,
    enter_chart_ball,
    min_meeting_radius,
    omega_flow,
    orbit_equivalent,
    select_time,
)

BOX_RADIUS = 2.0
THETA = 1.5
PIN_TOL = 1e-6


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True, eq=False)
class OrbitPath:
    """Sampled path in the orbit space: parameters, representatives, flags.

    ``generator`` (optional) maps a parameter to a representative and a
    critical flag; it lets the lifter refine the mesh on cover failure.
    """

    s: np.ndarray
    points: np.ndarray
    critical: tuple[bool, ...]
    generator: Callable[[float], tuple[np.ndarray, bool]] | None = None

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "critical", tuple(bool(c) for c in self.critical))
        if s.ndim != 1 or len(s) < 2:
            raise InputError("path needs at least two samples")
        if len(pts) != len(s) or len(self.critical) != len(s):
            raise InputError("samples, points and flags must have equal length")
        if s[0] != 0.0 or s[-1] != 1.0:
            raise InputError("parameters must start at 0 and end at 1")
        if np.any(np.diff(s) <= 0):
            raise InputError("parameters must be strictly increasing")

    @classmethod
    def from_function(cls, fn: Callable[[float], tuple[np.ndarray, bool]], n: int) -> "OrbitPath":
        """Uniform mesh of ``n`` intervals; ``fn(s)`` returns (point, critical)."""
        if n < 1:
            raise InputError("mesh needs at least one interval")
        s = np.linspace(0.0, 1.0, n + 1)
        pts, flags = zip(*(fn(float(t)) for t in s))
        return cls(s, np.array(pts, dtype=float), tuple(flags), fn)

    def refined(self) -> "OrbitPath":
        if self.generator is None:
            raise CoverError("path cannot be refined: no generator")
        return OrbitPath.from_function(self.generator, 2 * (len(self.s) - 1))

    def __len__(self) -> int:
        return len(self.s)


@dataclass(frozen=True, eq=False)
class LiftProblem:
    path: OrbitPath
    e0: np.ndarray
    e1: np.ndarray

    def to_dict(self) -> dict:
        return {
            "samples": [
                {"s": float(s), "point": p.tolist(), "critical": c}
                for s, p, c in zip(self.path.s, self.path.points, self.path.critical)
            ],
            "e0": np.asarray(self.e0).tolist(),
            "e1": np.asarray(self.e1).tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "LiftProblem":
        try:
            samples = data["samples"]
            path = OrbitPath(
                np.array([x["s"] for x in samples], dtype=float),
                np.array([x["point"] for x in samples], dtype=float),
                tuple(bool(x.get("critical", False)) for x in samples),
            )
            return cls(path, np.array(data["e0"], dtype=float), np.array(data["e1"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed lift problem: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "LiftProblem":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON: {exc}") from None


@dataclass
class Piece:
    """Lift of a run of consecutive samples (mutable while assembling)."""

    points: list
    tau: list
    kind: str
    schedule: list = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class LiftResult:
    s: np.ndarray
    points: np.ndarray
    tau: np.ndarray
    segments: tuple[dict, ...]
    schedule: tuple[dict, ...]
    mesh_refinements: int = 0

    @property
    def max_displacement(self) -> float:
        if len(self.points) < 2:
            return 0.0
        return float(np.max(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        d = self.points.shape[1]
        buf.write(",".join(["s", "tau"] + [f"x{i + 1}" for i in range(d)]) + "\n")
        for s, t, p in zip(self.s, self.tau, self.points):
            buf.write(",".join([repr(float(s)), repr(float(t))] + [repr(float(v)) for v in p]) + "\n")
        return buf.getvalue()

    def diagnostics(self) -> dict:
        return {
            "samples": int(len(self.s)),
            "max_displacement": self.max_displacement,
            "segments": list(self.segments),
            "schedule": list(self.schedule),
            "mesh_refinements": self.mesh_refinements,
        }

    def diagnostics_json(self) -> str:
        return json.dumps(self.diagnostics(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# Case 1: regular segments


def _box_coords(box: RegularFlowBox, p) -> tuple[float, np.ndarray] | None:
    if np.array_equal(np.asarray(p, dtype=float), box.base):
        return 0.0, np.zeros(box.transversal_dim)
    return box.inverse(p)


def _pin_time(box: RegularFlowBox, pin, xi_ref) -> float:
    inv = _box_coords(box, pin)
    if inv is None or float(np.linalg.norm(inv[1] - xi_ref)) > PIN_TOL:
        raise InputError(f"endpoint lift {np.asarray(pin).tolist()} is not on the orbit of its sample")
    return inv[0]


def lift_in_box(box: RegularFlowBox, s, reps, e_a=None, e_b=None) -> Piece:
    """Lift inside one flow box: lift(s) = H(tau(s), xi(s)) with tau linear
    between the pinned endpoint times (constant with one pin)."""
    s = np.asarray(s, dtype=float)
    coords = []
    for p in reps:
        inv = _box_coords(box, p)
        if inv is None:
            raise CoverError(f"class of {np.asarray(p).tolist()} misses the flow box at {box.base.tolist()}")
        coords.append(inv)
    t_a = _pin_time(box, e_a, coords[0][1]) if e_a is not None else None
    t_b = _pin_time(box, e_b, coords[-1][1]) if e_b is not None else None
    if t_a is not None and t_b is not None and len(s) > 1:
        taus = t_a + (t_b - t_a) * (s - s[0]) / (s[-1] - s[0])
    else:
        const = t_a if t_a is not None else (t_b if t_b is not None else 0.0)
        taus = np.full(len(s), const)
    pts, rel = [], []
    for i, ((t_rep, xi), tau) in enumerate(zip(coords, taus)):
        if i == 0 and e_a is not None:
            pts.append(np.array(e_a, dtype=float))
            tau = t_a
        elif i == len(s) - 1 and e_b is not None:
            pts.append(np.array(e_b, dtype=float))
            tau = t_b
        else:
            pts.append(box.H(float(tau), xi))
        rel.append(float(tau - t_rep))
    return Piece(pts, rel, "regular")


def lift_segment_regular(
    flow: Flow, s, reps, e_a=None, e_b=None, *, box_radius: float = BOX_RADIUS, boxes: list | None = None
) -> Piece:
    """Chain of flow-box lifts over a run of regular samples.

    Boxes are built greedily: each covers as many consecutive classes as it
    can, and the lift at the last covered sample pins the next box.
    ``boxes`` (if given) collects the boxes used.
    """
    s = np.asarray(s, dtype=float)
    n = len(s)
    if n == 1:
        p = e_a if e_a is not None else (e_b if e_b is not None else reps[0])
        return Piece([np.array(p, dtype=float)], [_rel_time(flow, reps[0], p)], "regular")
    out_pts: list = [None] * n
    out_tau: list = [0.0] * n
    start, pin = 0, e_a
    while True:
        base = pin if pin is not None else reps[start]
        box = build_regular_flow_box(flow, base, radius=box_radius)
        if boxes is not None:
            boxes.append(box)
        j = start + 1
        while j < n and _box_coords(box, reps[j]) is not None:
            j += 1
        end = j - 1
        if end == start:
            raise CoverError(f"sample {start + 1} leaves every flow box built so far; refine the mesh")
        final = end == n - 1
        piece = lift_in_box(box, s[start : end + 1], reps[start : end + 1], pin, e_b if final else None)
        out_pts[start : end + 1] = piece.points
        out_tau[start : end + 1] = piece.tau
        if final:
            break
        pin, start = out_pts[end], end
    return Piece(out_pts, out_tau, "regular")


def _rel_time(flow: Flow, rep, p) -> float:
    if np.array_equal(np.asarray(rep, dtype=float), np.asarray(p, dtype=float)):
        return 0.0
    m = orbit_equivalent(flow, rep, p)
    if not m.equivalent:
        raise InputError(f"{np.asarray(p).tolist()} is not on the orbit of {np.asarray(rep).tolist()}")
    return float(m.time)


# ---------------------------------------------------------------------------
# Case 2: controlled lifts near a critical class


def _inside(box: CriticalFlowBox, x, radius: float) -> bool:
    a, b = box.block_norms(x)
    return a < radius and b < radius


def lift_segment_controlled(
    box: CriticalFlowBox, s, reps, e_a=None, e_b=None, *, t_a: float | None = None, t_b: float | None = None
) -> Piece:
    """Lift inside the bidisk psi(B(p, r')) using carrier selections.

    Pinned endpoints may be given as points (``e_a``, ``e_b``) or as flow
    times from the representative (``t_a``, ``t_b``).
    """
    radius = box.working
    hm = box.hyperbolic
    n = len(s)
    pts, taus = [], []
    for i, rep in enumerate(reps):
        try:
            entry = enter_chart_ball(box, rep)
            lo, hi = chart_carrier(hm.k, entry.x, radius)
        except EmptyCarrierError as exc:
            raise EmptyCarrierError(f"sample {i}: class misses the bidisk of radius {radius} ({exc})") from None
        pin_pt = e_a if i == 0 else (e_b if i == n - 1 else None)
        pin_t = t_a if i == 0 else (t_b if i == n - 1 else None)
        if pin_pt is not None:
            x = box.to_chart(pin_pt)
            if x is None or not _inside(box, x, radius):
                raise PreconditionError("pinned endpoint lies outside the bidisk")
            pts.append(np.array(pin_pt, dtype=float))
            taus.append(_rel_time(box.flow, rep, pin_pt))
            continue
        if pin_t is not None:
            sel = pin_t - entry.offset
            if not lo < sel < hi:
                raise PreconditionError(f"pinned time {pin_t} is outside the carrier")
            tau = pin_t
        else:
            sel = select_time((lo, hi))
            tau = sel + entry.offset
        x = omega_flow(hm, entry.x, sel)
        if not _inside(box, x, radius):
            raise PreconditionError("controlled lift left the bidisk")
        pts.append(box.psi(x))
        taus.append(float(tau))
    return Piece(pts, taus, "controlled")


def lift_to_critical(
    box: CriticalFlowBox,
    s,
    reps,
    e_a=None,
    *,
    theta: float = THETA,
    box_radius: float = BOX_RADIUS,
) -> Piece:
    """Lift a run of samples whose last sample is the critical class of the box.

    Tail samples get radius rho_i = max(c_i, theta * max_{j >= i} rho_min_j)
    with c_i = r * min(1, d_i / D_tail), d_i the parameter distance to the
    critical sample, and are lifted by carrier selection inside B(p, rho_i).
    Remaining head samples are lifted through regular boxes, pinned on the
    right by the first tail lift.
    """
    s = np.asarray(s, dtype=float)
    n = len(s)
    last = n - 1
    p = box.point
    if n == 1:
        return Piece([p.copy()], [0.0], "critical")
    flow = box.flow
    hm = box.hyperbolic
    r = box.radius
    D = s[last] - s[0]
    pinned = e_a is not None
    d_tail = D / 2 if pinned else D
    first = 1 if pinned else 0

    entries: list = [None] * last
    rho_min = np.full(last, math.inf)
    for i in range(first, last):
        try:
            entries[i] = enter_chart_ball(box, reps[i])
            rho_min[i] = min_meeting_radius(hm.k, hm.m, entries[i].x)
        except EmptyCarrierError:
            pass
    suffix = np.maximum.accumulate(rho_min[::-1])[::-1] if last else rho_min
    d = s[last] - s[:last]
    rho = np.maximum(r * np.minimum(1.0, d / d_tail), theta * suffix)

    t0 = last
    for i in range(last - 1, first - 1, -1):
        if entries[i] is None or not rho[i] <= r or d[i] > d_tail * (1 + 1e-12):
            break
        t0 = i
    if t0 == last and first < last:
        raise ScheduleError(f"sample {last - 1} fits no bidisk of radius <= {r} around {p.tolist()}")

    pts: list = [None] * n
    taus: list = [0.0] * n
    schedule = []
    for i in range(t0, last):
        lo, hi = chart_carrier(hm.k, entries[i].x, rho[i])
        sel = select_time((lo, hi))
        x = omega_flow(hm, entries[i].x, sel)
        pts[i] = box.psi(x)
        taus[i] = float(sel + entries[i].offset)
        schedule.append({"s": float(s[i]), "radius": float(rho[i]), "level": float(r / rho[i])})
    pts[last] = p.copy()
    taus[last] = 0.0
    if t0 > 0:
        head = lift_segment_regular(flow, s[: t0 + 1], reps[: t0 + 1], e_a, pts[t0], box_radius=box_radius)
        pts[: t0 + 1] = head.points
        taus[: t0 + 1] = head.tau
    elif pinned:
        pts[0] = np.array(e_a, dtype=float)
    return Piece(pts, taus, "to_critical", schedule)


def lift_from_critical(box: CriticalFlowBox, s, reps, e_b=None, **kw) -> Piece:
    """Mirror of :func:`lift_to_critical` for a critical first sample."""
    s = np.asarray(s, dtype=float)
    piece = lift_to_critical(box, -s[::-1], list(reps)[::-1], e_b, **kw)
    for row in piece.schedule:
        row["s"] = -row["s"]
    return Piece(piece.points[::-1], piece.tau[::-1], "from_critical", piece.schedule[::-1])


# ---------------------------------------------------------------------------
# full lifts


def _check_endpoint(flow: Flow, rep, e, name: str) -> None:
    m = orbit_equivalent(flow, rep, e)
    if not m.equivalent:
        raise InputError(f"{name} = {np.asarray(e).tolist()} is not on the orbit of the path's sample")


def _critical_index(flow: Flow, p) -> int:
    for i, c in enumerate(flow.model.critical_points):
        if np.linalg.norm(c - p) <= 10 * flow.manifold.coord_tol:
            return i
    raise InputError(f"critical-flagged sample {np.asarray(p).tolist()} is not a listed critical point")


def lift_path(
    problem: LiftProblem,
    flow: Flow,
    library: dict[int, CriticalFlowBox] | None = None,
    *,
    box_radius: float = BOX_RADIUS,
    max_refinements: int = 4,
) -> LiftResult:
    """Lift ``problem.path`` with lift(0) = e0 and lift(1) = e1 exactly."""
    path = problem.path
    for attempt in range(max_refinements + 1):
        try:
            res = _lift_once(path, problem.e0, problem.e1, flow, library, box_radius)
            return LiftResult(res[0], res[1], res[2], res[3], res[4], attempt)
        except CoverError:
            if path.generator is None or attempt == max_refinements:
                raise
            path = path.refined()
    raise AssertionError("unreachable")


def _lift_once(path: OrbitPath, e0, e1, flow: Flow, library, box_radius):
    e0 = np.asarray(e0, dtype=float)
    e1 = np.asarray(e1, dtype=float)
    reps = [p.copy() for p in path.points]
    crit = [i for i, c in enumerate(path.critical) if c]
    which = {}
    for i in crit:
        which[i] = _critical_index(flow, reps[i])
        reps[i] = flow.model.critical_points[which[i]].copy()
    _check_endpoint(flow, reps[0], e0, "e0")
    _check_endpoint(flow, reps[-1], e1, "e1")
    n = len(path.s)
    s = path.s
    pts: list = [None] * n
    taus: list = [0.0] * n
    segments, schedule = [], []

    def put(lo, hi, piece):
        pts[lo : hi + 1] = piece.points
        taus[lo : hi + 1] = piece.tau
        segments.append({"kind": piece.kind, "start": float(s[lo]), "end": float(s[hi])})
        schedule.extend(piece.schedule)

    if not crit:
        put(0, n - 1, lift_segment_regular(flow, s, reps, e0, e1, box_radius=box_radius))
    else:
        if library is None:
            library = build_box_library(flow)
        boxes = {i: library[which[i]] for i in crit}
        first, last = crit[0], crit[-1]
        if first > 0:
            put(0, first, lift_to_critical(boxes[first], s[: first + 1], reps[: first + 1], e0, box_radius=box_radius))
        for a, b in zip(crit, crit[1:]):
            if b == a + 1:
                put(a, b, Piece([reps[a], reps[b]], [0.0, 0.0], "critical"))
                continue
            mid = (a + b) // 2
            left = lift_from_critical(boxes[a], s[a : mid + 1], reps[a : mid + 1], None, box_radius=box_radius)
            put(a, mid, left)
            put(mid, b, lift_to_critical(boxes[b], s[mid : b + 1], reps[mid : b + 1], pts[mid], box_radius=box_radius))
        if last < n - 1:
            put(last, n - 1, lift_from_critical(boxes[last], s[last:], reps[last:], e1, box_radius=box_radius))
        if first == 0:
            pts[0] = e0
        if last == n - 1:
            pts[-1] = e1
    # endpoints are the prescribed points themselves
    pts[0] = e0.copy()
    pts[-1] = e1.copy()
    return s.copy(), np.array(pts, dtype=float), np.array(taus, dtype=float), tuple(segments), tuple(schedule)


# ---------------------------------------------------------------------------
# verification helpers


def fiber_check(flow: Flow, result: LiftResult, path: OrbitPath) -> list[bool]:
    """orbit_equivalent(lift(s), representative(s)) for every sample."""
    if len(result.s) != len(path.s):
        raise InputError("result and path have different meshes")
    return [bool(orbit_equivalent(flow, q, p)) for q, p in zip(result.points, path.points)]


@dataclass(frozen=True)
class RefinementStudy:
    meshes: tuple[float, ...]
    displacements: tuple[float, ...]
    monotone: bool
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "meshes": list(self.meshes),
            "max_displacement": list(self.displacements),
            "monotone": self.monotone,
            "tolerance": self.tolerance,
        }


def refinement_study(results: list[tuple[float, LiftResult]], tolerance: float = 0.05) -> RefinementStudy:
    """Max consecutive displacement per mesh; monotone if halving the mesh
    never increases it by more than ``tolerance`` (relative)."""
    results = sorted(results, key=lambda r: -r[0])
    meshes = tuple(h for h, _ in results)
    disp = tuple(r.max_displacement for _, r in results)
    ok = all(b <= a * (1 + tolerance) for a, b in zip(disp, disp[1:]))
    return RefinementStudy(meshes, disp, ok, tolerance)


# ---------------------------------------------------------------------------
# the spiral annulus


SPIRAL_VERDICT = "no continuous lift detected: divergent time selection"


@dataclass(frozen=True)
class SpiralReport:
    levels: tuple[int, ...]
    meshes: tuple[float, ...]
    tau_near_start: tuple[float, ...]
    tau_near_end: tuple[float, ...]
    max_tau: tuple[float, ...]
    strictly_increasing: bool
    control_constant: bool
    verdict: str

    def to_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "meshes": list(self.meshes),
            "tau_near_start": list(self.tau_near_start),
            "tau_near_end": list(self.tau_near_end),
            "max_abs_tau": list(self.max_tau),
            "strictly_increasing": self.strictly_increasing,
            "control_constant_path_lifts": self.control_constant,
            "verdict": self.verdict,
        }


def spiral_counterexample_report(levels=range(4, 11), z0=(1.5, 0.0), config: FlowConfig | None = None) -> SpiralReport:
    """Time selections required to lift the path x -> [z] -> y on the annulus.

    At mesh h the sample at s = h must lift within distance h of the inner
    circle X, and the sample at s = 1 - h within distance h of the outer
    circle Y; the required flow time from ``z0`` grows without bound as h
    shrinks.  One sequential integration serves all levels.
    """
    levels = tuple(sorted(int(v) for v in levels))
    if not levels or levels[0] < 1:
        raise InputError("refinement levels must be positive integers")
    b = annulus_spiral()
    cfg = config or FlowConfig(horizon=1e6)
    flow = Flow(b.model, b.field(), cfg)
    lo, hi = b.model.manifold.radial_bounds
    z0 = np.asarray(z0, dtype=float)
    meshes = tuple(2.0 ** -lv for lv in levels)

    def march(target_radius, direction):
        out, cur, total = [], z0, 0.0
        for h in meshes:
            ev = flow.until(cur, lambda q, rad=target_radius(h): float(np.linalg.norm(q)) - rad, direction)
            if not ev.found:
                raise ScheduleError(f"spiral orbit did not approach the boundary at mesh {h} ({ev.reason})")
            total += ev.time
            cur = ev.point
            out.append(total)
        return out

    back = march(lambda h: lo + h, -1.0)
    fwd = march(lambda h: hi - h, 1.0)
    taus = tuple(max(abs(a), abs(c)) for a, c in zip(back, fwd))
    increasing = all(b2 > a2 for a2, b2 in zip(taus, taus[1:]))

    # control: a path constantly at [z] lifts to a constant path
    path = OrbitPath(np.linspace(0, 1, 5), np.tile(z0, (5, 1)), (False,) * 5)
    piece = lift_segment_regular(flow, path.s, list(path.points), z0, z0)
    control = all(np.array_equal(p, z0) for p in (piece.points[0], piece.points[-1])) and all(
        float(np.linalg.norm(p - z0)) < 1e-9 for p in piece.points
    )
    verdict = SPIRAL_VERDICT if increasing else "ALARM: time selection stayed bounded"
    return SpiralReport(levels, meshes, tuple(back), tuple(fwd), taus, increasing, control, verdict)

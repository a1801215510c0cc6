"""Charted manifolds and Morse functions.

Points of a manifold are stored in *ambient* coordinates (for Euclidean
domains these coincide with the single identity chart; for spheres they are
unit vectors in R^{n+1}).  Scalar fields, derivatives and vector fields are
evaluated in chart coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import DegeneracyError, DomainError, InputError

GRAD_TOL = 1e-8
DEGENERACY_TOL = 1e-6
FD_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class Chart:
    name: str
    to_coords: Callable[[np.ndarray], np.ndarray]
    from_coords: Callable[[np.ndarray], np.ndarray]
    contains: Callable[[np.ndarray], bool]
    # integrate in this chart only while max|x| stays below this
    comfort: float = math.inf


def _identity(x):
    return np.array(x, dtype=float)


def _everywhere(_p):
    return True


@dataclass(frozen=True, eq=False)
class ChartedManifold:
    dim: int
    ambient_dim: int
    charts: tuple[Chart, ...]
    builtin_id: str | None = None
    punctures: tuple[np.ndarray, ...] = ()
    radial_bounds: tuple[float, float] | None = None
    escape_radius: float = 1e8
    coord_tol: float = 1e-9

    def __post_init__(self):
        if self.dim < 1:
            raise InputError("manifold dimension must be >= 1")
        if not self.charts:
            raise InputError("at least one chart is required")

    def chart(self, name: str) -> Chart:
        for c in self.charts:
            if c.name == name:
                return c
        raise KeyError(name)

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.ambient_dim,) or not np.all(np.isfinite(p)):
            return False
        for q in self.punctures:
            if np.linalg.norm(p - q) == 0.0:
                return False
        if self.radial_bounds is not None:
            r = float(np.linalg.norm(p))
            lo, hi = self.radial_bounds
            if r < lo - self.coord_tol or r > hi + self.coord_tol:
                return False
        return any(c.contains(p) for c in self.charts)

    def best_chart(self, p) -> Chart:
        """Chart containing ``p`` with the smallest coordinate norm."""
        p = np.asarray(p, dtype=float)
        if not self.contains(p):
            raise DomainError(f"point {p.tolist()} lies outside every chart")
        best, best_norm = None, math.inf
        for c in self.charts:
            if c.contains(p):
                n = float(np.linalg.norm(c.to_coords(p)))
                if n < best_norm:
                    best, best_norm = c, n
        return best

    def coords(self, p) -> tuple[Chart, np.ndarray]:
        c = self.best_chart(p)
        return c, c.to_coords(np.asarray(p, dtype=float))

    def first_invalid(self, points: np.ndarray) -> int | None:
        """Index of the first step point at which a sampled path has left M.

        Punctures are tested against the straight segment between step
        points, since a trajectory can step over an isolated missing point.
        """
        points = np.asarray(points, dtype=float)
        norms = np.max(np.abs(points), axis=1)
        bad = np.nonzero(~np.isfinite(norms) | (norms > self.escape_radius))[0]
        first = int(bad[0]) if bad.size else None
        if self.radial_bounds is not None:
            r = np.linalg.norm(points, axis=1)
            lo, hi = self.radial_bounds
            out = np.nonzero((r < lo - 1e-7) | (r > hi + 1e-7))[0]
            if out.size and (first is None or out[0] < first):
                first = int(out[0])
        for q in self.punctures:
            a, b = points[:-1] - q, points[1:] - q
            d = b - a
            dd = np.einsum("ij,ij->i", d, d)
            with np.errstate(invalid="ignore", divide="ignore"):
                s = np.clip(-np.einsum("ij,ij->i", a, d) / np.where(dd > 0, dd, 1.0), 0.0, 1.0)
            dist = np.linalg.norm(a + s[:, None] * d, axis=1)
            hit = np.nonzero(dist < 1e-7)[0]
            if hit.size and (first is None or hit[0] + 1 < first):
                first = int(hit[0]) + 1
        return first

    def chart_consistency(self, points, tol: float = 1e-9) -> float:
        """Worst round-trip error ambient -> chart -> ambient over ``points``."""
        worst = 0.0
        for p in points:
            p = np.asarray(p, dtype=float)
            for c in self.charts:
                if c.contains(p):
                    back = c.from_coords(c.to_coords(p))
                    worst = max(worst, float(np.linalg.norm(back - p)))
        return worst


def euclidean(m: int, builtin_id: str = "euclidean") -> ChartedManifold:
    return ChartedManifold(
        dim=m,
        ambient_dim=m,
        charts=(Chart("identity", _identity, _identity, _everywhere),),
        builtin_id=builtin_id,
    )


def punctured_plane() -> ChartedManifold:
    origin = np.zeros(2)

    def contains(p):
        return bool(np.any(p != origin))

    return ChartedManifold(
        dim=2,
        ambient_dim=2,
        charts=(Chart("identity", _identity, _identity, contains),),
        builtin_id="punctured_plane",
        punctures=(origin,),
    )


def closed_annulus(inner: float = 1.0, outer: float = 2.0) -> ChartedManifold:
    return ChartedManifold(
        dim=2,
        ambient_dim=2,
        charts=(Chart("identity", _identity, _identity, _everywhere),),
        builtin_id="annulus_spiral",
        radial_bounds=(inner, outer),
    )


def sphere(n: int) -> ChartedManifold:
    """S^n in R^{n+1} with stereographic charts centred at the poles.

    ``north`` projects from the south pole (so the north pole sits at the
    chart origin); ``south`` projects from the north pole.  The transition
    map is the inversion ``w = u / |u|^2``.
    """

    def to_north(p):
        return np.asarray(p[:n], dtype=float) / (1.0 + p[n])

    def from_north(u):
        u = np.asarray(u, dtype=float)
        s = float(u @ u)
        return np.append(2.0 * u, 1.0 - s) / (1.0 + s)

    def to_south(p):
        return np.asarray(p[:n], dtype=float) / (1.0 - p[n])

    def from_south(w):
        w = np.asarray(w, dtype=float)
        s = float(w @ w)
        return np.append(2.0 * w, s - 1.0) / (1.0 + s)

    def in_north(p):
        return abs(float(np.linalg.norm(p)) - 1.0) < 1e-6 and p[n] > -1.0 + 1e-12

    def in_south(p):
        return abs(float(np.linalg.norm(p)) - 1.0) < 1e-6 and p[n] < 1.0 - 1e-12

    return ChartedManifold(
        dim=n,
        ambient_dim=n + 1,
        charts=(
            Chart("north", to_north, from_north, in_north, comfort=2.0),
            Chart("south", to_south, from_south, in_south, comfort=2.0),
        ),
        builtin_id="sphere_longitudinal",
    )


ScalarMap = Mapping[str, Callable[[np.ndarray], float]]


@dataclass(frozen=True, eq=False)
class MorseModel:
    """A manifold with a Morse function ``f`` given per chart.

    ``grad`` and ``hess`` are optional closed forms; missing ones fall back
    to central finite differences with step ``fd_step``.
    """

    manifold: ChartedManifold
    f: ScalarMap
    grad: ScalarMap | None = None
    hess: ScalarMap | None = None
    critical_points: tuple[np.ndarray, ...] = ()
    name: str = "model"
    grad_tol: float = GRAD_TOL
    degeneracy_tol: float = DEGENERACY_TOL
    fd_step: float = FD_STEP
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = tuple(np.asarray(p, dtype=float) for p in self.critical_points)
        object.__setattr__(self, "critical_points", pts)
        for i, p in enumerate(pts):
            for q in pts[:i]:
                if np.linalg.norm(p - q) < self.manifold.coord_tol:
                    raise InputError("critical points must be pairwise distinct")

    @property
    def dim(self) -> int:
        return self.manifold.dim

    def f_at(self, chart: str, x) -> float:
        return float(self.f[chart](np.asarray(x, dtype=float)))

    def grad_at(self, chart: str, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad[chart](x), dtype=float)
        return fd_gradient(self.f[chart], x, self.fd_step)

    def hess_at(self, chart: str, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.hess is not None:
            return np.asarray(self.hess[chart](x), dtype=float)
        if self.grad is not None:
            return fd_jacobian(self.grad[chart], x, self.fd_step)
        return fd_hessian(self.f[chart], x, self.fd_step)

    def value(self, p) -> float:
        """f at an ambient point (best chart)."""
        chart, x = self.manifold.coords(p)
        return self.f_at(chart.name, x)

    def is_critical(self, p, tol: float | None = None) -> np.ndarray | None:
        """The listed critical point equal to ``p`` (within tolerance), if any."""
        tol = self.manifold.coord_tol * 10 if tol is None else tol
        p = np.asarray(p, dtype=float)
        for c in self.critical_points:
            if np.linalg.norm(c - p) <= tol:
                return c
        return None


def fd_gradient(fun, x, h):
    g = np.zeros(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def fd_jacobian(fun, x, h):
    cols = []
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        cols.append((np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2 * h))
    return np.array(cols).T


def fd_hessian(fun, x, h):
    """Second-order central differences of a scalar function."""
    m = x.size
    hs = np.zeros((m, m))
    f0 = fun(x)
    for i in range(m):
        ei = np.zeros(m)
        ei[i] = h
        hs[i, i] = (fun(x + ei) - 2 * f0 + fun(x - ei)) / h**2
        for j in range(i + 1, m):
            ej = np.zeros(m)
            ej[j] = h
            v = (fun(x + ei + ej) - fun(x + ei - ej) - fun(x - ei + ej) + fun(x - ei - ej)) / (4 * h**2)
            hs[i, j] = hs[j, i] = v
    return hs


def evaluate_f(model: MorseModel, p) -> float:
    return model.value(p)


def classify_critical_points(model: MorseModel) -> list[tuple[np.ndarray, int]]:
    """(point, Morse index) for every listed critical point.

    Raises :class:`DegeneracyError` when the gradient does not vanish or a
    Hessian eigenvalue is within ``degeneracy_tol`` of zero.
    """
    out = []
    for p in model.critical_points:
        chart, x = model.manifold.coords(p)
        g = model.grad_at(chart.name, x)
        if float(np.linalg.norm(g)) >= model.grad_tol:
            raise DegeneracyError(f"gradient {g.tolist()} does not vanish at {p.tolist()}")
        eig = np.linalg.eigvalsh(_sym(model.hess_at(chart.name, x)))
        if np.min(np.abs(eig)) <= model.degeneracy_tol:
            raise DegeneracyError(f"degenerate critical point at {p.tolist()}: eigenvalues {eig.tolist()}")
        out.append((p.copy(), int(np.sum(eig < 0))))
    return out


def morse_index(model: MorseModel, p, chart: str | None = None) -> int:
    if chart is None:
        c, x = model.manifold.coords(p)
        chart = c.name
    else:
        x = model.manifold.chart(chart).to_coords(np.asarray(p, dtype=float))
    eig = np.linalg.eigvalsh(_sym(model.hess_at(chart, x)))
    if np.min(np.abs(eig)) <= model.degeneracy_tol:
        raise DegeneracyError(f"degenerate critical point at {np.asarray(p).tolist()}")
    return int(np.sum(eig < 0))


def _sym(a):
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)

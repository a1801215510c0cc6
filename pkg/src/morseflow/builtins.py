"""Built-in models: each bundles a :class:`MorseModel` with named vector fields.

Names accept colon-separated parameters, e.g. ``hyperbolic:1:2``,
``sphere_longitudinal:2``, ``euclidean:3``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from . import models
from .errors import UnsupportedError
from .gradients import VectorField
from .models import MorseModel
from .polynomial import PolyMap

# radial speed scale of the spiral annulus field
SPIRAL_RATE = 1.0 / 72.0


@dataclass(frozen=True, eq=False)
class Builtin:
    name: str
    model: MorseModel
    fields: dict[str, VectorField]

    def field(self, name: str = "default") -> VectorField:
        try:
            return self.fields[name]
        except KeyError:
            raise UnsupportedError(f"model {self.name!r} has no field {name!r}; have {sorted(self.fields)}") from None


def _signs(k: int, m: int) -> np.ndarray:
    return np.array([-1.0] * k + [1.0] * (m - k))


def hyperbolic(k: int, m: int) -> Builtin:
    """The standard saddle on R^m: f = (-|x_s|^2 + |x_u|^2)/2 with field omega."""
    if not 0 <= k <= m:
        raise UnsupportedError(f"index {k} out of range for dimension {m}")
    sg = _signs(k, m)
    man = models.euclidean(m)
    model = MorseModel(
        manifold=man,
        f={"identity": lambda x: 0.5 * float(np.sum(sg * x * x))},
        grad={"identity": lambda x: sg * x},
        hess={"identity": lambda x: np.diag(sg)},
        critical_points=(np.zeros(m),),
        name=f"hyperbolic:{k}:{m}",
        params={"k": k, "m": m},
    )
    omega = VectorField.from_polys({"identity": PolyMap.affine(np.diag(sg))}, name="omega")
    return Builtin(model.name, model, {"default": omega, "omega": omega})


def quadratic() -> Builtin:
    """f = (-x^2 + y^2)/2 on R^2 with the gradient field and two failing variants."""
    b = hyperbolic(1, 2)
    model = MorseModel(
        manifold=b.model.manifold,
        f=b.model.f,
        grad=b.model.grad,
        hess=b.model.hess,
        critical_points=b.model.critical_points,
        name="quadratic",
        params=b.model.params,
    )
    cubic = PolyMap.from_terms(2, [{(3, 0): -1.0}, {(0, 3): 1.0}])
    reversed_ = PolyMap.affine(np.eye(2))
    return Builtin(
        "quadratic",
        model,
        {
            "default": b.fields["default"],
            "omega": b.fields["default"],
            "cubic": VectorField.from_polys({"identity": cubic}, name="cubic"),
            "reversed": VectorField.from_polys({"identity": reversed_}, name="reversed"),
        },
    )


def euclidean(m: int) -> Builtin:
    """|x|^2/2 on R^m (single index-0 critical point) with the radial field."""
    b = hyperbolic(0, m)
    model = MorseModel(
        manifold=b.model.manifold,
        f=b.model.f,
        grad=b.model.grad,
        hess=b.model.hess,
        critical_points=b.model.critical_points,
        name=f"euclidean:{m}",
        params={"k": 0, "m": m},
    )
    return Builtin(model.name, model, dict(b.fields))


def sphere_longitudinal(n: int) -> Builtin:
    """Height function on S^n with its round gradient.

    In the north chart the field is ``-u`` (north pole: index n maximum), in
    the south chart ``+w`` (south pole: index 0 minimum); both are linear.
    """
    man = models.sphere(n)

    def f_north(u):
        s = float(u @ u)
        return (1.0 - s) / (1.0 + s)

    def g_north(u):
        return -4.0 * u / (1.0 + float(u @ u)) ** 2

    def h_north(u):
        s = float(u @ u)
        return -4.0 * np.eye(n) / (1 + s) ** 2 + 16.0 * np.outer(u, u) / (1 + s) ** 3

    def f_south(w):
        s = float(w @ w)
        return (s - 1.0) / (1.0 + s)

    def g_south(w):
        return 4.0 * w / (1.0 + float(w @ w)) ** 2

    def h_south(w):
        s = float(w @ w)
        return 4.0 * np.eye(n) / (1 + s) ** 2 - 16.0 * np.outer(w, w) / (1 + s) ** 3

    north = np.zeros(n + 1)
    north[n] = 1.0
    south = np.zeros(n + 1)
    south[n] = -1.0
    model = MorseModel(
        manifold=man,
        f={"north": f_north, "south": f_south},
        grad={"north": g_north, "south": g_south},
        hess={"north": h_north, "south": h_south},
        critical_points=(south, north),
        name=f"sphere_longitudinal:{n}",
        params={"n": n},
    )
    field = VectorField.from_polys(
        {"north": PolyMap.affine(-np.eye(n)), "south": PolyMap.affine(np.eye(n))},
        name="longitudinal",
    )
    return Builtin(model.name, model, {"default": field})


def punctured_plane() -> Builtin:
    """R^2 minus the origin, f(x, y) = y, constant field (0, 1)."""
    man = models.punctured_plane()
    model = MorseModel(
        manifold=man,
        f={"identity": lambda x: float(x[1])},
        grad={"identity": lambda x: np.array([0.0, 1.0])},
        hess={"identity": lambda x: np.zeros((2, 2))},
        critical_points=(),
        name="punctured_plane",
        params={"sample_radius": 2.0},
    )
    field = VectorField.from_polys({"identity": PolyMap.affine(np.zeros((2, 2)), [0.0, 1.0])}, name="vertical")
    return Builtin(model.name, model, {"default": field})


def spiral_poly(rate: float = SPIRAL_RATE) -> PolyMap:
    """Rotation plus radial drift ``rate * (rho-1)^2 (4-rho)^2`` times (x, y),
    rho = x^2 + y^2: the circles r=1 and r=2 are closed orbits and interior
    orbits spiral from the inner to the outer one."""
    radial = np.polymul(np.polymul([1, -1], [1, -1]), np.polymul([-1, 4], [-1, 4])) * rate
    deg = len(radial) - 1
    sx: dict[tuple[int, int], float] = {}
    sy: dict[tuple[int, int], float] = {}
    for i, c in enumerate(radial):
        k = deg - i  # coefficient of rho^k
        for j in range(k + 1):
            w = c * comb(k, j)
            sx[(2 * j + 1, 2 * (k - j))] = sx.get((2 * j + 1, 2 * (k - j)), 0.0) + w
            sy[(2 * j, 2 * (k - j) + 1)] = sy.get((2 * j, 2 * (k - j) + 1), 0.0) + w
    sx[(0, 1)] = sx.get((0, 1), 0.0) - 1.0
    sy[(1, 0)] = sy.get((1, 0), 0.0) + 1.0
    return PolyMap.from_terms(2, [sx, sy])


def annulus_spiral() -> Builtin:
    """Closed annulus 1 <= r <= 2 with a spiral field (not an f-gradient)."""
    man = models.closed_annulus(1.0, 2.0)
    model = MorseModel(
        manifold=man,
        f={"identity": lambda x: float(x @ x)},
        grad={"identity": lambda x: 2.0 * np.asarray(x, dtype=float)},
        hess={"identity": lambda x: 2.0 * np.eye(2)},
        critical_points=(),
        name="annulus_spiral",
        params={"sample_radius": 2.0, "inner": 1.0, "outer": 2.0},
    )
    field = VectorField.from_polys({"identity": spiral_poly()}, name="spiral")
    return Builtin(model.name, model, {"default": field})


_REGISTRY = {
    "quadratic": (quadratic, 0),
    "hyperbolic": (hyperbolic, 2),
    "euclidean": (euclidean, 1),
    "sphere_longitudinal": (sphere_longitudinal, 1),
    "sphere": (sphere_longitudinal, 1),
    "punctured_plane": (punctured_plane, 0),
    "annulus_spiral": (annulus_spiral, 0),
}


def builtin_names() -> list[str]:
    return sorted(_REGISTRY)


def get_builtin(spec: str) -> Builtin:
    name, *args = spec.split(":")
    if name not in _REGISTRY:
        raise UnsupportedError(f"unknown builtin model {name!r}; have {builtin_names()}")
    factory, n_args = _REGISTRY[name]
    if len(args) != n_args:
        raise UnsupportedError(f"model {name!r} takes {n_args} integer parameter(s), got {args}")
    try:
        ints = [int(a) for a in args]
    except ValueError:
        raise UnsupportedError(f"bad parameters in {spec!r}") from None
    if name in ("sphere", "sphere_longitudinal", "euclidean") and ints[0] < 1:
        raise UnsupportedError("dimension must be >= 1")
    return factory(*ints)

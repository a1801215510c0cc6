"""Vector fields, the f-gradient test, and rescaling to a complete field."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import ConfigurationError, NumericError, PreconditionError
from .models import MorseModel, fd_hessian
from .polynomial import PolyMap

HESSIAN_FD_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class VectorField:
    """Per-chart component evaluators of a smooth vector field.

    Fields built from :class:`PolyMap` components carry closed-form
    Jacobians and are integrated by the compiled kernel.  Rescaled fields
    keep a reference to their unscaled base and the ordered tuple of scale
    factors, so that composing rescalings is exact.
    """

    components: Mapping[str, Callable[[np.ndarray], np.ndarray]]
    polys: Mapping[str, PolyMap] | None = None
    jacobians: Mapping[str, Callable[[np.ndarray], np.ndarray]] | None = None
    name: str = "field"
    # bounded-norm witness: sup of the chart norm, when known
    sup_norm: float | None = None
    base: "VectorField | None" = None
    factors: tuple = ()

    @classmethod
    def from_polys(cls, polys: Mapping[str, PolyMap], name: str = "field") -> "VectorField":
        return cls(
            components=dict(polys),
            polys=dict(polys),
            jacobians={k: p.jacobian for k, p in polys.items()},
            name=name,
        )

    @property
    def closed_form(self) -> bool:
        return self.jacobians is not None

    def at(self, chart: str, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.base is None:
            return np.asarray(self.components[chart](x), dtype=float)
        scale = self.scale_at(chart, x)
        return scale * self.base.at(chart, x)

    def scale_at(self, chart: str, x) -> float:
        s = None
        for fac in self.factors:
            v = fac(x, chart)
            s = v if s is None else s * v
        if s is None:
            return 1.0
        if not s > 0:
            raise PreconditionError(f"rescaling factor {s} is not positive at {np.asarray(x).tolist()}")
        return s

    def poly(self, chart: str) -> PolyMap | None:
        return None if self.polys is None else self.polys.get(chart)

    def jacobian(self, chart: str, x) -> np.ndarray | None:
        if self.jacobians is None:
            return None
        return np.asarray(self.jacobians[chart](np.asarray(x, dtype=float)), dtype=float)

    def callable_for(self, chart: str) -> Callable[[np.ndarray], np.ndarray]:
        return lambda x: self.at(chart, x)


def _as_factor(lam) -> Callable:
    if callable(lam):
        return lambda x, chart: float(lam(x))
    c = float(lam)
    if not c > 0:
        raise PreconditionError(f"rescaling constant {c} is not positive")
    return lambda x, chart: c


def rescale(field: VectorField, lam) -> VectorField:
    """The product field ``lam * field``; ``lam`` is a positive constant or a
    positive function of chart coordinates."""
    base = field.base if field.base is not None else field
    factors = field.factors + (_as_factor(lam),)
    polys = None
    if not callable(lam) and field.polys is not None:
        c = float(lam)
        polys = {k: PolyMap(p.coef * c, p.expo, p.out, p.dim, p.n_out) for k, p in field.polys.items()}
    return VectorField(
        components=base.components,
        polys=polys,
        jacobians=None,
        name=f"rescaled({base.name})",
        sup_norm=None,
        base=base,
        factors=factors,
    )


def make_complete(field: VectorField) -> VectorField:
    """``v / (1 + |v|^2)``, whose chart norm never exceeds 1/2."""

    def factor(x, chart):
        v = field.at(chart, x)
        return 1.0 / (1.0 + float(v @ v))

    base = field.base if field.base is not None else field
    return VectorField(
        components=base.components,
        name=f"complete({field.name})",
        sup_norm=0.5,
        base=base,
        factors=field.factors + (factor,),
    )


def directional_derivative(model: MorseModel, field: VectorField, p) -> float:
    """v(f)(p) = df_p(v(p)), evaluated in the best chart at ``p``."""
    chart, x = model.manifold.coords(p)
    return float(model.grad_at(chart.name, x) @ field.at(chart.name, x))


@dataclass(frozen=True)
class Sampler:
    """Sampling plan for the positivity condition: a per-chart grid on the
    cube of half-width ``radius`` plus ``n_random`` uniform points, skipping
    balls of radius ``eps`` around critical points."""

    radius: float | None = None
    grid: int | None = None
    n_random: int = 200
    eps: float = 1e-3
    seed: int = 0
    budget: int = 4000

    def points(self, model: MorseModel) -> list[tuple[str, np.ndarray]]:
        m = model.dim
        radius = self.radius if self.radius is not None else model.params.get("sample_radius", 1.0)
        n_axis = self.grid if self.grid is not None else max(3, int(round(self.budget ** (1.0 / m))))
        if n_axis % 2 == 0:
            n_axis += 1
        axis = np.linspace(-radius, radius, n_axis)
        grid = np.stack(np.meshgrid(*([axis] * m), indexing="ij"), axis=-1).reshape(-1, m)
        rng = np.random.default_rng(self.seed)
        rand = rng.uniform(-radius, radius, size=(self.n_random, m))
        cand = np.vstack([grid, rand]) if self.n_random else grid
        out = []
        for chart in model.manifold.charts:
            crit = []
            for c in model.critical_points:
                if chart.contains(c):
                    crit.append(chart.to_coords(c))
            for x in cand:
                if any(np.linalg.norm(x - c) < self.eps for c in crit):
                    continue
                p = chart.from_coords(x)
                if not model.manifold.contains(p) or not chart.contains(p):
                    continue
                out.append((chart.name, x))
        return out


@dataclass(frozen=True)
class CriticalHessian:
    point: np.ndarray
    hessian: np.ndarray
    eigenvalues: np.ndarray
    positive_definite: bool


@dataclass(frozen=True)
class FGradientReport:
    condition1_min: float
    condition1_witness: np.ndarray
    condition1_chart: str
    n_samples: int
    condition2: tuple[CriticalHessian, ...]
    failed: tuple[int, ...] = field(default=())

    @property
    def verdict(self) -> bool:
        return not self.failed

    @property
    def failing_condition(self) -> int | None:
        return self.failed[0] if self.failed else None

    def to_dict(self) -> dict:
        return {
            "condition1": {
                "min": self.condition1_min,
                "witness": self.condition1_witness.tolist(),
                "chart": self.condition1_chart,
                "samples": self.n_samples,
                "resolution": "sampled",
            },
            "condition2": [
                {
                    "point": c.point.tolist(),
                    "hessian": c.hessian.tolist(),
                    "eigenvalues": c.eigenvalues.tolist(),
                    "positive_definite": c.positive_definite,
                }
                for c in self.condition2
            ],
            "verdict": "pass" if self.verdict else "fail",
            "failed_conditions": list(self.failed),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def vf_hessian(model: MorseModel, field: VectorField, chart: str, x) -> np.ndarray:
    """Hessian of the scalar v(f) at a critical point ``x``.

    With closed-form derivatives and v(x)=0 the second-order terms vanish
    and the Hessian is ``J^T H + H J`` (J the field Jacobian, H the Hessian
    of f).  Otherwise second-order central differences are used.
    """
    x = np.asarray(x, dtype=float)
    jac = field.jacobian(chart, x)
    if jac is not None and model.hess is not None and float(np.linalg.norm(field.at(chart, x))) < 1e-12:
        hf = model.hess_at(chart, x)
        out = jac.T @ hf + hf @ jac
    else:
        def vf(y):
            return float(model.grad_at(chart, y) @ field.at(chart, y))

        out = fd_hessian(vf, x, HESSIAN_FD_STEP)
    if not np.all(np.isfinite(out)):
        raise NumericError(f"non-finite Hessian of v(f) at {x.tolist()}")
    return 0.5 * (out + out.T)


def verify_f_gradient(model: MorseModel, field: VectorField, sampler: Sampler | None = None) -> FGradientReport:
    sampler = sampler or Sampler()
    pts = sampler.points(model)
    if not pts:
        raise ConfigurationError("sampler produced no admissible points")
    best = (math.inf, None, None)
    for chart, x in pts:
        val = float(model.grad_at(chart, x) @ field.at(chart, x))
        if val <= best[0]:  # ties go to the last sample in grid order
            best = (val, x, chart)
    min_val, wx, wchart = best
    witness = model.manifold.chart(wchart).from_coords(wx)

    hessians = []
    for p in model.critical_points:
        chart, x = model.manifold.coords(p)
        h = vf_hessian(model, field, chart.name, x)
        eig = np.linalg.eigvalsh(h)
        hessians.append(CriticalHessian(p.copy(), h, eig, bool(np.min(eig) > model.degeneracy_tol)))

    failed = []
    if not min_val > 0:
        failed.append(1)
    if not all(h.positive_definite for h in hessians):
        failed.append(2)
    return FGradientReport(min_val, witness, wchart, len(pts), tuple(hessians), tuple(failed))

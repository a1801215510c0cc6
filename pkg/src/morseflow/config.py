"""Run configuration and user model definitions.

Configuration files are INI style (``[section]`` headers, ``key = value``
lines).  Recognised sections:

``[run]``         model, field, seed, horizon, refine, n, out, format
``[tolerances]``  integrator, merge, linearity, degeneracy
``[model]``       a user model on R^m: ``variables``, ``f``, ``field`` and
                  optionally ``critical`` (points separated by ``;``)
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields, replace

import numpy as np

from .builtins import Builtin, get_builtin
from .errors import ConfigurationError

FORMATS = ("json", "csv")


@dataclass(frozen=True)
class RunConfig:
    model: str = "quadratic"
    field: str = "default"
    tol_integrator: float = 1e-9
    tol_merge: float = 1e-6
    tol_linearity: float = 1e-6
    tol_degeneracy: float = 1e-6
    horizon: float = 1e3
    refine: int = 7
    n: int = 1
    seed: int = 0
    out: str | None = None
    format: str = "json"
    model_file: str | None = None

    def __post_init__(self):
        for name in ("tol_integrator", "tol_merge", "tol_linearity", "tol_degeneracy", "horizon"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.refine < 1:
            raise ConfigurationError("refine must be >= 1")
        if self.n < 0:
            raise ConfigurationError("n must be nonnegative")
        if self.format not in FORMATS:
            raise ConfigurationError(f"format must be one of {FORMATS}")

    def override(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    @property
    def out_dir(self) -> str | None:
        return self.out or os.environ.get("MORSEFLOW_OUT") or None


_RUN_KEYS = {"model": str, "field": str, "seed": int, "horizon": float, "refine": int, "n": int, "out": str, "format": str}
_TOL_KEYS = {"integrator": "tol_integrator", "merge": "tol_merge", "linearity": "tol_linearity", "degeneracy": "tol_degeneracy"}


def load_config(path: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigurationError(f"cannot read config {path!r}: {exc}") from None
    values: dict = {}
    known = {f.name for f in fields(RunConfig)}
    if parser.has_section("run"):
        for key, val in parser.items("run"):
            if key not in _RUN_KEYS:
                raise ConfigurationError(f"unknown key {key!r} in [run]")
            try:
                values[key] = _RUN_KEYS[key](val)
            except ValueError:
                raise ConfigurationError(f"bad value for {key}: {val!r}") from None
    if parser.has_section("tolerances"):
        for key, val in parser.items("tolerances"):
            if key not in _TOL_KEYS:
                raise ConfigurationError(f"unknown key {key!r} in [tolerances]")
            try:
                values[_TOL_KEYS[key]] = float(val)
            except ValueError:
                raise ConfigurationError(f"bad tolerance {key}: {val!r}") from None
    if parser.has_section("model"):
        values["model_file"] = path
        values.setdefault("model", "user")
    unknown = set(parser.sections()) - {"run", "tolerances", "model"}
    if unknown:
        raise ConfigurationError(f"unknown sections {sorted(unknown)}")
    assert set(values) <= known
    return RunConfig(**values)


def load_user_model(path: str, degeneracy_tol: float = 1e-6) -> Builtin:
    """Build a model on R^m from symbolic expressions in a ``[model]`` section."""
    import sympy as sp

    from . import models
    from .gradients import VectorField
    from .models import MorseModel
    from .polynomial import PolyMap

    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
        sec = parser["model"]
    except (OSError, KeyError, configparser.Error) as exc:
        raise ConfigurationError(f"cannot read model from {path!r}: {exc}") from None
    try:
        names = [v.strip() for v in sec["variables"].split(",") if v.strip()]
        syms = sp.symbols(names)
        local = dict(zip(names, syms))
        f_expr = sp.sympify(sec["f"], locals=local)
        comps = [sp.sympify(c, locals=local) for c in sec["field"].split(",")]
    except (KeyError, sp.SympifyError, TypeError) as exc:
        raise ConfigurationError(f"bad model definition: {exc}") from None
    m = len(syms)
    if len(comps) != m:
        raise ConfigurationError(f"field has {len(comps)} components for {m} variables")
    extra = (f_expr.free_symbols | set().union(*(c.free_symbols for c in comps))) - set(syms)
    if extra:
        raise ConfigurationError(f"unknown symbols {sorted(map(str, extra))}")

    grad = [sp.diff(f_expr, s) for s in syms]
    hess = [[sp.diff(g, s) for s in syms] for g in grad]
    f_fn = sp.lambdify([syms], f_expr, "numpy")
    g_fn = sp.lambdify([syms], grad, "numpy")
    h_fn = sp.lambdify([syms], hess, "numpy")

    crit = []
    for chunk in sec.get("critical", "").split(";"):
        if chunk.strip():
            try:
                crit.append(np.array([float(v) for v in chunk.split(",")]))
            except ValueError:
                raise ConfigurationError(f"bad critical point {chunk!r}") from None
    model = MorseModel(
        manifold=models.euclidean(m, builtin_id=None),
        f={"identity": lambda x: float(f_fn(x))},
        grad={"identity": lambda x: np.array(g_fn(x), dtype=float)},
        hess={"identity": lambda x: np.array(h_fn(x), dtype=float)},
        critical_points=tuple(crit),
        name=sec.get("name", "user"),
        degeneracy_tol=degeneracy_tol,
    )
    if all(c.is_polynomial(*syms) for c in comps):
        terms = []
        for c in comps:
            poly = sp.Poly(c, *syms)
            terms.append({tuple(int(e) for e in mon): float(co) for mon, co in poly.terms()})
        field = VectorField.from_polys({"identity": PolyMap.from_terms(m, terms)}, name="user")
    else:
        v_fn = sp.lambdify([syms], comps, "numpy")
        j_fn = sp.lambdify([syms], [[sp.diff(c, s) for s in syms] for c in comps], "numpy")
        field = VectorField(
            components={"identity": lambda x: np.array(v_fn(x), dtype=float)},
            jacobians={"identity": lambda x: np.array(j_fn(x), dtype=float)},
            name="user",
        )
    return Builtin(model.name, model, {"default": field})


def resolve_model(cfg: RunConfig) -> Builtin:
    if cfg.model_file is not None and cfg.model in ("user", cfg.model_file):
        return load_user_model(cfg.model_file, cfg.tol_degeneracy)
    if os.path.isfile(cfg.model):
        return load_user_model(cfg.model, cfg.tol_degeneracy)
    return get_builtin(cfg.model)

"""Command-line interface.

Exit status: 0 on success, 1 when a verdict fails (or a certification or
numeric step fails), 2 on bad input or configuration.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import finspace, flow as flowmod, lifting
from .config import RunConfig, load_config, resolve_model
from .errors import InputError, MorseflowError
from .gradients import Sampler, verify_f_gradient

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _point(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--model", help="builtin id (e.g. quadratic, hyperbolic:1:2, sphere:2) or model file")
    p.add_argument("--field", help="named field of the model (default: default)")
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (fallback: $MORSEFLOW_OUT)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--tol-integrator", type=float, dest="tol_integrator")
    p.add_argument("--horizon", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--refine", type=int)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="morseflow", description="Orbit spaces of f-gradient flows.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("verify-gradient", parents=[common], help="check the f-gradient conditions")
    p = sub.add_parser("trace", parents=[common], help="integrate a trajectory")
    p.add_argument("--point", type=_point, required=True)
    p.add_argument("--time", type=float, required=True)
    p = sub.add_parser("orbit-eq", parents=[common], help="decide whether two points share an orbit")
    p.add_argument("--p1", type=_point, required=True)
    p.add_argument("--p2", type=_point, required=True)
    p = sub.add_parser("certify-box", parents=[common], help="certify a bidisk radius at a critical point")
    p.add_argument("--point", type=_point, help="critical point (default: first listed)")
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--R0", type=float)
    p.add_argument("--grid-step", type=float, dest="grid_step")
    for name, help_ in (
        ("finite-model", "finite model of a builtin orbit space"),
        ("suspend", "non-Hausdorff suspension of a finite space"),
        ("homology", "integral homology of an order complex"),
        ("separation", "separation axioms of a finite space"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--input", help="finite space JSON (or facet list for homology)")
    p = sub.add_parser("lift", parents=[common], help="lift a sampled orbit-space path")
    p.add_argument("--input", required=True, help="lift problem JSON")
    p = sub.add_parser("demo", parents=[common], help="built-in demonstrations")
    p.add_argument("name", choices=("spiral", "xn"))
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return cfg.override(
        model=args.model,
        field=args.field,
        seed=args.seed,
        out=args.out,
        format=args.format,
        tol_integrator=args.tol_integrator,
        horizon=args.horizon,
        n=args.n,
        refine=args.refine,
    )


def _flow(cfg: RunConfig):
    b = resolve_model(cfg)
    model = dataclasses.replace(b.model, degeneracy_tol=cfg.tol_degeneracy)
    fc = flowmod.FlowConfig(rtol=cfg.tol_integrator, atol=cfg.tol_integrator, horizon=cfg.horizon, merge_tol=cfg.tol_merge)
    return flowmod.Flow(model, b.field(cfg.field), fc)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path!r}: {exc}") from None


def _space(args, cfg: RunConfig) -> finspace.FiniteSpace:
    if getattr(args, "input", None):
        return finspace.FiniteSpace.from_json(_read(args.input))
    if args.model:
        return finspace.orbit_space_finite_model(cfg.model)
    return finspace.minimal_sphere_model(cfg.n)


def _emit(cfg: RunConfig, name: str, text: str, extra: dict[str, str] | None = None) -> None:
    sys.stdout.write(text)
    out = cfg.out_dir
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, name), "w", encoding="utf-8") as fh:
            fh.write(text)
        for fname, body in (extra or {}).items():
            with open(os.path.join(out, fname), "w", encoding="utf-8") as fh:
                fh.write(body)


def run(command: str, args, cfg: RunConfig) -> int:
    if command == "verify-gradient":
        fl = _flow(cfg)
        rep = verify_f_gradient(fl.model, fl.field, Sampler(seed=cfg.seed))
        _emit(cfg, "fgradient.json", rep.to_json() + "\n")
        return EXIT_OK if rep.verdict else EXIT_FAIL

    if command == "trace":
        fl = _flow(cfg)
        if abs(args.time) > cfg.horizon:
            raise InputError(f"|time| exceeds the horizon {cfg.horizon}")
        traj = fl.trajectory(args.point, args.time)
        if cfg.format == "csv":
            _emit(cfg, "trajectory.csv", traj.to_csv())
        else:
            doc = {"times": traj.times.tolist(), "points": traj.points.tolist(), "interval": list(traj.interval)}
            _emit(cfg, "trajectory.json", _dump(doc))
        return EXIT_OK

    if command == "orbit-eq":
        fl = _flow(cfg)
        m = flowmod.orbit_equivalent(fl, args.p1, args.p2)
        _emit(cfg, "orbit_eq.json", _dump(m.to_dict()))
        return EXIT_OK

    if command == "certify-box":
        fl = _flow(cfg)
        crit = fl.model.critical_points
        if args.point is None and not crit:
            raise InputError("model has no critical points")
        p = args.point if args.point is not None else crit[0]
        box = flowmod.build_critical_flow_box(fl, p, args.R, cfg.tol_linearity)
        box = flowmod.certify_bidisk_radius(box, args.R0 if args.R0 is not None else 0.5 * box.R, args.grid_step)
        _emit(cfg, "certificate.json", box.to_json() + "\n")
        return EXIT_OK

    if command == "finite-model":
        X = finspace.orbit_space_finite_model(cfg.model)
        doc = X.to_dict()
        doc["model"] = cfg.model
        doc["extension"] = finspace.is_extension_model(cfg.model)
        _emit(cfg, "finite_space.json", _dump(doc))
        return EXIT_OK

    if command == "suspend":
        X = finspace.nh_suspension(_space(args, cfg))
        _emit(cfg, "suspension.json", X.to_json() + "\n")
        return EXIT_OK

    if command == "homology":
        if args.input and not _read(args.input).lstrip().startswith("{"):
            K = finspace.SimplicialComplex.from_text(_read(args.input))
        else:
            K = finspace.order_complex(_space(args, cfg))
        prof = finspace.homology(K)
        doc = prof.to_dict()
        doc["f_vector"] = list(K.f_vector())
        _emit(cfg, "homology.json", _dump(doc), {"complex.txt": K.to_text()})
        return EXIT_OK

    if command == "separation":
        rep = finspace.separation_report(_space(args, cfg))
        _emit(cfg, "separation.json", _dump(rep.to_dict()))
        return EXIT_OK

    if command == "lift":
        fl = _flow(cfg)
        problem = lifting.LiftProblem.from_json(_read(args.input))
        res = lifting.lift_path(problem, fl)
        fiber = lifting.fiber_check(fl, res, problem.path)
        diag = res.diagnostics()
        diag["fiber_correct"] = all(fiber)
        if cfg.format == "csv":
            _emit(cfg, "lift.csv", res.to_csv(), {"lift_diagnostics.json": _dump(diag)})
        else:
            doc = {"s": res.s.tolist(), "tau": res.tau.tolist(), "points": res.points.tolist(), "diagnostics": diag}
            _emit(cfg, "lift.json", _dump(doc), {"lift.csv": res.to_csv()})
        return EXIT_OK if all(fiber) else EXIT_FAIL

    if command == "demo":
        if args.name == "spiral":
            rep = lifting.spiral_counterexample_report(range(4, 4 + cfg.refine))
            _emit(cfg, "spiral.json", _dump(rep.to_dict()))
            return EXIT_OK if rep.strictly_increasing else EXIT_FAIL
        X = finspace.minimal_sphere_model(cfg.n)
        doc = X.to_dict()
        doc["homology"] = finspace.homology(finspace.order_complex(X)).to_dict()
        doc["n"] = cfg.n
        _emit(cfg, "xn.json", _dump(doc))
        return EXIT_OK
    raise InputError(f"unknown command {command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        return run(args.command, args, cfg)
    except InputError as exc:
        print(f"morseflow: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MorseflowError as exc:
        print(f"morseflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

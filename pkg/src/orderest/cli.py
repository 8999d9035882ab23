"""Command-line front end.

Commands
--------
psi       closed-form vs numerically solved conditional optimum
bounds    envelope of the conditional optimum at ancillary values
improve   clip a catalogued estimator at one observed data pair
simulate  run a built-in risk-simulation panel, write CSV/SVG
analyze   paired-data pipeline with corrected mean estimates

Exit status: 0 success, 1 computational or domain error, 2 usage error.
All flags can also be supplied through a JSON config file (--config);
explicit flags win over config values.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .analysis import analyze_paired, bundled_dataset_path, load_paired_csv
from .errors import DomainError, OrderestError
from .estimators import catalog_estimator, clip_improve
from .families import LARGER, MODEL_NAMES, SMALLER, closed_form_psi, has_closed_form, make_model
from .losses import SCALE, make_loss
from .presets import PRESETS, run_preset
from .risksim import write_risk_csv, write_risk_svg
from .solver import SolverOptions, compute_bounds, make_psi_bounds, solve_psi_lambda


class UsageError(Exception):
    pass


_HYPER_FLAGS = ("s1", "s2", "rho", "a1", "a2")
_REQUIRED_HYPER = {
    "bvn": ("s1", "s2", "rho"),
    "dep_exp_gamma": (),
    "indep_exp": ("s1", "s2"),
    "cheriyan_gamma": (),
    "power_uniform": ("a1", "a2"),
    "indep_gamma": ("a1", "a2"),
}


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing required flag(s): " + ", ".join(f"--{m}" for m in missing))


def _model_from_args(args):
    _require(args, "model")
    name = args.model
    if name not in _REQUIRED_HYPER:
        raise UsageError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
    needed = _REQUIRED_HYPER[name]
    _require(args, *needed)
    hyper = {k: getattr(args, k) for k in needed}
    return make_model(name, **hyper)


def _loss_from_args(args, model):
    name = getattr(args, "loss", None)
    if name is None:
        name = "linex" if model.name == "dep_exp_gamma" else "squared_error"
    return make_loss(name, model.mode)


def _solver_options(args) -> SolverOptions:
    kwargs = {}
    if getattr(args, "abs_tol", None) is not None:
        kwargs["abs_tol"] = args.abs_tol
    if getattr(args, "lambda_grid_max", None) is not None:
        kwargs["lambda_grid_max"] = args.lambda_grid_max
    if getattr(args, "lambda_grid_points", None) is not None:
        kwargs["lambda_grid_points"] = args.lambda_grid_points
    return SolverOptions(**kwargs)


def cmd_psi(args) -> int:
    model = _model_from_args(args)
    loss = _loss_from_args(args, model)
    _require(args, "target", "lam", "t")
    opts = _solver_options(args)
    print(f"{'lambda':>12} {'t':>12} {'closed_form':>16} {'solver':>16} {'abs_diff':>12}")
    for lam in args.lam:
        for t in args.t:
            solved = solve_psi_lambda(model, loss, args.target, lam, t, opts)
            closed = closed_form_psi(model, loss, args.target, lam, t)
            if closed is None:
                closed_s, diff_s = "n/a", "n/a"
            else:
                closed_s, diff_s = f"{closed:.10g}", f"{abs(closed - solved):.3g}"
            print(f"{lam:>12g} {t:>12g} {closed_s:>16} {solved:>16.10g} {diff_s:>12}")
    return 0


def cmd_bounds(args) -> int:
    model = _model_from_args(args)
    loss = _loss_from_args(args, model)
    _require(args, "target", "t")
    opts = _solver_options(args)
    print(f"{'t':>12} {'lower':>16} {'upper':>16} {'provenance':>18}")
    for t in args.t:
        lo, hi, prov = compute_bounds(model, loss, args.target, t, opts, force_grid=args.force_grid)
        print(f"{t:>12g} {lo:>16.10g} {hi:>16.10g} {prov:>18}")
    return 0


def cmd_improve(args) -> int:
    model = _model_from_args(args)
    _require(args, "key", "x1", "x2")
    try:
        target, kind = args.key.split(":")
    except ValueError:
        raise UsageError("--key must look like <target>:<kind>, e.g. smaller:blee") from None
    if target not in (SMALLER, LARGER):
        raise UsageError(f"target must be {SMALLER!r} or {LARGER!r}")
    x1, x2 = args.x1, args.x2
    if model.mode == SCALE and (x1 <= 0.0 or x2 <= 0.0):
        raise DomainError("scale-mode data must be strictly positive")
    loss = _loss_from_args(args, model)
    est = catalog_estimator(model, target, kind)
    bounds = make_psi_bounds(model, loss, target, _solver_options(args))
    improved = clip_improve(est, bounds)

    anc = (x2 / x1) if model.mode == SCALE else (x2 - x1)
    base_val = est.evaluate(x1, x2)
    lo, hi = bounds.at(anc)
    improved_val = improved.evaluate(x1, x2)
    print(f"estimator        : {est.label} ({model.name}:{target})")
    print(f"observed ancillary: {anc:.10g}")
    print(f"base estimate    : {base_val:.10g}")
    print(f"envelope at anc  : [{lo:.10g}, {hi:.10g}] ({bounds.provenance})")
    print(f"improved estimate: {improved_val:.10g}")
    return 0


def cmd_simulate(args) -> int:
    _require(args, "preset")
    names = sorted(PRESETS) if args.preset == "all" else [args.preset]
    for name in names:
        if name not in PRESETS:
            raise UsageError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))} or all")
    os.makedirs(args.out_dir, exist_ok=True)
    for name in names:
        curve = run_preset(name, n=args.n, seed=args.seed, common_random_numbers=not args.no_crn)
        if args.format in ("csv", "both"):
            path = os.path.join(args.out_dir, f"{name}.csv")
            write_risk_csv(curve, path)
            print(path)
        if args.format in ("svg", "both"):
            path = os.path.join(args.out_dir, f"{name}.svg")
            write_risk_svg(curve, path)
            print(path)
    return 0


def cmd_analyze(args) -> int:
    path = args.data if args.data is not None else bundled_dataset_path()
    report = analyze_paired(load_paired_csv(path))
    for line in report.lines():
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file mirroring flags as keys")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--n", type=int, default=10_000)
    common.add_argument("--out-dir", default=".")
    common.add_argument("--format", choices=("csv", "svg", "both"), default="csv")

    model_flags = argparse.ArgumentParser(add_help=False)
    model_flags.add_argument("--model", choices=MODEL_NAMES)
    for flag in _HYPER_FLAGS:
        model_flags.add_argument(f"--{flag}", type=float)

    solver_flags = argparse.ArgumentParser(add_help=False)
    solver_flags.add_argument("--abs-tol", type=float, dest="abs_tol")
    solver_flags.add_argument("--lambda-grid-max", type=float, dest="lambda_grid_max")
    solver_flags.add_argument("--lambda-grid-points", type=int, dest="lambda_grid_points")

    parser = argparse.ArgumentParser(
        prog="orderest",
        description="Improved equivariant estimation for ordered location/scale pairs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_psi = sub.add_parser("psi", parents=[common, model_flags, solver_flags],
                           help="conditional optimum: closed form vs solver")
    p_psi.add_argument("--loss", choices=("squared_error", "linex"))
    p_psi.add_argument("--target", choices=(SMALLER, LARGER))
    p_psi.add_argument("--lambda", dest="lam", type=float, nargs="+")
    p_psi.add_argument("--t", type=float, nargs="+")
    p_psi.set_defaults(func=cmd_psi)

    p_bounds = sub.add_parser("bounds", parents=[common, model_flags, solver_flags],
                              help="envelope of the conditional optimum")
    p_bounds.add_argument("--loss", choices=("squared_error", "linex"))
    p_bounds.add_argument("--target", choices=(SMALLER, LARGER))
    p_bounds.add_argument("--t", type=float, nargs="+")
    p_bounds.add_argument("--force-grid", action="store_true")
    p_bounds.set_defaults(func=cmd_bounds)

    p_improve = sub.add_parser("improve", parents=[common, model_flags, solver_flags],
                               help="clip a catalogued estimator at one data pair")
    p_improve.add_argument("--key", help="<target>:<kind>, e.g. smaller:blee")
    p_improve.add_argument("--loss", choices=("squared_error", "linex"))
    p_improve.add_argument("--x1", type=float)
    p_improve.add_argument("--x2", type=float)
    p_improve.set_defaults(func=cmd_improve)

    p_sim = sub.add_parser("simulate", parents=[common],
                           help="run a built-in risk-simulation panel")
    p_sim.add_argument("--preset", help="panel name (fig1a..fig1h, fig2a..fig2f) or all")
    p_sim.add_argument("--no-crn", action="store_true",
                       help="disable common random numbers across estimators")
    p_sim.set_defaults(func=cmd_simulate)

    p_an = sub.add_parser("analyze", parents=[common],
                          help="paired-data analysis with corrected means")
    p_an.add_argument("--data", help="CSV with columns label,value_a,value_b "
                                     "(default: bundled sprinter speeds)")
    p_an.set_defaults(func=cmd_analyze)

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> None:
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return
    with open(known.config) as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise UsageError("config file must hold a JSON object")
    sub_actions = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    defaults = {key.replace("-", "_"): value for key, value in config.items()}
    for sub in sub_actions:
        for p in sub.choices.values():
            dests = {a.dest for a in p._actions}
            unknown = set(defaults) - dests - {"command"}
            p.set_defaults(**{k: v for k, v in defaults.items() if k in dests})
    parser.set_defaults(**{k: v for k, v in defaults.items() if k == "command"})
    leftover = set(defaults) - {
        a.dest for sub in sub_actions for p in sub.choices.values() for a in p._actions
    } - {"command"}
    if leftover:
        raise UsageError(f"unknown config keys: {', '.join(sorted(leftover))}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except OrderestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: ``projcoreset <command> [options]``.

Every command writes a JSON artifact (``"schema": 1``) to ``--output`` or
stdout. Exit codes: 0 success, 2 input error, 3 capability error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .coreset import Coreset, draw, mix_floor, plan_size
from .errors import CoresetError, InputError
from .evaluation import evaluate
from .experiments import ExperimentConfig, rows_to_csv, run_experiment
from .fitters import FitResult, exact_fit, fit
from .geometry import FAMILIES, DistanceConfig, PointSet, cost
from .io import config_hash, dump_artifact, load_artifact, read_points_csv, shape_from_json, shape_to_json, write_points_csv
from .sensitivity import (
    SensitivityProfile,
    exact_sensitivity_oracle,
    lowerbound_instance,
    lowerbound_table,
    sens_empirical,
    sens_kcenters,
    sens_subspace,
)

SENS_METHODS = ("auto", "closed-form", "empirical", "oracle")


def _common(p: argparse.ArgumentParser, family: bool = True) -> None:
    p.add_argument("--input", "-i", required=True, help="points CSV")
    p.add_argument("--weights-column", default=None, help="weight column (header name or 0-based index)")
    p.add_argument("--output", "-o", default=None, help="output JSON (default: stdout)")
    if family:
        p.add_argument("--family", choices=FAMILIES, default="kcenters")
        p.add_argument("-k", type=int, default=1)
        p.add_argument("-j", type=int, default=0)
    p.add_argument("--z", type=float, default=2.0)
    p.add_argument("--experimental-z", action="store_true", help="allow z < 1")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="projcoreset", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--threads", type=int, default=None, help="cap BLAS worker threads")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a shape to the points")
    _common(p)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--approx-factor", type=float, default=None, help="claimed approximation factor c")
    p.add_argument("--exact", action="store_true", help="exhaustive fit (tiny inputs only)")

    p = sub.add_parser("sensitivity", help="per-point sensitivity bounds")
    _common(p)
    p.add_argument("--method", choices=SENS_METHODS, default="auto")
    p.add_argument("--fit", default=None, help="fit artifact to reuse")
    p.add_argument("--approx-factor", type=float, default=None, help="override the fit's factor c")
    p.add_argument("--budget", type=int, default=512, help="shape budget for the empirical estimator")

    p = sub.add_parser("coreset", help="sample a weighted coreset")
    _common(p)
    p.add_argument("--profile", default=None, help="sensitivity artifact (default: computed here)")
    p.add_argument("--method", choices=SENS_METHODS, default="auto")
    p.add_argument("--budget", type=int, default=512)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--size-constant", type=float, default=1.0)
    p.add_argument("--dim-estimate", type=int, default=None)
    p.add_argument("--size", type=int, default=None, help="sample size, overriding the plan")
    p.add_argument("--approx-factor", type=float, default=None)
    p.add_argument("--csv-output", default=None, help="also write the weighted points as CSV")

    p = sub.add_parser("evaluate", help="relative error of a coreset over a shape ensemble")
    _common(p)
    p.add_argument("--coreset", required=True, help="coreset artifact (JSON) or weighted CSV")
    p.add_argument("--coreset-weights-column", default="weight")
    p.add_argument("--n-random", type=int, default=100)
    p.add_argument("--n-adversarial", "--budget", type=int, default=3, dest="n_adversarial")

    p = sub.add_parser("lowerbound", help="the log n lower-bound instance and its ratio table")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--points-csv", default=None)

    p = sub.add_parser("experiment", help="run a batch experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--output", "-o", default=None, help="CSV table (default: config output or stdout)")
    p.add_argument("--experimental-z", action="store_true")
    return parser


def _load_points(args) -> PointSet:
    col = args.weights_column
    if col is not None and col.lstrip("-").isdigit():
        col = int(col)
    try:
        return read_points_csv(args.input, col)
    except OSError as exc:
        raise InputError(f"cannot read {args.input}: {exc}") from None


def _cfg(args) -> DistanceConfig:
    return DistanceConfig(args.z, args.experimental_z)


def _provenance(args, exclude=("output", "csv_output", "threads", "func")) -> dict:
    conf = {key: v for key, v in sorted(vars(args).items()) if key not in exclude}
    return {"command": args.command, "config": conf, "config_hash": config_hash(conf), "seed": conf.get("seed")}


def _emit(args, body: dict) -> None:
    text = dump_artifact({**_provenance(args), **body})
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _do_fit(args, P, cfg) -> FitResult:
    if args.family in ("jflat",) and args.j >= P.d:
        raise InputError(f"j must be < d = {P.d}")
    if getattr(args, "exact", False):
        res = exact_fit(P, args.family, cfg, k=args.k, j=args.j)
    else:
        opts = {"restarts": getattr(args, "restarts", 10), "seed": args.seed}
        if args.approx_factor is not None:
            opts["approx_factor"] = args.approx_factor
        res = fit(P, args.family, cfg, k=args.k, j=args.j, **({} if args.family == "jflat" else opts))
    return res


def cmd_fit(args) -> int:
    P, cfg = _load_points(args), _cfg(args)
    res = _do_fit(args, P, cfg)
    _emit(args, {"fit": res.summary(), "cost": res.cost, "shape": shape_to_json(res.shape)})
    return 0


def _fit_from_artifact(path, P, cfg) -> FitResult:
    art = load_artifact(path)
    try:
        shape = shape_from_json(art["shape"])
        c = float(art["fit"]["approx_factor_c"])
        method = art["fit"]["method"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path} is not a fit artifact: {exc}") from None
    return FitResult(shape, cost(P, shape, cfg), c, method, art.get("seed"))


def _profile(args, P, cfg) -> SensitivityProfile:
    method = getattr(args, "method", "auto")
    if method == "auto":
        method = "closed-form" if args.family in ("kcenters", "jflat") else "empirical"
    if method == "oracle":
        return exact_sensitivity_oracle(P, args.family, cfg, k=args.k, j=args.j, seed=args.seed)
    if method == "empirical":
        return sens_empirical(P, args.family, cfg, k=args.k, j=args.j, budget=args.budget, seed=args.seed)
    if args.family not in ("kcenters", "jflat"):
        raise InputError("closed-form bounds exist for kcenters and jflat; use --method empirical")
    if getattr(args, "fit", None):
        res = _fit_from_artifact(args.fit, P, cfg)
    else:
        res = _do_fit(args, P, cfg)
    if args.family == "kcenters":
        return sens_kcenters(P, res, cfg, c=args.approx_factor)
    return sens_subspace(P, res, cfg, c=args.approx_factor)


def cmd_sensitivity(args) -> int:
    P, cfg = _load_points(args), _cfg(args)
    prof = _profile(args, P, cfg)
    _emit(args, {"profile": prof.to_json()})
    return 0


def cmd_coreset(args) -> int:
    P, cfg = _load_points(args), _cfg(args)
    if args.profile:
        art = load_artifact(args.profile)
        if "profile" not in art:
            raise InputError(f"{args.profile} is not a sensitivity artifact")
        prof = SensitivityProfile.from_json(art["profile"])
        if prof.n != P.n:
            raise InputError("profile and input differ in size")
    else:
        prof = _profile(args, P, cfg)
    if prof.lower_bound and not prof.floor_mixed:
        prof = mix_floor(prof)
    dim = args.dim_estimate
    if dim is None:
        kk = 1 if args.family == "jflat" else args.k
        cj = {"kcenters": 0, "klines": 1}.get(args.family, args.j)
        dim = (cj + 1) * P.d * kk
    plan = plan_size(args.epsilon, prof, dim, args.size_constant)
    S = draw(P, prof, args.size if args.size is not None else plan, seed=args.seed)
    if args.csv_output:
        write_points_csv(args.csv_output, P.coords[S.indices], S.weights)
    _emit(args, {"coreset": S.to_json(P), "plan": plan.to_json(), "profile_method": prof.method,
                 "floor_mixed": prof.floor_mixed})
    return 0


def _load_coreset(args, P) -> PointSet:
    path = Path(args.coreset)
    if path.suffix.lower() == ".csv":
        col = args.coreset_weights_column
        return read_points_csv(path, int(col) if col.lstrip("-").isdigit() else col)
    art = load_artifact(path)
    if "coreset" not in art:
        raise InputError(f"{path} is not a coreset artifact")
    return Coreset.from_json(art["coreset"]).points(P, merge=True)


def cmd_evaluate(args) -> int:
    P, cfg = _load_points(args), _cfg(args)
    S = _load_coreset(args, P)
    rep = evaluate(P, S, args.family, cfg, k=args.k, j=args.j, n_random=args.n_random,
                   n_adversarial=args.n_adversarial, seed=args.seed)
    _emit(args, {"report": rep})
    return 0


def cmd_lowerbound(args) -> int:
    P, shapes = lowerbound_instance(args.n)
    table = lowerbound_table(args.n)
    if args.points_csv:
        write_points_csv(args.points_csv, P.coords)
    body = {
        "n": args.n,
        "points": P.coords,
        "shapes": [shape_to_json(s) for s in shapes],
        "table": table,
        "total": table[-1]["cumulative"],
        "harmonic_lower_bound": table[-1]["harmonic_floor"],
    }
    _emit(args, body)
    return 0


def cmd_experiment(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {args.config}: {exc}") from None
    cfg = ExperimentConfig.from_json(text, experimental_z=args.experimental_z)
    out = rows_to_csv(run_experiment(cfg))
    target = args.output or cfg.output
    if target:
        Path(target).write_text(out)
    else:
        sys.stdout.write(out)
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "sensitivity": cmd_sensitivity,
    "coreset": cmd_coreset,
    "evaluate": cmd_evaluate,
    "lowerbound": cmd_lowerbound,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads is not None:
            if args.threads < 1:
                raise InputError("--threads must be >= 1")
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=args.threads):
                return COMMANDS[args.command](args)
        return COMMANDS[args.command](args)
    except CoresetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

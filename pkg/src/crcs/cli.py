"""Command line front end.

Exit codes: 0 success, 2 bad input, 3 optimizer did not converge,
4 optimality certificate failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io as cio
from .certify import InfeasibleEstimateError, fenchel_check
from .estimators import ConvergenceError, mle_estimate, naive_estimate
from .experiments import RateConfig, rate_experiment
from .metrics import hellinger, lr_distance, total_variation
from .model import ConstraintError, DataError
from .simulation import minimax_bound, optimal_c, sample_dataset, two_point_risk
from .truth import TruthModel, default_truth, local_truth

EXIT_OK, EXIT_INPUT, EXIT_CONVERGENCE, EXIT_CERTIFICATE = 0, 2, 3, 4


class InputError(Exception):
    pass


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as err:
        raise InputError(f"cannot read {path}: {err.strerror}") from None


def _read_json(path: str) -> dict:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as err:
        raise InputError(f"{path}: invalid JSON at line {err.lineno}: {err.msg}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _truth(obj: dict) -> TruthModel:
    try:
        return TruthModel.from_dict(obj)
    except (KeyError, TypeError, ValueError) as err:
        raise InputError(f"invalid truth model: {err}") from None


def _load_data(args):
    return cio.dataset_from_csv(_read_text(args.input), args.k)


def cmd_estimate(args) -> int:
    d = _load_data(args)
    if args.method == "naive":
        res = naive_estimate(d)
        out = {
            "method": "naive",
            "K": d.k_causes,
            "components": [cio.stepfn_to_dict(c) for c in res.components],
            "sum_violations": [{"t": t, "F_plus": s} for t, s in res.sum_violations],
        }
        _write(args.out, cio.dumps(out))
        return EXIT_OK
    res = mle_estimate(d, fenchel_tol=args.tol, max_iters=args.max_iters)
    out = {
        "method": "mle",
        "K": d.k_causes,
        "components": [cio.stepfn_to_dict(c) for c in res.components],
        "tail_mass_total": res.tail_mass_total,
        "tail_unique": res.tail_unique,
        "loglik": res.loglik,
        "iterations": res.iterations,
    }
    code = EXIT_OK
    if args.certify:
        rep = fenchel_check(d, res.system, args.tol)
        out["fenchel"] = rep.to_dict()
        if not rep.passed:
            code = EXIT_CERTIFICATE
    _write(args.out, cio.dumps(out))
    return code


def _load_estimate(path: str, K: int):
    obj = _read_json(path)
    try:
        system = cio.system_from_dict({"K": obj.get("K", K), "components": obj["components"]}, sum_tolerance=None)
    except (KeyError, TypeError, ValueError) as err:
        raise InputError(f"{path}: invalid estimate: {err}") from None
    if system.K != K:
        raise InputError(f"{path}: estimate has K={system.K}, expected {K}")
    return system


def cmd_certify(args) -> int:
    d = _load_data(args)
    system = _load_estimate(args.estimate, d.k_causes)
    try:
        rep = fenchel_check(d, system, args.tol)
    except InfeasibleEstimateError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CERTIFICATE
    _write(args.out, cio.dumps(rep.to_dict()))
    return EXIT_OK if rep.passed else EXIT_CERTIFICATE


def cmd_metrics(args) -> int:
    tm = _truth(_read_json(args.truth))
    system = _load_estimate(args.estimate, tm.K)
    h = hellinger(system, tm, tm.G)
    tv = total_variation(system, tm, tm.G)
    l1 = lr_distance(system, tm, tm.G, 1)
    l2 = lr_distance(system, tm, tm.G, 2)
    out = {
        "hellinger": h.value,
        "tv": tv.value,
        "l1": l1.value,
        "l2": l2.value,
        "quadrature_error_bound": max(m.quadrature_error_bound for m in (h, tv, l1, l2)),
        "max_sum_excess": h.max_sum_excess,
    }
    _write(args.out, cio.dumps(out))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _read_json(args.config)
    if not isinstance(cfg, dict) or "truth" not in cfg:
        raise InputError("simulate config needs a 'truth' object")
    tm = _truth(cfg["truth"])
    n = args.n if args.n is not None else cfg.get("n")
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InputError(f"n must be a positive integer, got {n!r}")
    if not isinstance(seed, int) or seed < 0:
        raise InputError(f"seed must be a nonnegative integer, got {seed!r}")
    _write(args.out, cio.dataset_to_csv(sample_dataset(tm, n, seed)))
    return EXIT_OK


def cmd_rates(args) -> int:
    obj = _read_json(args.config) if args.config else {}
    if args.seed is not None:
        obj["base_seed"] = args.seed
    try:
        cfg = RateConfig.from_dict(obj)
    except (KeyError, TypeError, ValueError) as err:
        raise InputError(f"invalid rates config: {err}") from None
    table = rate_experiment(cfg, workers=args.workers)
    if args.out_csv:
        _write(args.out_csv, table.to_csv())
    if args.out_json:
        _write(args.out_json, cio.dumps(table.to_dict()))
    sys.stdout.write(table.slope_table())
    return EXIT_OK


def cmd_minimax(args) -> int:
    tm = _truth(_read_json(args.truth)) if args.truth else default_truth()
    try:
        lt = local_truth(tm, args.t0)
    except ValueError as err:
        raise InputError(str(err)) from None
    if not 1 <= args.cause <= tm.K:
        raise InputError(f"cause must be in 1..{tm.K}")
    b = minimax_bound(lt, args.cause, args.r)
    out = {"t0": args.t0, "k": args.cause, "r": args.r, **b}
    if not args.eval_only:
        c = args.c if args.c is not None else optimal_c(lt, args.cause)
        out["c"] = c
        out["risks"] = [
            {"n": n, **two_point_risk(tm, args.cause, c, n, args.t0, args.reps, args.seed, args.estimator, args.r)}
            for n in args.n
        ]
    _write(args.out, cio.dumps(out))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crcs", description="Current status competing risks estimation toolkit")
    sub = p.add_subparsers(dest="verb", required=True)

    e = sub.add_parser("estimate", help="fit the naive estimator or the MLE")
    e.add_argument("--input", required=True)
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--method", choices=("mle", "naive"), default="mle")
    e.add_argument("--out")
    e.add_argument("--certify", action="store_true")
    e.add_argument("--tol", type=float, default=1e-8)
    e.add_argument("--max-iters", type=int, default=10000)
    e.set_defaults(func=cmd_estimate)

    c = sub.add_parser("certify", help="check the optimality conditions for an estimate")
    c.add_argument("--input", required=True)
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--estimate", required=True)
    c.add_argument("--tol", type=float, default=1e-8)
    c.add_argument("--out")
    c.set_defaults(func=cmd_certify)

    m = sub.add_parser("metrics", help="distances between an estimate and a truth model")
    m.add_argument("--estimate", required=True)
    m.add_argument("--truth", required=True)
    m.add_argument("--out")
    m.set_defaults(func=cmd_metrics)

    s = sub.add_parser("simulate", help="draw a dataset from a truth model")
    s.add_argument("--config", required=True)
    s.add_argument("--n", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("rates", help="Monte Carlo rate experiment")
    r.add_argument("--config")
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--out-csv")
    r.add_argument("--out-json")
    r.set_defaults(func=cmd_rates)

    x = sub.add_parser("minimax", help="two-point lower bound and Monte Carlo risks")
    x.add_argument("--truth")
    x.add_argument("--t0", type=float, default=1.0)
    x.add_argument("--cause", type=int, default=1)
    x.add_argument("--r", type=int, default=1)
    x.add_argument("--eval-only", action="store_true")
    x.add_argument("--c", type=float)
    x.add_argument("--n", type=int, nargs="+", default=[2000, 8000])
    x.add_argument("--reps", type=int, default=50)
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--estimator", choices=("mle", "naive"), default="mle")
    x.add_argument("--out")
    x.set_defaults(func=cmd_minimax)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, DataError, ConstraintError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: kernel checks, estimation, deconvolution demos,
bound reports, and rate studies.

Every run writes a ``manifest.json`` next to its outputs holding the full
resolved configuration, the seed, and the library versions, so each output
file can be reproduced byte-for-byte from its manifest.  Exit codes:
0 success, 1 domain/configuration error (the message names the offending
flag), 2 internal numeric failure (a diagnostic dump path is printed).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import platform
import sys
import traceback

import numpy as np
import scipy

from . import __version__
from .deconv import (
    OSCILLATORY,
    bound_report,
    build_transfer,
    plan_for_bandwidth,
    select_bandwidth,
    smoothed_estimate,
)
from .errors import DomainError, StructuralError, UnsupportedVariantError
from .estimators import fit_minimum_distance, oracle_inject
from .grids import GridBox, apply_transfer, grid_from_callable, lp_distance, write_grid_csv
from .kernels import build_kernel, verify_moments
from .noise import parse_model
from .ratelab import (
    StudyConfig,
    fit_rate,
    run_study,
    write_study,
)
from .targets import parse_target

OUT_DIR_ENV = "MIXDECONV_OUT_DIR"


class CliError(Exception):
    """Configuration/usage error; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse calls sys.exit(2) on bad flags; route through CliError so the
    # documented exit-code contract (config error -> 1) holds instead
    def error(self, message):
        raise CliError(message)


def _build_parser() -> _Parser:
    root = _Parser(prog="mixdeconv", description=__doc__)
    root.add_argument("--seed", type=int, default=0, help="master seed")
    root.add_argument("--grid-nodes", type=int, default=2**14)
    root.add_argument("--out-dir", default=None,
                      help=f"output directory (default ${OUT_DIR_ENV} or '.')")
    root.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                      help="worker threads for replicate sweeps")
    top = root.add_subparsers(dest="group", required=True)

    kernel = top.add_parser("kernel").add_subparsers(dest="action", required=True)
    check = kernel.add_parser("check", help="kernel moment report")
    check.add_argument("--d", type=int, default=1)
    check.add_argument("--M", type=float, default=2.0)
    check.add_argument("--rho", type=float, default=0.5)
    check.add_argument("--leg", type=int, default=4, help="transition smoothness r")
    check.add_argument("--qmax", type=int, default=6)
    check.add_argument("--tol", type=float, default=1e-3)
    check.add_argument("--out", default="moments.csv")

    est = top.add_parser("estimate", help="fit a sieve mixture from samples")
    est.add_argument("--model", required=True)
    est.add_argument("--target", required=True)
    est.add_argument("--n", type=int, required=True)
    est.add_argument("--nodes", type=int, default=40, help="sieve atom count")
    est.add_argument("--out", nargs=2, default=("f_hat.csv", "p_hat.csv"),
                     metavar=("FHAT", "PHAT"))

    demo = top.add_parser("deconv").add_subparsers(dest="action", required=True)
    demo = demo.add_parser("demo", help="injected-error deconvolution demo")
    demo.add_argument("--model", required=True)
    demo.add_argument("--target", required=True)
    demo.add_argument("--a_n", type=float, required=True)
    demo.add_argument("--xi", type=float, default=0.5)
    demo.add_argument("--u", type=float, default=2.0)
    demo.add_argument("--out", nargs=2, default=("report.csv", "estimate.csv"),
                      metavar=("REPORT", "ESTIMATE"))

    bounds = top.add_parser("bounds").add_subparsers(dest="action", required=True)
    rep = bounds.add_parser("report", help="bound-report rows over a plan grid")
    rep.add_argument("--model", required=True)
    rep.add_argument("--target", default="bump")
    rep.add_argument("--xi", type=float, default=0.5)
    rep.add_argument("--b", type=float, nargs="+", required=True)
    rep.add_argument("--m", type=float, default=None, help="override band exponent")
    rep.add_argument("--v_n", type=float, default=None, help="override threshold scale")
    rep.add_argument("--a_n", type=float, default=1e-3, help="injected mixture error")
    rep.add_argument("--u", type=float, default=2.0)
    rep.add_argument("--out", default="bounds.csv")

    rates = top.add_parser("rates").add_subparsers(dest="action", required=True)
    run = rates.add_parser("run", help="run a rate study from a config file")
    run.add_argument("--config", required=True)
    fit = rates.add_parser("fit", help="fit a slope to an existing results CSV")
    fit.add_argument("--results", required=True)
    fit.add_argument("--scale", choices=("algebraic", "logarithmic"),
                     default="algebraic")
    fit.add_argument("--out", default="fit.csv")
    return root


# ----------------------------------------------------------------------
# manifest


def _write_manifest(out_dir, command: str, config: dict, seed: int):
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "mixdeconv": __version__,
        },
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _resolve_out_dir(args) -> str:
    out_dir = args.out_dir or os.environ.get(OUT_DIR_ENV) or "."
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


# ----------------------------------------------------------------------
# subcommands


def _cmd_kernel_check(args, out_dir) -> int:
    kernel = build_kernel(d=args.d, M=args.M, rho=args.rho, r=args.leg)
    report = verify_moments(kernel, q_max=args.qmax, tol=args.tol)
    path = os.path.join(out_dir, args.out)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["moment_index", "value", "pass"])
        for idx, value, ok in report.rows():
            writer.writerow([idx, _fmt(float(value)), _fmt(bool(ok))])
    for idx, value, ok in report.rows():
        print(f"{idx},{_fmt(float(value))},{_fmt(bool(ok))}")
    _write_manifest(out_dir, "kernel check", vars(args), args.seed)
    if not report.all_ok:
        raise CliError(f"moment check failed at --tol {args.tol:g}")
    return 0


def _cmd_estimate(args, out_dir) -> int:
    model = parse_model(args.model)
    target = parse_target(args.target)
    from .targets import sample_mixture

    box = GridBox((-64.0,), (64.0,), (args.grid_nodes,))
    samples = sample_mixture(target, model, args.n, seed=args.seed)
    _, p_hat, f_hat = fit_minimum_distance(samples, model, target.support,
                                           nodes=args.nodes, box=box)
    write_grid_csv(f_hat, os.path.join(out_dir, args.out[0]))
    write_grid_csv(p_hat, os.path.join(out_dir, args.out[1]))
    f_p = apply_transfer(grid_from_callable(box, target.pdf), model.htilde).real_part()
    print(f"measured a_n (u=2): {_fmt(lp_distance(f_hat, f_p, 2.0))}")
    _write_manifest(out_dir, "estimate", vars(args), args.seed)
    return 0


def _bound_row(model, target, plan, a_n, u, grid_nodes, seed):
    box = GridBox((-64.0,), (64.0,), (grid_nodes,))
    p = grid_from_callable(box, target.pdf)
    f_p = apply_transfer(p, model.htilde).real_part()
    p_hat, f_hat = oracle_inject(p, model, a_n, u=u, seed=seed)
    if model.variant == OSCILLATORY:
        operand = build_transfer(model, plan)
    else:
        operand = model
    report = bound_report(p_hat, p, f_hat, f_p, plan, operand, u,
                          target.smoothness)
    est = smoothed_estimate(p_hat, plan)
    return report, est


_BOUND_COLUMNS = ("b", "m", "v_n", "delta", "psi_star_l2", "tail", "reg",
                  "c_hat", "c_lhs", "approx_term", "transfer_term", "rhs",
                  "a_n", "coefficient_positive")


def _cmd_deconv_demo(args, out_dir) -> int:
    model = parse_model(args.model)
    target = parse_target(args.target)
    plan = select_bandwidth(model, args.a_n, target.smoothness, xi=args.xi)
    report, est = _bound_row(model, target, plan, args.a_n, args.u,
                             args.grid_nodes, args.seed)
    path = os.path.join(out_dir, args.out[0])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_BOUND_COLUMNS)
        writer.writerow([_fmt(v) for v in (
            plan.b, plan.m, plan.v_n, plan.delta, report.psi_star_l2,
            report.tail, report.reg, report.c_hat, report.c_lhs,
            report.approx_term, report.transfer_term, report.rhs,
            report.a_n, report.coefficient_positive)])
    write_grid_csv(est, os.path.join(out_dir, args.out[1]))
    print(f"b={_fmt(plan.b)} rhs={_fmt(report.rhs)} c_lhs={_fmt(report.c_lhs)}")
    _write_manifest(out_dir, "deconv demo", vars(args), args.seed)
    return 0


def _cmd_bounds_report(args, out_dir) -> int:
    model = parse_model(args.model)
    target = parse_target(args.target)
    path = os.path.join(out_dir, args.out)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_BOUND_COLUMNS)
        for b in args.b:
            plan = plan_for_bandwidth(model, b, xi=args.xi, m=args.m, v_n=args.v_n)
            report, _ = _bound_row(model, target, plan, args.a_n, args.u,
                                   args.grid_nodes, args.seed)
            row = [_fmt(v) for v in (
                plan.b, plan.m, plan.v_n, plan.delta, report.psi_star_l2,
                report.tail, report.reg, report.c_hat, report.c_lhs,
                report.approx_term, report.transfer_term, report.rhs,
                report.a_n, report.coefficient_positive)]
            writer.writerow(row)
            print(",".join(row))
    _write_manifest(out_dir, "bounds report", vars(args), args.seed)
    return 0


def _study_config_from_file(path, seed: int, grid_nodes: int) -> StudyConfig:
    if not os.path.exists(path):
        raise CliError(f"--config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.read(path)
    for section in ("model", "target", "study"):
        if section not in parser:
            raise CliError(f"--config is missing the [{section}] section")
    study = parser["study"]
    try:
        return StudyConfig(
            model=parser["model"].get("spec", "gaussian"),
            target=parser["target"].get("spec", "bump"),
            mode=study.get("mode", "oracle_inject"),
            n_grid=tuple(float(v) for v in study.get("n_grid", "1024,8192,65536").split(",")),
            replicates=study.getint("replicates", 1),
            u=study.getfloat("u", 2.0),
            deriv_order=study.getint("deriv_order", 0),
            master_seed=study.getint("master_seed", seed),
            xi=study.getfloat("xi", 0.5),
            a_exponent=study.getfloat("a_exponent", 0.5),
            log_power=study.getfloat("log_power", 0.0),
            kernel_m=study.getfloat("kernel_m", 2.0),
            grid_nodes=study.getint("grid_nodes", grid_nodes),
            grid_half=study.getfloat("grid_half", 64.0),
            inject_shape=study.get("inject_shape", "random_phase"),
            sieve_nodes=study.getint("sieve_nodes", 40),
            out_path=study.get("out_path", ""),
        )
    except (ValueError, DomainError) as exc:
        raise CliError(f"bad value in --config: {exc}") from exc


def _cmd_rates_run(args, out_dir) -> int:
    config = _study_config_from_file(args.config, args.seed, args.grid_nodes)
    result = run_study(config, workers=max(1, args.threads))
    target_dir = config.out_path or out_dir
    os.makedirs(target_dir, exist_ok=True)
    write_study(result, target_dir)
    cfg_echo = dict(vars(args))
    cfg_echo["study"] = {k: list(v) if isinstance(v, tuple) else v
                         for k, v in config.__dict__.items()}
    _write_manifest(target_dir, "rates run", cfg_echo, config.master_seed)
    print(f"slope={_fmt(result.slope)} se={_fmt(result.slope_se)} "
          f"predicted={_fmt(result.predicted_exponent)} "
          f"({result.predicted_scale}) passed={_fmt(result.passed)}")
    return 0


def _cmd_rates_fit(args, out_dir) -> int:
    if not os.path.exists(args.results):
        raise CliError(f"--results file not found: {args.results}")
    groups: dict = {}
    with open(args.results, newline="") as fh:
        for row in csv.DictReader(fh):
            groups.setdefault(float(row["n"]), []).append(
                (float(row["a_n"]), float(row["error"])))
    pairs = []
    for n in sorted(groups):
        block = groups[n]
        pairs.append((float(np.median([a for a, _ in block])),
                      float(np.median([e for _, e in block]))))
    slope, se = fit_rate(pairs, args.scale)
    path = os.path.join(out_dir, args.out)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scale", "slope", "stderr", "pairs"])
        writer.writerow([args.scale, _fmt(slope), _fmt(se), len(pairs)])
    print(f"slope={_fmt(slope)} stderr={_fmt(se)}")
    _write_manifest(out_dir, "rates fit", vars(args), args.seed)
    return 0


# ----------------------------------------------------------------------
# dispatch


def dispatch(argv) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    out_dir = _resolve_out_dir(args)
    command = (args.group, getattr(args, "action", None))
    if command == ("kernel", "check"):
        return _cmd_kernel_check(args, out_dir)
    if command == ("estimate", None):
        return _cmd_estimate(args, out_dir)
    if command == ("deconv", "demo"):
        return _cmd_deconv_demo(args, out_dir)
    if command == ("bounds", "report"):
        return _cmd_bounds_report(args, out_dir)
    if command == ("rates", "run"):
        return _cmd_rates_run(args, out_dir)
    if command == ("rates", "fit"):
        return _cmd_rates_fit(args, out_dir)
    raise CliError(f"unknown command {command}")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        return dispatch(argv)
    except (CliError, DomainError, StructuralError, UnsupportedVariantError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        dump_dir = os.environ.get(OUT_DIR_ENV) or "."
        try:
            os.makedirs(dump_dir, exist_ok=True)
            dump = os.path.join(dump_dir, "diagnostic.txt")
            with open(dump, "w") as fh:
                fh.write("argv: " + " ".join(argv) + "\n\n")
                fh.write(traceback.format_exc())
            print(f"internal error; diagnostic dump at {dump}", file=sys.stderr)
        except OSError:
            traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())

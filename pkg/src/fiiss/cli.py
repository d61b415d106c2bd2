"""Command-line entry point.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage error, 3 resource cap.
Errors are reported on stderr as a single JSON record.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .analytic import FiissParams
from .errors import DomainError, FiissError, ResourceCapError
from .paths import (
    DEFAULT_T_STEP, divergence_scan, fiiss_from_subordinator, fiiss_marginal, invert_path,
    simulate_subordinator_until,
)
from .sampling import RandomSource, _json_default, format_number, write_csv
from .stats import ReportEntry, VerificationReport
from . import suite

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3
COMMANDS = ("simulate", "figure1", "verify", "converge", "tail", "lil", "diverge")
FIGURE1_ALPHA = 0.75
FIGURE1_BETAS = (0.5, -0.5, -1.5)


class UsageError(FiissError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).replace(" ", "").split(",") if x]


def _ints(text: str) -> list[int]:
    return [int(float(x)) for x in str(text).replace(" ", "").split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="file of 'key = value' lines; flags override it")
    common.add_argument("--alpha", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--seed", type=int, default=suite.DEFAULT_SEED)
    common.add_argument("--streams", type=int, default=1, help="worker processes")
    common.add_argument("--n", type=int, help="replicas (paths or draws)")
    common.add_argument("--t-ladder", dest="t_ladder", type=_floats)
    common.add_argument("--steps", type=_ints, help="grid intervals, or the refinement ladder for diverge")
    common.add_argument("--t-step", dest="t_step", type=float)
    common.add_argument("--u-max", dest="u_max", type=float, default=1.0)
    common.add_argument("--window", type=_floats)
    common.add_argument("--suite", choices=("parameters", "acceptance"), default="parameters")
    common.add_argument("--output", "-o")
    common.add_argument("--format", choices=("csv", "json"))

    parser = _Parser(prog="fiiss", description="Simulate and verify fractionally integrated inverse stable subordinators.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "simulate": "one W path and its Y path on [0, u-max]",
        "figure1": "six CSVs: W and Y paths for alpha=0.75, beta in {0.5, -0.5, -1.5}",
        "verify": "run a verification suite and write a report",
        "converge": "KS ladder of scaled shot noise against Y(1)",
        "tail": "tail-exponent fit of Y(1)",
        "lil": "iterated-logarithm envelope scan",
        "diverge": "grid maxima along a refinement ladder",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def read_config(path: str) -> dict:
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        conf = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, value in conf.items():
            if key in ("config", "help") or key not in actions:
                raise UsageError(f"unknown config key {key!r}")
            act = actions[key]
            try:
                conv = act.type(value) if act.type else value
            except ValueError as exc:
                raise UsageError(f"bad value for {key}: {value!r}") from exc
            if act.choices and conv not in act.choices:
                raise UsageError(f"bad value for {key}: {value!r}")
            defaults[key] = conv
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


# --- helpers --------------------------------------------------------------


def _meta(args, **extra) -> dict:
    return {
        "command": args.command, "seed": args.seed, "streams": args.streams, "version": __version__,
        "parameters": {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "config", "output")},
        **extra,
    }


def _params(args, default_alpha=None, default_beta=None) -> FiissParams:
    alpha = args.alpha if args.alpha is not None else default_alpha
    beta = args.beta if args.beta is not None else default_beta
    if alpha is None or beta is None:
        raise UsageError(f"{args.command} needs --alpha and --beta")
    return FiissParams(alpha, beta)


def _continuous(params: FiissParams) -> FiissParams:
    if not params.continuous:
        raise UsageError(f"this command needs beta > -alpha, got alpha={params.alpha}, beta={params.beta}")
    return params


def _output(args, default: str) -> str:
    return args.output or default


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(obj, indent=2, default=_json_default, ensure_ascii=False) + "\n")


def _write_report(args, report: VerificationReport, default_stem: str) -> str:
    fmt = args.format or "json"
    path = _output(args, f"{default_stem}.{fmt}")
    report.meta = {**_meta(args), **report.meta}
    if fmt == "json":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(report.to_json())
    else:
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(report.meta, sort_keys=True, default=_json_default) + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["name", "statistic", "threshold", "relation", "passed"])
            for e in report.entries:
                w.writerow([e.name, format_number(e.statistic), json.dumps(e.threshold), e.relation, int(e.passed)])
    for e in report.entries:
        print(e.line())
    return path


def _path_pair(params: FiissParams, u_max: float, n_grid: int, t_step: float, src: RandomSource):
    d = simulate_subordinator_until(params.alpha, u_max, t_step, src)
    u = u_max * np.arange(n_grid + 1) / n_grid
    return u, invert_path(d, u), fiiss_from_subordinator(d, params, u)


# --- commands ---------------------------------------------------------------


def cmd_simulate(args) -> int:
    params = _params(args)
    n_grid = (args.steps or [1000])[0]
    t_step = args.t_step or 1e-4
    src = RandomSource(args.seed, 0)
    fmt = args.format or "csv"
    path = _output(args, f"simulate.{fmt}")
    if args.n:
        sample = fiiss_marginal(params, args.u_max, args.n, src, args.t_step or DEFAULT_T_STEP, args.streams)
        meta = _meta(args, process="Y(u_max) marginal")
        if fmt == "csv":
            sample.to_csv(path, meta=meta)
        else:
            _write_json(path, {"meta": meta, "values": sample.values})
        return EXIT_OK
    u, w, y = _path_pair(params, args.u_max, n_grid, t_step, src)
    meta = _meta(args, t_step=t_step)
    if fmt == "csv":
        write_csv(path, ["u", "W", "Y"], [u, w, y], meta)
    else:
        _write_json(path, {"meta": meta, "u": u, "W": w, "Y": y})
    return EXIT_OK


def cmd_figure1(args) -> int:
    out_dir = _output(args, "figure1")
    os.makedirs(out_dir, exist_ok=True)
    n_grid = (args.steps or [1000])[0]
    t_step = args.t_step or 1e-4
    alpha = args.alpha if args.alpha is not None else FIGURE1_ALPHA
    src = RandomSource(args.seed, 0)
    for i, beta in enumerate(FIGURE1_BETAS):
        params = FiissParams(alpha, beta)
        u, w, y = _path_pair(params, 1.0, n_grid, t_step, src.substream(i))
        meta = _meta(args, alpha=alpha, beta=beta, t_step=t_step)
        write_csv(os.path.join(out_dir, f"W_alpha{alpha:g}_beta{beta:g}.csv"), ["u", "value"], [u, w], {**meta, "process": "W"})
        write_csv(os.path.join(out_dir, f"Y_alpha{alpha:g}_beta{beta:g}.csv"), ["u", "value"], [u, y], {**meta, "process": "Y"})
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite == "acceptance":
        report = suite.acceptance_suite(args.seed, args.streams)
    else:
        params = _params(args)
        report = suite.parameter_suite(params, args.n or 100_000, args.seed, args.streams)
    _write_report(args, report, "verify")
    return EXIT_OK if report.passed else EXIT_CHECK


def cmd_converge(args) -> int:
    params = _params(args, 0.75, -0.5)
    report = VerificationReport()
    for e in suite.check_convergence_ladder(params, tuple(args.t_ladder or (1e2, 1e3, 1e4)), args.n or 5_000,
                                            seed=args.seed, workers=args.streams):
        report.add(e)
    _write_report(args, report, "converge")
    return EXIT_OK if report.passed else EXIT_CHECK


def cmd_tail(args) -> int:
    params = _continuous(_params(args, 0.5, 0.0))
    report = VerificationReport()
    for e in suite.check_tail(params, args.n or 1_000_000, tuple(args.window or (2.0, 3.5)), args.seed,
                              t_step=args.t_step or DEFAULT_T_STEP, workers=args.streams):
        report.add(e)
    _write_report(args, report, "tail")
    return EXIT_OK if report.passed else EXIT_CHECK


def cmd_lil(args) -> int:
    params = _continuous(_params(args, 0.75, 0.5))
    report = VerificationReport()
    for e in suite.check_lil(params, args.n or 100, seed=args.seed, t_step=args.t_step or 0.02):
        report.add(e)
    _write_report(args, report, "lil")
    return EXIT_OK if report.passed else EXIT_CHECK


def cmd_diverge(args) -> int:
    params = _params(args, 0.75, -1.5)
    ladder = tuple(args.steps or (2**10, 2**11, 2**12, 2**13, 2**14))
    scan = divergence_scan(params, (0.25, 0.75), ladder, args.n or 50, RandomSource(args.seed, suite.S_DIVERGE),
                           args.t_step or DEFAULT_T_STEP)
    ratios = scan.ratios()
    report = VerificationReport()
    if params.continuous:
        report.add(ReportEntry("stabilizes", float(np.max(np.abs(ratios - 1))), 0.1, "<", n=scan.maxima.shape[0],
                               seed=args.seed, params=params.as_dict(), meta=scan.as_dict()))
    else:
        report.add(ReportEntry("medians_increasing", float(ratios.min()), 1.0, ">", n=scan.maxima.shape[0],
                               seed=args.seed, params=params.as_dict(), meta=scan.as_dict()))
    _write_report(args, report, "diverge")
    return EXIT_OK if report.passed else EXIT_CHECK


HANDLERS = {
    "simulate": cmd_simulate, "figure1": cmd_figure1, "verify": cmd_verify, "converge": cmd_converge,
    "tail": cmd_tail, "lil": cmd_lil, "diverge": cmd_diverge,
}


def _error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        if args.streams < 1:
            raise UsageError("--streams must be at least 1")
        if args.n is not None and args.n < 1:
            raise UsageError("--n must be positive")
        return HANDLERS[args.command](args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        return _error("usage", str(exc), EXIT_USAGE)
    except ResourceCapError as exc:
        return _error("resource_cap", str(exc), EXIT_CAP)
    except (DomainError, FiissError, ValueError) as exc:
        return _error(type(exc).__name__, str(exc), EXIT_USAGE)
    except OSError as exc:
        return _error("io", str(exc), EXIT_USAGE)

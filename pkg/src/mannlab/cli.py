"""Command-line front end.

Subcommands: run, sweep, certify, validate-schedule, tau-analyze, anchor.
Exit codes: 0 success, 1 usage/parse error, 2 validation or certification
failure, 3 divergence guard. The default output directory comes from
--out, falling back to the config's "out" field and the MANNLAB_OUT
environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import harness
from ._core import backend_name
from .errors import (
    ConfigError,
    DivergenceGuardError,
    GalleryError,
    MannLabError,
    ScheduleError,
    ValidationFailure,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mannlab",
                     description="Numerical laboratory for modified Mann iterations "
                                 "of strict pseudocontractions.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", help="output directory (default: config 'out', "
                                     "then $MANNLAB_OUT)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--max-iter", type=int, help="override the config max_iter")
        p.add_argument("--quiet", action="store_true", help="suppress console summary")

    for name, descr in [
        ("run", "validate, certify, run one experiment, persist trace + report"),
        ("sweep", "run a schedule grid and emit a comparison table"),
        ("certify", "sample the defining inequality for an operator"),
        ("validate-schedule", "check schedule condition sets"),
        ("tau-analyze", "ascent-tracking analysis of a sequence file"),
        ("anchor", "solve the anchor path at one t or along a grid"),
    ]:
        common(sub.add_parser(name, help=descr))
    return parser


def _out_dir(args, cfg) -> str | None:
    return args.out or cfg.get("out") or os.environ.get("MANNLAB_OUT")


def _emit(payload: dict, out_dir, filename: str, quiet: bool):
    data = harness.report_json_bytes(payload)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, filename), "wb") as fh:
            fh.write(data)
    if not quiet:
        sys.stdout.write(data.decode())


def _cmd_run(args) -> int:
    cfg = harness.load_config(args.config)
    t0 = time.perf_counter()
    art = harness.run_experiment(cfg, seed_override=args.seed,
                                 max_iter_override=args.max_iter)
    wall = time.perf_counter() - t0
    out = _out_dir(args, cfg)
    if out:
        harness.write_run_artifacts(art, out)
    if not args.quiet:
        r = art.report
        print(f"[mannlab run] backend={backend_name()} status={r['status']} "
              f"iterations={r['iterations']} final_residual={r['final_residual']:.3e} "
              f"final_dist_to_z={r['final_dist_to_z']:.3e} case={r['case_label']} "
              f"wall={wall:.3f}s")
        for c in art.checks:
            print(f"  check {c['id']}: {'pass' if c['pass'] else 'FAIL'}")
        if out:
            print(f"  wrote {out}/trace.csv and {out}/report.json")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = harness.load_config(args.config)
    t0 = time.perf_counter()
    rows, artifacts, report = harness.sweep_experiment(
        cfg, seed_override=args.seed, max_iter_override=args.max_iter)
    wall = time.perf_counter() - t0
    out = _out_dir(args, cfg)
    if out:
        harness.write_sweep_artifacts(rows, artifacts, report, out)
    if not args.quiet:
        print(f"[mannlab sweep] {len(rows)} cells in {wall:.3f}s")
        sys.stdout.write(harness.comparison_csv_bytes(rows).decode())
        if out:
            print(f"  wrote {out}/comparison.csv")
    return EXIT_OK


def _cmd_certify(args) -> int:
    cfg = harness.load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    result = harness.certify_from_config(cfg)
    _emit(result, _out_dir(args, cfg), "certificate.json", args.quiet)
    return EXIT_OK if result["verdict"] == "certified" else EXIT_VALIDATION


def _cmd_validate(args) -> int:
    cfg = harness.load_config(args.config)
    result = harness.validate_from_config(cfg)
    _emit(result, _out_dir(args, cfg), "verdicts.json", args.quiet)
    return EXIT_OK if result["relaxed"]["pass"] else EXIT_VALIDATION


def _cmd_tau(args) -> int:
    cfg = harness.load_config(args.config)
    result = harness.tau_from_config(cfg)
    _emit(result, _out_dir(args, cfg), "tau.json", args.quiet)
    return EXIT_OK


def _cmd_anchor(args) -> int:
    cfg = harness.load_config(args.config)
    result = harness.anchor_from_config(cfg)
    _emit(result, _out_dir(args, cfg), "anchor.json", args.quiet)
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "certify": _cmd_certify,
    "validate-schedule": _cmd_validate,
    "tau-analyze": _cmd_tau,
    "anchor": _cmd_anchor,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ValidationFailure as e:
        sys.stderr.write(f"validation failure: {e}\n")
        if e.report is not None:
            sys.stderr.write(harness.report_json_bytes(e.report).decode())
        return EXIT_VALIDATION
    except (GalleryError, ScheduleError) as e:
        sys.stderr.write(f"validation error: {e}\n")
        return EXIT_VALIDATION
    except DivergenceGuardError as e:
        sys.stderr.write(f"divergence guard: {e}\n")
        return EXIT_DIVERGENCE
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as e:
        sys.stderr.write(f"config error: {e}\n")
        return EXIT_USAGE
    except MannLabError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE


def console_main():  # entry point wrapper
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())

"""Experiment orchestration: config ingestion, runs, sweeps, persistence.

A run pipeline validates the schedules, certifies the operator, computes
the designated limit z from the anchor path, executes the iteration,
derives diagnostics, and persists a trace CSV plus a self-contained JSON
report. All persisted bytes are deterministic for a fixed config and
seed: floats are formatted with 17 significant digits and the report
deliberately carries no wall-clock fields (timing goes to the console).

All randomness flows from the config's single seed through the splitting
rule in :mod:`mannlab.util`; the purpose codes used here are CERTIFY for
operator certification and SWEEP with the cell index for sweep cells.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import iteration, operators, schedules, spaces
from .errors import ConfigError, ValidationFailure
from .util import PURPOSE_CERTIFY, PURPOSE_SWEEP, child_seed, fmt_float

TRACE_HEADER = "n,residual,dist_to_z,anchor_pairing,bound_slack,ineq35_slack,key_ineq_slack"
SLACK_TOL = 1e-9
TAIL_TOL = 1e-3
ORACLE_AGREEMENT_TOL = 1e-3
SWEEP_RESIDUAL_TOL = 1e-6

_TOP_KEYS = {
    "space", "operator", "schedules", "u", "x0", "max_iter", "seed",
    "tolerances", "certify", "anchor", "validate", "out", "sweep",
}
_TOL_KEYS = {"stop_residual", "stop_dist", "slack"}
_CERTIFY_KEYS = {"n_pairs", "box"}
_ANCHOR_KEYS = {"t_grid", "tol", "max_inner"}
_VALIDATE_KEYS = {"horizon", "q", "Cq"}


def load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _check_keys(cfg: dict, allowed: set, where: str):
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} fields: {sorted(unknown)}")


def _require(cfg: dict, keys, where: str):
    for k in keys:
        if k not in cfg:
            raise ConfigError(f"{where} config requires '{k}'")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def report_json_bytes(report: dict) -> bytes:
    return (json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n").encode()


def _csv_cell(v) -> str:
    if v is None:
        return "nan"
    return fmt_float(v)


def trace_csv_bytes(trace: iteration.IterationTrace,
                    diag: iteration.TraceDiagnostics) -> bytes:
    """Transition rows n = start .. start+N-1 with 17-digit floats."""
    N = trace.n_steps
    ns = trace.global_indices()
    lines = [TRACE_HEADER]
    ap = diag.anchor_pairing
    s35 = diag.ineq35_slack
    key = diag.key_ineq_slack
    bnd = diag.bound_slack
    for k in range(N):
        lines.append(",".join([
            str(int(ns[k])),
            fmt_float(trace.residuals[k]),
            _csv_cell(trace.dists[k]),
            _csv_cell(ap[k] if ap is not None else None),
            _csv_cell(bnd[k] if bnd is not None else None),
            _csv_cell(s35[k] if s35 is not None else None),
            _csv_cell(key[k] if key is not None else None),
        ]))
    return ("\n".join(lines) + "\n").encode()


@dataclass
class RunArtifacts:
    """In-memory result of one run pipeline."""

    report: dict
    trace: iteration.IterationTrace
    diag: iteration.TraceDiagnostics
    csv_bytes: bytes
    checks: list = field(default_factory=list)


def _build_problem(cfg: dict):
    _require(cfg, ("space", "operator", "schedules", "u", "x0", "max_iter", "seed"),
             "run")
    space = spaces.space_from_config(cfg["space"])
    T = operators.operator_from_config(space, cfg["operator"])
    sched = schedules.schedules_from_config(cfg["schedules"])
    u = space.check(cfg["u"], "u")
    x0 = space.check(cfg["x0"], "x0")
    return space, T, sched, u, x0


def _stop_rule(cfg: dict) -> iteration.StopRule:
    tol = cfg.get("tolerances", {})
    _check_keys(tol, _TOL_KEYS, "tolerances")
    return iteration.StopRule(
        residual_tol=float(tol.get("stop_residual", iteration.DEFAULT_RESIDUAL_TOL)),
        dist_tol=None if tol.get("stop_dist") is None else float(tol["stop_dist"]),
    )


def _check(checks: list, cid: str, ok: bool, value, threshold, note: str = ""):
    checks.append({
        "id": cid, "pass": bool(ok), "value": _jsonable(value),
        "threshold": _jsonable(threshold), "note": note,
    })


def run_experiment(cfg: dict, seed_override: Optional[int] = None,
                   max_iter_override: Optional[int] = None) -> RunArtifacts:
    """Full run pipeline; raises ValidationFailure on gate failures."""
    _check_keys(cfg, _TOP_KEYS - {"sweep"}, "run")
    space, T, sched, u, x0 = _build_problem(cfg)
    seed = int(seed_override if seed_override is not None else cfg["seed"])
    max_iter = int(max_iter_override if max_iter_override is not None
                   else cfg["max_iter"])
    lam = T.lambda_claimed

    # gate 1: schedule validation (relaxed conditions)
    vcfg = cfg.get("validate", {})
    _check_keys(vcfg, _VALIDATE_KEYS, "validate")
    horizon = int(vcfg.get("horizon", max(max_iter, 2)))
    start = schedules.resolve_start(sched, cfg["schedules"].get("start", "auto"),
                                    lam, space.K2, max(max_iter, 1))
    verdict = schedules.validate_relaxed(sched, lam, space.K2, horizon, start)
    if not verdict.passed:
        raise ValidationFailure(
            "schedule validation failed: "
            + "; ".join(c.condition for c in verdict.conditions if not c.passed),
            report={"verdicts": verdict.to_dict()},
        )

    # gate 2: operator certification at the claimed modulus
    ccfg = cfg.get("certify", {})
    _check_keys(ccfg, _CERTIFY_KEYS, "certify")
    cert = operators.certify(
        T, lam,
        n_pairs=int(ccfg.get("n_pairs", 1000)),
        seed=child_seed(seed, PURPOSE_CERTIFY),
        sampling_box=float(ccfg.get("box", 10.0)),
    )
    if not cert.certified:
        raise ValidationFailure(
            f"operator {T.name!r} refuted at lambda={lam}",
            report={"certificate": cert.to_dict(), "verdicts": verdict.to_dict()},
        )

    # designated limit z from the anchor path, plus the projection oracle
    acfg = cfg.get("anchor", {})
    _check_keys(acfg, _ANCHOR_KEYS, "anchor")
    anchor = iteration.anchor_limit(
        T, u,
        t_grid=acfg.get("t_grid"),
        tol=float(acfg.get("tol", 1e-10)),
        max_inner=int(acfg.get("max_inner", 100000)),
    )
    z = anchor.z
    p = None
    proj_z = None
    try:
        fps = operators.fixed_points_oracle(T)
        if fps.kind == "affine" and space.kind == spaces.EUCLIDEAN:
            proj_z = fps.project(u)
            p = proj_z
    except operators.OracleUnavailableError:
        pass

    trace = iteration.run(
        T, sched, u, x0, max_iter,
        stop=_stop_rule(cfg), z=z, p=p if p is not None else z,
        schedule_start=start,
    )
    diag = iteration.diagnostics(trace)

    checks: list = []
    _check(checks, "schedule_relaxed", verdict.passed, None, None)
    _check(checks, "certificate", cert.certified, cert.max_violation, None)
    _check(checks, "anchor_cauchy", anchor.cauchy_ok,
           anchor.gaps[-1] if anchor.gaps.size else 0.0, iteration.CAUCHY_GAP_TOL)
    mins = diag.min_slacks()
    exact_p = p is not None
    if "boundedness" in mins:
        thr = -SLACK_TOL if exact_p else -max(SLACK_TOL, 2.0 * float(
            anchor.gaps[-1] if anchor.gaps.size else SLACK_TOL))
        note = "" if exact_p else "reference point is the anchor limit (inexact)"
        _check(checks, "boundedness", mins["boundedness"] >= thr,
               mins["boundedness"], thr, note)
    if "ineq35" in mins:
        _check(checks, "ineq35", mins["ineq35"] >= -SLACK_TOL,
               mins["ineq35"], -SLACK_TOL)
    if "key_inequality" in mins:
        _check(checks, "key_inequality", mins["key_inequality"] >= -SLACK_TOL,
               mins["key_inequality"], -SLACK_TOL)
    if diag.anchor_pairing is not None and diag.anchor_pairing.size:
        tm = iteration.tail_max(diag.anchor_pairing)
        _check(checks, "anchor_pairing_tail", tm <= TAIL_TOL, tm, TAIL_TOL)
    if trace.residuals.size:
        tm = iteration.tail_max(trace.residuals)
        _check(checks, "residual_tail", tm <= TAIL_TOL, tm, TAIL_TOL,
               "informational: meaningful for long benchmark runs")
    if proj_z is not None:
        agree = space.norm(z - proj_z)
        _check(checks, "oracle_agreement", agree <= ORACLE_AGREEMENT_TOL,
               agree, ORACLE_AGREEMENT_TOL,
               "anchor limit vs projection of u onto the fixed-point set")

    tau_summary = None
    finite = trace.dists[np.isfinite(trace.dists)]
    if finite.size >= 2:
        ta = iteration.tau_analysis(finite * finite)
        tau_summary = {"monotone": ta.monotone, "n0": ta.n0}

    report = {
        "config": _jsonable({k: v for k, v in cfg.items() if k != "out"}),
        "seed": seed,
        "schedule_start": start,
        "verdicts": verdict.to_dict(),
        "certificate": cert.to_dict(),
        "anchor": anchor.to_dict(),
        "oracle": {
            "projection_z": None if proj_z is None else proj_z.tolist(),
            "agreement": None if proj_z is None else float(space.norm(z - proj_z)),
        },
        "iterations": trace.n_steps,
        "status": trace.status,
        "final_residual": trace.final_residual,
        "final_dist_to_z": trace.final_dist,
        "case_label": diag.case_label,
        "tau": tau_summary,
        "checks": checks,
        "trace_csv": "trace.csv",
    }
    return RunArtifacts(report=report, trace=trace, diag=diag,
                        csv_bytes=trace_csv_bytes(trace, diag), checks=checks)


def write_run_artifacts(art: RunArtifacts, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "trace.csv"), "wb") as fh:
        fh.write(art.csv_bytes)
    with open(os.path.join(out_dir, "report.json"), "wb") as fh:
        fh.write(report_json_bytes(art.report))


# -- sweep ---------------------------------------------------------------------


def _sweep_cells(cfg: dict):
    """Deterministic cartesian expansion of the 'sweep' section."""
    sweep = cfg["sweep"]
    _check_keys(sweep, {"alpha", "beta", "gamma"}, "sweep")
    keys = sorted(sweep)
    if not keys:
        return []
    lists = [sweep[k] for k in keys]
    for vals in lists:
        if not isinstance(vals, list):
            raise ConfigError("sweep entries must be arrays of sequence specs")
    cells = []
    for combo in itertools.product(*lists):
        override = dict(zip(keys, combo))
        cells.append(override)
    return cells


def _schedule_id(override: dict) -> str:
    parts = []
    for k in sorted(override):
        parts.append(f"{k}={schedules.sequence_from_config(override[k]).describe()}")
    return "|".join(parts)


def sweep_experiment(cfg: dict, seed_override: Optional[int] = None,
                     max_iter_override: Optional[int] = None):
    """Run every sweep cell; failures are recorded and the sweep continues.

    Returns (rows, cell_artifacts, report) where rows are the comparison
    table entries in deterministic cell order.
    """
    _check_keys(cfg, _TOP_KEYS, "sweep")
    if "sweep" not in cfg:
        raise ConfigError("sweep config requires a 'sweep' section")
    base_seed = int(seed_override if seed_override is not None else cfg["seed"])
    cells = _sweep_cells(cfg)
    rows = []
    artifacts = {}
    lam = float(cfg["operator"]["lambda"])
    space = spaces.space_from_config(cfg["space"])
    horizon = int(cfg.get("validate", {}).get("horizon",
                                              max(int(cfg["max_iter"]), 2)))
    for idx, override in enumerate(cells):
        cell_cfg = {k: v for k, v in cfg.items() if k != "sweep"}
        cell_cfg["schedules"] = dict(cfg["schedules"])
        cell_cfg["schedules"].update(override)
        sched = schedules.schedules_from_config(cell_cfg["schedules"])
        row = {
            "cell": idx,
            "schedule_id": _schedule_id(override),
            "relaxed": None, "legacy_interior": None, "legacy_summable": None,
            "iters_to_residual_tol": -1,
            "final_dist_to_z": None,
            "status": "ok",
        }
        try:
            start = schedules.resolve_start(
                sched, cell_cfg["schedules"].get("start", "auto"),
                lam, space.K2, max(int(cell_cfg["max_iter"]), 1))
            row["relaxed"] = "pass" if schedules.validate_relaxed(
                sched, lam, space.K2, horizon, start).passed else "fail"
            row["legacy_interior"] = "pass" if schedules.validate_legacy(
                sched, schedules.LEGACY_INTERIOR, horizon, start,
                lam=lam, K2=space.K2).passed else "fail"
            row["legacy_summable"] = "pass" if schedules.validate_legacy(
                sched, schedules.LEGACY_SUMMABLE, horizon, start,
                lam=lam, K2=space.K2).passed else "fail"
            art = run_experiment(cell_cfg,
                                 seed_override=child_seed(base_seed, PURPOSE_SWEEP, idx),
                                 max_iter_override=max_iter_override)
            artifacts[idx] = art
            hit = np.flatnonzero(art.trace.residuals <= SWEEP_RESIDUAL_TOL)
            row["iters_to_residual_tol"] = int(hit[0]) if hit.size else -1
            row["final_dist_to_z"] = art.trace.final_dist
        except Exception as e:  # cell failures are data, not fatal
            row["status"] = f"failed: {type(e).__name__}"
            row["note"] = str(e)
        rows.append(row)
    report = {
        "config": _jsonable({k: v for k, v in cfg.items() if k != "out"}),
        "seed": base_seed,
        "n_cells": len(cells),
        "rows": _jsonable(rows),
        "residual_tol_for_iters": SWEEP_RESIDUAL_TOL,
    }
    return rows, artifacts, report


COMPARISON_HEADER = ("cell,schedule_id,relaxed,legacy_interior,legacy_summable,"
                     "iters_to_residual_tol,final_dist_to_z,status")


def comparison_csv_bytes(rows) -> bytes:
    lines = [COMPARISON_HEADER]
    for r in rows:
        lines.append(",".join([
            str(r["cell"]),
            r["schedule_id"],
            str(r["relaxed"]),
            str(r["legacy_interior"]),
            str(r["legacy_summable"]),
            str(r["iters_to_residual_tol"]),
            "nan" if r["final_dist_to_z"] is None else fmt_float(r["final_dist_to_z"]),
            r["status"],
        ]))
    return ("\n".join(lines) + "\n").encode()


def write_sweep_artifacts(rows, artifacts, report, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "comparison.csv"), "wb") as fh:
        fh.write(comparison_csv_bytes(rows))
    with open(os.path.join(out_dir, "sweep_report.json"), "wb") as fh:
        fh.write(report_json_bytes(report))
    for idx, art in artifacts.items():
        write_run_artifacts(art, os.path.join(out_dir, "cells", f"cell_{idx:03d}"))


# -- thin command backends ------------------------------------------------------


def certify_from_config(cfg: dict) -> dict:
    _check_keys(cfg, {"space", "operator", "seed", "certify", "out"}, "certify")
    _require(cfg, ("space", "operator", "seed"), "certify")
    space = spaces.space_from_config(cfg["space"])
    # construction is unenforced here: certification exists to test the
    # claimed modulus empirically, including claims that are wrong
    T = operators.operator_from_config(space, cfg["operator"], enforce=False)
    ccfg = cfg.get("certify", {})
    _check_keys(ccfg, _CERTIFY_KEYS | {"lambda"}, "certify")
    lam = float(ccfg.get("lambda", T.lambda_claimed))
    cert = operators.certify(
        T, lam,
        n_pairs=int(ccfg.get("n_pairs", 1000)),
        seed=child_seed(int(cfg["seed"]), PURPOSE_CERTIFY),
        sampling_box=float(ccfg.get("box", 10.0)),
    )
    return cert.to_dict()


def validate_from_config(cfg: dict) -> dict:
    _check_keys(cfg, {"schedules", "lambda", "K2", "space", "horizon",
                      "q", "Cq", "out"}, "validate-schedule")
    _require(cfg, ("schedules", "lambda"), "validate-schedule")
    sched = schedules.schedules_from_config(cfg["schedules"])
    lam = float(cfg["lambda"])
    if "K2" in cfg:
        K2 = float(cfg["K2"])
    elif "space" in cfg:
        K2 = spaces.space_from_config(cfg["space"]).K2
    else:
        raise ConfigError("validate-schedule requires 'K2' or 'space'")
    horizon = int(cfg.get("horizon", 10000))
    try:
        start = schedules.find_start_index(sched, lam, K2, horizon)
    except Exception:
        start = 0
    out = {
        "schedule": sched.describe(),
        "lambda": lam,
        "K2": K2,
        "start": start,
        "relaxed": schedules.validate_relaxed(sched, lam, K2, horizon, start).to_dict(),
        "legacy_interior": schedules.validate_legacy(
            sched, schedules.LEGACY_INTERIOR, horizon, start, lam=lam, K2=K2).to_dict(),
        "legacy_summable": schedules.validate_legacy(
            sched, schedules.LEGACY_SUMMABLE, horizon, start, lam=lam, K2=K2).to_dict(),
    }
    if "q" in cfg or "Cq" in cfg:
        q = float(cfg.get("q", 2.0))
        Cq = float(cfg.get("Cq", 2.0 * K2))
        out["relaxed_q"] = schedules.validate_relaxed_q(
            sched, lam, q, Cq, horizon, start).to_dict()
    return out


def tau_from_config(cfg: dict) -> dict:
    _check_keys(cfg, {"gamma_seq", "out"}, "tau-analyze")
    _require(cfg, ("gamma_seq",), "tau-analyze")
    ta = iteration.tau_analysis(cfg["gamma_seq"])
    est1, est2 = ta.check_estimates()
    return {
        "length": int(ta.gamma_seq.size),
        "monotone": ta.monotone,
        "n0": ta.n0,
        "tau": ta.tau.tolist(),
        "estimate_tau_ascent": est1,
        "estimate_dominates": est2,
        "tau_nondecreasing": bool(np.all(np.diff(ta.tau) >= 0)) if ta.tau.size else True,
    }


def anchor_from_config(cfg: dict) -> dict:
    _check_keys(cfg, {"space", "operator", "u", "t", "t_grid", "anchor", "out"},
                "anchor")
    _require(cfg, ("space", "operator", "u"), "anchor")
    space = spaces.space_from_config(cfg["space"])
    T = operators.operator_from_config(space, cfg["operator"])
    u = space.check(cfg["u"], "u")
    acfg = cfg.get("anchor", {})
    _check_keys(acfg, _ANCHOR_KEYS, "anchor")
    tol = float(acfg.get("tol", 1e-10))
    max_inner = int(acfg.get("max_inner", 100000))
    if "t" in cfg:
        path = iteration.anchor_solve(T, u, float(cfg["t"]), tol=tol,
                                      max_inner=max_inner)
        return {
            "t": path.t,
            "x_t": path.x.tolist(),
            "solver_residual": path.solver_residual,
            "method": path.method,
            "iterations": path.iterations,
        }
    res = iteration.anchor_limit(T, u, t_grid=cfg.get("t_grid", acfg.get("t_grid")),
                                 tol=tol, max_inner=max_inner)
    return res.to_dict()

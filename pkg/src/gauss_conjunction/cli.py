"""Batch front-end: JSON experiment config in, table plus CSV/JSON report out.

Usage::

    gauss-conjunction <command> --config exp.json [--output out.csv] [--seed N] [--threads K]

Exit status 0 on success, 1 for invalid configs or failed kernel validation,
2 for numerical failures. Errors are also printed to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from . import bounds, montecarlo
from .errors import NumericalError
from .kernels import CorrelatedPair, ProcessSet, validate_kernel
from .sampler import Grid
from .scalar_stats import QuadratureSpec, phi, phi_bar

COMMANDS = ("bound", "ec", "correlated", "simulate", "moments", "euler", "pickands",
            "validate-kernel", "sweep")
CSV_COLUMNS = ("command", "n", "u", "T", "rho", "grid_points", "reps", "seed", "point_term",
               "crossing_term", "bound_total", "mc_estimate", "mc_stderr", "ci_low", "ci_high",
               "gap_normalized")
DEFAULTS = {"grid_points": 2049, "reps": 0, "seed": 0, "factor": "pivoted"}
MC_COMMANDS = ("simulate", "moments", "euler", "pickands")


class ConfigError(ValueError):
    pass


def load_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("config_schema.json").read_text())


def validate_config(config: dict) -> None:
    try:
        jsonschema.validate(config, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None


def resolve_config(config: dict, command: str | None = None, seed: int | None = None,
                   output: str | None = None) -> dict:
    """Validate, apply CLI overrides and fill defaults."""
    cfg = copy.deepcopy(config)
    if command is not None:
        if "command" in cfg and cfg["command"] != command:
            raise ConfigError(f"command {command!r} does not match config command {cfg['command']!r}")
        cfg["command"] = command
    if seed is not None:
        cfg["seed"] = seed
    if output is not None:
        cfg.setdefault("output", {})["path"] = output
    validate_config(cfg)
    if "command" not in cfg:
        raise ConfigError("no command given")
    for key, value in DEFAULTS.items():
        cfg.setdefault(key, value)
    out = cfg.get("output")
    if out and "path" in out and "format" not in out:
        out["format"] = "json" if out["path"].endswith(".json") else "csv"
    return cfg


def embedded_config(cfg: dict) -> dict:
    """The part of a resolved config that determines results.

    Thread count and output location are dropped so that reruns with a
    different worker count or destination produce identical files.
    """
    cfg = copy.deepcopy(cfg)
    cfg.pop("threads", None)
    if "output" in cfg:
        cfg["output"].pop("path", None)
    return cfg


@dataclass
class Report:
    config: dict
    rows: list
    meta: dict = field(default_factory=dict)
    ok: bool = True


def _levels(cfg, required=True):
    if "u" not in cfg:
        if required:
            raise ConfigError("config needs 'u'")
        return []
    u = cfg["u"]
    return [float(x) for x in (u if isinstance(u, list) else [u])]


def _rhos(cfg):
    if "rho" not in cfg:
        return None
    r = cfg["rho"]
    return [float(x) for x in (r if isinstance(r, list) else [r])]


def _process_set(cfg) -> ProcessSet:
    if "processes" not in cfg:
        raise ConfigError(f"command {cfg['command']!r} needs 'processes'")
    return ProcessSet.from_dict(cfg["processes"])


def _quadrature(cfg) -> QuadratureSpec:
    return QuadratureSpec(**cfg.get("quadrature", {}))


def _row(cfg, **fields) -> dict:
    row = dict.fromkeys(CSV_COLUMNS)
    row.update(command=cfg["command"], seed=cfg["seed"])
    row.update(fields)
    return row


def _bound_fields(b: bounds.BoundReport) -> dict:
    return {"n": b.n, "u": b.u, "T": b.T, "point_term": b.point_term,
            "crossing_term": b.crossing_term, "bound_total": b.total}


def _mc_fields(est: montecarlo.McEstimate) -> dict:
    return {"mc_estimate": est.estimate, "mc_stderr": est.stderr, "ci_low": est.ci_low,
            "ci_high": est.ci_high, "grid_points": est.grid_points, "reps": est.reps}


def _stationary_C(ps: ProcessSet) -> list:
    if isinstance(ps.dependence, CorrelatedPair):
        raise ConfigError("the EC matrix form needs independent processes")
    if not all(k.stationary for k in ps.base_kernels):
        raise ConfigError("the EC matrix form needs stationary kernels")
    # C_i is the derivative variance (sqrt(C_i) = sqrt(Var X_i'))
    return [float(k.deriv_variance(0.0)) for k in ps.base_kernels]


def _with_rho(ps: ProcessSet, rho: float) -> ProcessSet:
    if not isinstance(ps.dependence, CorrelatedPair):
        raise ConfigError("'rho' applies only to a correlated_pair process set")
    return ProcessSet.correlated_pair(ps.dependence.base, rho, ps.T)


def _gap(b: bounds.BoundReport, est: montecarlo.McEstimate) -> tuple[float, float]:
    scale = bounds.gap_scale(b.n, b.u)
    return (b.total - est.estimate) / scale, est.stderr / scale


def _simulate(cfg, ps, levels, threads):
    return montecarlo.simulate(ps, levels, Grid(ps.T, cfg["grid_points"]), cfg["reps"], cfg["seed"],
                               threads, cfg["factor"])


def _factor_meta(sim) -> list:
    return [{"method": f.method, "rank": f.rank, "jitter": f.jitter} for f in sim.factor_info]


def _cmd_bound(cfg, threads, meta):
    quad = _quadrature(cfg)
    rows = []
    if "processes" in cfg:
        ps = _process_set(cfg)
        for rho in _rhos(cfg) or [ps.rho]:
            ps_r = ps if rho is None or rho == ps.rho else _with_rho(ps, rho)
            for u in _levels(cfg):
                b = bounds.bound_for(ps_r, u, quad)
                rows.append(_row(cfg, rho=ps_r.rho, quantity=b.method, **_bound_fields(b)))
        return rows
    if "C" not in cfg or "T" not in cfg:
        raise ConfigError("command 'bound' needs 'processes' or both 'C' and 'T'")
    for u in _levels(cfg):
        b = bounds.corollary1_bound(cfg["C"], cfg["T"], u)
        rows.append(_row(cfg, quantity=b.method, **_bound_fields(b)))
    return rows


def _cmd_ec(cfg, threads, meta):
    if "C" in cfg:
        C = cfg["C"]
        if "T" not in cfg:
            raise ConfigError("command 'ec' with 'C' needs 'T'")
        T = cfg["T"]
    else:
        ps = _process_set(cfg)
        C, T = _stationary_C(ps), ps.T
    return [_row(cfg, quantity="ec_matrix", **_bound_fields(bounds.ec_heuristic(C, T, u)))
            for u in _levels(cfg)]


def _cmd_correlated(cfg, threads, meta):
    ps = _process_set(cfg)
    if not isinstance(ps.dependence, CorrelatedPair):
        raise ConfigError("command 'correlated' needs a correlated_pair process set")
    quad = _quadrature(cfg)
    rows = []
    for rho in _rhos(cfg) or [ps.rho]:
        ps_r = _with_rho(ps, rho)
        for u in _levels(cfg):
            b = bounds.bound_for(ps_r, u, quad)
            rows.append(_row(cfg, rho=rho, quantity=b.method, **_bound_fields(b)))
    return rows


def _require_reps(cfg):
    if cfg["reps"] < montecarlo.MIN_REPS:
        raise ConfigError(f"command {cfg['command']!r} needs reps >= {montecarlo.MIN_REPS}")


def _sim_rows(cfg, ps, levels, threads, meta, with_mc=True):
    """Rows of bound terms, plus MC conjunction estimates and gaps when with_mc."""
    quad = _quadrature(cfg)
    sim = _simulate(cfg, ps, levels, threads) if with_mc else None
    if sim is not None:
        meta.setdefault("factors", []).append(_factor_meta(sim))
    rows = []
    for u in levels:
        b = bounds.bound_for(ps, u, quad) if u > 0 else None
        row = _row(cfg, n=ps.n, u=u, T=ps.T, rho=ps.rho, grid_points=cfg["grid_points"],
                   reps=cfg["reps"], quantity="conjunction_prob")
        if b is not None:
            row.update(_bound_fields(b))
        if sim is not None:
            est = sim.conjunction(u)
            row.update(_mc_fields(est))
            row["identity_violations"] = sim.identity_violations(u)
            if b is not None:
                row["gap_normalized"], row["gap_stderr"] = _gap(b, est)
        rows.append(row)
    return rows


def _cmd_simulate(cfg, threads, meta):
    _require_reps(cfg)
    return _sim_rows(cfg, _process_set(cfg), _levels(cfg), threads, meta)


def _cmd_euler(cfg, threads, meta):
    _require_reps(cfg)
    ps = _process_set(cfg)
    levels = _levels(cfg)
    sim = _simulate(cfg, ps, levels, threads)
    meta.setdefault("factors", []).append(_factor_meta(sim))
    rows = []
    for u in levels:
        row = _row(cfg, n=ps.n, u=u, T=ps.T, rho=ps.rho, quantity="euler_characteristic")
        if u > 0 and not isinstance(ps.dependence, CorrelatedPair):
            if all(k.stationary for k in ps.base_kernels):
                row.update(_bound_fields(bounds.ec_heuristic(_stationary_C(ps), ps.T, u)))
            else:
                row.update(_bound_fields(bounds.bound_for(ps, u, _quadrature(cfg))))
        row.update(_mc_fields(sim.euler(u)))
        conj = sim.conjunction(u)
        row["mc_conjunction"] = conj.estimate
        row["mc_conjunction_stderr"] = conj.stderr
        rows.append(row)
    return rows


def _cmd_moments(cfg, threads, meta):
    _require_reps(cfg)
    ps = _process_set(cfg)
    levels = _levels(cfg)
    sim = _simulate(cfg, ps, levels, threads)
    meta.setdefault("factors", []).append(_factor_meta(sim))
    speeds = None
    if not isinstance(ps.dependence, CorrelatedPair):
        speeds = [bounds.integrated_speed([s], ps.T, _quadrature(cfg)) for s in bounds.process_speeds(ps)]
    rows = []
    for u in levels:
        for i, per in enumerate(sim.moments(u)):
            for name, est in per.items():
                row = _row(cfg, n=ps.n, u=u, T=ps.T, rho=ps.rho, quantity=name, process=i)
                row.update(_mc_fields(est))
                if speeds is not None and name in ("mean_up", "mean_down"):
                    row["reference"] = phi(u) / math.sqrt(2 * math.pi) * speeds[i]
                elif speeds is not None and name == "mean_conj_up":
                    row["reference"] = phi_bar(u) ** (ps.n - 1) * phi(u) / math.sqrt(2 * math.pi) * speeds[i]
                rows.append(row)
    return rows


def _cmd_pickands(cfg, threads, meta):
    if "C" not in cfg:
        raise ConfigError("command 'pickands' needs 'C'")
    a = cfg.get("pickands", {}).get("a", [0.05, 0.02, 0.01])
    a = a if isinstance(a, list) else [a]
    reps = cfg["reps"]
    if reps < montecarlo.MIN_PICKANDS_REPS:
        raise ConfigError(f"command 'pickands' needs reps >= {montecarlo.MIN_PICKANDS_REPS}")
    C = cfg["C"]
    cands = montecarlo.pickands_candidates(C)
    common = {"n": len(C), "reps": reps, "candidate_paper_literal": cands["paper_literal"],
              "candidate_derivative_consistent": cands["derivative_consistent"],
              "bound_total": bounds.pickands_constant(C)}
    rows = []
    if len(set(a)) >= 2:
        study = montecarlo.extrapolate_pickands(C, a, reps, cfg["seed"], threads)
        for e in study.estimates:
            rows.append(_row(cfg, quantity="pickands_h", a=e.a, mc_estimate=e.h_hat,
                             mc_stderr=e.stderr, verdict=e.verdict, **common))
        rows.append(_row(cfg, quantity="pickands_h_extrapolated", a=0.0, mc_estimate=study.h_extrapolated,
                         mc_stderr=study.stderr_extrapolated, verdict=study.verdict, **common))
        meta["pickands_verdict"] = study.verdict
    else:
        e = montecarlo.estimate_pickands(C, a[0], reps, cfg["seed"], threads)
        rows.append(_row(cfg, quantity="pickands_h", a=e.a, mc_estimate=e.h_hat, mc_stderr=e.stderr,
                         verdict=e.verdict, **common))
        meta["pickands_verdict"] = e.verdict
    z = 1.959963984540054
    for row in rows:
        row["ci_low"] = row["mc_estimate"] - z * row["mc_stderr"]
        row["ci_high"] = row["mc_estimate"] + z * row["mc_stderr"]
    return rows


def _cmd_validate_kernel(cfg, threads, meta):
    ps = _process_set(cfg)
    grid_n = cfg.get("validate", {}).get("grid_n", 101)
    rows = []
    seen = []
    for i, k in enumerate(ps.base_kernels[: ps.n]):
        if k in seen:
            continue
        seen.append(k)
        rep = validate_kernel(k, ps.T, grid_n)
        row = _row(cfg, n=ps.n, T=ps.T, quantity="validate_kernel", process=i,
                   kernel=json.dumps(rep.kernel, sort_keys=True), passed=rep.passed,
                   fitted_C=rep.fitted_C, max_offdiag_abs=rep.max_offdiag_abs,
                   min_deriv_variance=rep.min_deriv_variance,
                   violations=json.dumps(rep.violations))
        rows.append(row)
    meta["all_passed"] = all(r["passed"] for r in rows)
    return rows


def _cmd_sweep(cfg, threads, meta):
    ps = _process_set(cfg)
    levels = _levels(cfg)
    rhos = _rhos(cfg)
    if len(levels) < 2 and (rhos is None or len(rhos) < 2):
        raise ConfigError("sweep needs a 'u' list or a 'rho' list with at least two entries")
    with_mc = cfg["reps"] > 0
    if with_mc:
        _require_reps(cfg)
    rows = []
    for rho in rhos or [ps.rho]:
        ps_r = ps if rho is None else _with_rho(ps, rho)
        rows.extend(_sim_rows(cfg, ps_r, levels, threads, meta, with_mc))
    if cfg.get("plot_data"):
        x_key = "rho" if rhos is not None and len(rhos) >= 2 else "u"
        for row in rows:
            row["plot_x"] = row[x_key]
            row["plot_y_bound"] = row["bound_total"]
            row["plot_y_mc"] = row["mc_estimate"]
    return rows


HANDLERS = {
    "bound": _cmd_bound, "ec": _cmd_ec, "correlated": _cmd_correlated, "simulate": _cmd_simulate,
    "moments": _cmd_moments, "euler": _cmd_euler, "pickands": _cmd_pickands,
    "validate-kernel": _cmd_validate_kernel, "sweep": _cmd_sweep,
}


def run(cfg: dict, threads: int | None = None) -> Report:
    """Execute a resolved config and return its report (no file output)."""
    meta = {}
    rows = HANDLERS[cfg["command"]](cfg, threads, meta)
    ok = meta.get("all_passed", True)
    return Report(embedded_config(cfg), rows, meta, ok)


# ---------------------------------------------------------------- report I/O

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        text = format(value, ".17g")
        # keep integral floats (and -0.0) distinguishable from integers on parse
        return text if any(c in text for c in ".ein") else text + ".0"
    return str(value)


def _parse(text: str):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def report_columns(rows) -> list:
    extras = sorted({k for row in rows for k in row} - set(CSV_COLUMNS))
    return list(CSV_COLUMNS) + extras


def report_to_csv(report: Report) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(report.config, sort_keys=True) + "\n")
    buf.write("# meta: " + json.dumps(report.meta, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    cols = report_columns(report.rows)
    writer.writerow(cols)
    for row in report.rows:
        writer.writerow([_fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def report_to_json(report: Report) -> str:
    return json.dumps({"config": report.config, "meta": report.meta, "rows": report.rows},
                      sort_keys=True, indent=2) + "\n"


def read_csv_report(path) -> tuple[dict, list]:
    """Parse a CSV report back into (embedded config, rows with typed values)."""
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    config = {}
    body = []
    for line in lines:
        if line.startswith("# config: "):
            config = json.loads(line[len("# config: "):])
        elif not line.startswith("#"):
            body.append(line)
    rows = [{k: _parse(v) for k, v in row.items()} for row in csv.DictReader(body)]
    return config, rows


def write_report(report: Report, path: str, fmt: str) -> None:
    text = report_to_json(report) if fmt == "json" else report_to_csv(report)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def format_table(report: Report) -> str:
    cols = [c for c in ("command", "n", "u", "rho", "quantity", "process", "a", "point_term", "crossing_term",
                        "bound_total", "mc_estimate", "mc_stderr", "ci_low", "ci_high", "gap_normalized",
                        "verdict", "passed", "fitted_C")
            if any(row.get(c) is not None for row in report.rows)]

    def cell(v):
        if isinstance(v, float):
            return f"{v:.6g}"
        return "" if v is None else str(v)

    table = [cols] + [[cell(row.get(c)) for c in cols] for row in report.rows]
    widths = [max(len(r[j]) for r in table) for j in range(len(cols))]
    return "\n".join("  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in table)


# ---------------------------------------------------------------- entry point

def _diagnostic(kind: str, exc: Exception) -> None:
    print(json.dumps({"status": "error", "kind": kind, "type": type(exc).__name__, "message": str(exc)}),
          file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gauss-conjunction",
                                description="Conjunction-probability bounds and Monte Carlo validation.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--output", help="report path (.csv or .json)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--threads", type=int, help="worker threads (default: $GC_DEFAULT_THREADS or 1)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
        cfg = resolve_config(raw, args.command, args.seed, args.output)
        threads = args.threads or cfg.get("threads") or montecarlo.default_threads()
        report = run(cfg, threads)
    except (ConfigError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        _diagnostic("validation", exc)
        return 1
    except NumericalError as exc:
        _diagnostic("numerical", exc)
        return 2
    print(format_table(report))
    out = cfg.get("output")
    if out and "path" in out:
        write_report(report, out["path"], out["format"])
    if not report.ok:
        _diagnostic("validation", ValueError("kernel validation failed; see report"))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

# entry point for CLI

import argparse
import logging
from concurrent.futures import ThreadPoolExecutor
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

import pandas as pd
from dotenv import load_dotenv

from .analytics import check_bounds, skews, verify_implementation
from .chart import estimate_figure, sweep_figure, write_figure
from .config import PS, SWEEP_AXES, DEFAULT_SWEEP_THREADS, TREE_SWEEP_SIDES
from .console import console, error, info, success, warn
from .engine import run, validate_scenario
from .errors import ConfigError, ConstraintViolation, InvariantViolation, NotFound
from .fairbanks import fairbanks_comparison
from .io import load_config, read_trace, write_run, write_sweep
from .logger import get_logger, set_console_level
from .logic import OffsetView, classify_exact, classify_region
from .params import as_fraction, link_error_bound, naive_tdc_delta0
from .scenarios import list_scenarios
from .tree import tree_vs_gcs
from .utils import (
    format_time, localize, parse_time, quantize,
    render_explain, render_params, render_report, render_scenarios, render_sweep,
)

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAIL = 2


def _ps(fs) -> Decimal | None:
    if fs is None:
        return None
    return quantize(Fraction(fs) / PS, 3)


def _out_dir(args, output, scenario) -> Path:
    return Path(args.out) if args.out else Path(output.dir) / scenario.name


def cmd_run(args) -> int:
    scenario, output = load_config(args.config, args.set, args.scenario)
    out = _out_dir(args, output, scenario)
    try:
        trace = run(scenario)
    except InvariantViolation as e:
        error(str(e))
        if e.trace is not None:
            report = skews(e.trace)
            verdict = check_bounds(report, e.trace.bounds, e.trace.small_start)
            write_run(e.trace, report, verdict, out, formats=output.formats, stride=output.stride)
            warn(f"partial trace written to {out}")
        return EXIT_FAIL

    report = skews(trace)
    verdict = check_bounds(report, trace.bounds, trace.small_start)
    conditions = verify_implementation(trace)
    if scenario.compare_fairbanks:
        report.fairbanks = fairbanks_comparison(scenario)
    write_run(trace, report, verdict, out, conditions, output.formats, output.stride)

    render_report(report, verdict, args.lang, conditions)
    if report.fairbanks:
        fb = report.fairbanks
        local = fb.get("post_swap_local_ps", fb.get("local_skew_ps"))
        info(f"{localize('report.fairbanks_local', args.lang)}: {local} ps")
    if not conditions.passed:
        warn(f"implementation conditions failed: {', '.join(conditions.failed())}")
    success(f"{out}")
    return EXIT_OK if verdict.passed else EXIT_FAIL


# --- sweep ---

def _axis_value(axis: str, text: str):
    if axis == "W":
        return int(text)
    if axis in ("mu", "rho", "tdc_variation"):
        return as_fraction(text)
    return parse_time(text, key=axis)


def _swept_scenario(scenario, axis: str, value):
    p = scenario.params
    if axis == "tdc_variation":
        changes = {"delta0": naive_tdc_delta0(p.kappa, p.ell, value, 0)}
    else:
        changes = {axis: value}
    return scenario.evolve(params=p.evolve(**changes))


def _sweep_point(scenario, axis: str, text: str) -> dict:
    row = {axis: text, "status": "INVALID", "max_local_ps": None, "max_global_ps": None,
           "local_bound_ps": None, "global_bound_ps": None, "digest": "", "reason": ""}
    try:
        trace = run(_swept_scenario(scenario, axis, _axis_value(axis, text)))
    except (ConstraintViolation, ConfigError, ValueError) as e:
        row["reason"] = str(e)
        return row
    except InvariantViolation as e:
        row.update(status="FAIL", reason=str(e))
        return row

    report = skews(trace)
    verdict = check_bounds(report, trace.bounds, trace.small_start)
    row.update(
        status=verdict.status,
        max_local_ps=_ps(report.max_local),
        max_global_ps=_ps(report.max_global),
        local_bound_ps=_ps(trace.bounds.local_bound),
        global_bound_ps=_ps(trace.bounds.global_bound),
        digest=trace.digest(),
    )
    return row


def _tree_rows(values, tree: str, params) -> list[dict]:
    rows = []
    for r in tree_vs_gcs(tuple(int(v) for v in values), tree, params):
        rows.append({
            "W": r["W"],
            "tree": r["tree"],
            "tree_distance": r["tree_distance"],
            "tree_local_ps": _ps(r["tree_local_fs"]),
            "tree_local_wide_ps": _ps(r["tree_local_wide_fs"]),
            "gcs_local_ps": _ps(r["gcs_local_fs"]),
            "gcs_global_ps": _ps(r["gcs_global_fs"]),
            "diameter": r["diameter"],
        })
    return rows


def sweep(scenario, axis: str, values, threads: int = DEFAULT_SWEEP_THREADS, tree: str = "h-tree") -> pd.DataFrame:
    """
    One row per value of `axis`, in input order. Rows whose parameters fail
    validation are kept with status INVALID and the reason.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis '{axis}'; known: {', '.join(SWEEP_AXES)}", key="axis")
    if axis == "W":
        return pd.DataFrame(_tree_rows(values, tree, scenario.params))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(lambda text: _sweep_point(scenario, axis, text), values))
    return pd.DataFrame(rows)


def _plot_frame(frame: pd.DataFrame) -> pd.DataFrame:
    plot = frame.copy()
    for column in plot.columns:
        if column.endswith("_ps"):
            plot[column] = [None if v is None else float(v) for v in plot[column]]
    return plot


def cmd_sweep(args) -> int:
    scenario, output = load_config(args.config, args.set, args.scenario)
    values = [v.strip() for v in args.values.split(",") if v.strip()] if args.values else None
    if values is None:
        if args.axis != "W":
            raise ConfigError("--values is required for this axis", key="values")
        values = [str(w) for w in TREE_SWEEP_SIDES]

    frame = sweep(scenario, args.axis, values, args.threads, args.tree)
    out = Path(args.out) if args.out else Path(output.dir) / f"sweep_{args.axis}"
    write_sweep(frame, out / "sweep.csv")
    write_figure(sweep_figure(_plot_frame(frame), args.axis, args.lang), out / "sweep.plotly.json")

    render_sweep(frame, args.lang)
    invalid = int((frame["status"] == "INVALID").sum()) if "status" in frame else 0
    if invalid:
        warn(f"{invalid} of {len(frame)} values failed validation")
    success(f"{out}")
    return EXIT_OK


# --- explain ---

def _phases_at(trace, t: int, node: int) -> dict:
    times, rows = trace.phase_table()
    if t not in times:
        raise NotFound(f"no clock record at t={t} fs in {trace.name}; records every {trace.record_stride} fs")
    phases = rows[times.index(t)]
    own = phases[node]
    return {w: Fraction(phases[w] - own) * trace.t_clk for w in trace.topology.neighbors(node)}


def explain(trace, t: int, node: int) -> tuple[list, str, bool]:
    """
    Words, estimate extremes, region and md of `node` at record time t.
    Returns the detail lines, the summary line and whether a word holds M.

    Raises:
        NotFound: t is not a record time or node is not in the topology
    """
    if not 0 <= node < trace.topology.node_count:
        raise NotFound(f"node {node} is not in {trace.name} ({trace.topology.node_count} nodes)")
    p = trace.params.params
    delta = trace.params.delta

    offsets = _phases_at(trace, t, node)
    batch = trace.words_at(t, node)
    estimates = {w: est for w, (_, est) in batch.items()}
    has_m = any(word.m_count for word, _ in batch.values())

    exact = classify_exact(OffsetView(node, offsets=offsets), p.kappa, p.ell)
    lines = [("word", f"{w}: {word}") for w, (word, _) in sorted(batch.items())]
    if estimates:
        view = OffsetView(node, estimates=estimates)
        region = str(classify_region(view, p.kappa, delta, p.ell))
        lines += [("est_max", format_time(view.est_max)), ("est_min", format_time(view.est_min))]
    else:
        region = localize("explain.no_samples")
    lines.append(("exact", str(exact)))
    md = trace.md_at(t, node)
    return lines, f"region: {region}, md={md}", has_m


def _estimate_points(trace, t: int, node: int) -> list:
    points = []
    t_meas = trace.params.params.t_meas
    rows = trace.samples[(trace.samples["node"] == node) & (trace.samples["time_fs"] + t_meas <= t)]
    for _, batch in rows.groupby("time_fs", sort=True):
        values = [Fraction(0), *(Fraction(x) for x in batch["estimate_fs"])]
        points.append((min(values), max(values)))
    return points


def cmd_explain(args) -> int:
    trace = read_trace(args.trace)
    t = parse_time(args.time, key="time")
    lines, summary, has_m = explain(trace, t, args.node)
    render_explain(lines, args.lang)
    console.print(summary)
    if has_m:
        console.print(localize("explain.m_note", args.lang))
    if args.plot:
        points = _estimate_points(trace, t, args.node)
        write_figure(estimate_figure(points, trace.params.params.kappa, trace.params.delta, args.lang), args.plot)
    return EXIT_OK


# --- scenarios / check-params ---

def cmd_scenarios(args) -> int:
    render_scenarios(list_scenarios(), args.lang)
    return EXIT_OK


def param_rows(scenario) -> list[tuple[str, str]]:
    """
    Raises:
        ConstraintViolation, ConfigError: as validate_scenario
    """
    vp, small_start = validate_scenario(scenario)
    p, bounds = vp.params, vp.bounds
    return [
        ("delta", format_time(vp.delta)),
        ("link_error", format_time(link_error_bound(p))),
        ("t_max", format_time(p.t_max)),
        ("diameter", str(bounds.diameter)),
        ("local_bound", format_time(bounds.local_bound)),
        ("global_bound", format_time(bounds.global_bound)),
        ("reference_global", format_time(bounds.reference_global)),
        ("ell", str(p.ell)),
        ("required_ell", str(vp.required_ell)),
        ("small_start", str(small_start)),
    ]


def cmd_check_params(args) -> int:
    scenario, _ = load_config(args.config, args.set, args.scenario)
    render_params(param_rows(scenario), args.lang)
    success(localize("params.valid", args.lang))
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gcssim", description="Gradient clock synchronization simulator")
    parser.add_argument("--lang", default="en", choices=["en", "ua"], help="Language for output")
    parser.add_argument("--quiet", action="store_true", help="Only warnings and errors on the console log")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--scenario", help="Builtin scenario name")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="Override a config key")
        p.add_argument("--out", help="Output directory")
        return p

    with_config(sub.add_parser("run", help="Run one scenario")).set_defaults(func=cmd_run)

    p = with_config(sub.add_parser("sweep", help="Sweep one parameter"))
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", help="Comma separated values (times need a unit)")
    p.add_argument("--threads", type=int, default=DEFAULT_SWEEP_THREADS)
    p.add_argument("--tree", default="h-tree", help="Tree for the W axis")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("explain", help="Explain one node's mode decision")
    p.add_argument("trace", help="Run directory")
    p.add_argument("--time", required=True, help="Record time, e.g. 500ns")
    p.add_argument("--node", required=True, type=int)
    p.add_argument("--plot", help="Write the estimate trajectory figure here")
    p.set_defaults(func=cmd_explain)

    sub.add_parser("scenarios", help="List builtin scenarios").set_defaults(func=cmd_scenarios)
    with_config(sub.add_parser("check-params", help="Validate parameters")).set_defaults(func=cmd_check_params)
    return parser


def main(argv=None) -> int:
    load_dotenv()
    args = _parser().parse_args(argv)
    if args.quiet:
        set_console_level(logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, ConstraintViolation, NotFound, FileNotFoundError) as e:
        logger.debug("command %s failed", args.command, exc_info=True)
        error(str(e))
        return EXIT_ERROR


__all__ = ['main', 'sweep', 'explain', 'param_rows']

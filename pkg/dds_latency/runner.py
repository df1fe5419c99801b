"""
Evaluation of scenario batches, shared by the command line and the web front end.
"""
import math
from dataclasses import dataclass, replace
from multiprocessing import Pool

import pandas as pd

from logger import info_logger, error_logger
from .metrics import analyze
from .model import SolverConfig
from .reference import COLUMNS, summarize_columns
from .simulator import SimConfig, run_sim

PARAM_COLUMNS = ["m", "r", "h", "p"]
ANALYTIC_COLUMNS = [
    "mdr_pct", "avg_latency_ms", "jitter_ms",
    "R", "converged", "cycles_used", "final_distance", "k_max", "support", "tail_mass", "series_terms", "flags",
]
SIM_COLUMNS = ["sim_mdr_pct", "sim_avg_latency_ms", "sim_jitter_ms", "sim_undelivered", "seed", "scenario_index"]


@dataclass(frozen=True)
class Task:
    index: int
    sp: object
    mode: str
    solver: SolverConfig
    simulation: SimConfig


def analytic_row(sp, cfg):
    analysis = analyze(sp, cfg)
    metrics = analysis.metrics
    row = {
        "mdr_pct": metrics.mdr_pct,
        "avg_latency_ms": metrics.avg_latency_ms,
        "jitter_ms": metrics.jitter_ms,
    }
    row.update(analysis.diagnostics())
    return row


def simulated_row(sp, sc, result=None):
    if result is None:
        result = run_sim(sp, sc)
    return {
        "sim_mdr_pct": result.metrics.mdr_pct,
        "sim_avg_latency_ms": result.metrics.avg_latency_ms,
        "sim_jitter_ms": result.metrics.jitter_ms,
        "sim_undelivered": result.undelivered,
        "seed": sc.seed,
        "scenario_index": sc.scenario_index,
    }


def scenario_row(sp):
    return {"m": sp.m, "r": sp.r, "h": sp.h, "p": sp.p}


def evaluate(task):
    """
    One output row for one scenario.

    Params:
        task (Task): Scenario, mode and settings.

    Returns:
        dict: Parameter columns followed by the analytic and/or simulated columns.
    """
    sp = task.sp
    row = scenario_row(sp)
    if task.mode in ("analytic", "both"):
        row.update(analytic_row(sp, task.solver))
    if task.mode in ("simulate", "both"):
        sc = replace(task.simulation, scenario_index=task.index)
        row.update(simulated_row(sp, sc))
    return row


def output_columns(mode):
    columns = list(PARAM_COLUMNS)
    if mode in ("analytic", "both"):
        columns += ANALYTIC_COLUMNS
    if mode in ("simulate", "both"):
        columns += SIM_COLUMNS
    return columns


def run_tasks(tasks, jobs=1):
    """
    Evaluate tasks in order, on a process pool when jobs > 1.

    Every task draws from its own random stream, so the rows do not depend on jobs.
    """
    tasks = list(tasks)
    info_logger.info(f"evaluating {len(tasks)} scenario(s) on {jobs} process(es)")
    if jobs > 1 and len(tasks) > 1:
        with Pool(processes=min(jobs, len(tasks))) as pool:
            return pool.map(evaluate, tasks)
    return [evaluate(task) for task in tasks]


def build_tasks(scenarios, mode, solver, simulation):
    for sp in scenarios:
        sp.ensure_valid()
    return [Task(index=i, sp=sp, mode=mode, solver=solver, simulation=simulation) for i, sp in enumerate(scenarios)]


def results_frame(rows, mode):
    return pd.DataFrame(rows, columns=output_columns(mode))


def plot_frame(frame):
    """
    Long-format (m, h, r, p, metric, value) rows for surface plots.
    """
    metrics = [c for c in ("mdr_pct", "avg_latency_ms", "jitter_ms",
                           "sim_mdr_pct", "sim_avg_latency_ms", "sim_jitter_ms") if c in frame.columns]
    long = frame.melt(id_vars=["m", "h", "r", "p"], value_vars=metrics, var_name="metric", value_name="value")
    return long[["m", "h", "r", "p", "metric", "value"]]


# Acceptance thresholds of an analytic run against the published analytical columns
MDR_TIGHT, MDR_LOOSE, MDR_SHARE = 0.10, 0.50, 0.90
LAT_TIGHT_PCT, LAT_LOOSE_PCT, LAT_SHARE, LAT_SMALL_MS, LAT_SMALL_ABS = 1.0, 3.0, 0.90, 5.0, 0.05
JIT_TIGHT_PCT, JIT_LOOSE_PCT, JIT_SHARE = 2.0, 6.0, 0.85


def _relative_pct(ours, theirs):
    if theirs == 0:
        return 0.0 if ours == 0 else math.inf
    return abs(ours - theirs) / abs(theirs) * 100.0


def _latency_within(ours, theirs, pct):
    if theirs < LAT_SMALL_MS:
        return abs(ours - theirs) <= LAT_SMALL_ABS * pct / LAT_TIGHT_PCT + 1e-9
    return _relative_pct(ours, theirs) <= pct + 1e-9


def binomial_band(mdr_pct, n, sigmas=3.0):
    """
    Half-width in points of the sigmas-wide binomial band around an MDR measured over n messages.
    """
    q = min(max(mdr_pct / 100.0, 0.0), 1.0)
    return sigmas * 100.0 * max(math.sqrt(q * (1.0 - q) / n), 1.0 / n)


@dataclass(frozen=True)
class ComparisonReport:
    frame: pd.DataFrame
    failures: tuple
    summary: object
    passed: bool


def compare_with_reference(ref_rows, results, mode, n_messages):
    """
    Per-row deviations from the reference table and the overall acceptance verdict.

    Params:
        ref_rows (list of ReferenceRow): Evaluated reference rows.
        results (list of dict): Output of run_tasks for the same rows.
        mode (str): analytic, simulate or both.
        n_messages (int): Messages per simulation, for the binomial band.

    Returns:
        ComparisonReport: The 14 reference columns plus ours, failing rows, and the error summary against the experimental columns.
    """
    records = []
    failures = []
    exp_errors = {"mdr": [], "lat": [], "jit": []}
    for ref, res in zip(ref_rows, results):
        record = ref.as_dict()
        if mode in ("analytic", "both"):
            mdr, lat, jit = res["mdr_pct"], res["avg_latency_ms"], res["jitter_ms"]
            record.update({
                "mdr_ours": mdr, "lat_ours": lat, "jit_ours": jit,
                "d_mdr": abs(mdr - ref.mdr_a),
                "d_lat_pct": _relative_pct(lat, ref.lat_a),
                "d_jit_pct": _relative_pct(jit, ref.jit_a),
                "mdr_tight": abs(mdr - ref.mdr_a) <= MDR_TIGHT + 1e-9,
                "lat_tight": _latency_within(lat, ref.lat_a, LAT_TIGHT_PCT),
                "jit_tight": _relative_pct(jit, ref.jit_a) <= JIT_TIGHT_PCT + 1e-9,
            })
            loose = (
                abs(mdr - ref.mdr_a) <= MDR_LOOSE + 1e-9
                and _latency_within(lat, ref.lat_a, LAT_LOOSE_PCT)
                and _relative_pct(jit, ref.jit_a) <= JIT_LOOSE_PCT + 1e-9
            )
            record["within_loose"] = loose
            if not loose:
                failures.append(ref.idx)
            compared = (mdr, lat, jit)
        if mode in ("simulate", "both"):
            sim = res["sim_mdr_pct"]
            band = binomial_band(ref.mdr_e, n_messages)
            record.update({
                "sim_mdr_pct": sim,
                "sim_avg_latency_ms": res["sim_avg_latency_ms"],
                "sim_jitter_ms": res["sim_jitter_ms"],
                "sim_mdr_band": band,
                "sim_within_band": abs(sim - ref.mdr_e) <= band,
            })
            if not record["sim_within_band"] and ref.idx not in failures:
                failures.append(ref.idx)
            if mode == "simulate":
                compared = (sim, res["sim_avg_latency_ms"], res["sim_jitter_ms"])
        exp_errors["mdr"].append(abs(compared[0] - ref.mdr_e))
        exp_errors["lat"].append(_relative_pct(compared[1], ref.lat_e))
        exp_errors["jit"].append(_relative_pct(compared[2], ref.jit_e))
        records.append(record)

    frame = pd.DataFrame(records)
    for name, column in (("exp_mdr_err", "mdr"), ("exp_lat_err_pct", "lat"), ("exp_jit_err_pct", "jit")):
        frame[name] = exp_errors[column]
    summary = summarize_columns(exp_errors["mdr"], exp_errors["lat"], exp_errors["jit"])

    passed = not failures
    if mode in ("analytic", "both") and len(frame):
        shares = (
            (frame["mdr_tight"].mean(), MDR_SHARE, "MDR"),
            (frame["lat_tight"].mean(), LAT_SHARE, "latency"),
            (frame["jit_tight"].mean(), JIT_SHARE, "jitter"),
        )
        for share, needed, name in shares:
            if share < needed:
                passed = False
                error_logger.error(f"{name}: {share:.1%} of rows within the tight band, {needed:.0%} needed")
    if failures:
        error_logger.error(f"rows outside the acceptance band: {failures}")
    ordered = list(COLUMNS) + [c for c in frame.columns if c not in COLUMNS]
    return ComparisonReport(frame=frame[ordered], failures=tuple(failures), summary=summary, passed=passed)


def frame_to_text(frame, fmt):
    """
    Serialize a result frame as CSV or JSON records with stable float formatting.
    """
    if fmt == "json":
        return frame.to_json(orient="records", indent=2, double_precision=10) + "\n"
    return frame.to_csv(index=False, float_format="%.10g", lineterminator="\n")



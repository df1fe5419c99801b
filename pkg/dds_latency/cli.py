"""
Command line: analyze, simulate, sweep, validate and report.

Exit codes are 0 on success, 1 when a validation misses its acceptance thresholds and
2 on invalid input.
"""
import sys
from dataclasses import replace
from functools import wraps

import click
import pandas as pd

from config import Config
from logger import info_logger, error_logger
from .errors import ModelError
from .model import ScenarioParams, SolverConfig
from .reference import load_reference, summarize_columns, summarize_errors
from .runner import (
    build_tasks, compare_with_reference, frame_to_text, plot_frame, results_frame, run_tasks,
    scenario_row, simulated_row,
)
from .scenarios import MODES, ScenarioBatch, ScenarioFileError, apply_overrides, load_scenario_file
from .simulator import SimConfig, run_sim, write_trace

EXIT_ACCEPTANCE = 1
EXIT_INPUT = 2


def input_errors(f):
    """
    Turn model and scenario-file errors into exit code 2 with the message on stderr.
    """
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except (ModelError, ScenarioFileError) as exc:
            error_logger.error(f"{f.__name__}: {exc}")
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INPUT)
    return decorated_function


def scenario_options(f):
    options = [
        click.option("--file", "scenario_file", type=click.Path(dir_okay=False),
                     help="JSON scenario or grid file instead of --m/--r/--h/--p."),
        click.option("--m", type=float, help="Message size over MTU."),
        click.option("--r", type=float, help="Publish period in ms."),
        click.option("--h", type=float, help="Heartbeat period in ms."),
        click.option("--p", type=float, help="Per-packet delivery probability."),
        click.option("--mtu", type=int, default=1500, show_default=True, help="MTU in bytes."),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def solver_options(f):
    f = click.option("--kmax", type=int, default=None, help="Initial truncation bound of the unacked count.")(f)
    f = click.option("--epsilon", type=float, default=None, help="Convergence tolerance of the steady state.")(f)
    return f


def output_options(f):
    f = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)(f)
    f = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file, stdout if omitted.")(f)
    return f


def sim_options(f):
    f = click.option("--seed", type=int, default=Config.DEFAULT_SEED, show_default=True)(f)
    f = click.option("--n", "n_messages", type=click.IntRange(min=1), default=Config.DEFAULT_MESSAGES,
                     show_default=True, help="Messages per simulation.")(f)
    return f


def load_batch(scenario_file, m, r, h, p, mtu):
    """
    Scenarios from --file or from the four parameter flags.

    Returns:
        ScenarioBatch: The scenarios to evaluate.
    """
    if scenario_file:
        if any(v is not None for v in (m, r, h, p)):
            raise click.UsageError("give either --file or --m/--r/--h/--p, not both")
        return load_scenario_file(scenario_file)
    missing = [name for name, value in (("--m", m), ("--r", r), ("--h", h), ("--p", p)) if value is None]
    if missing:
        raise click.UsageError(f"missing {', '.join(missing)} (or use --file)")
    return ScenarioBatch(scenarios=(ScenarioParams(m=m, r=r, h=h, p=p, mtu_bytes=mtu),))


def solver_config(batch, epsilon, kmax):
    cfg = batch.solver_config()
    overrides = {}
    if epsilon is not None:
        overrides["epsilon"] = epsilon
    if kmax is not None:
        overrides["kmax_floor"] = kmax
    return apply_overrides(cfg, overrides, "solver flags")


def sim_config(batch, n_messages, seed):
    base = SimConfig(n_messages=n_messages, seed=seed)
    return apply_overrides(base, batch.simulation, "simulation")


def emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        info_logger.info(f"wrote {out}")
    else:
        click.echo(text, nl=False)


def parse_rows(text):
    """
    Parse a row selection such as "1-10,61" into sorted unique indices.
    """
    selected = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part:
                low, high = (int(x) for x in part.split("-", 1))
                if low > high:
                    raise ValueError
                selected.update(range(low, high + 1))
            else:
                selected.add(int(part))
        except ValueError:
            raise click.BadParameter(f"bad row selection {part!r}", param_hint="--rows")
    if not selected:
        raise click.BadParameter("empty row selection", param_hint="--rows")
    return sorted(selected)


@click.group()
def cli():
    """
    Delivery ratio, latency and jitter of reliable publish/subscribe over lossy links.
    """


@cli.command()
@scenario_options
@solver_options
@output_options
@click.option("--jobs", type=click.IntRange(min=1), default=Config.DEFAULT_JOBS, show_default=True)
@input_errors
def analyze(scenario_file, m, r, h, p, mtu, epsilon, kmax, out, fmt, jobs):
    """
    Analytic MDR, latency and jitter with solver diagnostics.
    """
    batch = load_batch(scenario_file, m, r, h, p, mtu)
    cfg = solver_config(batch, epsilon, kmax)
    tasks = build_tasks(batch.scenarios, "analytic", cfg, SimConfig())
    frame = results_frame(run_tasks(tasks, jobs), "analytic")
    emit(frame_to_text(frame, fmt), out)


@cli.command()
@scenario_options
@sim_options
@output_options
@click.option("--trace", type=click.Path(dir_okay=False), default=None,
              help="Write the per-message delays of a single scenario to this file.")
@click.option("--no-drain", is_flag=True, help="Stop at the last publish instead of draining.")
@click.option("--jobs", type=click.IntRange(min=1), default=Config.DEFAULT_JOBS, show_default=True)
@input_errors
def simulate(scenario_file, m, r, h, p, mtu, n_messages, seed, out, fmt, trace, no_drain, jobs):
    """
    Empirical metrics from the discrete-event simulation.
    """
    batch = load_batch(scenario_file, m, r, h, p, mtu)
    sc = replace(sim_config(batch, n_messages, seed), drain=not no_drain)
    if trace:
        if len(batch.scenarios) != 1:
            raise click.UsageError("--trace needs exactly one scenario")
        sp = batch.scenarios[0]
        sc = replace(sc, scenario_index=0)
        result = run_sim(sp, sc)
        write_trace(result, trace, sp, sc)
        rows = [{**scenario_row(sp), **simulated_row(sp, sc, result)}]
    else:
        rows = run_tasks(build_tasks(batch.scenarios, "simulate", SolverConfig(), sc), jobs)
    frame = results_frame(rows, "simulate")
    emit(frame_to_text(frame, fmt), out)


@cli.command()
@click.argument("grid_file", type=click.Path(dir_okay=False))
@click.option("--mode", type=click.Choice(MODES), default=None, help="Overrides the file's mode.")
@sim_options
@solver_options
@output_options
@click.option("--plot-data", type=click.Path(dir_okay=False), default=None,
              help="Also write long-format (m, h, r, p, metric, value) rows.")
@click.option("--jobs", type=click.IntRange(min=1), default=Config.DEFAULT_JOBS, show_default=True)
@input_errors
def sweep(grid_file, mode, n_messages, seed, epsilon, kmax, out, fmt, plot_data, jobs):
    """
    Evaluate every point of a grid file, one output row per scenario.
    """
    batch = load_scenario_file(grid_file)
    mode = mode or batch.mode
    cfg = solver_config(batch, epsilon, kmax)
    sc = sim_config(batch, n_messages, seed)
    tasks = build_tasks(batch.scenarios, mode, cfg, sc)
    frame = results_frame(run_tasks(tasks, jobs), mode)
    emit(frame_to_text(frame, fmt), out)
    if plot_data:
        plot_frame(frame).to_csv(plot_data, index=False, float_format="%.10g", lineterminator="\n")
        info_logger.info(f"plot data written to {plot_data}")


@cli.command()
@click.option("--reference", "reference_path", type=click.Path(dir_okay=False), default=None,
              help="Reference table, the bundled one (or PLA_DATA_DIR's) if omitted.")
@click.option("--mode", type=click.Choice(MODES), default="analytic", show_default=True)
@click.option("--rows", "rows_text", default=None, help="Row selection such as 1-10,61.")
@sim_options
@solver_options
@output_options
@click.option("--jobs", type=click.IntRange(min=1), default=Config.DEFAULT_JOBS, show_default=True)
@input_errors
def validate(reference_path, mode, rows_text, n_messages, seed, epsilon, kmax, out, fmt, jobs):
    """
    Compare our metrics with the reference table and check the acceptance thresholds.
    """
    ref_rows = load_reference(reference_path)
    if rows_text:
        wanted = set(parse_rows(rows_text))
        unknown = wanted - {row.idx for row in ref_rows}
        if unknown:
            raise click.BadParameter(f"no reference rows {sorted(unknown)}", param_hint="--rows")
        ref_rows = [row for row in ref_rows if row.idx in wanted]
    batch = ScenarioBatch(scenarios=tuple(row.params for row in ref_rows))
    cfg = solver_config(batch, epsilon, kmax)
    sc = SimConfig(n_messages=n_messages, seed=seed)
    # reference idx doubles as the stream index so a row's draws do not depend on --rows
    tasks = build_tasks(batch.scenarios, mode, cfg, sc)
    tasks = [replace(task, index=row.idx) for task, row in zip(tasks, ref_rows)]
    results = run_tasks(tasks, jobs)
    report = compare_with_reference(ref_rows, results, mode, n_messages)
    emit(frame_to_text(report.frame, fmt), out)
    s = report.summary
    click.echo(
        f"rows={s.rows} mdr_err={s.mdr_mean:.2f}+-{s.mdr_std:.2f} "
        f"lat_err={s.lat_mean:.2f}%+-{s.lat_std:.2f} jit_err={s.jit_mean:.2f}%+-{s.jit_std:.2f}",
        err=True,
    )
    if not report.passed:
        click.echo(f"acceptance failed; rows outside the loose band: {list(report.failures)}", err=True)
        sys.exit(EXIT_ACCEPTANCE)
    info_logger.info("validation passed")


@cli.command()
@click.option("--from", "results_path", type=click.Path(dir_okay=False), default=None,
              help="Output of validate to summarize instead of the reference table.")
@output_options
@input_errors
def report(results_path, out, fmt):
    """
    Mean and sample standard deviation of the per-row errors.
    """
    if results_path is None:
        summary = summarize_errors(load_reference())
    else:
        try:
            frame = pd.read_csv(results_path)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise ScenarioFileError(f"cannot read {results_path}: {exc}")
        for prefix in ("exp_", ""):
            names = [f"{prefix}mdr_err", f"{prefix}lat_err_pct", f"{prefix}jit_err_pct"]
            if all(name in frame.columns for name in names):
                break
        else:
            raise ScenarioFileError(f"{results_path} has no error columns")
        summary = summarize_columns(*(frame[name].tolist() for name in names))
    emit(frame_to_text(summary.as_frame(), fmt), out)


def main():
    cli(prog_name="dds-latency")


if __name__ == "__main__":
    main()

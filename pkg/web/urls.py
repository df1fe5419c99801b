from flask import jsonify, request, current_app
from web import app
from web.forms import ScenarioForm, SimulationForm
from logger import info_logger, error_logger
from dds_latency.errors import ModelError
from dds_latency.metrics import analyze
from dds_latency.reference import find_row, load_reference
from dds_latency.simulator import SimConfig, run_sim


def metrics_json(metrics):
    """
    Converts a LatencyMetrics into plain JSON types

    Params:
        metrics (LatencyMetrics): The metrics to be converted

    Returns:
        dict: mdr_pct, avg_latency_ms, jitter_ms and flags
    """
    return {
        'mdr_pct': float(metrics.mdr_pct),
        'avg_latency_ms': float(metrics.avg_latency_ms),
        'jitter_ms': float(metrics.jitter_ms),
        'flags': list(metrics.flags),
    }


def rejected(form):
    error_logger.error(f"Rejected request {request.path}: {form.errors}")
    return jsonify({'errors': form.errors}), 400


@app.errorhandler(ModelError)
def model_error(error):
    """
    Any model error raised by a handler becomes a 400 with the message
    """
    error_logger.error(f"{request.path}: {error}")
    return jsonify({'errors': {'scenario': [str(error)]}}), 400


@app.route('/')
def index():
    """
    The service banner with the available endpoints
    """
    return jsonify({
        'service': 'dds-latency',
        'endpoints': ['/analyze', '/simulate', '/reference/<idx>'],
    })


@app.route('/analyze')
def analyze_scenario():
    """
    Analytic MDR, latency and jitter for the scenario in the query string
    """
    form = ScenarioForm(request.args)
    if not form.validate():
        return rejected(form)
    sp = form.scenario().ensure_valid()
    analysis = analyze(sp, form.solver_config())
    info_logger.info(f"Analyzed {sp.label()}")
    return jsonify({
        'scenario': sp.as_dict(),
        'metrics': metrics_json(analysis.metrics),
        'diagnostics': analysis.diagnostics(),
    })


@app.route('/simulate')
def simulate_scenario():
    """
    Empirical metrics of a seeded simulation, capped at MAX_WEB_MESSAGES messages
    """
    form = SimulationForm(request.args)
    if not form.validate():
        return rejected(form)
    sp = form.scenario().ensure_valid()
    n = min(form.n.data, current_app.config['MAX_WEB_MESSAGES'])
    sc = SimConfig(n_messages=n, seed=form.seed.data)
    result = run_sim(sp, sc)
    info_logger.info(f"Simulated {sp.label()} with {n} messages")
    return jsonify({
        'scenario': sp.as_dict(),
        'n_messages': n,
        'seed': sc.seed,
        'metrics': metrics_json(result.metrics),
        'undelivered': result.undelivered,
    })


@app.route('/reference/<int:idx>')
def reference_row(idx):
    """
    One row of the bundled reference table

    Params:
        idx (int): Row index, 1 to 270

    Returns:
        JSON of the row, or 404 when there is no such row
    """
    row = find_row(load_reference(), idx)
    if row is None:
        error_logger.error(f"No reference row {idx}")
        return jsonify({'errors': {'idx': [f'no reference row {idx}']}}), 404
    return jsonify(row.as_dict())

"""
Bundled reference table of 270 scenarios with published analytical and experimental metrics.
"""
import os
from dataclasses import dataclass, fields

import numpy as np
import pandas as pd

from config import Config
from logger import info_logger, error_logger
from .errors import ReferenceDataError
from .model import LatencyMetrics, ScenarioParams

COLUMNS = (
    "idx", "r", "h", "m", "p",
    "mdr_a", "mdr_e", "mdr_err",
    "lat_a", "lat_e", "lat_err_pct",
    "jit_a", "jit_e", "jit_err_pct",
)

# Parameter grid of the measurement campaign, in table order
R_VALUES = (50, 100, 200)
H_VALUES = (50, 100, 200)
M_VALUES = (0.008, 0.5, 1, 3, 5, 10)
P_VALUES = (0.95, 0.9, 0.85, 0.8, 0.75)
EXPECTED_ROWS = len(R_VALUES) * len(H_VALUES) * len(M_VALUES) * len(P_VALUES)

# Published mean errors: MDR in points, latency and jitter in percent
PUBLISHED_MEAN_ERRORS = (0.91, 1.82, 4.57)


@dataclass(frozen=True)
class ReferenceRow:
    idx: int
    r: float
    h: float
    m: float
    p: float
    mdr_a: float
    mdr_e: float
    mdr_err: float
    lat_a: float
    lat_e: float
    lat_err_pct: float
    jit_a: float
    jit_e: float
    jit_err_pct: float

    @property
    def params(self):
        return ScenarioParams(m=self.m, r=self.r, h=self.h, p=self.p)

    def analytic(self):
        return LatencyMetrics(mdr_pct=self.mdr_a, avg_latency_ms=self.lat_a, jitter_ms=self.jit_a)

    def experimental(self):
        return LatencyMetrics(mdr_pct=self.mdr_e, avg_latency_ms=self.lat_e, jitter_ms=self.jit_e)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class ErrorSummary:
    """
    Mean and sample standard deviation of the per-row errors.
    """
    mdr_mean: float
    mdr_std: float
    lat_mean: float
    lat_std: float
    jit_mean: float
    jit_std: float
    rows: int = 0

    def means(self):
        return (self.mdr_mean, self.lat_mean, self.jit_mean)

    def as_frame(self):
        return pd.DataFrame(
            {
                "metric": ["mdr_abs", "latency_pct", "jitter_pct"],
                "mean": [self.mdr_mean, self.lat_mean, self.jit_mean],
                "std": [self.mdr_std, self.lat_std, self.jit_std],
            }
        )


def _on_grid(value, grid):
    return any(np.isclose(value, g, rtol=0, atol=1e-9) for g in grid)


def _parse_row(record, line):
    values = {}
    for name in COLUMNS:
        raw = str(record[name]).strip()
        try:
            values[name] = float(raw)
        except ValueError:
            raise ReferenceDataError(f"column {name}: {raw!r} is not a number", line=line)
    if not values["idx"].is_integer():
        raise ReferenceDataError(f"idx {values['idx']!r} is not an integer", line=line)
    values["idx"] = int(values["idx"])
    for name, grid in (("r", R_VALUES), ("h", H_VALUES), ("m", M_VALUES), ("p", P_VALUES)):
        if not _on_grid(values[name], grid):
            raise ReferenceDataError(f"{name}={values[name]:g} is not on the parameter grid", line=line)
    return ReferenceRow(**values)


def load_reference(path=None, expected_rows=EXPECTED_ROWS):
    """
    Parse and check the reference table.

    Params:
        path (str): CSV file, the bundled table (or PLA_DATA_DIR's) if omitted.
        expected_rows (int): Required number of data rows.

    Returns:
        list of ReferenceRow: Rows in file order.
    """
    path = path or Config.reference_path()
    if not os.path.exists(path):
        error_logger.error(f"reference table {path} not found")
        raise ReferenceDataError(f"reference table {path} not found")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise ReferenceDataError(f"cannot parse {path}: {exc}")
    if tuple(frame.columns) != COLUMNS:
        raise ReferenceDataError(f"header must be {','.join(COLUMNS)}", line=1)

    rows = []
    seen = {}
    combos = set()
    for position, record in enumerate(frame.to_dict("records")):
        line = position + 2
        row = _parse_row(record, line)
        if row.idx in seen:
            raise ReferenceDataError(f"idx {row.idx} repeats line {seen[row.idx]}", line=line)
        seen[row.idx] = line
        combos.add((row.r, row.h, row.m, row.p))
        rows.append(row)

    if len(rows) != expected_rows:
        raise ReferenceDataError(f"expected {expected_rows} rows, found {len(rows)}")
    if expected_rows == EXPECTED_ROWS and len(combos) != EXPECTED_ROWS:
        raise ReferenceDataError("rows do not cover the full parameter grid")
    info_logger.info(f"loaded {len(rows)} reference rows from {path}")
    return rows


def summarize_columns(mdr_err, lat_err, jit_err):
    """
    Error summary of three error columns.

    Params:
        mdr_err (sequence of float): Absolute MDR errors in points.
        lat_err (sequence of float): Latency errors in percent.
        jit_err (sequence of float): Jitter errors in percent.

    Returns:
        ErrorSummary: Means and sample standard deviations, std 0 for a single row.
    """
    frame = pd.DataFrame({"mdr": mdr_err, "lat": lat_err, "jit": jit_err}, dtype=float)
    if frame.empty:
        raise ReferenceDataError("no rows to summarize")
    means = frame.mean()
    stds = frame.std(ddof=1).fillna(0.0)
    return ErrorSummary(
        mdr_mean=float(means["mdr"]), mdr_std=float(stds["mdr"]),
        lat_mean=float(means["lat"]), lat_std=float(stds["lat"]),
        jit_mean=float(means["jit"]), jit_std=float(stds["jit"]),
        rows=len(frame),
    )


def summarize_errors(rows):
    """
    Mean and std of the stored error columns over the given reference rows.
    """
    rows = list(rows)
    return summarize_columns(
        [row.mdr_err for row in rows],
        [row.lat_err_pct for row in rows],
        [row.jit_err_pct for row in rows],
    )


def rows_frame(rows):
    return pd.DataFrame([row.as_dict() for row in rows], columns=list(COLUMNS))


def find_row(rows, idx):
    for row in rows:
        if row.idx == idx:
            return row
    return None

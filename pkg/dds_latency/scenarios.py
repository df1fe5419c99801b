"""
Scenario and grid files.

A file is one JSON object holding either a single `scenario` or a `grid` of values per
parameter, plus optional `solver` and `simulation` overrides and a `mode`.
Grid values are lists or inclusive {"start", "stop", "step"} ranges.
"""
import itertools
import json
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from logger import info_logger
from .model import ScenarioParams, SolverConfig, replace_checked

MODES = ("analytic", "simulate", "both")
GRID_KEYS = ("m", "r", "h", "p", "mtu_bytes", "hb_extra_ms")
_FILE_KEYS = {"scenario", "grid", "solver", "simulation", "mode"}


class ScenarioFileError(ValueError):
    """
    A scenario or grid file that cannot be used.
    """


@dataclass(frozen=True)
class ScenarioBatch:
    scenarios: Tuple[ScenarioParams, ...]
    solver: Dict = field(default_factory=dict)
    simulation: Dict = field(default_factory=dict)
    mode: str = "analytic"

    def solver_config(self, base=None):
        try:
            return (base or SolverConfig()).with_overrides(self.solver)
        except (TypeError, ValueError) as exc:
            raise ScenarioFileError(f"solver: {exc}")


def scenario_from_mapping(mapping):
    """
    Build a ScenarioParams from a {name: value} mapping, rejecting unknown names.
    """
    if not isinstance(mapping, dict):
        raise ScenarioFileError("scenario must be an object")
    missing = [name for name in ("m", "r", "h", "p") if name not in mapping]
    if missing:
        raise ScenarioFileError(f"scenario misses {', '.join(missing)}")
    unknown = sorted(set(mapping) - set(GRID_KEYS))
    if unknown:
        raise ScenarioFileError(f"unknown scenario field(s): {', '.join(unknown)}")
    return ScenarioParams(**mapping)


def expand_values(name, value):
    """
    Values of one grid axis.

    Params:
        name (str): Parameter name, for messages.
        value (list or dict or number): Explicit values, an inclusive range or a single value.

    Returns:
        list: The axis values in order.
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [value]
    if isinstance(value, list):
        if not value:
            raise ScenarioFileError(f"grid axis {name} is empty")
        return list(value)
    if isinstance(value, dict):
        try:
            start, stop, step = value["start"], value["stop"], value["step"]
        except KeyError as exc:
            raise ScenarioFileError(f"grid axis {name} range misses {exc.args[0]}")
        if step <= 0 or stop < start:
            raise ScenarioFileError(f"grid axis {name} range is empty")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    raise ScenarioFileError(f"grid axis {name} must be a list, a range or a number")


def expand_grid(grid):
    """
    Cartesian product of the grid axes in m, r, h, p order.

    Params:
        grid (dict): Axis name mapped to its values.

    Returns:
        list of ScenarioParams: One scenario per grid point.
    """
    if not isinstance(grid, dict) or not grid:
        raise ScenarioFileError("grid is empty")
    unknown = sorted(set(grid) - set(GRID_KEYS))
    if unknown:
        raise ScenarioFileError(f"unknown grid axis: {', '.join(unknown)}")
    missing = [name for name in ("m", "r", "h", "p") if name not in grid]
    if missing:
        raise ScenarioFileError(f"grid misses {', '.join(missing)}")
    names = [name for name in GRID_KEYS if name in grid]
    axes = [expand_values(name, grid[name]) for name in names]
    return [ScenarioParams(**dict(zip(names, point))) for point in itertools.product(*axes)]


def parse_scenario_document(document):
    """
    Turn a decoded scenario or grid document into a ScenarioBatch.
    """
    if not isinstance(document, dict):
        raise ScenarioFileError("scenario file must hold a JSON object")
    unknown = sorted(set(document) - _FILE_KEYS)
    if unknown:
        raise ScenarioFileError(f"unknown key(s): {', '.join(unknown)}")
    if ("scenario" in document) == ("grid" in document):
        raise ScenarioFileError("give exactly one of 'scenario' or 'grid'")
    if "scenario" in document:
        scenarios = [scenario_from_mapping(document["scenario"])]
    else:
        scenarios = expand_grid(document["grid"])
    mode = document.get("mode", "analytic")
    if mode not in MODES:
        raise ScenarioFileError(f"mode must be one of {', '.join(MODES)}")
    for name in ("solver", "simulation"):
        if not isinstance(document.get(name, {}), dict):
            raise ScenarioFileError(f"{name} must be an object")
    return ScenarioBatch(
        scenarios=tuple(scenarios),
        solver=dict(document.get("solver", {})),
        simulation=dict(document.get("simulation", {})),
        mode=mode,
    )


def load_scenario_file(path):
    """
    Read a JSON scenario or grid file.

    Params:
        path (str): File to read.

    Returns:
        ScenarioBatch: Scenarios in grid order with their overrides.
    """
    try:
        with open(path, encoding="utf-8") as handle:
            document = json.load(handle)
    except OSError as exc:
        raise ScenarioFileError(f"cannot read {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise ScenarioFileError(f"{path} is not valid JSON: {exc.msg} (line {exc.lineno})")
    batch = parse_scenario_document(document)
    info_logger.info(f"{path}: {len(batch.scenarios)} scenario(s), mode {batch.mode}")
    return batch


def apply_overrides(obj, overrides, label):
    try:
        return replace_checked(obj, overrides)
    except (TypeError, ValueError) as exc:
        raise ScenarioFileError(f"{label}: {exc}")

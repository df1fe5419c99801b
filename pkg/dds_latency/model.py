"""
Shared domain types of the latency engine and the checks on scenario parameters.

All types are frozen value objects. Distribution vectors are stored as read-only numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Tuple

import numpy as np

from logger import info_logger
from .errors import DistributionError, ScenarioError

# Times are integerized on a 0.1 ms grid wherever periods must be compared exactly
TICKS_PER_MS = 10

# Mass tolerance accepted (and renormalized) when building a distribution
RENORMALIZE_TOL = 1e-9
EXACT_TOL = 1e-12


def _is_integral(value, tol=1e-9):
    return abs(value - round(value)) <= tol * max(1.0, abs(value))


def to_ticks(value_ms):
    """
    Convert a duration to integer 0.1 ms ticks, or None when it is off the grid.

    Params:
        value_ms (float): Duration in milliseconds.

    Returns:
        int or None: The duration in ticks.
    """
    scaled = value_ms * TICKS_PER_MS
    ticks = round(scaled)
    if abs(scaled - ticks) > 1e-6:
        return None
    return int(ticks)


@dataclass(frozen=True)
class ValidationReport:
    """
    Diagnostics of a scenario check. Errors reject the scenario, warnings only flag it.
    """
    errors: Tuple[str, ...] = ()
    warnings: Tuple[str, ...] = ()

    @property
    def ok(self):
        return not self.errors


@dataclass(frozen=True)
class ScenarioParams:
    """
    One analyzable configuration of a reliable publisher/subscriber pair.

    Attributes:
        m (float): Ratio of total message size to the MTU.
        r (float): Publish period in ms.
        h (float): Nominal heartbeat period in ms.
        p (float): Per-packet delivery probability.
        mtu_bytes (int): MTU the ratio refers to, informational.
        hb_extra_ms (float): Heartbeat period inflation observed on real stacks.
    """
    m: float
    r: float
    h: float
    p: float
    mtu_bytes: int = 1500
    hb_extra_ms: float = 0.2

    def validate(self):
        return validate_scenario(self)

    def ensure_valid(self):
        """
        Raise ScenarioError unless the scenario validates; log its warnings.

        Returns:
            ScenarioParams: self, for chaining.
        """
        report = validate_scenario(self)
        if not report.ok:
            raise ScenarioError(report)
        for warning in report.warnings:
            info_logger.info(f"scenario {self.label()}: {warning}")
        return self

    @property
    def hb_period_ms(self):
        # Heartbeat period actually observed on the wire
        return self.h + self.hb_extra_ms

    def label(self):
        return f"m={self.m:g} r={self.r:g} h={self.h:g} p={self.p:g}"

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class DerivedParams:
    """
    Packet counts implied by the message-to-MTU ratio.

    Attributes:
        u (int): UDP packets per publish.
        cap_M (int): Unacked messages that fit in one retransmission packet.
    """
    u: int
    cap_M: int


def derive_params(sp):
    """
    Packets per publish and messages per retransmission packet.

    Params:
        sp (ScenarioParams): A valid scenario.

    Returns:
        DerivedParams: u = ceil(m) and cap_M = ceil(1/m).
    """
    # Snap values a hair above an integer (0.1 * 10 etc.) before taking the ceiling
    u = math.ceil(sp.m - 1e-12)
    cap_M = math.ceil(1.0 / sp.m - 1e-9)
    return DerivedParams(u=max(1, u), cap_M=max(1, cap_M))


def validate_scenario(sp):
    """
    Check a scenario without raising.

    Params:
        sp (ScenarioParams): The scenario to check.

    Returns:
        ValidationReport: Errors for values the model cannot evaluate, warnings for values outside its assumptions.
    """
    errors = []
    warnings = []

    def _finite(name, value):
        try:
            ok = math.isfinite(float(value))
        except (TypeError, ValueError):
            ok = False
        if not ok:
            errors.append(f"{name} must be a finite number")
        return ok

    if _finite("p", sp.p) and not 0.0 < sp.p <= 1.0:
        errors.append("p out of range: delivery probability must lie in (0, 1]")
    if _finite("r", sp.r) and sp.r <= 0:
        errors.append("r must be positive")
    if _finite("h", sp.h) and sp.h <= 0:
        errors.append("h must be positive")
    if _finite("hb_extra_ms", sp.hb_extra_ms) and sp.hb_extra_ms < 0:
        errors.append("hb_extra_ms must be non-negative")
    if not isinstance(sp.mtu_bytes, (int, np.integer)) or sp.mtu_bytes <= 0:
        errors.append("mtu_bytes must be a positive integer")
    if _finite("m", sp.m):
        if sp.m <= 0:
            errors.append("m must be positive")
        elif not (_is_integral(sp.m) or _is_integral(1.0 / sp.m)):
            warnings.append("m and 1/m non-integer: packet counts use ceilings, mixed-size batches are approximate")

    return ValidationReport(errors=tuple(errors), warnings=tuple(warnings))


@dataclass(frozen=True, eq=False)
class UnackedDistribution:
    """
    Probability of exactly k unacked RTPS messages, k = 0..k_max.

    Attributes:
        probs (numpy.ndarray): Read-only probability vector.
        tail_mass (float): Probability folded into the top bucket by truncation.
    """
    probs: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float, copy=True).ravel()
        if probs.size == 0:
            raise DistributionError("distribution must have at least one entry")
        if not np.all(np.isfinite(probs)):
            raise DistributionError("distribution has non-finite entries")
        if np.any(probs < 0):
            raise DistributionError("distribution has negative entries")
        total = probs.sum()
        if abs(total - 1.0) > RENORMALIZE_TOL:
            raise DistributionError(f"distribution sums to {total!r}, not 1")
        if abs(total - 1.0) > EXACT_TOL:
            probs = probs / total
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if self.tail_mass < 0:
            raise DistributionError("tail mass must be non-negative")

    @classmethod
    def delta(cls, k=0):
        probs = np.zeros(k + 1)
        probs[k] = 1.0
        return cls(probs)

    @classmethod
    def from_mapping(cls, mapping):
        """
        Build a distribution from a {k: probability} mapping.
        """
        size = max(mapping) + 1
        probs = np.zeros(size)
        for k, value in mapping.items():
            probs[k] = value
        return cls(probs)

    @property
    def k_max(self):
        return self.probs.size - 1

    def __getitem__(self, k):
        if k < 0 or k > self.k_max:
            return 0.0
        return float(self.probs[k])

    def __len__(self):
        return self.probs.size

    def padded(self, size):
        """
        Probability vector zero-padded (never truncated) to at least size entries.
        """
        if size <= self.probs.size:
            return np.array(self.probs)
        out = np.zeros(size)
        out[:self.probs.size] = self.probs
        return out

    def __eq__(self, other):
        if not isinstance(other, UnackedDistribution):
            return NotImplemented
        size = max(len(self), len(other))
        return bool(np.array_equal(self.padded(size), other.padded(size)))

    def __repr__(self):
        shown = {k: round(float(v), 6) for k, v in enumerate(self.probs) if v > 0}
        return f"UnackedDistribution({shown})"


class EventKind(Enum):
    PUBLISH = "publish"
    HEARTBEAT = "heartbeat"


@dataclass(frozen=True)
class Event:
    time_ms: float
    kind: EventKind


@dataclass(frozen=True)
class EventTimeline:
    events: Tuple[Event, ...]
    horizon_ms: float

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)


@dataclass(frozen=True)
class SteadyStateCycle:
    """
    The R post-publish distributions the solver settled into.

    Attributes:
        dists (tuple of UnackedDistribution): P^(1)..P^(R), phase 1 being the publish at t = 0 mod LCM(r, h).
        period_R (int): Number of publishes per repeating period.
        converged (bool): Whether two consecutive cycles came closer than epsilon.
        cycles_used (int): Cycles walked by the solver.
        final_distance (float): Distance between the last two cycles.
        k_max (int): Truncation bound the solver ended with, 0 when not produced by the solver.
    """
    dists: Tuple[UnackedDistribution, ...]
    period_R: int
    converged: bool = True
    cycles_used: int = 0
    final_distance: float = 0.0
    k_max: int = 0

    @property
    def tail_mass(self):
        return max((d.tail_mass for d in self.dists), default=0.0)

    @property
    def support(self):
        return max((d.k_max for d in self.dists), default=0)

    def rotated(self, shift):
        """
        Same cycle started from a different phase.
        """
        dists = self.dists[shift:] + self.dists[:shift]
        return replace(self, dists=dists)


@dataclass(frozen=True)
class LatencyMetrics:
    """
    Message delivery ratio in percent, average latency and jitter in ms.
    """
    mdr_pct: float
    avg_latency_ms: float
    jitter_ms: float
    flags: Tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not -1e-9 <= self.mdr_pct <= 100.0 + 1e-9:
            raise ValueError(f"mdr_pct {self.mdr_pct} outside [0, 100]")
        if self.avg_latency_ms < 0 or self.jitter_ms < 0:
            raise ValueError("latency and jitter must be non-negative")

    def as_tuple(self):
        return (self.mdr_pct, self.avg_latency_ms, self.jitter_ms)

    def rounded(self, digits=2):
        return tuple(round(v, digits) for v in self.as_tuple())


class OffsetCase(Enum):
    R_EQUALS_H = "r=h"
    R_LESS_THAN_H = "r<h"
    R_GREATER_THAN_H = "r>h"


@dataclass(frozen=True)
class OffsetModel:
    """
    Mean delay from each publish to the first heartbeat that can serve it.

    Attributes:
        case (OffsetCase): How r compares with h.
        per_publish_tc_ms (tuple of float): t_c for each phase of the steady-state cycle.
        pattern (tuple of float): Offsets delta_l of the repeating pattern when r > h, empty otherwise.
        weight_index (int): H = LCM(r, h)/h - 1 when r > h, 0 otherwise.
    """
    case: OffsetCase
    per_publish_tc_ms: Tuple[float, ...]
    pattern: Tuple[float, ...] = ()
    weight_index: int = 0

    def rotated(self, shift):
        tc = self.per_publish_tc_ms[shift:] + self.per_publish_tc_ms[:shift]
        return replace(self, per_publish_tc_ms=tc)


class TimelineMode(Enum):
    NOMINAL = "nominal"
    DRIFTED = "drifted"


class JitterMode(Enum):
    PER_MESSAGE = "per_message"
    PHASE_MEAN = "phase_mean"


class Case3Weight(Enum):
    # Hb^max(H-1, 1), Hb^max(H-1, 0) and Hb^H applied to the phase distribution
    PUBLISHED = "published"
    LITERAL = "literal"
    FULL_CYCLE = "full_cycle"


@dataclass(frozen=True)
class SolverConfig:
    """
    Tolerances and caps of the steady-state solver and the latency series.
    """
    epsilon: float = 1e-9
    max_cycles: int = 10_000
    kmax_floor: int = 64
    kmax_cap: int = 8192
    tail_tol: float = 1e-12
    series_tail_tol: float = 1e-10
    series_max_v: int = 10_000
    timeline_mode: TimelineMode = TimelineMode.NOMINAL
    jitter_mode: JitterMode = JitterMode.PER_MESSAGE
    case3_weight: Case3Weight = Case3Weight.PUBLISHED

    def __post_init__(self):
        for name in ("epsilon", "tail_tol", "series_tail_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("max_cycles", "kmax_floor", "kmax_cap", "series_max_v"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        # enum fields also accept their string values, as JSON overrides carry them
        for name, enum in (("timeline_mode", TimelineMode), ("jitter_mode", JitterMode),
                           ("case3_weight", Case3Weight)):
            value = getattr(self, name)
            if not isinstance(value, enum):
                object.__setattr__(self, name, enum(value))

    def with_overrides(self, overrides):
        """
        Copy of this config with fields replaced by name.

        Params:
            overrides (dict): Field names mapped to new values.

        Returns:
            SolverConfig: The updated config.
        """
        return replace_checked(self, overrides or {})


def replace_checked(obj, overrides):
    """
    dataclasses.replace that rejects unknown field names with a readable message.
    """
    known = {f.name for f in fields(obj)}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ValueError(f"unknown {type(obj).__name__} field(s): {', '.join(unknown)}")
    return replace(obj, **overrides)


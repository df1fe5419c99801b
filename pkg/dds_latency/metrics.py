"""
Delivery ratio, latency and jitter of a steady-state cycle.
"""
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from logger import info_logger, error_logger
from .model import (
    Case3Weight, JitterMode, LatencyMetrics, OffsetCase, OffsetModel, SolverConfig,
    SteadyStateCycle, TICKS_PER_MS, derive_params,
)
from .operators import HeartbeatKernel, hb_step
from .steady_state import grid_ticks, solve_steady_state

TRUNCATION_FLAG = "series truncated early"
NOT_CONVERGED_FLAG = "steady state not converged"
CLAMPED_FLAG = "negative variance clamped"

# Residual mass at cutoff above which a latency series is reported as truncated
TRUNCATION_REPORT_TOL = 1e-6


def mdr(Q):
    """
    Message delivery ratio of a cycle in percent.

    Params:
        Q (SteadyStateCycle): Steady-state cycle.

    Returns:
        float: 100 times the mean probability of nothing unacked right after a publish.
    """
    if not Q.converged:
        info_logger.info("mdr computed on an unconverged cycle")
    value = 100.0 * float(np.mean([d[0] for d in Q.dists]))
    return min(max(value, 0.0), 100.0)


def _case2_tc(s, e, h):
    # Mean lag to the next heartbeat for publish lags spread over [s, e), wrapping at h
    if e >= s:
        return (e + s) / 2
    return ((h * h - s * s) / 2 + e * e / 2) / ((h - s) + e)


def _case3_pattern(rt, ht):
    length = 1
    while (length + 1) * ht // rt != length * ht // rt:
        length += 1
    return tuple((l * ht) % rt for l in range(1, length + 1))


def offset_model(sp, Q, cfg=None, kernel=None):
    """
    Mean offset t_c from each publish of the cycle to the heartbeat that serves it.

    Phase n is the publish at (n - 1) * r within one LCM(r, h) period.

    Params:
        sp (ScenarioParams): Scenario the cycle was solved for.
        Q (SteadyStateCycle): Steady-state cycle.
        cfg (SolverConfig): Selects the heartbeat weight used when r > h.
        kernel (HeartbeatKernel): Memoized kernel to reuse.

    Returns:
        OffsetModel: Per-phase offsets in ms.
    """
    cfg = cfg or SolverConfig()
    rt = grid_ticks("r", sp.r)
    ht = grid_ticks("h", sp.h)
    R = Q.period_R

    if rt == ht:
        return OffsetModel(case=OffsetCase.R_EQUALS_H, per_publish_tc_ms=tuple(sp.r / 2 for _ in range(R)))

    if rt < ht:
        tcs = []
        for n in range(1, R + 1):
            s = (-(n - 1) * rt) % ht
            e = (s + rt) % ht
            tcs.append(_case2_tc(s, e, ht) / TICKS_PER_MS)
        return OffsetModel(case=OffsetCase.R_LESS_THAN_H, per_publish_tc_ms=tuple(tcs))

    pattern = _case3_pattern(rt, ht)
    H = math.lcm(rt, ht) // ht - 1
    weight_mode = Case3Weight(cfg.case3_weight)
    if weight_mode is Case3Weight.FULL_CYCLE:
        applications = H
    elif weight_mode is Case3Weight.LITERAL:
        applications = max(H - 1, 0)
    else:
        # at least one heartbeat separates the serving heartbeat from the previous publish
        applications = max(H - 1, 1)
    if kernel is None:
        kernel = HeartbeatKernel(derive_params(sp).cap_M, sp.p)
    tcs = []
    for dist in Q.dists:
        probs = dist.probs
        for _ in range(applications):
            probs = hb_step(probs, kernel)
        weight = float(probs[0])
        total = weight * pattern[0] + sum(pattern[1:])
        tcs.append(total / len(pattern) / TICKS_PER_MS)
    return OffsetModel(
        case=OffsetCase.R_GREATER_THAN_H,
        per_publish_tc_ms=tuple(tcs),
        pattern=tuple(d / TICKS_PER_MS for d in pattern),
        weight_index=H,
    )


@dataclass(frozen=True)
class PhaseLatency:
    """
    Moments of the latency of a message published in one phase.

    Attributes:
        mean (float): Expected latency in ms.
        second_moment (float): Expected squared latency in ms^2.
        residual (float): Unacked mass left when the series stopped.
        terms (int): Heartbeats applied.
        truncated (bool): Whether the residual exceeded the reporting tolerance.
    """
    mean: float
    second_moment: float
    residual: float
    terms: int
    truncated: bool = False


def phase_latency_moments(P, tc, h, cap_M, p, cfg=None, kernel=None):
    """
    Heartbeat series for one phase distribution.

    The v-th heartbeat after the publish clears Hb^v(P)[0] - Hb^(v-1)(P)[0] of the mass,
    and those messages waited (v - 1) * h + tc.

    Params:
        P (UnackedDistribution): Post-publish distribution of the phase.
        tc (float): Offset to the first serving heartbeat in ms.
        h (float): Heartbeat period in ms.
        cap_M (int): Messages per retransmission packet.
        p (float): Per-packet delivery probability.
        cfg (SolverConfig): Series tolerance and length cap.
        kernel (HeartbeatKernel): Memoized kernel to reuse.

    Returns:
        PhaseLatency: Mean, second moment and truncation diagnostics.
    """
    cfg = cfg or SolverConfig()
    if kernel is None:
        kernel = HeartbeatKernel(cap_M, p)
    probs = P.probs
    cleared = float(probs[0])
    mean = 0.0
    second = 0.0
    residual = float(probs[1:].sum())
    v = 0
    wait = tc
    while residual >= cfg.series_tail_tol and v < cfg.series_max_v:
        v += 1
        wait = (v - 1) * h + tc
        probs = hb_step(probs, kernel)
        now_cleared = float(probs[0])
        weight = now_cleared - cleared
        cleared = now_cleared
        mean += weight * wait
        second += weight * wait * wait
        residual = float(probs[1:].sum())
    if residual > 0:
        mean += residual * wait
        second += residual * wait * wait
    truncated = residual > TRUNCATION_REPORT_TOL
    if truncated:
        error_logger.error(f"latency series stopped after {v} heartbeats with residual {residual:.3e}")
    return PhaseLatency(mean=mean, second_moment=second, residual=residual, terms=v, truncated=truncated)


def phase_latency(P, tc, h, cap_M, p, cfg=None, kernel=None):
    """
    Expected latency in ms of a message published in the phase with distribution P.
    """
    return phase_latency_moments(P, tc, h, cap_M, p, cfg, kernel).mean


@dataclass(frozen=True)
class LatencyAggregate:
    avg_latency_ms: float
    phases: Tuple[PhaseLatency, ...]
    flags: Tuple[str, ...] = ()


def aggregate_latency(Q, offsets, sp, cfg=None, kernel=None):
    """
    Average of the phase latencies over the cycle.

    Params:
        Q (SteadyStateCycle): Steady-state cycle.
        offsets (OffsetModel): Offsets aligned with Q.
        sp (ScenarioParams): Scenario the cycle was solved for.
        cfg (SolverConfig): Series settings.
        kernel (HeartbeatKernel): Memoized kernel to reuse.

    Returns:
        LatencyAggregate: Mean latency, the per-phase moments and any truncation flag.
    """
    cfg = cfg or SolverConfig()
    if len(offsets.per_publish_tc_ms) != len(Q.dists):
        raise ValueError("offsets are not aligned with the cycle")
    cap_M = derive_params(sp).cap_M
    if kernel is None:
        kernel = HeartbeatKernel(cap_M, sp.p)
    phases = tuple(
        phase_latency_moments(P, tc, sp.h, cap_M, sp.p, cfg, kernel)
        for P, tc in zip(Q.dists, offsets.per_publish_tc_ms)
    )
    flags = (TRUNCATION_FLAG,) if any(ph.truncated for ph in phases) else ()
    avg = float(np.mean([ph.mean for ph in phases]))
    return LatencyAggregate(avg_latency_ms=max(avg, 0.0), phases=phases, flags=flags)


def jitter(Q, offsets, sp, cfg=None, aggregate=None, kernel=None):
    """
    Standard deviation of the message latency over the cycle.

    Params:
        Q (SteadyStateCycle): Steady-state cycle.
        offsets (OffsetModel): Offsets aligned with Q.
        sp (ScenarioParams): Scenario the cycle was solved for.
        cfg (SolverConfig): jitter_mode picks per-message second moments or phase means only.
        aggregate (LatencyAggregate): Result of aggregate_latency to reuse.
        kernel (HeartbeatKernel): Memoized kernel to reuse.

    Returns:
        tuple: (jitter in ms, flags)
    """
    cfg = cfg or SolverConfig()
    if aggregate is None:
        aggregate = aggregate_latency(Q, offsets, sp, cfg, kernel)
    mean = aggregate.avg_latency_ms
    if JitterMode(cfg.jitter_mode) is JitterMode.PHASE_MEAN:
        second = float(np.mean([ph.mean ** 2 for ph in aggregate.phases]))
    else:
        second = float(np.mean([ph.second_moment for ph in aggregate.phases]))
    variance = second - mean * mean
    flags = aggregate.flags
    if variance < 0:
        if variance < -1e-9 * max(1.0, second):
            info_logger.info(f"{sp.label()}: negative variance {variance:.3e} clamped to 0")
            flags = flags + (CLAMPED_FLAG,)
        variance = 0.0
    return math.sqrt(variance), flags


@dataclass(frozen=True)
class Analysis:
    """
    Everything the analytic engine computed for one scenario.
    """
    sp: object
    metrics: LatencyMetrics
    cycle: SteadyStateCycle
    offsets: OffsetModel
    phases: Tuple[PhaseLatency, ...] = field(default=())

    def diagnostics(self):
        return {
            "R": self.cycle.period_R,
            "converged": self.cycle.converged,
            "cycles_used": self.cycle.cycles_used,
            "final_distance": self.cycle.final_distance,
            "k_max": self.cycle.k_max,
            "support": self.cycle.support,
            "tail_mass": self.cycle.tail_mass,
            "series_terms": max((ph.terms for ph in self.phases), default=0),
            "flags": ";".join(self.metrics.flags),
        }


def analyze(sp, cfg=None):
    """
    Solve the steady state and compute MDR, average latency and jitter.

    Params:
        sp (ScenarioParams): Scenario to evaluate.
        cfg (SolverConfig): Solver settings, defaults if omitted.

    Returns:
        Analysis: Metrics plus the cycle, offsets and per-phase series they came from.
    """
    cfg = cfg or SolverConfig()
    Q = solve_steady_state(sp, cfg)
    kernel = HeartbeatKernel(derive_params(sp).cap_M, sp.p)
    offsets = offset_model(sp, Q, cfg, kernel)
    aggregate = aggregate_latency(Q, offsets, sp, cfg, kernel)
    jit, flags = jitter(Q, offsets, sp, cfg, aggregate, kernel)
    if not Q.converged:
        flags = (NOT_CONVERGED_FLAG,) + flags
    delivery = mdr(Q)
    latency = aggregate.avg_latency_ms
    if delivery == 100.0:
        latency, jit = 0.0, 0.0
    metrics = LatencyMetrics(mdr_pct=delivery, avg_latency_ms=latency, jitter_ms=jit, flags=flags)
    info_logger.info(
        f"{sp.label()}: mdr={delivery:.4f} latency={latency:.4f} jitter={jit:.4f}"
    )
    return Analysis(sp=sp, metrics=metrics, cycle=Q, offsets=offsets, phases=aggregate.phases)

"""
Steady-state solver: walks the publish/heartbeat timeline from an empty queue until the
post-publish distributions repeat with period R = LCM(r, h) / r.
"""
import math

import numpy as np

from logger import info_logger, error_logger
from .errors import CycleMismatchError, IncommensurableError
from .model import (
    TICKS_PER_MS, Event, EventKind, EventTimeline, SolverConfig, SteadyStateCycle, TimelineMode,
    UnackedDistribution, derive_params, to_ticks,
)
from .operators import HeartbeatKernel, fail_row, hb_step


def grid_ticks(name, value_ms):
    ticks = to_ticks(value_ms)
    if ticks is None or ticks <= 0:
        raise IncommensurableError(f"{name}={value_ms!r} ms is not on the {1 / TICKS_PER_MS:g} ms grid")
    return ticks


def period_R(r, h):
    """
    Number of publishes in one repeating period of the event pattern.

    Params:
        r (float): Publish period in ms.
        h (float): Heartbeat period in ms.

    Returns:
        int: LCM(r, h) / r on the integerized time grid.
    """
    rt = grid_ticks("r", r)
    ht = grid_ticks("h", h)
    return math.lcm(rt, ht) // rt


def heartbeat_ticks(sp, mode):
    """
    Heartbeat period in ticks for the given timeline mode.
    """
    ht = grid_ticks("h", sp.h)
    if TimelineMode(mode) is TimelineMode.DRIFTED:
        extra = to_ticks(sp.hb_extra_ms)
        if extra is None:
            raise IncommensurableError(f"hb_extra_ms={sp.hb_extra_ms!r} is not on the time grid")
        ht += extra
    return ht


def iter_events(sp, mode=TimelineMode.NOMINAL):
    """
    Endless merged stream of (tick, EventKind), publishes first on equal ticks.
    """
    rt = grid_ticks("r", sp.r)
    ht = heartbeat_ticks(sp, mode)
    next_pub, next_hb = 0, 0
    while True:
        if next_pub <= next_hb:
            yield next_pub, EventKind.PUBLISH
            next_pub += rt
        else:
            yield next_hb, EventKind.HEARTBEAT
            next_hb += ht


def build_timeline(sp, cfg, horizon_ms):
    """
    Every publish and heartbeat up to and including horizon_ms.

    Params:
        sp (ScenarioParams): Scenario providing r, h and the heartbeat inflation.
        cfg (SolverConfig): Chooses nominal or drifted heartbeats.
        horizon_ms (float): Last instant included.

    Returns:
        EventTimeline: Events in time order.
    """
    horizon = math.floor(horizon_ms * TICKS_PER_MS + 1e-6)
    events = []
    for tick, kind in iter_events(sp, cfg.timeline_mode):
        if tick > horizon:
            break
        events.append(Event(time_ms=tick / TICKS_PER_MS, kind=kind))
    return EventTimeline(events=tuple(events), horizon_ms=horizon_ms)


def cycle_distance(Qa, Qb):
    """
    L-infinity distance between two cycles, shorter distributions padded with zeros.

    Params:
        Qa (SteadyStateCycle): First cycle.
        Qb (SteadyStateCycle): Second cycle.

    Returns:
        float: Largest absolute difference over phases and counts.
    """
    if Qa.period_R != Qb.period_R or len(Qa.dists) != len(Qb.dists):
        raise CycleMismatchError(
            f"cycle length mismatch: {len(Qa.dists)} vs {len(Qb.dists)} phases"
        )
    distance = 0.0
    for a, b in zip(Qa.dists, Qb.dists):
        size = max(len(a), len(b))
        distance = max(distance, float(np.max(np.abs(a.padded(size) - b.padded(size)))))
    return distance


class CycleWalker:
    """
    Applies the timeline events to a running distribution, one steady-state cycle at a time.

    Attributes:
        period (int): Publishes per cycle.
        k_max (int): Current truncation bound, grown by doubling while the spill exceeds tail_tol.
        tail_mass (float): Total probability folded into the top bucket so far.
    """

    def __init__(self, sp, cfg):
        self.sp = sp
        self.cfg = cfg
        derived = derive_params(sp)
        self.u = derived.u
        self.cap_M = derived.cap_M
        self.period = period_R(sp.r, sp.h)
        self.k_max = min(max(cfg.kmax_floor, math.ceil(10 * self.u)), cfg.kmax_cap)
        self.tail_mass = 0.0
        self.kernel = HeartbeatKernel(self.cap_M, sp.p)
        self._pub_kernel = fail_row(self.u, sp.p)
        self._events = iter_events(sp, cfg.timeline_mode)
        self._probs = np.ones(1)

    def _fold(self, probs):
        while probs.size > self.k_max + 1:
            spill = float(probs[self.k_max + 1:].sum())
            if spill <= self.cfg.tail_tol:
                break
            if self.k_max >= self.cfg.kmax_cap:
                error_logger.error(
                    f"{self.sp.label()}: k_max cap {self.cfg.kmax_cap} reached with spill {spill:.3e}"
                )
                break
            self.k_max = min(2 * self.k_max, self.cfg.kmax_cap)
            info_logger.info(f"{self.sp.label()}: k_max grown to {self.k_max}")
        if probs.size > self.k_max + 1:
            spill = float(probs[self.k_max + 1:].sum())
            probs = probs[:self.k_max + 1].copy()
            probs[self.k_max] += spill
            self.tail_mass += spill
        return probs

    def next_cycle(self):
        """
        Walk events until R more publishes have happened.

        Returns:
            tuple of UnackedDistribution: The post-publish snapshots of this cycle.
        """
        snapshots = []
        while len(snapshots) < self.period:
            _, kind = next(self._events)
            if kind is EventKind.PUBLISH:
                self._probs = self._fold(np.convolve(self._probs, self._pub_kernel))
                snapshots.append(UnackedDistribution(self._probs, tail_mass=self.tail_mass))
            else:
                self._probs = hb_step(self._probs, self.kernel)
        return tuple(snapshots)


def solve_steady_state(sp, cfg=None, walker=None):
    """
    Iterate whole cycles from the empty state until two consecutive cycles agree within epsilon.

    Params:
        sp (ScenarioParams): A valid scenario.
        cfg (SolverConfig): Tolerances and caps, defaults if omitted.
        walker (CycleWalker): Walker to drive, a fresh one if omitted.

    Returns:
        SteadyStateCycle: The last cycle, flagged unconverged when max_cycles ran out.
    """
    cfg = cfg or SolverConfig()
    sp.ensure_valid()
    walker = walker or CycleWalker(sp, cfg)
    R = walker.period
    previous = SteadyStateCycle(dists=tuple(UnackedDistribution.delta(0) for _ in range(R)), period_R=R)

    converged = False
    distance = math.inf
    cycles = 0
    while cycles < cfg.max_cycles:
        current = SteadyStateCycle(dists=walker.next_cycle(), period_R=R)
        cycles += 1
        distance = cycle_distance(current, previous)
        previous = current
        if distance < cfg.epsilon:
            converged = True
            break

    if converged:
        info_logger.info(
            f"{sp.label()}: steady state R={R} after {cycles} cycles, k_max={walker.k_max}, tail={walker.tail_mass:.2e}"
        )
    else:
        error_logger.error(f"{sp.label()}: no steady state after {cycles} cycles, distance {distance:.3e}")
    return SteadyStateCycle(
        dists=previous.dists,
        period_R=R,
        converged=converged,
        cycles_used=cycles,
        final_distance=distance,
        k_max=walker.k_max,
    )

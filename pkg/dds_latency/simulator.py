"""
Seeded discrete-event simulation of the heartbeat/AckNack reliability loop.

Propagation is instantaneous, so every delay is a whole number of heartbeat ticks after
the first tick that follows the publish. Each packet is lost independently with probability 1 - p.
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import simpy

from config import Config
from logger import info_logger
from .errors import ModelError
from .model import LatencyMetrics, derive_params


@dataclass(frozen=True)
class SimConfig:
    """
    Run settings of one simulation.

    Attributes:
        n_messages (int): ROS messages published.
        seed (int): Root seed of the random stream.
        scenario_index (int): Stream index, so every scenario of a sweep draws from its own stream.
        drain (bool): Keep the heartbeat loop running after the last publish until everything is acked.
        record_delays (bool): Keep the per-message delays in the result.
        record_trace (bool): Keep the (time, event, pending) trace.
        in_order (bool): Deliver messages to the reader in sequence order.
        zero_delay_ms (float): Delays up to this value count as zero in latency and jitter.
    """
    n_messages: int = Config.DEFAULT_MESSAGES
    seed: int = Config.DEFAULT_SEED
    scenario_index: int = 0
    drain: bool = True
    record_delays: bool = True
    record_trace: bool = False
    in_order: bool = True
    zero_delay_ms: float = 3.0

    def __post_init__(self):
        if self.n_messages < 1:
            raise ValueError("n_messages must be at least 1")
        if self.zero_delay_ms < 0:
            raise ValueError("zero_delay_ms must be non-negative")


@dataclass(frozen=True, eq=False)
class SimResult:
    """
    Outcome of one simulation.

    Attributes:
        delays_ms (numpy.ndarray): Delay of every delivered message, publish order.
        metrics (LatencyMetrics): Empirical MDR, mean and standard deviation of the delays.
        undelivered (int): Messages not delivered when the run stopped.
        trace (tuple): (time_ms, event, pending) records when tracing was on.
    """
    delays_ms: np.ndarray
    metrics: LatencyMetrics
    undelivered: int = 0
    trace: Tuple[Tuple[float, str, int], ...] = field(default=(), compare=False)


def make_rng(seed, scenario_index=0):
    """
    PCG64 generator for one scenario, split from the root seed by scenario index.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(scenario_index,)))


class Subscriber:
    """
    Reader side: which fragments of which messages are still missing, and when each message became complete.
    """

    def __init__(self, env, n_messages):
        self.env = env
        self.missing = {}
        self.complete_at = [None] * n_messages

    def receive_publish(self, seq, lost_fragments):
        if lost_fragments:
            self.missing[seq] = set(lost_fragments)
        else:
            self.complete_at[seq] = self.env.now

    def receive_unit(self, unit):
        seq, frag = unit
        fragments = self.missing.get(seq)
        if fragments is None:
            return
        fragments.discard(frag)
        if not fragments:
            del self.missing[seq]
            self.complete_at[seq] = self.env.now

    def nack_list(self):
        return sorted((seq, frag) for seq, frags in self.missing.items() for frag in frags)


class Publisher:
    """
    Writer side: publishes every r, runs the heartbeat timer and answers AckNacks with retransmissions.

    The timer ticks every h + hb_extra_ms. A tick with nothing unacknowledged stops it without
    sending a heartbeat, and the next publish restarts it one period later.
    """

    def __init__(self, env, sp, sc, rng, subscriber):
        self.env = env
        self.sp = sp
        self.sc = sc
        self.rng = rng
        self.subscriber = subscriber
        derived = derive_params(sp)
        self.u = derived.u
        self.cap_M = derived.cap_M
        self.period = sp.hb_period_ms
        self.unacked = set()
        self.timer_running = False
        self.trace = []

    def _log(self, event):
        if self.sc.record_trace:
            self.trace.append((float(self.env.now), event, len(self.unacked)))

    def _lost(self, count):
        return self.rng.random(count) >= self.sp.p

    def run(self):
        for seq in range(self.sc.n_messages):
            self.publish(seq)
            yield self.env.timeout(self.sp.r)

    def publish(self, seq):
        lost = self._lost(self.u)
        self.subscriber.receive_publish(seq, [frag for frag in range(self.u) if lost[frag]])
        self.unacked.update((seq, frag) for frag in range(self.u))
        self._log("publish")
        if not self.timer_running:
            self.timer_running = True
            self._log("timer_start")
            self.env.process(self.heartbeat_timer())

    def heartbeat_timer(self):
        while True:
            yield self.env.timeout(self.period)
            if not self.unacked:
                self.timer_running = False
                self._log("timer_stop")
                return
            self.heartbeat()

    def heartbeat(self):
        self._log("heartbeat")
        if self._lost(1)[0]:
            return
        nacks = self.subscriber.nack_list()
        if self._lost(1)[0]:
            return
        self.unacked = set(nacks)
        self._log("acknack")
        self.retransmit(nacks)

    def retransmit(self, nacks):
        if not nacks:
            return
        packets = [nacks[i:i + self.cap_M] for i in range(0, len(nacks), self.cap_M)]
        lost = self._lost(len(packets))
        for packet, dropped in zip(packets, lost):
            if dropped:
                continue
            for unit in packet:
                self.subscriber.receive_unit(unit)
        self._log("retransmit")


def _delivery_times(complete_at, publish_times, in_order):
    delivered = []
    latest = -np.inf
    for done, published in zip(complete_at, publish_times):
        if done is None:
            if in_order:
                break
            delivered.append(None)
            continue
        latest = max(latest, done) if in_order else done
        delivered.append(latest - published)
    return delivered


def empirical_metrics(delays, zero_delay_ms=3.0):
    """
    MDR, mean and population standard deviation of measured delays.

    MDR counts the messages delivered by their first transmission, whose delay is exactly zero.
    A repair landing within zero_delay_ms of the publish is not counted as delivered, but its
    delay is taken as zero for the mean and the standard deviation.

    Params:
        delays (sequence of float): Per-message delays in ms.
        zero_delay_ms (float): Delays up to this value count as zero for latency and jitter.

    Returns:
        LatencyMetrics: Empirical triple.
    """
    values = np.asarray(delays, dtype=float)
    if values.size == 0:
        raise ModelError("no delays to summarize")
    mdr = 100.0 * np.count_nonzero(values == 0.0) / values.size
    values = np.where(values <= zero_delay_ms, 0.0, values)
    return LatencyMetrics(mdr_pct=float(mdr), avg_latency_ms=float(values.mean()), jitter_ms=float(values.std()))


def run_sim(sp, sc=None):
    """
    Simulate n_messages publishes of one scenario.

    Params:
        sp (ScenarioParams): Scenario to simulate.
        sc (SimConfig): Run settings, defaults if omitted.

    Returns:
        SimResult: Delays, empirical metrics and undelivered count.
    """
    sc = sc or SimConfig()
    sp.ensure_valid()
    env = simpy.Environment()
    rng = make_rng(sc.seed, sc.scenario_index)
    subscriber = Subscriber(env, sc.n_messages)
    publisher = Publisher(env, sp, sc, rng, subscriber)
    env.process(publisher.run())
    if sc.drain:
        env.run()
    else:
        env.run(until=sc.n_messages * sp.r)

    publish_times = [seq * sp.r for seq in range(sc.n_messages)]
    delivered = _delivery_times(subscriber.complete_at, publish_times, sc.in_order)
    delays = np.array([d for d in delivered if d is not None], dtype=float)
    undelivered = sc.n_messages - delays.size
    if delays.size:
        metrics = empirical_metrics(delays, sc.zero_delay_ms)
    else:
        metrics = LatencyMetrics(mdr_pct=0.0, avg_latency_ms=0.0, jitter_ms=0.0, flags=("nothing delivered",))
    if undelivered:
        metrics = LatencyMetrics(
            mdr_pct=metrics.mdr_pct, avg_latency_ms=metrics.avg_latency_ms, jitter_ms=metrics.jitter_ms,
            flags=metrics.flags + (f"{undelivered} undelivered",),
        )
    info_logger.info(
        f"simulated {sp.label()} n={sc.n_messages} seed={sc.seed}/{sc.scenario_index}: "
        f"mdr={metrics.mdr_pct:.2f} latency={metrics.avg_latency_ms:.3f} jitter={metrics.jitter_ms:.3f}"
    )
    delays.setflags(write=False)
    return SimResult(
        delays_ms=delays if sc.record_delays else np.empty(0),
        metrics=metrics,
        undelivered=int(undelivered),
        trace=tuple(publisher.trace),
    )


def write_trace(result, path, sp, sc):
    """
    Write one delay per line in ms under a comment header naming the scenario and seed.
    """
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"# {sp.label()} seed={sc.seed} scenario_index={sc.scenario_index} n={sc.n_messages}\n")
        for delay in result.delays_ms:
            handle.write(f"{delay:.6f}\n")
    info_logger.info(f"delay trace written to {path}")

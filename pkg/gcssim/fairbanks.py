# fairbanks.py
"""
Digital Fairbanks clock generation net used as a baseline.

Adjacent nodes alternate between pull-up (NOR of the incident latches)
and pull-down (AND of the incident latches). Every edge carries one
set-reset latch. A pull-up output rising sets its latches, a pull-down
output rising resets them, each after the edge delay plus the latch delay.
A node ticks when a pull-up output falls or a pull-down output rises.
All delays are integer abstract units.
"""

from dataclasses import dataclass, field
from enum import IntEnum

import networkx as nx

from .config import (
    FAIRBANKS_GATE_DELAY, FAIRBANKS_LATCH_DELAY, FAIRBANKS_FAST_EDGE, FAIRBANKS_SLOW_EDGE,
    FAIRBANKS_UNIT_FS, FAIRBANKS_LINE_LENGTH, FAIRBANKS_FAST_SOURCES, FAIRBANKS_SWAP_SOURCES,
    FAIRBANKS_HORIZON_TICKS,
)
from .errors import ConfigError, DeadlockDetected
from .logger import get_logger
from .params import Topology
from .scheduler import EventQueue

logger = get_logger(__name__)

# ticks skipped before skews are measured
SETTLE_TICKS = 10


class LatchEvent(IntEnum):
    """Same-timestamp order: resets before sets (set wins), gate evaluation last."""
    RESET = 0
    SET = 1
    OUTPUT = 2
    EVAL = 3


@dataclass(frozen=True)
class DelayPattern:
    """
    Edge delay by source node: `fast` out of `fast_sources`, `slow` otherwise.
    Every time in `swap_times` toggles the `swap_sources` between the two.
    """
    fast_sources: tuple = ()
    fast: int = FAIRBANKS_FAST_EDGE
    slow: int = FAIRBANKS_SLOW_EDGE
    swap_sources: tuple = ()
    swap_times: tuple = ()
    name: str = "custom"

    def is_fast(self, src: int, t: int) -> bool:
        fast = src in self.fast_sources
        if src in self.swap_sources:
            flips = sum(1 for s in self.swap_times if s <= t)
            fast ^= flips % 2 == 1
        return fast

    def delay(self, src: int, dst: int, t: int) -> int:
        return self.fast if self.is_fast(src, t) else self.slow

    @classmethod
    def uniform(cls, delay: int, name: str = "uniform") -> "DelayPattern":
        return cls(fast_sources=(), fast=delay, slow=delay, name=name)

    @classmethod
    def nocap(cls) -> "DelayPattern":
        return cls.uniform(FAIRBANKS_FAST_EDGE, "nocap")

    @classmethod
    def fullcap(cls) -> "DelayPattern":
        return cls.uniform(FAIRBANKS_SLOW_EDGE, "fullcap")

    @classmethod
    def large_local(cls) -> "DelayPattern":
        return cls(fast_sources=FAIRBANKS_FAST_SOURCES, name="large-local")

    def with_swaps(self, swap_times, swap_sources=FAIRBANKS_SWAP_SOURCES) -> "DelayPattern":
        return DelayPattern(self.fast_sources, self.fast, self.slow, tuple(swap_sources),
                            tuple(sorted(swap_times)), f"{self.name}+swap")


DELAY_SETUPS = {
    "nocap": DelayPattern.nocap,
    "fullcap": DelayPattern.fullcap,
    "large-local": DelayPattern.large_local,
}


@dataclass
class FairbanksNet:
    topology: Topology
    pull_up: dict
    gate_delay: int = FAIRBANKS_GATE_DELAY
    latch_delay: int = FAIRBANKS_LATCH_DELAY
    latches: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    pending: dict = field(default_factory=dict)
    ticks: dict = field(default_factory=dict)
    queue: EventQueue = field(default_factory=EventQueue)
    last_reset: dict = field(default_factory=dict)
    races: int = 0

    @classmethod
    def build(cls, topology: Topology, gate_delay: int = FAIRBANKS_GATE_DELAY,
              latch_delay: int = FAIRBANKS_LATCH_DELAY) -> "FairbanksNet":
        """
        Alternate node types along a 2-coloring, node 0 a pull-up. Latches
        start reset and every pull-up is evaluated at t=0.

        Raises:
            ConfigError: the graph is not bipartite, so types cannot alternate
        """
        graph = topology.graph
        if not nx.is_bipartite(graph):
            raise ConfigError("a Fairbanks net needs a bipartite graph", key="topology.kind")
        depth = nx.single_source_shortest_path_length(graph, 0)
        pull_up = {v: depth[v] % 2 == 0 for v in graph.nodes}
        net = cls(topology, pull_up, gate_delay, latch_delay)
        net.latches = {edge: False for edge in topology.edge_list}
        net.outputs = {v: False for v in graph.nodes}
        net.ticks = {v: [] for v in graph.nodes}
        for v in sorted(graph.nodes):
            if pull_up[v]:
                net.queue.schedule(0, LatchEvent.EVAL, v)
        return net

    def incident(self, v: int) -> list:
        return [(min(v, w), max(v, w)) for w in self.topology.neighbors(v)]

    def target(self, v: int) -> bool:
        states = [self.latches[e] for e in self.incident(v)]
        if self.pull_up[v]:
            return not any(states)
        return all(states)

    def tick_count(self) -> int:
        return min(len(t) for t in self.ticks.values())


def _evaluate(net: FairbanksNet, v: int, now: int):
    target = net.target(v)
    pending = net.pending.get(v)
    expected = pending[1] if pending else net.outputs[v]
    if target == expected:
        return
    if pending and target == net.outputs[v]:
        # pulse shorter than the gate delay is swallowed
        del net.pending[v]
        return
    version = (pending[0] + 1) if pending else 1
    net.pending[v] = (version, target)
    net.queue.schedule(now + net.gate_delay, LatchEvent.OUTPUT, v, (version, target))


def _apply_output(net: FairbanksNet, v: int, now: int, payload, delays: DelayPattern):
    version, value = payload
    pending = net.pending.get(v)
    if pending is None or pending[0] != version:
        return
    del net.pending[v]
    net.outputs[v] = value
    if net.pull_up[v] != value:
        net.ticks[v].append(now)
    if not value:
        return
    kind = LatchEvent.SET if net.pull_up[v] else LatchEvent.RESET
    for w in net.topology.neighbors(v):
        at = now + delays.delay(v, w, now) + net.latch_delay
        net.queue.schedule(at, kind, (min(v, w), max(v, w)))


def _apply_latch(net: FairbanksNet, edge, now: int, value: bool):
    if value and net.last_reset.get(edge) == now:
        net.races += 1
        logger.warning("set and reset reach latch %s together at t=%s; set wins", edge, now)
    if not value:
        net.last_reset[edge] = now
    if net.latches[edge] == value:
        return
    net.latches[edge] = value
    for v in edge:
        net.queue.schedule(now, LatchEvent.EVAL, v)


def fairbanks_step(net: FairbanksNet, now: int, delays: DelayPattern) -> FairbanksNet:
    """
    Apply every event scheduled at `now`.

    Raises:
        DeadlockDetected: nothing is pending, so no output can change again
    """
    if not net.queue.has_pending():
        raise DeadlockDetected(now, "no pending latch or gate event")
    while net.queue.has_pending() and net.queue.peek_time() == now:
        event = net.queue.pop()
        if event.kind is LatchEvent.EVAL:
            _evaluate(net, event.node, now)
        elif event.kind is LatchEvent.OUTPUT:
            _apply_output(net, event.node, now, event.payload, delays)
        else:
            _apply_latch(net, event.node, now, event.kind is LatchEvent.SET)
    return net


@dataclass
class FairbanksRun:
    pattern: str
    ticks: dict
    edges: list = field(default_factory=list)
    unit_fs: int = FAIRBANKS_UNIT_FS
    races: int = 0

    @property
    def tick_count(self) -> int:
        return min(len(t) for t in self.ticks.values())

    def tick_skews(self, start: int = 0, end: int | None = None, edges=None) -> list[tuple[int, int, int]]:
        """(k, local, global) over the k-th ticks of all nodes, in units, for ticks inside [start, end)."""
        edges = edges or self.edges or [(v, v + 1) for v in range(len(self.ticks) - 1)]
        rows = []
        for k in range(self.tick_count):
            row = [self.ticks[v][k] for v in sorted(self.ticks)]
            if min(row) < start or (end is not None and max(row) >= end):
                continue
            local = max(abs(row[u] - row[v]) for u, v in edges)
            rows.append((k, local, max(row) - min(row)))
        return rows

    def local_skew(self, start: int = 0, end: int | None = None, edges=None) -> int:
        return max((r[1] for r in self.tick_skews(start, end, edges) if r[0] >= SETTLE_TICKS), default=0)

    def global_skew(self, start: int = 0, end: int | None = None, edges=None) -> int:
        return max((r[2] for r in self.tick_skews(start, end, edges) if r[0] >= SETTLE_TICKS), default=0)

    def period(self, node: int = 0) -> int:
        ticks = self.ticks[node]
        return ticks[-1] - ticks[-2] if len(ticks) >= 2 else 0

    def to_dict(self) -> dict:
        return {
            "pattern": self.pattern,
            "ticks": self.tick_count,
            "period_ps": self.period() * self.unit_fs / 1000,
            "local_skew_ps": self.local_skew() * self.unit_fs / 1000,
            "global_skew_ps": self.global_skew() * self.unit_fs / 1000,
            "latch_races": self.races,
        }


def run_fairbanks(topology: Topology | None = None, delays: DelayPattern | None = None, *,
                  horizon_ticks: int = FAIRBANKS_HORIZON_TICKS, until: int | None = None,
                  gate_delay: int = FAIRBANKS_GATE_DELAY, latch_delay: int = FAIRBANKS_LATCH_DELAY) -> FairbanksRun:
    """Run until every node ticked `horizon_ticks` times or time `until` (units) passed."""
    topology = topology or Topology.line(FAIRBANKS_LINE_LENGTH)
    delays = delays or DelayPattern.nocap()
    net = FairbanksNet.build(topology, gate_delay, latch_delay)
    while net.tick_count() < horizon_ticks:
        now = net.queue.peek_time()
        if now is None:
            raise DeadlockDetected(net.queue.now, f"after {net.tick_count()} ticks")
        if until is not None and now > until:
            break
        fairbanks_step(net, now, delays)
    logger.debug("Fairbanks %s: %s ticks, %s latch races", delays.name, net.tick_count(), net.races)
    return FairbanksRun(delays.name, net.ticks, topology.edge_list, races=net.races)


@dataclass(frozen=True)
class SwapResult:
    swap_times: tuple
    pre_global: int
    post_local: int
    window_local: tuple
    run: FairbanksRun

    @property
    def ratio(self) -> float:
        return self.post_local / self.pre_global if self.pre_global else 0.0

    def to_dict(self) -> dict:
        unit = self.run.unit_fs / 1000
        return {
            "swap_times_fs": [t * self.run.unit_fs for t in self.swap_times],
            "pre_swap_global_ps": self.pre_global * unit,
            "post_swap_local_ps": self.post_local * unit,
            "window_local_ps": [x * unit for x in self.window_local],
            "ratio": round(self.ratio, 6),
            "baseline": self.run.to_dict(),
        }


def fairbanks_swap_experiment(swap_time, topology: Topology | None = None, base: DelayPattern | None = None, *,
                              unit_fs: int = FAIRBANKS_UNIT_FS) -> SwapResult:
    """
    Run the large-local pattern, swap the links out of the swap sources at
    `swap_time` (fs; a sequence for repeated swaps) and compare the
    pre-swap global skew with the local skew right after each swap.
    """
    times = tuple(swap_time) if isinstance(swap_time, (list, tuple)) else (swap_time,)
    units = tuple(t // unit_fs for t in times)
    base = base or DelayPattern.large_local()
    pattern = base.with_swaps(units)
    window = units[0] if len(units) == 1 else units[1] - units[0]
    run = run_fairbanks(topology, pattern, horizon_ticks=10 ** 9, until=units[-1] + window)
    run.unit_fs = unit_fs

    pre_global = run.global_skew(0, units[0])
    bounds = list(units) + [units[-1] + window]
    window_local = tuple(run.local_skew(bounds[i], bounds[i + 1]) for i in range(len(units)))
    return SwapResult(times, pre_global, window_local[0], window_local, run)


def fairbanks_comparison(scenario) -> dict:
    """Baseline numbers under the delay pattern of a GCS comparison scenario."""
    swaps = tuple(t for t, label in scenario.markers if label == "swap")
    if swaps:
        return fairbanks_swap_experiment(swaps).to_dict()
    until = scenario.duration // FAIRBANKS_UNIT_FS
    return run_fairbanks(delays=DelayPattern.large_local(), horizon_ticks=10 ** 9, until=until).to_dict()


__all__ = [
    'LatchEvent', 'DelayPattern', 'DELAY_SETUPS', 'FairbanksNet', 'fairbanks_step',
    'FairbanksRun', 'run_fairbanks', 'SwapResult', 'fairbanks_swap_experiment', 'fairbanks_comparison',
    'SETTLE_TICKS'
]

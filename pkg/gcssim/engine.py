# engine.py
"""
Event-exact simulation of clocked gradient clock synchronization.

Every state change happens at an integer femtosecond: rising clock edges,
word availability and md updates from the pipeline, oscillator lock after
T_osc, hardware drift breakpoints and trace records. Between events all
clocks are linear, so nothing is integrated numerically and two runs of
the same scenario produce identical traces.
"""

import hashlib
import random
from dataclasses import dataclass, field, replace
from decimal import Decimal
from fractions import Fraction
from math import floor

from .clocks import (
    RateSchedule, ClockState, ModeHistory, PhaseHistory, advance, make_unlocked_policy, oscillator_rate_bounds,
)
from .config import (
    DEFAULT_DURATION, DEFAULT_RECORD_STRIDE, DEFAULT_DELTA0_POLICY, DEFAULT_M_POLICY,
    DEFAULT_UNLOCKED_POLICY, DEFAULT_MONITOR, DELTA0_POLICIES, M_POLICIES,
    UNLOCKED_POLICIES, RANDOM_POLICIES, MONITOR_MODES, PHASE_DECIMALS,
)
from .errors import ConfigError, InvariantViolation
from .kleene import Tri
from .logger import get_logger
from .logic import OffsetView, fast_condition, slow_condition
from .params import SystemParams, Topology, ValidatedParams, link_error_bound, validate_params
from .pipeline import (
    PipelineConfig, PipelineState, ThresholdWord, controller_extremes, make_m_policy, step_pipeline,
)
from .scheduler import EventKind, EventQueue
from .utils import fixed, quantize

logger = get_logger(__name__)


@dataclass(frozen=True)
class DelaySchedule:
    """Piecewise-constant propagation delay of one directed link as (start_time, delay) pairs."""
    breakpoints: tuple = ((0, 0),)

    def __post_init__(self):
        points = sorted((int(t), int(d)) for t, d in self.breakpoints)
        if not points or points[0][0] != 0:
            raise ConfigError("a delay schedule must start at t=0", key="scenario.delays")
        object.__setattr__(self, "breakpoints", tuple(points))

    @classmethod
    def constant(cls, delay: int) -> "DelaySchedule":
        return cls(((0, delay),))

    def delay_at(self, t: int) -> int:
        current = self.breakpoints[0][1]
        for start, delay in self.breakpoints:
            if start > t:
                break
            current = delay
        return current

    @property
    def values(self) -> list[int]:
        return [d for _, d in self.breakpoints]


@dataclass(frozen=True)
class Scenario:
    name: str
    topology: Topology
    params: SystemParams = field(default_factory=SystemParams)
    initial_phases: tuple = ()
    drift: tuple = ()
    delays: tuple = ()
    delta0_policy: str = DEFAULT_DELTA0_POLICY
    delta0_offsets: tuple = ()
    m_policy: str = DEFAULT_M_POLICY
    unlocked_policy: str = DEFAULT_UNLOCKED_POLICY
    duration: int = DEFAULT_DURATION
    record_stride: int = DEFAULT_RECORD_STRIDE
    seed: int | None = None
    monitor: str = DEFAULT_MONITOR
    stuck_md: tuple = ()
    strict_delays: bool = True
    markers: tuple = ()
    compare_fairbanks: bool = False
    description: str = ""

    def __post_init__(self):
        n = self.topology.node_count
        if not self.initial_phases:
            object.__setattr__(self, "initial_phases", (0,) * n)
        if not self.drift:
            object.__setattr__(self, "drift", tuple(RateSchedule.constant(1) for _ in range(n)))
        object.__setattr__(self, "initial_phases", tuple(int(x) for x in self.initial_phases))

    def delay_schedule(self, src: int, dst: int) -> DelaySchedule:
        for link, schedule in self.delays:
            if tuple(link) == (src, dst):
                return schedule
        return DelaySchedule.constant(self.params.d)

    def evolve(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class ClockRow:
    time: int
    node: int
    phase: Decimal
    md: Tri


@dataclass(frozen=True)
class HeldEstimate:
    time: int
    node: int
    neighbor: int
    estimate: Fraction
    offset: Fraction


@dataclass(frozen=True)
class WordSample:
    time: int
    node: int
    neighbor: int
    estimate: Fraction
    offset: Fraction
    word: ThresholdWord


@dataclass(frozen=True)
class ControlRecord:
    time: int
    node: int
    gamma_low: Tri
    gamma_high: Tri
    output: Tri

    @property
    def gamma(self) -> Tri:
        return self.gamma_low if self.gamma_low is self.gamma_high else Tri.M


@dataclass(frozen=True)
class TraceEvent:
    time: int
    kind: str
    node: int | None
    detail: str = ""


@dataclass(frozen=True)
class MonitorRecord:
    invariant: str
    time: int
    node: int
    detail: str


@dataclass
class TraceSet:
    scenario: Scenario
    params: ValidatedParams
    small_start: bool
    clocks: list = field(default_factory=list)
    held: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    controls: list = field(default_factory=list)
    events: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    modes: dict = field(default_factory=dict)
    phases: dict = field(default_factory=dict)
    completed: bool = False

    @property
    def name(self) -> str:
        return self.scenario.name

    @property
    def topology(self) -> Topology:
        return self.scenario.topology

    @property
    def t_clk(self) -> int:
        return self.params.params.t_clk

    @property
    def record_stride(self) -> int:
        return self.scenario.record_stride

    @property
    def duration(self) -> int:
        return self.scenario.duration

    @property
    def markers(self) -> tuple:
        return self.scenario.markers

    @property
    def bounds(self):
        return self.params.bounds

    def phase_table(self) -> tuple[list[int], list[tuple]]:
        """Record times and, per time, the quantized phase of every node."""
        n = self.topology.node_count
        times, rows = [], []
        for i in range(0, len(self.clocks), n):
            chunk = self.clocks[i:i + n]
            times.append(chunk[0].time)
            rows.append(tuple(r.phase for r in chunk))
        return times, rows

    def canonical_clock_csv(self) -> str:
        lines = ["time_fs,node,L_phase,md"]
        lines += [f"{r.time},{r.node},{fixed(r.phase)},{r.md}" for r in self.clocks]
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_clock_csv().encode("utf-8")).hexdigest()


def check_pipeline_timing(p: SystemParams):
    """
    The mode signal must settle within the configured number of fastest
    clock periods after the edge that sampled it.

    Raises:
        ConfigError: when T_max does not fit
    """
    fastest_period = Fraction(p.t_clk) / p.max_rate
    if p.buffer_stages * fastest_period < p.t_max:
        raise ConfigError(
            f"T_max={p.t_max} fs exceeds {p.buffer_stages} x fastest clock period "
            f"{float(fastest_period):.1f} fs",
            key="params.t_clk",
        )


def static_offsets(scenario: Scenario, vp: ValidatedParams) -> dict:
    """Per directed measurement (v reads w) constant perturbation inside the delta0 budget."""
    p = vp.params
    budget = p.delta0 - link_error_bound(p)
    links = scenario.topology.directed_edges
    if scenario.delta0_policy == "adversarial-extremes":
        return {(v, w): Fraction(-budget) for v, w in links}
    if scenario.delta0_policy == "seeded-random":
        rng = random.Random(f"{scenario.seed}:delta0")
        return {(v, w): Fraction(rng.randint(-budget, budget)) for v, w in links}
    given = {tuple(link): Fraction(value) for link, value in scenario.delta0_offsets}
    for link, value in given.items():
        if abs(value) > budget:
            raise ConfigError(f"offset {value} fs on {link} exceeds the budget {budget} fs",
                              key="scenario.delta0_offsets")
    return {link: given.get(link, Fraction(0)) for link in links}


def validate_scenario(scenario: Scenario) -> tuple[ValidatedParams, bool]:
    """
    Validate everything a run needs. Returns the sealed params and whether
    the initial local skew is below kappa.

    Raises:
        ConstraintViolation: a parameter constraint fails
        ConfigError: anything else about the scenario is inconsistent
    """
    p = scenario.params
    topology = scenario.topology
    n = topology.node_count
    vp = validate_params(p, topology.diameter)
    check_pipeline_timing(p)

    if p.kappa < 2 * vp.delta + p.epsilon:
        raise ConfigError(f"kappa={p.kappa} fs leaves no decision separator: needs >= 2*delta + epsilon "
                          f"= {2 * vp.delta + p.epsilon} fs", key="params.kappa")
    link_error = link_error_bound(p)
    if link_error > p.delta0:
        raise ConfigError(f"delta0={p.delta0} fs is below the link error {link_error} fs of d/U",
                          key="params.delta0")
    if p.u > p.d:
        raise ConfigError("delay uncertainty U exceeds the maximum delay d", key="params.u")

    if len(scenario.initial_phases) != n:
        raise ConfigError(f"{len(scenario.initial_phases)} initial phases for {n} nodes",
                          key="scenario.initial_phases")
    if len(scenario.drift) != n:
        raise ConfigError(f"{len(scenario.drift)} drift schedules for {n} nodes", key="scenario.drift")
    for v, schedule in enumerate(scenario.drift):
        schedule.check(p.rho, node=v)

    links = set(topology.directed_edges)
    for link, schedule in scenario.delays:
        if tuple(link) not in links:
            raise ConfigError(f"delay given for {tuple(link)}, which is not an edge", key="scenario.delays")
        for value in schedule.values:
            if value < 0:
                raise ConfigError("delays must be non-negative", key="scenario.delays")
            if scenario.strict_delays and not p.d - p.u <= value <= p.d:
                raise ConfigError(f"delay {value} fs on {tuple(link)} outside [d-U, d]", key="scenario.delays")

    for name, value, allowed in (
        ("delta0_policy", scenario.delta0_policy, DELTA0_POLICIES),
        ("m_policy", scenario.m_policy, M_POLICIES),
        ("unlocked_policy", scenario.unlocked_policy, UNLOCKED_POLICIES),
        ("monitor", scenario.monitor, MONITOR_MODES),
    ):
        if value not in allowed:
            raise ConfigError(f"{name} must be one of {', '.join(allowed)}", key=f"scenario.{name}")
        if value in RANDOM_POLICIES and name != "monitor" and scenario.seed is None:
            raise ConfigError(f"{name}={value} needs a seed", key="scenario.seed")

    if scenario.duration <= 0 or scenario.record_stride <= 0:
        raise ConfigError("duration and record stride must be positive", key="scenario.duration")
    for node, _ in scenario.stuck_md:
        if not 0 <= node < n:
            raise ConfigError(f"stuck_md names missing node {node}", key="scenario.stuck_md")

    static_offsets(scenario, vp)

    initial_local = max(abs(scenario.initial_phases[u] - scenario.initial_phases[v]) for u, v in topology.edges)
    small_start = initial_local < p.kappa
    if not small_start:
        logger.warning("initial local skew %s fs is not below kappa=%s fs; checking self-stabilization",
                       initial_local, p.kappa)
    return vp, small_start


class _NodeRuntime:
    def __init__(self, node, clock, history, modes, pipeline, oscillator, schedule):
        self.node = node
        self.clock = clock
        self.history = history
        self.modes = modes
        self.pipeline = pipeline
        self.oscillator = oscillator
        self.schedule = schedule
        self.lock_version = 0
        self.edge_level = 0
        self.edge_version = 0
        self.wakeups = set()


class _Simulation:
    def __init__(self, scenario: Scenario, vp: ValidatedParams, small_start: bool):
        self.scenario = scenario
        self.vp = vp
        self.p = vp.params
        self.topology = scenario.topology
        self.queue = EventQueue()
        self.config = PipelineConfig.from_params(vp)
        self.m_policy = make_m_policy(scenario.m_policy, scenario.seed)
        self.unlocked = make_unlocked_policy(scenario.unlocked_policy, scenario.seed)
        self.perturbation = static_offsets(scenario, vp)
        self.center = Fraction(2 * self.p.d - self.p.u, 2)
        self.delays = {link: scenario.delay_schedule(*link) for link in self.topology.directed_edges}
        self.stuck = {node: value for node, value in scenario.stuck_md}
        self.warmup = 2 * (self.p.t_clk + self.p.t_max)
        self.trace = TraceSet(scenario=scenario, params=vp, small_start=small_start)
        self.nodes = [self._init_node(v) for v in range(self.topology.node_count)]

    def _init_node(self, v: int) -> _NodeRuntime:
        logical = Fraction(self.scenario.initial_phases[v])
        oscillator = self.stuck.get(v, Tri.ZERO)
        if oscillator is Tri.ONE:
            factor = 1 + self.p.mu
        elif oscillator is Tri.M:
            factor = self.unlocked.choose(v, Fraction(1), self.p.mu)
        else:
            factor = Fraction(1)
        schedule = self.scenario.drift[v]
        clock = ClockState(0, logical, logical, factor)
        history = PhaseHistory(0, logical, schedule.rate_at(0) * factor)
        modes = ModeHistory(initial=oscillator)
        pipeline = PipelineState(node=v, ell=self.p.ell)
        self.trace.modes[v] = modes
        self.trace.phases[v] = history
        return _NodeRuntime(v, clock, history, modes, pipeline, oscillator, schedule)

    def run(self) -> TraceSet:
        t_clk = self.p.t_clk
        for rt in self.nodes:
            rt.edge_level = floor(rt.clock.logical / t_clk) + 1
            self._schedule_edge(rt)
            for t in rt.schedule.change_times:
                if t <= self.scenario.duration:
                    self.queue.schedule(t, EventKind.DRIFT, rt.node)
        for time, label in self.scenario.markers:
            self.trace.events.append(TraceEvent(time, "marker", None, label))
        self.queue.schedule(0, EventKind.RECORD)

        handlers = {
            EventKind.DRIFT: self._on_drift,
            EventKind.PIPELINE: self._on_pipeline,
            EventKind.LOCK: self._on_lock,
            EventKind.EDGE: self._on_edge,
            EventKind.RECORD: self._on_record,
        }
        while self.queue.has_pending():
            if self.queue.peek_time() > self.scenario.duration:
                break
            event = self.queue.pop()
            handlers[event.kind](event)

        self._close()
        self.trace.completed = True
        return self.trace

    def _close(self):
        for rt in self.nodes:
            rt.modes.close(self.scenario.duration)
        self.trace.events.sort(key=lambda e: e.time)

    # --- clock bookkeeping ---

    def _schedule_edge(self, rt: _NodeRuntime):
        rt.edge_version += 1
        t = rt.history.crossing_time(rt.edge_level * self.p.t_clk)
        self.queue.schedule(max(t, self.queue.now), EventKind.EDGE, rt.node, rt.edge_version)

    def _retime(self, rt: _NodeRuntime, t: int, oscillator: Tri, factor: Fraction):
        """Close the current linear segment at t and start one with the new factor."""
        clock = rt.clock
        if t > clock.time:
            clock = advance(clock, t - clock.time, rt.schedule, rt.oscillator, mu=self.p.mu, unlocked=clock.factor)
        rt.clock = replace(clock, factor=factor)
        rt.oscillator = oscillator
        rt.history.append(t, rt.clock.logical, rt.schedule.rate_at(t) * factor)
        self._schedule_edge(rt)

    def _logical(self, v: int, t: int) -> Fraction:
        return self.nodes[v].history.logical_at(t)

    def _measure(self, v: int, w: int, t: int) -> Fraction:
        tau = self.delays[(w, v)].delay_at(t)
        return self._logical(w, t - tau) + self.center - self._logical(v, t) + self.perturbation[(v, w)]

    # --- handlers ---

    def _on_drift(self, event):
        rt = self.nodes[event.node]
        self._retime(rt, event.time, rt.oscillator, rt.clock.factor)
        self.trace.events.append(TraceEvent(event.time, "drift", rt.node, str(rt.schedule.rate_at(event.time))))

    def _on_edge(self, event):
        rt = self.nodes[event.node]
        if event.payload != rt.edge_version:
            return
        t = event.time
        v = rt.node
        estimates = {w: self._measure(v, w, t) for w in self.topology.neighbors(v)}
        before = rt.pipeline
        rt.pipeline = step_pipeline(before, t, True, estimates, config=self.config, m_policy=self.m_policy)
        _, words = rt.pipeline.pending_words[-1] if rt.pipeline.pending_words else (None, rt.pipeline.latched)
        for w, word in words:
            if word.sample_time == t:
                offset = self._logical(w, t) - self._logical(v, t)
                self.trace.samples.append(WordSample(t, v, w, word.estimate, offset, word))
        rt.edge_level += 1
        self._after_pipeline(rt, before, t)
        self._schedule_edge(rt)

    def _on_pipeline(self, event):
        rt = self.nodes[event.node]
        rt.wakeups.discard(event.time)
        before = rt.pipeline
        rt.pipeline = step_pipeline(before, event.time, config=self.config, m_policy=self.m_policy)
        self._after_pipeline(rt, before, event.time)

    def _after_pipeline(self, rt: _NodeRuntime, before: PipelineState, t: int):
        after = rt.pipeline
        if after.latched_at != before.latched_at:
            words = [w for _, w in after.latched] + [ThresholdWord.synchronized(self.p.ell)]
            low, high = controller_extremes(words, self.p.ell)
            self.trace.controls.append(ControlRecord(after.latched_at, rt.node, low, high, after.output))
        if after.md is not before.md and rt.node not in self.stuck:
            self._apply_md(rt, t, after.md)
        wake = after.next_wakeup()
        if wake is not None and wake not in rt.wakeups:
            rt.wakeups.add(wake)
            self.queue.schedule(wake, EventKind.PIPELINE, rt.node)

    def _apply_md(self, rt: _NodeRuntime, t: int, md: Tri):
        rt.modes.set(t, md)
        rt.lock_version += 1
        self.trace.events.append(TraceEvent(t, "md", rt.node, str(md)))
        logger.debug("node %s md -> %s at %s fs", rt.node, md, t)
        if rt.oscillator is not Tri.M:
            factor = self.unlocked.choose(rt.node, rt.clock.factor, self.p.mu)
            self._retime(rt, t, Tri.M, factor)
            self.trace.events.append(TraceEvent(t, "unlock", rt.node, str(factor)))
        if md is not Tri.M:
            self.queue.schedule(t + self.p.t_osc, EventKind.LOCK, rt.node, (rt.lock_version, md))

    def _on_lock(self, event):
        rt = self.nodes[event.node]
        version, md = event.payload
        if version != rt.lock_version:
            return
        factor = Fraction(1) if md is Tri.ZERO else 1 + self.p.mu
        self._retime(rt, event.time, md, factor)
        self.trace.events.append(TraceEvent(event.time, "lock", rt.node, "fast" if md is Tri.ONE else "slow"))

    def _on_record(self, event):
        t = event.time
        logical = [self._logical(v, t) for v in range(self.topology.node_count)]
        for rt in self.nodes:
            v = rt.node
            self.trace.clocks.append(ClockRow(t, v, quantize(logical[v] / self.p.t_clk, PHASE_DECIMALS),
                                              rt.modes.value_at(t)))
            for w, word in rt.pipeline.latched:
                self.trace.held.append(HeldEstimate(t, v, w, word.estimate, logical[w] - logical[v]))
        self._monitor(t, logical)
        following = t + self.scenario.record_stride
        if t < self.scenario.duration:
            self.queue.schedule(min(following, self.scenario.duration), EventKind.RECORD)

    # --- runtime assertions ---

    def _monitor(self, t: int, logical: list):
        if self.scenario.monitor == "off":
            return
        p = self.p
        for rt in self.nodes:
            v = rt.node
            envelope = oscillator_rate_bounds(rt.modes, t, p.t_osc, rho=p.rho, mu=p.mu)
            rate = rt.history.rate_at(t)
            if not envelope.contains(rate):
                self._violation("rate-envelope", t, v, f"{envelope.kind} oscillator runs at {rate}, "
                                                       f"allowed [{envelope.low}, {envelope.high}]")
            if t < self.warmup or v in self.stuck:
                continue
            view = OffsetView(v, {w: logical[w] - logical[v] for w in self.topology.neighbors(v)})
            fast = fast_condition(view, p.kappa, p.ell - 1)
            if fast.holds and rt.oscillator is not Tri.ONE:
                self._violation("fast-mode", t, v, f"fast condition (s={fast.witness}) but oscillator is {rt.oscillator}")
            slow = slow_condition(view, p.kappa, p.ell)
            if slow.holds and rt.oscillator is not Tri.ZERO:
                self._violation("slow-mode", t, v, f"slow condition (s={slow.witness}) but oscillator is {rt.oscillator}")

    def _violation(self, invariant: str, t: int, node: int, detail: str):
        record = MonitorRecord(invariant, t, node, detail)
        self.trace.violations.append(record)
        self.trace.events.append(TraceEvent(t, "violation", node, f"{invariant}: {detail}"))
        logger.error("%s violated at t=%s fs on node %s: %s", invariant, t, node, detail)
        if self.scenario.monitor == "abort":
            self._close()
            raise InvariantViolation(invariant, t, node, detail, trace=self.trace)


def run(scenario: Scenario) -> TraceSet:
    """
    Validate and execute a scenario.

    Raises:
        ConstraintViolation: parameters violate a theorem constraint
        ConfigError: inconsistent scenario, including T_max not fitting the clock period
        InvariantViolation: the runtime monitor is in abort mode and caught a violation
    """
    vp, small_start = validate_scenario(scenario)
    logger.info("running scenario '%s' on %s nodes for %s fs", scenario.name,
                scenario.topology.node_count, scenario.duration)
    trace = _Simulation(scenario, vp, small_start).run()
    logger.info("scenario '%s' finished, trace digest %s", scenario.name, trace.digest()[:16])
    return trace


__all__ = [
    'DelaySchedule', 'Scenario', 'TraceSet', 'ClockRow', 'HeldEstimate', 'WordSample',
    'ControlRecord', 'TraceEvent', 'MonitorRecord',
    'check_pipeline_timing', 'static_offsets', 'validate_scenario', 'run'
]

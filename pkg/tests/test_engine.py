# tests/test_engine.py

from fractions import Fraction

import pytest

from gcssim.analytics import check_bounds, skews, verify_implementation
from gcssim.clocks import RateSchedule
from gcssim.config import NS, PS
from gcssim.engine import (
    DelaySchedule, Scenario, _Simulation, check_pipeline_timing, run, static_offsets, validate_scenario,
)
from gcssim.errors import ConfigError, ConstraintViolation, InvariantViolation
from gcssim.kleene import Tri
from gcssim.params import SystemParams, Topology
from gcssim.scenarios import builtin_scenario, random_scenario
from gcssim.scheduler import EventKind, EventQueue


def short(name: str, duration=20 * NS, **changes) -> Scenario:
    return builtin_scenario(name).evolve(duration=duration, **changes)


class TestEventQueue:

    def test_same_time_priority_order(self):
        q = EventQueue()
        q.schedule(10, EventKind.RECORD)
        q.schedule(10, EventKind.EDGE, 1)
        q.schedule(10, EventKind.DRIFT, 2)
        q.schedule(5, EventKind.RECORD)
        kinds = [q.pop().kind for _ in range(4)]
        assert kinds == [EventKind.RECORD, EventKind.DRIFT, EventKind.EDGE, EventKind.RECORD]
        assert q.now == 10

    def test_submission_order_breaks_ties(self):
        q = EventQueue()
        q.schedule(1, EventKind.EDGE, 3)
        q.schedule(1, EventKind.EDGE, 1)
        assert [q.pop().node, q.pop().node] == [3, 1]

    def test_past_rejected(self):
        q = EventQueue()
        q.schedule(10, EventKind.EDGE)
        q.pop()
        with pytest.raises(ValueError):
            q.schedule(5, EventKind.EDGE)


class TestDelaySchedule:

    def test_lookup(self):
        s = DelaySchedule(((0, 1 * PS), (50 * NS, 8 * PS)))
        assert s.delay_at(50 * NS - 1) == 1 * PS
        assert s.delay_at(50 * NS) == 8 * PS
        assert s.values == [1 * PS, 8 * PS]

    def test_must_start_at_zero(self):
        with pytest.raises(ConfigError):
            DelaySchedule(((10, 1),))

    def test_scenario_default_delay(self):
        s = Scenario("x", Topology.line(2), params=SystemParams(d=3 * PS, u=PS))
        assert s.delay_schedule(0, 1).delay_at(0) == 3 * PS


class TestValidation:

    def test_pipeline_timing(self):
        with pytest.raises(ConfigError):
            check_pipeline_timing(SystemParams(t_clk=300 * PS))
        check_pipeline_timing(SystemParams())

    def test_no_decision_separator(self):
        with pytest.raises(ConfigError) as exc:
            validate_scenario(short("ahead", params=SystemParams(delta0=4700)))
        assert exc.value.key == "params.kappa"

    def test_delta0_below_link_error(self):
        p = SystemParams(d=8 * PS, u=7 * PS, delta0=3 * PS)
        with pytest.raises(ConfigError) as exc:
            validate_scenario(Scenario("x", Topology.line(2), params=p))
        assert exc.value.key == "params.delta0"

    def test_constraint_surfaces(self):
        with pytest.raises(ConstraintViolation):
            validate_scenario(short("ahead", params=SystemParams(mu=Fraction(2, 100_000))))

    def test_random_policy_needs_seed(self):
        with pytest.raises(ConfigError) as exc:
            validate_scenario(short("ahead", m_policy="seeded-random"))
        assert exc.value.key == "scenario.seed"

    def test_delay_outside_window(self):
        scenario = short("ahead", delays=(((1, 0), DelaySchedule.constant(5 * PS)),))
        with pytest.raises(ConfigError):
            validate_scenario(scenario)

    def test_delay_on_missing_edge(self):
        scenario = short("ahead", delays=(((0, 3), DelaySchedule.constant(0)),))
        with pytest.raises(ConfigError):
            validate_scenario(scenario)

    def test_drift_outside_rho(self):
        drift = tuple(RateSchedule.constant(Fraction(11, 10)) for _ in range(4))
        with pytest.raises(ConfigError):
            validate_scenario(short("ahead", drift=drift))

    def test_small_start(self):
        assert validate_scenario(short("synchronized"))[1] is True
        assert validate_scenario(short("ahead"))[1] is False

    def test_static_offsets(self):
        scenario = short("synchronized")
        vp, _ = validate_scenario(scenario)
        assert set(static_offsets(scenario, vp).values()) == {Fraction(-3999)}

        seeded = scenario.evolve(delta0_policy="seeded-random", seed=3)
        offsets = static_offsets(seeded, vp)
        assert offsets == static_offsets(seeded, vp)
        assert all(abs(x) <= 3999 for x in offsets.values())

        fixed = scenario.evolve(delta0_policy="fixed", delta0_offsets=(((0, 1), 5000),))
        with pytest.raises(ConfigError):
            static_offsets(fixed, vp)


class TestRun:

    def test_synchronized_stays_slow(self):
        trace = run(short("synchronized"))
        assert trace.completed
        report = skews(trace)
        assert report.max_local == 0
        assert report.max_global == 0
        assert all(row.md is Tri.ZERO for row in trace.clocks)
        assert check_bounds(report, trace.bounds, trace.small_start).passed
        assert verify_implementation(trace).passed

    def test_records_every_stride(self):
        trace = run(short("synchronized", duration=2 * NS))
        times, rows = trace.phase_table()
        assert times[0] == 0 and times[-1] == 2 * NS
        assert len(times) == 2 * NS // trace.record_stride + 1
        assert all(len(r) == 4 for r in rows)
        assert trace.canonical_clock_csv().startswith("time_fs,node,L_phase,md\n")

    def test_edges_sampled_every_period(self):
        trace = run(short("synchronized", duration=5 * NS))
        node0 = sorted({s.time for s in trace.samples if s.node == 0})
        assert node0 == [k * 500 * PS for k in range(1, 11)]

    def test_neighbor_ahead_goes_fast(self):
        trace = run(short("ahead", duration=10 * NS))
        fast_nodes = {e.node for e in trace.events if e.kind == "lock" and e.detail == "fast"}
        assert {0, 2} <= fast_nodes
        assert 1 not in fast_nodes

    def test_pinned_pair_drifts_apart(self):
        trace = run(short("pinned-pair", duration=300 * NS))
        report = skews(trace)
        assert report.max_local > 30 * PS
        assert not check_bounds(report, trace.bounds, trace.small_start).passed

    def test_deterministic(self):
        a = run(random_scenario(11, duration=5 * NS))
        b = run(random_scenario(11, duration=5 * NS))
        assert a.digest() == b.digest()


class TestMonitor:

    def misleading(self, monitor: str) -> Scenario:
        # node 0 reads node 1 through a link far slower than d, so it never sees it ahead
        return short("ahead", duration=10 * NS, strict_delays=False, monitor=monitor,
                     delays=(((1, 0), DelaySchedule.constant(40 * PS)),))

    def test_abort_carries_partial_trace(self):
        with pytest.raises(InvariantViolation) as exc:
            run(self.misleading("abort"))
        assert exc.value.invariant == "fast-mode"
        assert exc.value.node == 0
        assert exc.value.time >= 2 * (500 * PS + 775 * PS)
        assert not exc.value.trace.completed
        assert exc.value.trace.clocks

    def test_record_mode_continues(self):
        trace = run(self.misleading("record"))
        assert trace.completed
        assert {v.invariant for v in trace.violations} == {"fast-mode"}

    def test_oscillator_that_never_locks_leaves_rate_envelope(self, monkeypatch):
        monkeypatch.setattr(_Simulation, "_on_lock", lambda self, event: None)
        with pytest.raises(InvariantViolation) as exc:
            run(short("ahead", duration=5 * NS, unlocked_policy="pin-low", monitor="abort"))
        assert exc.value.invariant == "rate-envelope"
        assert exc.value.node in (0, 2)
        assert "fast oscillator runs at 1" in exc.value.detail

    def test_stuck_nodes_are_not_checked(self):
        trace = run(short("pinned-pair", duration=10 * NS, monitor="record"))
        assert trace.violations == []

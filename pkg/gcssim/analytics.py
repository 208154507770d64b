# analytics.py
"""
Skew series, bound verdicts and offline verification of a recorded run.

Skews are computed from the recorded (quantized) phases, so a trace read
back from its CSV gives exactly the same report as the in-memory one.
"""

from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

import pandas as pd

from .clocks import oscillator_rate_bounds
from .config import MARKER_WINDOW, STABLE_SUFFIX_FRACTION, REPORT_FLOAT_DIGITS
from .kleene import Tri
from .logic import fast_trigger_at
from .logger import get_logger
from .params import stabilization_comparator
from .pipeline import threshold, word_indices
from .utils import to_ps

logger = get_logger(__name__)


@dataclass(frozen=True)
class Violation:
    time: int
    kind: str
    pair: tuple
    value: Fraction
    bound: Fraction

    def __str__(self):
        return f"{self.kind} skew {to_ps(self.value)} ps on {self.pair} at t={self.time} fs (bound {to_ps(self.bound)} ps)"


@dataclass(frozen=True)
class Marker:
    time: int
    label: str
    local_before: Fraction
    local_after: Fraction


@dataclass
class SkewReport:
    scenario: str
    times: list
    local: list
    global_: list
    local_pairs: list
    global_pairs: list
    edge_skews: dict
    bounds: object
    duration: int
    sample_slack: Fraction
    stabilization_comparator: Fraction
    violations: list = field(default_factory=list)
    markers: list = field(default_factory=list)
    fairbanks: dict | None = None
    skew_rate: Fraction = Fraction(0)

    @property
    def initial_global(self) -> Fraction:
        return self.global_[0] if self.global_ else Fraction(0)

    @property
    def max_local(self) -> Fraction:
        return max(self.local, default=Fraction(0))

    @property
    def max_global(self) -> Fraction:
        return max(self.global_, default=Fraction(0))

    @property
    def max_local_time(self) -> int | None:
        return self.times[self.local.index(self.max_local)] if self.local else None

    @property
    def max_global_time(self) -> int | None:
        return self.times[self.global_.index(self.max_global)] if self.global_ else None

    @property
    def stabilization_time(self) -> int | None:
        """Last recorded time at which the local skew exceeds its bound."""
        local = [v.time for v in self.violations if v.kind == "local"]
        return max(local) if local else None

    def local_at(self, t: int) -> Fraction:
        i = bisect_right(self.times, t) - 1
        return self.local[max(i, 0)]

    def window_max(self, start: int, end: int) -> Fraction:
        values = [v for t, v in zip(self.times, self.local) if start <= t <= end]
        return max(values, default=Fraction(0))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "time_fs": self.times,
            "local_ps": [to_ps(v) for v in self.local],
            "global_ps": [to_ps(v) for v in self.global_],
        })

    def edge_frame(self) -> pd.DataFrame:
        data = {"time_fs": self.times}
        for (u, v), series in self.edge_skews.items():
            data[f"{u}-{v}"] = [to_ps(x) for x in series]
        return pd.DataFrame(data)

    def to_dict(self) -> dict:
        bounds = None
        if self.bounds is not None:
            bounds = {
                "global_ps": to_ps(self.bounds.global_bound),
                "local_ps": to_ps(self.bounds.local_bound),
                "reference_global_ps": to_ps(getattr(self.bounds, "reference_global", self.bounds.global_bound)),
                "diameter": getattr(self.bounds, "diameter", None),
            }
        return {
            "scenario": self.scenario,
            "duration_fs": self.duration,
            "samples": len(self.times),
            "max_local_ps": to_ps(self.max_local),
            "max_local_time_fs": self.max_local_time,
            "max_global_ps": to_ps(self.max_global),
            "max_global_time_fs": self.max_global_time,
            "initial_global_ps": to_ps(self.initial_global),
            "sample_slack_ps": to_ps(self.sample_slack),
            "stabilization_time_fs": self.stabilization_time,
            "stabilization_comparator_fs": round(float(self.stabilization_comparator), REPORT_FLOAT_DIGITS),
            "bounds": bounds,
            "violations": [
                {"time_fs": v.time, "kind": v.kind, "pair": list(v.pair),
                 "value_ps": to_ps(v.value), "bound_ps": to_ps(v.bound)}
                for v in self.violations
            ],
            "markers": [
                {"time_fs": m.time, "label": m.label,
                 "local_before_ps": to_ps(m.local_before), "local_after_ps": to_ps(m.local_after)}
                for m in self.markers
            ],
            "fairbanks": self.fairbanks,
        }


def _between_records(t1, s1, t2, s2, rate) -> tuple[int, Fraction] | None:
    """
    Largest skew the drift rate allows strictly between two records, with
    its time. None when the records already bound the interval.
    """
    span = t2 - t1
    if rate <= 0 or span <= 0 or abs(s2 - s1) >= rate * span:
        return None
    peak = (s1 + s2 + rate * span) / 2
    offset = (s2 - s1 + rate * span) / (2 * rate)
    return t1 + min(max(int(offset), 1), span - 1), peak


def find_violations(times, local, global_, local_pairs, global_pairs, bounds,
                    rate: Fraction = Fraction(0)) -> list[Violation]:
    """
    Bound crossings at the records and between them. Every pairwise skew
    changes at most at `rate`, so between two records it stays under the
    cone through both; a cone peak above the bound counts as a violation.
    """
    violations = []
    if bounds is None:
        return violations
    local_bound, global_bound = Fraction(bounds.local_bound), Fraction(bounds.global_bound)
    series = (("local", local, local_pairs, local_bound), ("global", global_, global_pairs, global_bound))
    for i, t in enumerate(times):
        for kind, values, pairs, bound in series:
            if i > 0 and values[i - 1] <= bound and values[i] <= bound:
                between = _between_records(times[i - 1], values[i - 1], t, values[i], rate)
                if between is not None and between[1] > bound:
                    at, peak = between
                    pair = pairs[i] if values[i] >= values[i - 1] else pairs[i - 1]
                    violations.append(Violation(at, kind, pair, peak, bound))
        for kind, values, pairs, bound in series:
            if values[i] > bound:
                violations.append(Violation(t, kind, pairs[i], values[i], bound))
    violations.sort(key=lambda v: v.time)
    return violations


def skews(trace, topology=None) -> SkewReport:
    """
    Local and global skew at every recorded time. `trace` is a TraceSet or
    anything exposing the same recorded view (a trace read back from disk).
    """
    topology = topology or trace.topology
    t_clk = trace.t_clk
    edges = topology.edge_list
    times, rows = trace.phase_table()

    local, global_, local_pairs, global_pairs = [], [], [], []
    edge_skews = {edge: [] for edge in edges}
    for row in rows:
        values = [Fraction(phase) * t_clk for phase in row]
        best, best_pair = Fraction(-1), None
        for u, v in edges:
            skew = abs(values[u] - values[v])
            edge_skews[(u, v)].append(skew)
            if skew > best:
                best, best_pair = skew, (u, v)
        hi = max(range(len(values)), key=values.__getitem__)
        lo = min(range(len(values)), key=values.__getitem__)
        local.append(best)
        local_pairs.append(best_pair)
        global_.append(values[hi] - values[lo])
        global_pairs.append((hi, lo))

    bounds = trace.bounds
    p = trace.params.params
    report = SkewReport(
        scenario=trace.name,
        times=times,
        local=local,
        global_=global_,
        local_pairs=local_pairs,
        global_pairs=global_pairs,
        edge_skews=edge_skews,
        bounds=bounds,
        duration=trace.duration,
        sample_slack=p.drift_excess * trace.record_stride / 2,
        stabilization_comparator=stabilization_comparator(
            global_[0] if global_ else 0, p.kappa, topology.diameter, p.rho, p.mu),
        skew_rate=p.drift_excess,
        violations=find_violations(times, local, global_, local_pairs, global_pairs, bounds, p.drift_excess),
    )
    for time, label in trace.markers:
        report.markers.append(Marker(
            time, label,
            local_before=report.window_max(time - MARKER_WINDOW, time),
            local_after=report.window_max(time, time + MARKER_WINDOW),
        ))
    return report


@dataclass(frozen=True)
class Verdict:
    status: str
    first_violation: Violation | None = None
    last_violation: Violation | None = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "detail": self.detail,
            "first_violation": str(self.first_violation) if self.first_violation else None,
            "last_violation": str(self.last_violation) if self.last_violation else None,
        }


def check_bounds(report: SkewReport, bounds, small_start: bool) -> Verdict:
    """
    Bound verdict. With the initial local skew below kappa every
    positive time must respect both bounds; otherwise the violations must
    stop before the end and leave a stable suffix.
    """
    violations = find_violations(report.times, report.local, report.global_,
                                 report.local_pairs, report.global_pairs, bounds, report.skew_rate)
    if small_start:
        late = [v for v in violations if v.time > 0]
        if not late:
            return Verdict("PASS", detail="no violation after t=0")
        return Verdict("FAIL", late[0], late[-1], detail=f"first violation: {late[0]}")

    if not violations:
        return Verdict("PASS", detail="no violation")
    first, last = violations[0], violations[-1]
    end = report.times[-1] if report.times else 0
    suffix = end - last.time
    if last.time < end and suffix >= STABLE_SUFFIX_FRACTION * report.duration:
        return Verdict("PASS", first, last, detail=f"stabilized after {to_ps(last.time)} ps")
    return Verdict("FAIL", first, last, detail=f"still violating at {last}")


@dataclass
class ConditionResult:
    name: str
    checked: int = 0
    counterexample: str | None = None

    @property
    def passed(self) -> bool:
        return self.counterexample is None

    def fail(self, message: str):
        if self.counterexample is None:
            self.counterexample = message


@dataclass
class ConditionReport:
    results: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def failed(self) -> list[str]:
        return [name for name, r in self.results.items() if not r.passed]

    def to_dict(self) -> dict:
        return {name: {"passed": r.passed, "checked": r.checked, "counterexample": r.counterexample}
                for name, r in self.results.items()}


CONDITIONS = ("slow-rate", "fast-rate", "unlocked-rate", "bit-one", "bit-zero", "single-M",
              "trigger-match", "slow-latency", "fast-latency", "estimate-error")


def _check_oscillator(trace, p, results):
    kinds = {"slow": results["slow-rate"], "fast": results["fast-rate"], "unlocked": results["unlocked-rate"]}
    end = trace.duration
    for v, history in trace.phases.items():
        modes = trace.modes[v]
        times = {start for start, _, _ in history.segments()}
        for t, _ in modes.changes():
            times.update((t, t + p.t_osc))
        for t in sorted(x for x in times if 0 <= x <= end):
            bounds = oscillator_rate_bounds(modes, t, p.t_osc, rho=p.rho, mu=p.mu)
            result = kinds[bounds.kind]
            result.checked += 1
            rate = history.rate_at(t)
            if not bounds.contains(rate):
                result.fail(f"node {v} at t={t} fs runs at {rate}, allowed [{bounds.low}, {bounds.high}]")


def _check_words(trace, vp, results):
    p = vp.params
    for sample in trace.samples:
        est = sample.estimate
        for index in word_indices(p.ell):
            thr = threshold(index, p.kappa, vp.delta)
            bit = sample.word.q(index)
            if est >= thr:
                results["bit-one"].checked += 1
                if bit is not Tri.ONE:
                    results["bit-one"].fail(f"node {sample.node} reading {sample.neighbor} at t={sample.time} fs: "
                                       f"estimate {est} >= {thr} but Q^{index}={bit}")
            elif est <= thr - p.epsilon:
                results["bit-zero"].checked += 1
                if bit is not Tri.ZERO:
                    results["bit-zero"].fail(f"node {sample.node} reading {sample.neighbor} at t={sample.time} fs: "
                                       f"estimate {est} <= {thr - p.epsilon} but Q^{index}={bit}")
        results["single-M"].checked += 1
        if sample.word.m_count > 1 or not sample.word.is_staircase():
            results["single-M"].fail(f"word {sample.word} of node {sample.node} at t={sample.time} fs")


@dataclass(frozen=True)
class _Latched:
    time: int
    low: Tri
    high: Tri

    @property
    def gamma(self) -> Tri:
        return self.low if self.low is self.high else Tri.M


def _trigger_extremes(estimates, kappa, delta, epsilon, ell: int) -> tuple[Tri, Tri]:
    """
    Fast trigger over one latched batch plus the node's own zero offset,
    with every estimate inside a metastability window read as just below
    its threshold, then as reaching it.
    """
    levels = [threshold(index, kappa, delta) for index in word_indices(ell)]

    def pushed(est, up: bool):
        for thr in levels:
            if thr - epsilon < est < thr:
                return thr if up else thr - epsilon
        return est

    result = []
    for up in (False, True):
        values = [Fraction(0)] + [pushed(e, up) for e in estimates]
        trigger = fast_trigger_at(max(values), min(values), kappa, delta, ell - 1)
        result.append(Tri.from_bool(bool(trigger.gamma)))
    return result[0], result[1]


def _latched_triggers(trace, vp) -> dict[int, list[_Latched]]:
    p = vp.params
    batches = {}
    for sample in trace.samples:
        batches.setdefault((sample.node, sample.time), []).append(sample.estimate)
    by_node = {}
    for (v, t), estimates in sorted(batches.items()):
        low, high = _trigger_extremes(estimates, p.kappa, vp.delta, p.epsilon, p.ell)
        by_node.setdefault(v, []).append(_Latched(t + p.t_meas, low, high))
    return by_node


def _gamma_at(latched, times, t) -> Tri:
    i = bisect_right(times, t) - 1
    return latched[i].gamma if i >= 0 else Tri.ZERO


def _check_trigger(trace, triggers, results):
    result = results["trigger-match"]
    recorded = {(r.node, r.time): r for r in trace.controls}
    rank = {Tri.ZERO: 0, Tri.ONE: 1}
    for v, latched in triggers.items():
        for item in latched:
            record = recorded.get((v, item.time))
            if record is None:
                continue
            result.checked += 1
            if not rank[item.low] <= rank[record.gamma_low] <= rank[record.gamma_high] <= rank[item.high]:
                result.fail(f"node {v} at t={item.time} fs: controller gave [{record.gamma_low}, {record.gamma_high}], "
                            f"fast trigger on the estimates gives [{item.low}, {item.high}]")


def _check_control(trace, p, triggers, results):
    end = trace.duration
    for v, modes in trace.modes.items():
        latched = triggers.get(v, [])
        times = [r.time for r in latched]
        checks = {t + p.t_ctr for t in times} | {t for t, _ in modes.changes()}
        for t in sorted(x for x in checks if p.t_ctr <= x <= end):
            lo = bisect_right(times, t - p.t_ctr) - 1
            hi = bisect_right(times, t) - 1
            window = {_gamma_at(latched, times, t - p.t_ctr)}
            window.update(latched[i].gamma for i in range(max(lo + 1, 0), hi + 1))
            if len(window) != 1 or Tri.M in window:
                continue
            gamma = window.pop()
            name = "slow-latency" if gamma is Tri.ZERO else "fast-latency"
            results[name].checked += 1
            md = modes.value_at(t)
            if md is not gamma:
                results[name].fail(f"node {v}: fast trigger {gamma} over [{t - p.t_ctr}, {t}] fs but md={md} at {t} fs")


def _check_delta(trace, vp, results):
    result = results["estimate-error"]
    for record in list(trace.samples) + list(trace.held):
        result.checked += 1
        error = abs(record.estimate - record.offset)
        if error > vp.delta:
            result.fail(f"node {record.node} reading {record.neighbor} at t={record.time} fs: "
                        f"|estimate - offset| = {float(error):.1f} fs > delta={vp.delta} fs")


def verify_implementation(trace, params=None) -> ConditionReport:
    """
    Check a recorded run against the module contracts: oscillator rates
    per mode, threshold words (bit-one, bit-zero, single M), the controller
    against the fast trigger recomputed from the sampled estimates, control
    latency in both directions and the measurement error budget (delta).
    """
    vp = params or trace.params
    p = vp.params
    results = {name: ConditionResult(name) for name in CONDITIONS}
    _check_oscillator(trace, p, results)
    _check_words(trace, vp, results)
    triggers = _latched_triggers(trace, vp)
    _check_trigger(trace, triggers, results)
    _check_control(trace, p, triggers, results)
    _check_delta(trace, vp, results)
    report = ConditionReport(results)
    for name in report.failed():
        logger.warning("condition %s failed: %s", name, results[name].counterexample)
    return report


__all__ = [
    'Violation', 'Marker', 'SkewReport', 'find_violations', 'skews',
    'Verdict', 'check_bounds', 'ConditionResult', 'ConditionReport', 'CONDITIONS',
    'verify_implementation'
]

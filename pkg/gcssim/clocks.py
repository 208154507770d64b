# clocks.py
"""
Hardware and logical clocks.

A clock value is kept in femtoseconds of nominal time, so one slow-mode
period advances it by T_clk and the normalized phase is value / T_clk.
Rates are exact fractions and every trajectory is piecewise linear.
"""

import random
from bisect import bisect_right
from dataclasses import dataclass, replace
from fractions import Fraction
from math import ceil, floor
from typing import NamedTuple

from .errors import ConfigError, HistoryGap
from .kleene import Tri
from .params import as_fraction


@dataclass(frozen=True)
class RateSchedule:
    """Piecewise-constant hardware rate h_v as (start_time, rate) breakpoints."""
    breakpoints: tuple = ((0, Fraction(1)),)

    def __post_init__(self):
        points = [(int(t), as_fraction(r)) for t, r in self.breakpoints]
        if not points or points[0][0] != 0:
            points.insert(0, (0, Fraction(1)))
        times = [t for t, _ in points]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("drift breakpoints must be strictly increasing", key="scenario.drift_breakpoints")
        object.__setattr__(self, "breakpoints", tuple(points))

    @classmethod
    def constant(cls, rate=1) -> "RateSchedule":
        return cls(((0, as_fraction(rate)),))

    def check(self, rho, node=None):
        for t, r in self.breakpoints:
            if not 1 <= r <= 1 + rho:
                raise ConfigError(
                    f"hardware rate {r} of node {node} at t={t} fs outside [1, 1+rho]",
                    key="scenario.drift",
                )

    def rate_at(self, t: int) -> Fraction:
        i = bisect_right([b for b, _ in self.breakpoints], t) - 1
        return self.breakpoints[max(i, 0)][1]

    def next_breakpoint(self, t: int) -> int | None:
        for b, _ in self.breakpoints:
            if b > t:
                return b
        return None

    @property
    def change_times(self) -> list[int]:
        return [t for t, _ in self.breakpoints[1:]]


@dataclass(frozen=True)
class ClockState:
    """Clock values at `time`. `factor` is the multiplier on h applied to L since the last step."""
    time: int
    hardware: Fraction
    logical: Fraction
    factor: Fraction = Fraction(1)

    def phase(self, t_clk: int) -> Fraction:
        return self.logical / t_clk


def effective_factor(gamma: Tri, mu, unlocked=None) -> Fraction:
    """1 in slow mode, 1+mu in fast mode, the unlocked-policy value otherwise."""
    mu = as_fraction(mu)
    if gamma is Tri.ZERO:
        return Fraction(1)
    if gamma is Tri.ONE:
        return 1 + mu
    if unlocked is None:
        raise ValueError("an unlocked oscillator needs a rate factor")
    unlocked = as_fraction(unlocked)
    if not 1 <= unlocked <= 1 + mu:
        raise ValueError(f"unlocked factor {unlocked} outside [1, 1+mu]")
    return unlocked


def advance(cs: ClockState, dt: int, schedule: RateSchedule, gamma: Tri, *, mu, unlocked=None) -> ClockState:
    """
    H += h*dt and L += factor*h*dt. The step must not cross a rate
    breakpoint; the engine splits steps there.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    boundary = schedule.next_breakpoint(cs.time)
    if boundary is not None and boundary < cs.time + dt:
        raise ValueError(f"step [{cs.time}, {cs.time + dt}] crosses rate breakpoint {boundary}")
    h = schedule.rate_at(cs.time)
    factor = effective_factor(gamma, mu, unlocked)
    return ClockState(
        time=cs.time + dt,
        hardware=cs.hardware + h * dt,
        logical=cs.logical + factor * h * dt,
        factor=factor,
    )


class RateInterval(NamedTuple):
    low: Fraction
    high: Fraction
    kind: str

    def contains(self, rate) -> bool:
        return self.low <= rate <= self.high


class ModeHistory:
    """
    Time-stamped md values, right-continuous: a change at t is in effect at t.
    `since=None` means the initial value held forever before the first change.
    """

    def __init__(self, initial: Tri = Tri.ZERO, since: int | None = None):
        self.since = since
        self.until: int | None = None
        self._times: list[int] = []
        self._values: list[Tri] = []
        self._initial = initial

    def set(self, time: int, value: Tri):
        if self._times and time < self._times[-1]:
            raise ValueError("mode history must grow forward in time")
        if self._times and time == self._times[-1]:
            self._times.pop()
            self._values.pop()
        if self.value_at(time) is value:
            return
        self._times.append(time)
        self._values.append(value)

    def close(self, until: int):
        self.until = until

    def value_at(self, t: int) -> Tri:
        i = bisect_right(self._times, t) - 1
        return self._values[i] if i >= 0 else self._initial

    def values_in(self, start: int, end: int) -> set:
        self._check_cover(start, end)
        values = {self.value_at(start)}
        lo = bisect_right(self._times, start)
        hi = bisect_right(self._times, end)
        values.update(self._values[lo:hi])
        return values

    def changes(self) -> list[tuple[int, Tri]]:
        return list(zip(self._times, self._values))

    @property
    def initial(self) -> Tri:
        return self._initial

    def _check_cover(self, start, end):
        if self.since is not None and start < self.since:
            raise HistoryGap(start, end, (self.since, self.until))
        if self.until is not None and end > self.until:
            raise HistoryGap(start, end, (self.since, self.until))


def oscillator_rate_bounds(history: ModeHistory, t: int, t_osc: int, *, rho, mu) -> RateInterval:
    """Admissible logical rate at t given md over [t - t_osc, t]."""
    rho, mu = as_fraction(rho), as_fraction(mu)
    values = history.values_in(t - t_osc, t)
    if values == {Tri.ZERO}:
        return RateInterval(Fraction(1), 1 + rho, "slow")
    if values == {Tri.ONE}:
        return RateInterval(1 + mu, (1 + mu) * (1 + rho), "fast")
    return RateInterval(Fraction(1), (1 + mu) * (1 + rho), "unlocked")


class PhaseHistory:
    """
    Piecewise-linear logical clock trajectory as (start, value, rate) segments.
    Before the first segment the clock is extrapolated at rate 1.
    """

    def __init__(self, start: int, logical, rate):
        self._starts = [start]
        self._values = [as_fraction(logical)]
        self._rates = [as_fraction(rate)]

    def append(self, start: int, logical, rate):
        if start < self._starts[-1]:
            raise ValueError("segments must be appended in time order")
        if start == self._starts[-1]:
            self._values[-1] = as_fraction(logical)
            self._rates[-1] = as_fraction(rate)
            return
        self._starts.append(start)
        self._values.append(as_fraction(logical))
        self._rates.append(as_fraction(rate))

    def _index(self, t) -> int:
        return bisect_right(self._starts, t) - 1

    def logical_at(self, t) -> Fraction:
        i = self._index(t)
        if i < 0:
            return self._values[0] - (self._starts[0] - t)
        return self._values[i] + self._rates[i] * (t - self._starts[i])

    def rate_at(self, t) -> Fraction:
        i = self._index(t)
        return Fraction(1) if i < 0 else self._rates[i]

    def segments(self) -> list[tuple[int, Fraction, Fraction]]:
        return list(zip(self._starts, self._values, self._rates))

    def crossing_time(self, level) -> int:
        """First integer time at which the clock has reached `level`."""
        level = as_fraction(level)
        if level <= self._values[0]:
            return ceil(self._starts[0] - (self._values[0] - level))
        for i, (start, value, rate) in enumerate(self.segments()):
            end = self._starts[i + 1] if i + 1 < len(self._starts) else None
            if end is None or level <= self._values[i + 1]:
                return max(start, ceil(start + (level - value) / rate))
        raise AssertionError("unreachable")


def rising_edges(history: PhaseHistory, window: tuple[int, int], t_clk: int) -> list[int]:
    """Times in (start, end] at which the normalized phase reaches an integer."""
    start, end = window
    k = floor(history.logical_at(start) / t_clk) + 1
    edges = []
    while True:
        t = history.crossing_time(k * t_clk)
        if t > end:
            return edges
        edges.append(t)
        k += 1


class UnlockedPolicy:
    """Rate factor an unlocked oscillator runs at, chosen once per unlocked episode."""
    name = "adversarial-extremes"

    def choose(self, node: int, previous: Fraction, mu) -> Fraction:
        # keep the extreme it was locked to
        return previous


class PinLow(UnlockedPolicy):
    name = "pin-low"

    def choose(self, node, previous, mu):
        return Fraction(1)


class PinHigh(UnlockedPolicy):
    name = "pin-high"

    def choose(self, node, previous, mu):
        return 1 + as_fraction(mu)


class SeededRandomRate(UnlockedPolicy):
    name = "seeded-random"

    def __init__(self, seed):
        self._rng = random.Random(f"{seed}:unlocked-rate")

    def choose(self, node, previous, mu):
        return 1 + as_fraction(mu) * Fraction(self._rng.randint(0, 1000), 1000)


def make_unlocked_policy(name: str, seed=None) -> UnlockedPolicy:
    if name == "adversarial-extremes":
        return UnlockedPolicy()
    if name == "pin-low":
        return PinLow()
    if name == "pin-high":
        return PinHigh()
    if name == "seeded-random":
        if seed is None:
            raise ValueError("seeded-random unlocked policy needs a seed")
        return SeededRandomRate(seed)
    raise ValueError(f"unknown unlocked-rate policy: {name}")


__all__ = [
    'RateSchedule', 'ClockState', 'RateInterval', 'ModeHistory', 'PhaseHistory',
    'effective_factor', 'advance', 'oscillator_rate_bounds', 'rising_edges',
    'UnlockedPolicy', 'PinLow', 'PinHigh', 'SeededRandomRate', 'make_unlocked_policy'
]

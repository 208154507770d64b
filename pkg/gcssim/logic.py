# logic.py
"""
Mode decision predicates over offsets to neighbors.

The fast and slow conditions are stated on exact offsets
O_w = L_w - L_v; the fast trigger is what a node can actually evaluate,
on estimates that are off by at most delta. The offset to self is always
zero and takes part in every max/min.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, NamedTuple


class Decision(NamedTuple):
    holds: bool
    witness: int | None


class Trigger(NamedTuple):
    gamma: int
    witness: int | None


class Region(NamedTuple):
    name: str
    witness: int | None

    def __str__(self):
        if self.witness is None:
            return self.name
        return f"{self.name} (s={self.witness})"


@dataclass(frozen=True)
class OffsetView:
    """Offsets seen by one node. Either mapping may be missing."""
    node: int
    offsets: Mapping[int, Fraction] | None = None
    estimates: Mapping[int, Fraction] | None = None

    def _values(self, which):
        values = getattr(self, which)
        if values is None:
            raise ValueError(f"offset view of node {self.node} has no {which}")
        return [Fraction(0), *(Fraction(x) for x in values.values())]

    @property
    def o_max(self) -> Fraction:
        return max(self._values("offsets"))

    @property
    def o_min(self) -> Fraction:
        return min(self._values("offsets"))

    @property
    def est_max(self) -> Fraction:
        return max(self._values("estimates"))

    @property
    def est_min(self) -> Fraction:
        return min(self._values("estimates"))


def fast_condition_at(o_max, o_min, kappa, ell: int) -> Decision:
    for s in range(ell + 1):
        level = (2 * s + 1) * kappa
        if o_max >= level and o_min >= -level:
            return Decision(True, s)
    return Decision(False, None)


def slow_condition_at(o_max, o_min, kappa, ell: int) -> Decision:
    for s in range(ell + 1):
        level = 2 * s * kappa
        if o_min <= -level and o_max <= level:
            return Decision(True, s)
    return Decision(False, None)


def fast_trigger_at(est_max, est_min, kappa, delta, ell: int) -> Trigger:
    for s in range(ell + 1):
        level = (2 * s + 1) * kappa
        if est_max >= level - delta and est_min >= -level - delta:
            return Trigger(1, s)
    return Trigger(0, None)


def fast_condition(view: OffsetView, kappa, ell: int) -> Decision:
    """Exists s in 0..ell: O_max >= (2s+1)kappa and O_min >= -(2s+1)kappa. Smallest s wins."""
    return fast_condition_at(view.o_max, view.o_min, kappa, ell)


def slow_condition(view: OffsetView, kappa, ell: int) -> Decision:
    """Exists s in 0..ell: O_min <= -2s*kappa and O_max <= 2s*kappa."""
    return slow_condition_at(view.o_max, view.o_min, kappa, ell)


def fast_trigger(view: OffsetView, kappa, delta, ell: int) -> Trigger:
    """The fast condition shifted down by delta, evaluated on estimates."""
    return fast_trigger_at(view.est_max, view.est_min, kappa, delta, ell)


def classify_region(view: OffsetView, kappa, delta, ell: int) -> Region:
    """
    Place a node in the (est_min, est_max) plane: FT if the trigger fires,
    SC if the estimates satisfy the slow condition, otherwise neither.
    `ell` is the number of thresholds in the hardware word.
    """
    trigger = fast_trigger(view, kappa, delta, ell - 1)
    if trigger.gamma:
        return Region("FT", trigger.witness)
    slow = slow_condition_at(view.est_max, view.est_min, kappa, ell)
    if slow.holds:
        return Region("SC", slow.witness)
    return Region("neither", None)


def classify_exact(view: OffsetView, kappa, ell: int) -> Region:
    fast = fast_condition(view, kappa, ell - 1)
    if fast.holds:
        return Region("FC", fast.witness)
    slow = slow_condition(view, kappa, ell)
    if slow.holds:
        return Region("SC", slow.witness)
    return Region("neither", None)


__all__ = [
    'Decision', 'Trigger', 'Region', 'OffsetView',
    'fast_condition_at', 'slow_condition_at', 'fast_trigger_at',
    'fast_condition', 'slow_condition', 'fast_trigger',
    'classify_region', 'classify_exact'
]

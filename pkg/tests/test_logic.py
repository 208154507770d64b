# tests/test_logic.py

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcssim.config import PS
from gcssim.logic import (
    OffsetView, Region, classify_exact, classify_region, fast_condition, fast_condition_at,
    fast_trigger, fast_trigger_at, slow_condition, slow_condition_at,
)

KAPPA = 10 * PS
DELTA = 4 * PS
ELL = 2


def view(**offsets) -> OffsetView:
    values = {int(k[1:]): Fraction(v) for k, v in offsets.items()}
    return OffsetView(0, offsets=values, estimates=values)


class TestConditions:

    def test_self_offset_takes_part(self):
        v = view(n1=-3 * PS)
        assert v.o_max == 0
        assert v.o_min == -3 * PS

    def test_synchronized_is_slow(self):
        v = view(n1=0, n2=0)
        assert slow_condition(v, KAPPA, ELL) == (True, 0)
        assert not fast_condition(v, KAPPA, ELL).holds

    def test_neighbor_ahead_is_fast(self):
        v = view(n1=KAPPA, n2=0)
        assert fast_condition(v, KAPPA, ELL) == (True, 0)
        assert not slow_condition(v, KAPPA, ELL).holds

    def test_smallest_witness_wins(self):
        v = view(n1=3 * KAPPA, n2=-2 * KAPPA)
        assert fast_condition(v, KAPPA, ELL) == (True, 1)

    def test_slow_needs_larger_level(self):
        v = view(n1=2 * KAPPA, n2=-2 * KAPPA)
        assert slow_condition(v, KAPPA, ELL) == (True, 1)
        assert not fast_condition(v, KAPPA, ELL).holds

    def test_boundaries_are_inclusive(self):
        assert fast_condition_at(KAPPA, -KAPPA, KAPPA, 0).holds
        assert slow_condition_at(0, 0, KAPPA, 0).holds
        assert fast_trigger_at(KAPPA - DELTA, -KAPPA - DELTA, KAPPA, DELTA, 0) == (1, 0)
        assert fast_trigger_at(KAPPA - DELTA - 1, 0, KAPPA, DELTA, 0) == (0, None)

    def test_missing_mapping_raises(self):
        with pytest.raises(ValueError):
            _ = OffsetView(0, offsets={1: 0}).est_max


class TestRegions:

    def test_region_text(self):
        assert str(Region("SC", 0)) == "SC (s=0)"
        assert str(Region("neither", None)) == "neither"

    def test_synchronized_under_adversarial_offsets(self):
        est = OffsetView(0, estimates={1: Fraction(-3999), 2: Fraction(-3999)})
        assert str(classify_region(est, KAPPA, 4141, ELL)) == "SC (s=0)"

    def test_fast_trigger_region(self):
        est = OffsetView(0, estimates={1: Fraction(6000)})
        assert str(classify_region(est, KAPPA, 4141, ELL)) == "FT (s=0)"

    def test_exact_region(self):
        assert classify_exact(view(n1=KAPPA), KAPPA, ELL).name == "FC"
        assert classify_exact(view(n1=KAPPA // 2), KAPPA, ELL).name == "neither"


class TestMutualExclusion:
    """Slow condition on exact offsets never meets the fast trigger on estimates"""

    def test_exhaustive_grid(self):
        step = KAPPA // 8
        grid = range(-5 * KAPPA, 5 * KAPPA + 1, step)
        perturbations = (-DELTA, 0, DELTA)
        sc_and_ft = 0
        fc_cases = fc_without_ft = 0
        for o_max in grid:
            if o_max < 0:
                continue
            for o_min in grid:
                if o_min > 0:
                    continue
                slow = slow_condition_at(o_max, o_min, KAPPA, ELL).holds
                fast = fast_condition_at(o_max, o_min, KAPPA, ELL - 1).holds
                for p_max in perturbations:
                    for p_min in perturbations:
                        est_max = max(0, o_max + p_max)
                        est_min = min(0, o_min + p_min)
                        ft = fast_trigger_at(est_max, est_min, KAPPA, DELTA, ELL - 1).gamma
                        if slow and ft:
                            sc_and_ft += 1
                        if fast:
                            fc_cases += 1
                            fc_without_ft += not ft
        assert sc_and_ft == 0
        assert fc_cases > 0
        assert fc_without_ft == 0

    @settings(max_examples=300, deadline=None)
    @given(
        offsets=st.dictionaries(st.integers(1, 8), st.integers(-6 * KAPPA, 6 * KAPPA), min_size=1, max_size=8),
        noise=st.lists(st.integers(-DELTA, DELTA), min_size=8, max_size=8),
    )
    def test_random_views(self, offsets, noise):
        exact = {w: Fraction(o) for w, o in offsets.items()}
        estimates = {w: o + noise[w - 1] for w, o in exact.items()}
        v = OffsetView(0, offsets=exact, estimates=estimates)
        ft = fast_trigger(v, KAPPA, DELTA, ELL - 1).gamma
        assert not (slow_condition(v, KAPPA, ELL).holds and ft)
        if fast_condition(v, KAPPA, ELL - 1).holds:
            assert ft == 1

# tests/test_pipeline.py

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcssim.config import PS
from gcssim.errors import MismatchedEll
from gcssim.kleene import Tri
from gcssim.logic import fast_trigger_at
from gcssim.pipeline import (
    PipelineConfig, PipelineState, ThresholdWord, controller, controller_extremes,
    make_m_policy, sample_thresholds, step_pipeline, threshold, word_indices,
)

KAPPA = 10 * PS
DELTA = 4141
EPSILON = 500
ELL = 2


def word(text: str) -> ThresholdWord:
    return ThresholdWord.parse(text)


def sample(estimate, policy="always-m") -> str:
    return str(sample_thresholds(estimate, KAPPA, DELTA, EPSILON, ELL, policy))


class TestKleene:

    def test_connectives(self):
        assert Tri.ONE | Tri.M is Tri.ONE
        assert Tri.ZERO | Tri.M is Tri.M
        assert Tri.ZERO & Tri.M is Tri.ZERO
        assert Tri.ONE & Tri.M is Tri.M
        assert ~Tri.M is Tri.M
        assert ~Tri.ONE is Tri.ZERO

    def test_empty_inputs(self):
        assert Tri.any([]) is Tri.ZERO
        assert Tri.all([]) is Tri.ONE

    def test_parse(self):
        assert Tri.parse("m") is Tri.M
        with pytest.raises(ValueError):
            Tri.parse("x")


class TestThresholds:

    def test_levels(self):
        assert word_indices(ELL) == [2, 1, -1, -2]
        assert [threshold(i, KAPPA, DELTA) for i in word_indices(ELL)] == [-34141, -14141, 5859, 25859]

    def test_zero_index_rejected(self):
        with pytest.raises(ValueError):
            threshold(0, KAPPA, DELTA)

    @pytest.mark.parametrize("estimate, expected", [
        (0, "1100"),
        (5859, "1110"),
        (5700, "11M0"),
        (5359, "1100"),
        (26000, "1111"),
        (-14141, "1100"),
        (-14400, "1M00"),
        (-14641, "1000"),
        (-40000, "0000"),
    ])
    def test_sampling(self, estimate, expected):
        assert sample(estimate) == expected

    def test_m_policies(self):
        assert sample(5700, "resolve-0") == "1100"
        assert sample(5700, "resolve-1") == "1110"
        adversarial = make_m_policy("adversarial")
        first = sample_thresholds(5700, KAPPA, DELTA, EPSILON, ELL, adversarial, link=(0, 1))
        second = sample_thresholds(5700, KAPPA, DELTA, EPSILON, ELL, adversarial, link=(0, 1))
        assert (str(first), str(second)) == ("1110", "1100")

    def test_unknown_policy(self):
        with pytest.raises(ValueError):
            make_m_policy("coin")

    def test_epsilon_must_be_below_kappa(self):
        with pytest.raises(ValueError):
            sample_thresholds(0, KAPPA, DELTA, KAPPA, ELL)

    @settings(max_examples=500, deadline=None)
    @given(st.integers(-6 * KAPPA, 6 * KAPPA))
    def test_at_most_one_m_and_staircase(self, estimate):
        w = sample_thresholds(estimate, KAPPA, DELTA, EPSILON, ELL)
        assert w.m_count <= 1
        assert w.is_staircase()

    def test_word_accessors(self):
        w = word("11M0")
        assert w.ell == 2
        assert w.q(2) is Tri.ONE
        assert w.q(-1) is Tri.M
        assert w.q(-2) is Tri.ZERO
        assert not word("1010").is_staircase()
        assert str(w.resolved(Tri.ONE)) == "1110"

    def test_odd_word_rejected(self):
        with pytest.raises(ValueError):
            word("110")


class TestController:

    def test_neighbor_ahead_speeds_up(self):
        assert controller([word("1110"), word("1100")], ELL) is Tri.ONE

    def test_neighbor_behind_slows_down(self):
        assert controller([word("1100"), word("1000")], ELL) is Tri.ZERO

    def test_second_level(self):
        assert controller([word("1111"), word("1000")], ELL) is Tri.ONE

    def test_m_propagates_when_undecided(self):
        words = [word("11M0"), word("1100")]
        assert controller(words, ELL) is Tri.M
        assert controller_extremes(words, ELL) == (Tri.ZERO, Tri.ONE)

    def test_m_masked_by_definite_term(self):
        assert controller([word("1111"), word("1M00")], ELL) is Tri.ONE

    def test_no_words(self):
        assert controller([], ELL) is Tri.ZERO

    def test_mismatched_ell(self):
        with pytest.raises(MismatchedEll):
            controller([word("10")], ELL)

    @settings(max_examples=500, deadline=None)
    @given(st.lists(st.integers(-6 * KAPPA, 6 * KAPPA), min_size=1, max_size=4))
    def test_matches_fast_trigger_for_every_resolution(self, estimates):
        own = ThresholdWord.synchronized(ELL)
        values = [0] + estimates

        def fires(delta) -> Tri:
            return Tri.from_bool(bool(fast_trigger_at(max(values), min(values), KAPPA, delta, ELL - 1).gamma))

        def decide(policy) -> Tri:
            words = [sample_thresholds(e, KAPPA, DELTA, EPSILON, ELL, policy) for e in estimates]
            return controller(words + [own], ELL)

        # windows read as 0: a bit is 1 iff est >= threshold
        low = decide("resolve-0")
        assert low is fires(DELTA)
        # windows read as 1: a bit is 1 iff est > threshold - epsilon
        high = decide("resolve-1")
        assert high is fires(DELTA + EPSILON - 1)

        words = [sample_thresholds(e, KAPPA, DELTA, EPSILON, ELL) for e in estimates]
        assert controller_extremes(words + [own], ELL) == (low, high)
        assert decide("always-m") is (low if low is high else Tri.M)


class TestStepPipeline:

    config = PipelineConfig(KAPPA, DELTA, EPSILON, ELL, 500 * PS, 25 * PS)

    def test_latency_from_edge_to_md(self):
        state = PipelineState(0, ELL)
        state = step_pipeline(state, 0, True, {1: Fraction(6000)}, config=self.config)
        assert state.edges == 1
        assert state.next_wakeup() == 500 * PS

        state = step_pipeline(state, 500 * PS, config=self.config)
        assert state.output is Tri.ONE
        assert state.md is Tri.ZERO
        assert str(state.latched_words[1]) == "1110"

        state = step_pipeline(state, 525 * PS, config=self.config)
        assert state.md is Tri.ONE
        assert state.md_since == 525 * PS
        assert state.next_wakeup() is None

    def test_unchanged_output_schedules_nothing(self):
        state = step_pipeline(PipelineState(0, ELL), 0, True, {1: Fraction(0)}, config=self.config)
        state = step_pipeline(state, 500 * PS, config=self.config)
        assert state.output is Tri.ZERO
        assert state.pending_md == ()

# pipeline.py
"""
Clocked measurement and control: threshold words sampled at rising clock
edges, the min/max controller evaluated in Kleene logic, and the
measurement/controller latencies between an edge and the mode signal.
"""

import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping

from .errors import MismatchedEll
from .kleene import Tri


def threshold(index: int, kappa: int, delta: int) -> int:
    """Q^i (i > 0) compares against -(2i-1)kappa - delta, Q^-i against (2i-1)kappa - delta."""
    if index == 0:
        raise ValueError("threshold index must be non-zero")
    level = (2 * abs(index) - 1) * kappa
    return (-level if index > 0 else level) - delta


def word_indices(ell: int) -> list[int]:
    """Word order Q^ell .. Q^1 Q^-1 .. Q^-ell."""
    return list(range(ell, 0, -1)) + [-i for i in range(1, ell + 1)]


@dataclass(frozen=True)
class ThresholdWord:
    bits: tuple
    sample_time: int = 0
    estimate: Fraction | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.bits or len(self.bits) % 2:
            raise ValueError("a threshold word has 2*ell bits")

    @property
    def ell(self) -> int:
        return len(self.bits) // 2

    def q(self, index: int) -> Tri:
        if index > 0:
            return self.bits[self.ell - index]
        return self.bits[self.ell - index - 1]

    @property
    def m_count(self) -> int:
        return sum(1 for b in self.bits if b is Tri.M)

    def is_staircase(self) -> bool:
        """1* M? 0* from left to right."""
        text = str(self)
        head = text.lstrip("1")
        if head.startswith("M"):
            head = head[1:]
        return set(head) <= {"0"}

    def resolved(self, to: Tri) -> "ThresholdWord":
        return replace(self, bits=tuple(b.resolve(to) for b in self.bits))

    def __str__(self):
        return "".join(str(b) for b in self.bits)

    @classmethod
    def parse(cls, text: str, sample_time: int = 0) -> "ThresholdWord":
        return cls(tuple(Tri.parse(c) for c in text), sample_time)

    @classmethod
    def synchronized(cls, ell: int, sample_time: int = 0) -> "ThresholdWord":
        """The word of a zero offset, which is what a node reads from itself."""
        return cls((Tri.ONE,) * ell + (Tri.ZERO,) * ell, sample_time, Fraction(0))


class MPolicy:
    """Decides what a bit inside a decision-separator window reads as."""
    name = "always-m"

    def resolve(self, link, index: int) -> Tri:
        return Tri.M


class ResolveTo(MPolicy):
    def __init__(self, value: Tri):
        self.value = value
        self.name = f"resolve-{value.value}"

    def resolve(self, link, index):
        return self.value


class SeededRandomM(MPolicy):
    name = "seeded-random"

    def __init__(self, seed):
        self._rng = random.Random(f"{seed}:m-policy")

    def resolve(self, link, index):
        return Tri.ONE if self._rng.random() < 0.5 else Tri.ZERO


class AdversarialM(MPolicy):
    """Resolves alternately to 1 and 0 on each link, starting with 1."""
    name = "adversarial"

    def __init__(self):
        self._next: dict = {}

    def resolve(self, link, index):
        value = self._next.get(link, Tri.ONE)
        self._next[link] = Tri.not_(value)
        return value


def make_m_policy(name: str, seed=None) -> MPolicy:
    if name == "always-m":
        return MPolicy()
    if name == "resolve-0":
        return ResolveTo(Tri.ZERO)
    if name == "resolve-1":
        return ResolveTo(Tri.ONE)
    if name == "seeded-random":
        if seed is None:
            raise ValueError("seeded-random M policy needs a seed")
        return SeededRandomM(seed)
    if name == "adversarial":
        return AdversarialM()
    raise ValueError(f"unknown M policy: {name}")


def sample_thresholds(estimate, kappa: int, delta: int, epsilon: int, ell: int,
                      m_policy: MPolicy | str | None = None, *, sample_time: int = 0, link=None) -> ThresholdWord:
    """
    Threshold an offset estimate into a word. A bit is 1 at or above its
    threshold, 0 at or below threshold - epsilon, and up to the M policy
    strictly in between.
    """
    if not kappa > epsilon > 0:
        raise ValueError("sampling needs kappa > epsilon > 0")
    if m_policy is None or isinstance(m_policy, str):
        m_policy = make_m_policy(m_policy or "always-m")
    estimate = Fraction(estimate)
    bits = []
    for index in word_indices(ell):
        thr = threshold(index, kappa, delta)
        if estimate >= thr:
            bits.append(Tri.ONE)
        elif estimate <= thr - epsilon:
            bits.append(Tri.ZERO)
        else:
            bits.append(m_policy.resolve(link, index))
    return ThresholdWord(tuple(bits), sample_time, estimate)


def controller(words, ell: int) -> Tri:
    """
    md = OR over i of (OR_w Q^-i_w) AND (AND_w Q^i_w), in Kleene logic.
    No words at all gives 0.
    """
    words = list(words)
    for w in words:
        if w.ell != ell:
            raise MismatchedEll(ell, w.ell)
    terms = []
    for i in range(1, ell + 1):
        q_max = Tri.any(w.q(-i) for w in words)
        q_min = Tri.all(w.q(i) for w in words)
        terms.append(q_max & q_min)
    return Tri.any(terms)


def controller_extremes(words, ell: int) -> tuple[Tri, Tri]:
    """Controller output with every M read as 0, and with every M read as 1."""
    words = list(words)
    low = controller([w.resolved(Tri.ZERO) for w in words], ell)
    high = controller([w.resolved(Tri.ONE) for w in words], ell)
    return low, high


@dataclass(frozen=True)
class PipelineConfig:
    kappa: int
    delta: int
    epsilon: int
    ell: int
    t_meas: int
    t_ctr: int

    @classmethod
    def from_params(cls, vp) -> "PipelineConfig":
        p = vp.params
        return cls(p.kappa, vp.delta, p.epsilon, p.ell, p.t_meas, p.t_ctr)


@dataclass(frozen=True)
class PipelineState:
    node: int
    ell: int
    latched: tuple = ()
    latched_at: int | None = None
    pending_words: tuple = ()
    output: Tri = Tri.ZERO
    pending_md: tuple = ()
    md: Tri = Tri.ZERO
    md_since: int | None = None
    edges: int = 0

    @property
    def latched_words(self) -> Mapping[int, ThresholdWord]:
        return dict(self.latched)

    def next_wakeup(self) -> int | None:
        times = [t for t, _ in self.pending_words] + [t for t, _ in self.pending_md]
        return min(times) if times else None


def step_pipeline(node: PipelineState, now: int, clock_edge: bool = False,
                  estimates: Mapping[int, Fraction] | None = None, *,
                  config: PipelineConfig, m_policy: MPolicy | None = None) -> PipelineState:
    """
    Advance one node's measurement/control pipeline to `now`.

    On a rising edge the words for all neighbors are sampled at once and
    become visible at now + t_meas. Words that are visible by `now` replace
    the latched set; a changed controller output reaches md t_ctr later.
    """
    state = node
    if clock_edge:
        words = tuple(
            (w, sample_thresholds(est, config.kappa, config.delta, config.epsilon, config.ell,
                                  m_policy, sample_time=now, link=(state.node, w)))
            for w, est in sorted((estimates or {}).items())
        )
        state = replace(state, pending_words=state.pending_words + ((now + config.t_meas, words),),
                        edges=state.edges + 1)

    due = [item for item in state.pending_words if item[0] <= now]
    if due:
        pending_md = state.pending_md
        output = state.output
        latched, latched_at = state.latched, state.latched_at
        for available, words in due:
            latched, latched_at = words, available
            value = controller([w for _, w in words] + [ThresholdWord.synchronized(config.ell)], config.ell)
            if value is not output:
                pending_md = pending_md + ((available + config.t_ctr, value),)
                output = value
        state = replace(state, latched=latched, latched_at=latched_at, output=output, pending_md=pending_md,
                        pending_words=tuple(item for item in state.pending_words if item[0] > now))

    applied = [item for item in state.pending_md if item[0] <= now]
    if applied:
        since, md = applied[-1]
        state = replace(state, md=md, md_since=since,
                        pending_md=tuple(item for item in state.pending_md if item[0] > now))
    return state


__all__ = [
    'threshold', 'word_indices', 'ThresholdWord',
    'MPolicy', 'ResolveTo', 'SeededRandomM', 'AdversarialM', 'make_m_policy',
    'sample_thresholds', 'controller', 'controller_extremes',
    'PipelineConfig', 'PipelineState', 'step_pipeline'
]

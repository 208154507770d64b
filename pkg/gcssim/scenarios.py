# scenarios.py
"""Builtin scenario library and seeded random scenarios for property tests."""

import random
from fractions import Fraction

from .clocks import RateSchedule
from .config import (
    PS, NS, DEFAULT_DURATION, DEFAULT_RECORD_STRIDE,
    DELTA0_POLICIES, M_POLICIES, UNLOCKED_POLICIES,
    FAIRBANKS_LINE_LENGTH, FAIRBANKS_FAST_SOURCES, FAIRBANKS_SWAP_SOURCES, FAIRBANKS_SWAP_TIME,
)
from .engine import DelaySchedule, Scenario
from .errors import UnknownScenario
from .kleene import Tri
from .params import SystemParams, Topology

# per-hop delays of the Fairbanks comparison line
FAIRBANKS_FAST_DELAY = 1 * PS
FAIRBANKS_SLOW_DELAY = 8 * PS
FAIRBANKS_DURATION = 200 * NS


def _ahead() -> Scenario:
    return Scenario(
        name="ahead",
        topology=Topology.line(4),
        initial_phases=(0, 40 * PS, 0, 0),
        description="4-node line, node 1 starts 40 ps ahead of the others",
    )


def _behind() -> Scenario:
    return Scenario(
        name="behind",
        topology=Topology.line(4),
        initial_phases=(0, -40 * PS, 0, 0),
        description="4-node line, node 1 starts 40 ps behind the others",
    )


def _gradient() -> Scenario:
    return Scenario(
        name="gradient",
        topology=Topology.line(4),
        initial_phases=(105 * PS, 75 * PS, 30 * PS, 0),
        description="4-node line, per-edge skews of 30/45/30 ps summing to 105 ps",
    )


def _synchronized() -> Scenario:
    return Scenario(
        name="synchronized",
        topology=Topology.line(4),
        description="4-node line, all clocks in phase, no drift",
    )


def _pinned_pair() -> Scenario:
    p = SystemParams()
    return Scenario(
        name="pinned-pair",
        topology=Topology.line(2),
        params=p,
        drift=(RateSchedule.constant(1 + p.rho), RateSchedule.constant(1)),
        stuck_md=((0, Tri.ONE), (1, Tri.ZERO)),
        monitor="off",
        description="2 nodes with modes pinned fast and slow; the local skew grows without bound",
    )


def fairbanks_line_delays(swap_time: int | None = None) -> tuple:
    """Directed delays of the comparison line: fast out of the middle nodes, slow elsewhere."""
    topology = Topology.line(FAIRBANKS_LINE_LENGTH)
    delays = []
    for src, dst in topology.directed_edges:
        if src in FAIRBANKS_FAST_SOURCES:
            if swap_time is not None and src in FAIRBANKS_SWAP_SOURCES:
                schedule = DelaySchedule(((0, FAIRBANKS_FAST_DELAY), (swap_time, FAIRBANKS_SLOW_DELAY)))
            else:
                schedule = DelaySchedule.constant(FAIRBANKS_FAST_DELAY)
        else:
            schedule = DelaySchedule.constant(FAIRBANKS_SLOW_DELAY)
        delays.append(((src, dst), schedule))
    return tuple(delays)


def _fairbanks_params() -> SystemParams:
    return SystemParams(d=FAIRBANKS_SLOW_DELAY, u=FAIRBANKS_SLOW_DELAY - FAIRBANKS_FAST_DELAY)


def _fairbanks_large_local() -> Scenario:
    return Scenario(
        name="fairbanks-large-local",
        topology=Topology.line(FAIRBANKS_LINE_LENGTH),
        params=_fairbanks_params(),
        delays=fairbanks_line_delays(),
        duration=FAIRBANKS_DURATION,
        compare_fairbanks=True,
        description="7-node line with fast links out of nodes 2-4 and slow links elsewhere",
    )


def _fairbanks_swap() -> Scenario:
    return Scenario(
        name="fairbanks-swap",
        topology=Topology.line(FAIRBANKS_LINE_LENGTH),
        params=_fairbanks_params(),
        delays=fairbanks_line_delays(FAIRBANKS_SWAP_TIME),
        duration=FAIRBANKS_DURATION,
        markers=((FAIRBANKS_SWAP_TIME, "swap"),),
        compare_fairbanks=True,
        description="fairbanks-large-local with the links out of nodes 3 and 4 made slow at 50 ns",
    )


BUILTIN_SCENARIOS = {
    "ahead": _ahead,
    "behind": _behind,
    "gradient": _gradient,
    "synchronized": _synchronized,
    "pinned-pair": _pinned_pair,
    "fairbanks-large-local": _fairbanks_large_local,
    "fairbanks-swap": _fairbanks_swap,
}


def builtin_scenario(name: str) -> Scenario:
    """
    Raises:
        UnknownScenario: when the name is not in the library
    """
    factory = BUILTIN_SCENARIOS.get(name)
    if factory is None:
        raise UnknownScenario(name, tuple(BUILTIN_SCENARIOS))
    return factory()


def list_scenarios() -> list[tuple[str, int, str]]:
    entries = []
    for name, factory in BUILTIN_SCENARIOS.items():
        scenario = factory()
        entries.append((name, scenario.topology.node_count, scenario.description))
    return entries


def _random_topology(rng: random.Random) -> Topology:
    kind = rng.choice(("line", "ring", "grid"))
    if kind == "line":
        return Topology.line(rng.randint(2, 9))
    if kind == "ring":
        return Topology.ring(rng.randint(3, 9))
    width, height = rng.choice(((2, 2), (2, 3), (3, 2), (3, 3), (2, 4), (4, 2)))
    return Topology.grid(width, height)


def _random_drift(rng: random.Random, rho: Fraction, duration: int) -> RateSchedule:
    points = [(0, 1 + rho * Fraction(rng.randint(0, 10), 10))]
    for t in sorted(rng.sample(range(1, duration // PS), rng.randint(0, 2))):
        points.append((t * PS, 1 + rho * Fraction(rng.randint(0, 10), 10)))
    return RateSchedule(tuple(points))


def random_scenario(seed: int, duration: int = 10 * NS, record_stride: int = 500 * PS) -> Scenario:
    """
    Small random network under the default parameters: initial phases
    within kappa/2, random drift breakpoints, delays inside [d-U, d] and
    random policies, all drawn from `seed`.
    """
    rng = random.Random(f"{seed}:scenario")
    topology = _random_topology(rng)
    d = rng.randint(0, 6) * PS
    u = rng.randint(0, d // PS) * PS
    params = SystemParams(d=d, u=u)
    n = topology.node_count

    phases = tuple(rng.randint(0, params.kappa // 2 - 1) for _ in range(n))
    drift = tuple(_random_drift(rng, params.rho, duration) for _ in range(n))
    delays = []
    for link in topology.directed_edges:
        first = rng.randint(d - u, d)
        if rng.random() < 0.3:
            later = rng.randint(d - u, d)
            schedule = DelaySchedule(((0, first), (rng.randint(1, duration // PS) * PS, later)))
        else:
            schedule = DelaySchedule.constant(first)
        delays.append((link, schedule))

    return Scenario(
        name=f"random-{seed}",
        topology=topology,
        params=params,
        initial_phases=phases,
        drift=drift,
        delays=tuple(delays),
        delta0_policy=rng.choice(DELTA0_POLICIES),
        m_policy=rng.choice(M_POLICIES),
        unlocked_policy=rng.choice(UNLOCKED_POLICIES),
        duration=duration,
        record_stride=record_stride,
        seed=seed,
        description=f"random {topology.kind} of {n} nodes",
    )


__all__ = [
    'BUILTIN_SCENARIOS', 'builtin_scenario', 'list_scenarios', 'random_scenario',
    'fairbanks_line_delays', 'FAIRBANKS_FAST_DELAY', 'FAIRBANKS_SLOW_DELAY', 'FAIRBANKS_DURATION'
]

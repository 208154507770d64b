# params.py
"""
System parameters, network topology and the derived quantities the skew
theorems are stated in: the measurement error budget, the threshold count
and the global/local skew bounds.

All times are integer femtoseconds. Drift and speed-up factors are exact
fractions so that every derived value is reproducible bit for bit.
"""

from dataclasses import dataclass, fields, replace
from fractions import Fraction
from functools import cached_property
from math import ceil, floor

import networkx as nx

from .config import (
    DEFAULT_RHO, DEFAULT_MU, DEFAULT_KAPPA, DEFAULT_DELTA0, DEFAULT_EPSILON,
    DEFAULT_ELL, DEFAULT_D, DEFAULT_U, DEFAULT_T_CLK, DEFAULT_T_OSC,
    DEFAULT_T_MEAS, DEFAULT_T_CTR, DEFAULT_BUFFER_STAGES,
    DESIGN_POINT_GLOBAL_FACTOR, EPSILON_WARN_RATIO,
)
from .errors import ConfigError, ConstraintViolation
from .logger import get_logger

logger = get_logger(__name__)


def as_fraction(value) -> Fraction:
    """Exact rational from int, str, Decimal, Fraction or float (floats go through repr)."""
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class SystemParams:
    rho: Fraction = DEFAULT_RHO
    mu: Fraction = DEFAULT_MU
    kappa: int = DEFAULT_KAPPA
    delta0: int = DEFAULT_DELTA0
    epsilon: int = DEFAULT_EPSILON
    ell: int = DEFAULT_ELL
    d: int = DEFAULT_D
    u: int = DEFAULT_U
    t_clk: int = DEFAULT_T_CLK
    t_osc: int = DEFAULT_T_OSC
    t_meas: int = DEFAULT_T_MEAS
    t_ctr: int = DEFAULT_T_CTR
    t_max: int | None = None
    buffer_stages: int = DEFAULT_BUFFER_STAGES

    def __post_init__(self):
        object.__setattr__(self, "rho", as_fraction(self.rho))
        object.__setattr__(self, "mu", as_fraction(self.mu))
        if self.t_max is None:
            object.__setattr__(self, "t_max", self.t_meas + self.t_ctr + self.t_osc)

    @property
    def drift_excess(self) -> Fraction:
        """rho + mu + rho*mu: the largest rate difference between two logical clocks."""
        return self.rho + self.mu + self.rho * self.mu

    @property
    def max_rate(self) -> Fraction:
        return (1 + self.mu) * (1 + self.rho)

    def evolve(self, **changes) -> "SystemParams":
        """Copy with changes; t_max is recomputed unless given explicitly."""
        if "t_max" not in changes:
            changes["t_max"] = None
        return replace(self, **changes)


@dataclass(frozen=True)
class SkewBounds:
    global_bound: Fraction
    local_bound: int
    diameter: int
    kappa: int
    reference_global: Fraction

    def __post_init__(self):
        if self.global_bound <= 0 or self.local_bound <= 0:
            raise ValueError("skew bounds must be strictly positive")
        if self.local_bound % self.kappa:
            raise ValueError("local bound must be a multiple of kappa")


@dataclass(frozen=True)
class ValidatedParams:
    """Parameters that passed validate_params, with the derived error budget."""
    params: SystemParams
    delta: int
    diameter: int | None = None
    required_ell: int | None = None

    @property
    def bounds(self) -> SkewBounds | None:
        if self.diameter is None:
            return None
        return skew_bounds(self, self.diameter)


def derived_delta(p: SystemParams) -> int:
    """delta0 + (rho + mu + rho*mu)(T_clk + T_max), rounded up to whole fs."""
    return ceil(p.delta0 + p.drift_excess * (p.t_clk + p.t_max))


def link_error_bound(p: SystemParams) -> int:
    """
    Worst-case error a single pulse measurement picks up from the delay
    uncertainty and from clock drift while the pulse is in flight. The extra
    femtosecond covers quantization of edge times to the grid.
    """
    return ceil(Fraction(p.u, 2) + p.drift_excess * (p.d + 1))


def required_ell(kappa: int, delta: int, local_bound: int) -> int:
    """Largest s with (2s+1)kappa <= local_bound + 2delta, never below 1."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    s = floor(Fraction(local_bound + 2 * delta - kappa, 2 * kappa))
    return max(1, s)


def _ceil_log(x: Fraction, base: Fraction | None) -> int:
    """ceil(log_base(x)) for x >= 1 using exact powers. base None means infinite."""
    if x <= 1:
        return 0
    if base is None:
        return 1
    k, power = 0, Fraction(1)
    while power < x:
        power *= base
        k += 1
    return k


def skew_bounds(p, diameter: int) -> SkewBounds:
    """
    Global bound mu*kappa*D/(mu - 2rho) and local bound
    (ceil(log_{mu/rho}(mu*D/(mu - 2rho))) + 1) * kappa.
    """
    sp = p.params if isinstance(p, ValidatedParams) else p
    if diameter < 1:
        raise ValueError("diameter must be at least 1")
    denominator = sp.mu - 2 * sp.rho
    if denominator <= 0:
        raise ConstraintViolation("mu>2rho", sp.mu, 2 * sp.rho)
    ratio = sp.mu * diameter / denominator
    base = None if sp.rho == 0 else sp.mu / sp.rho
    levels = _ceil_log(ratio, base)
    return SkewBounds(
        global_bound=ratio * sp.kappa,
        local_bound=(levels + 1) * sp.kappa,
        diameter=diameter,
        kappa=sp.kappa,
        reference_global=DESIGN_POINT_GLOBAL_FACTOR * sp.kappa * diameter,
    )


def stabilization_comparator(initial_global, kappa: int, diameter: int, rho, mu) -> Fraction:
    """(G(0) + kappa*D) / (mu - 2rho): order of the self-stabilization time, constant unknown."""
    return (as_fraction(initial_global) + kappa * diameter) / (as_fraction(mu) - 2 * as_fraction(rho))


def naive_tdc_delta0(kappa: int, ell: int, variation, line_extra: int) -> int:
    """
    Static uncertainty of an uncalibrated tapped delay line of length
    (2ell+1)kappa + line_extra whose buffers vary by +-variation.
    """
    length = (2 * ell + 1) * kappa + line_extra
    return ceil(2 * as_fraction(variation) * length)


def validate_params(p: SystemParams, diameter: int | None = None) -> ValidatedParams:
    """
    Check the parameter constraints in order and return the sealed params.
    The threshold-count check needs the network diameter and is skipped
    when none is given.

    Raises:
        ConstraintViolation: naming the first violated constraint
    """
    for f in fields(p):
        value = getattr(p, f.name)
        if value is None:
            continue
        if value < 0:
            raise ConstraintViolation("non-negative", f"{f.name}={value}", 0)
    if p.ell < 1:
        raise ConstraintViolation("ell>=1", p.ell, 1)

    expected_t_max = p.t_meas + p.t_ctr + p.t_osc
    if p.t_max != expected_t_max:
        raise ConstraintViolation("t_max=t_meas+t_ctr+t_osc", p.t_max, expected_t_max)

    if not p.mu > 2 * p.rho:
        raise ConstraintViolation("mu>2rho", p.mu, 2 * p.rho)

    delta = derived_delta(p)
    if not p.kappa > 2 * delta:
        raise ConstraintViolation("kappa>2delta", p.kappa, 2 * delta)

    if not p.epsilon > 0:
        raise ConstraintViolation("epsilon>0", p.epsilon, 0)
    if not p.epsilon < p.kappa:
        raise ConstraintViolation("epsilon<kappa", p.epsilon, p.kappa)
    if p.epsilon > EPSILON_WARN_RATIO * p.kappa:
        logger.warning("epsilon=%s fs is more than a tenth of kappa=%s fs", p.epsilon, p.kappa)

    needed = None
    if diameter is not None:
        bounds = skew_bounds(p, diameter)
        needed = required_ell(p.kappa, delta, bounds.local_bound)
        if p.ell < needed:
            raise ConstraintViolation("ell>=required_ell", p.ell, needed)

    return ValidatedParams(params=p, delta=delta, diameter=diameter, required_ell=needed)


@dataclass(frozen=True)
class Topology:
    """Connected undirected graph on nodes 0..node_count-1. Self-loops are implicit."""
    node_count: int
    edges: frozenset
    kind: str = "custom"

    def __post_init__(self):
        if self.node_count < 2:
            raise ConfigError("topology needs at least two nodes", key="topology.size")
        normalized = set()
        for u, v in self.edges:
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise ConfigError(f"edge ({u}, {v}) references a missing node", key="topology.edges")
            if u != v:
                normalized.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(normalized))
        if not nx.is_connected(self.graph):
            raise ConfigError("topology must be connected", key="topology.edges")

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(sorted(self.edges))
        return g

    @cached_property
    def diameter(self) -> int:
        return nx.diameter(self.graph)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return tuple(sorted(self.graph.neighbors(v)))

    @property
    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    @property
    def directed_edges(self) -> list[tuple[int, int]]:
        return sorted([(u, v) for u, v in self.edges] + [(v, u) for u, v in self.edges])

    @classmethod
    def line(cls, n: int) -> "Topology":
        return cls(n, frozenset((i, i + 1) for i in range(n - 1)), kind="line")

    @classmethod
    def ring(cls, n: int) -> "Topology":
        if n < 3:
            raise ConfigError("a ring needs at least three nodes", key="topology.size")
        return cls(n, frozenset((i, (i + 1) % n) for i in range(n)), kind="ring")

    @classmethod
    def grid(cls, width: int, height: int | None = None) -> "Topology":
        height = width if height is None else height
        edges = set()
        for r in range(height):
            for c in range(width):
                v = r * width + c
                if c + 1 < width:
                    edges.add((v, v + 1))
                if r + 1 < height:
                    edges.add((v, v + width))
        return cls(width * height, frozenset(edges), kind="grid")

    @classmethod
    def custom(cls, n: int, edges) -> "Topology":
        return cls(n, frozenset(tuple(e) for e in edges), kind="custom")


__all__ = [
    'as_fraction', 'SystemParams', 'SkewBounds', 'ValidatedParams', 'Topology',
    'derived_delta', 'link_error_bound', 'required_ell', 'skew_bounds',
    'stabilization_comparator', 'naive_tdc_delta0', 'validate_params'
]

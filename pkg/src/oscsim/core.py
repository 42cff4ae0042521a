"""Core domain types: agents, the tripartite network, scenario configuration, RNG.

The network is strictly layered (supplier -> distributor -> consumer); links
only ever connect adjacent echelons in the downstream direction. All
randomness in a run flows through a single seeded ``RngStream`` that can be
split into named child streams, so that two runs with the same configuration
are bitwise identical and individual subsystems (pricing, shocks, ...) can be
toggled without perturbing each other's draw sequences.

PRNG: numpy PCG64, seeded through ``numpy.random.SeedSequence`` with the
child-stream name hashed (SHA-256) into the entropy pool.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from functools import lru_cache

import numpy as np

RNG_ALGORITHM = "PCG64+SeedSequence(sha256 path)"


class Echelon(str, Enum):
    SUPPLIER = "supplier"
    DISTRIBUTOR = "distributor"
    CONSUMER = "consumer"


@dataclass(frozen=True, order=True)
class AgentId:
    """Identifier of an agent: its layer plus an index unique within the layer."""

    echelon: Echelon
    index: int

    def __post_init__(self):
        # agent ids are dict keys on the simulation hot path; cache the hash
        object.__setattr__(self, "_hash", hash((self.echelon, self.index)))

    def __hash__(self):
        return self._hash


@lru_cache(maxsize=None)
def supplier(i: int) -> AgentId:
    return AgentId(Echelon.SUPPLIER, i)


@lru_cache(maxsize=None)
def distributor(i: int) -> AgentId:
    return AgentId(Echelon.DISTRIBUTOR, i)


@lru_cache(maxsize=None)
def consumer(i: int) -> AgentId:
    return AgentId(Echelon.CONSUMER, i)


# A directed link is a pair of agent ids (upstream, downstream).
Link = tuple[AgentId, AgentId]


@dataclass
class NetworkState:
    """Tripartite directed network at one period.

    ``sd_edges`` holds supplier->distributor links, ``dc_edges``
    distributor->consumer links. Sets guarantee no duplicates; the adjacency
    invariant is enforced by :meth:`check_invariants`.
    """

    suppliers: set[AgentId]
    distributors: set[AgentId]
    consumers: set[AgentId]
    sd_edges: set[Link] = field(default_factory=set)
    dc_edges: set[Link] = field(default_factory=set)
    period: int = 0

    def nodes(self) -> set[AgentId]:
        return self.suppliers | self.distributors | self.consumers

    def edges(self) -> set[Link]:
        return self.sd_edges | self.dc_edges

    def check_invariants(self) -> None:
        """Raise ValueError if any structural invariant is violated."""
        if self.period < 0:
            raise ValueError("period must be >= 0")
        for a in self.suppliers:
            if a.echelon is not Echelon.SUPPLIER:
                raise ValueError(f"{a} in supplier set")
        for a in self.distributors:
            if a.echelon is not Echelon.DISTRIBUTOR:
                raise ValueError(f"{a} in distributor set")
        for a in self.consumers:
            if a.echelon is not Echelon.CONSUMER:
                raise ValueError(f"{a} in consumer set")
        for s, d in self.sd_edges:
            if s.echelon is not Echelon.SUPPLIER or d.echelon is not Echelon.DISTRIBUTOR:
                raise ValueError(f"sd edge {(s, d)} crosses non-adjacent echelons")
            if s not in self.suppliers or d not in self.distributors:
                raise ValueError(f"sd edge {(s, d)} has a dangling endpoint")
        for d, c in self.dc_edges:
            if d.echelon is not Echelon.DISTRIBUTOR or c.echelon is not Echelon.CONSUMER:
                raise ValueError(f"dc edge {(d, c)} crosses non-adjacent echelons")
            if d not in self.distributors or c not in self.consumers:
                raise ValueError(f"dc edge {(d, c)} has a dangling endpoint")


@dataclass
class ScenarioConfig:
    """Full parameterization of one simulation scenario.

    Defaults correspond to the global parameter table plus the fast-fashion
    industry calibration; the other industry presets are shipped as config
    files (see :mod:`oscsim.config_io`).
    """

    # network
    n_suppliers: int = 5
    n_distributors: int = 8
    n_consumers: int = 14
    horizon_T: int = 100

    # pricing
    mu: float = 0.02
    sigma: float = 0.30
    initial_price_range: tuple[float, float] = (8.0, 12.0)
    perishable: bool = False
    gamma: float = 0.90
    quality_noise_amplitude: float = 0.02

    # logistic link-activation coefficients (profitability, trust, structural)
    theta_p: float = 2.0
    theta_t: float = 0.3
    theta_q: float = 0.15
    structural_quality_weight: float = 0.5
    structural_degree_weight: float = 0.5
    # risk discount applied to the economic link term; scales with sigma
    risk_aversion: float = 0.8

    # trust
    baseline_trust: float = 0.55
    trust_rule: str = "smoothed"  # or "bayes"
    bayes_p_reliable: float = 0.8
    bayes_p_unreliable: float = 0.3
    outcome_quality_weight: float = 0.5
    agent_type_weights: tuple[float, float, float, float] = (0.50, 0.20, 0.10, 0.20)
    learning_rates_by_type: tuple[float, float, float, float] = (0.10, 0.20, 0.30, 0.40)

    # shocks
    shock_probability: float = 0.2
    shock_trust_decay: float = 0.85
    price_spike_factor: float = 1.4
    trust_collapse_factor: float = 0.3
    decay_on_all_shocks: bool = True
    allow_node_exit: bool = True

    # economics
    epsilon: float = 0.1
    q_max_range: tuple[int, int] = (8, 15)
    rebate_delta_range: tuple[float, float] = (0.0, 0.3)
    demand_alpha: float = 20.0
    demand_beta: float = 1.0
    # exponent coupling the demand curve to the prevailing price level
    # (0 = static demand; 1 = intercept and slope fully indexed, so real
    # quantities are invariant to the nominal price trend)
    demand_indexation: float = 1.0
    markup: float = 1.25
    # money-unit normalization applied to profits before the bounded squash
    # in link utilities; keeps the economic term responsive instead of
    # saturating when nominal profits are large
    profit_scale: float = 100.0
    consumer_reliability_range: tuple[float, float] = (0.55, 0.95)

    seed: int = 0

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_config(cfg: ScenarioConfig) -> ValidationReport:
    """Check every ScenarioConfig invariant plus cross-field consistency."""
    v: list[str] = []
    for name in ("n_suppliers", "n_distributors", "n_consumers", "horizon_T"):
        if getattr(cfg, name) < 1:
            v.append(f"{name} must be >= 1")
    if cfg.sigma < 0:
        v.append("sigma must be >= 0")
    if not np.isfinite(cfg.mu):
        v.append("mu must be finite")
    lo, hi = cfg.initial_price_range
    if not (0 < lo <= hi):
        v.append("initial_price_range must be a positive nonempty interval")
    if not (0 < cfg.gamma <= 1):
        v.append("gamma must be in (0, 1]")
    if cfg.quality_noise_amplitude < 0:
        v.append("quality_noise_amplitude must be >= 0")
    for name in ("theta_p", "theta_t", "theta_q"):
        if not np.isfinite(getattr(cfg, name)):
            v.append(f"{name} must be finite")
    if cfg.risk_aversion < 0:
        v.append("risk_aversion must be >= 0")
    if not (0 < cfg.baseline_trust < 1):
        v.append("baseline_trust must be in (0, 1)")
    if cfg.trust_rule not in ("smoothed", "bayes"):
        v.append("trust_rule must be 'smoothed' or 'bayes'")
    for name in ("bayes_p_reliable", "bayes_p_unreliable", "outcome_quality_weight"):
        if not (0 < getattr(cfg, name) < 1):
            v.append(f"{name} must be in (0, 1)")
    if len(cfg.agent_type_weights) != 4 or any(w < 0 for w in cfg.agent_type_weights):
        v.append("agent_type_weights must be 4 nonnegative reals")
    elif abs(sum(cfg.agent_type_weights) - 1.0) > 1e-9:
        v.append("weights must sum to 1")
    if len(cfg.learning_rates_by_type) != 4 or any(
        not (0 < lam < 1) for lam in cfg.learning_rates_by_type
    ):
        v.append("learning_rates_by_type must be 4 reals in (0, 1)")
    if not (0 <= cfg.shock_probability <= 1):
        v.append("shock_probability must be in [0, 1]")
    if not (0 < cfg.shock_trust_decay <= 1):
        v.append("shock_trust_decay must be in (0, 1]")
    if cfg.price_spike_factor <= 1:
        v.append("price_spike_factor must be > 1")
    if not (0 < cfg.trust_collapse_factor <= 1):
        v.append("trust_collapse_factor must be in (0, 1]")
    if cfg.epsilon < 0:
        v.append("epsilon must be >= 0")
    qlo, qhi = cfg.q_max_range
    if not (1 <= qlo <= qhi):
        v.append("q_max_range must be a nonempty interval with bounds >= 1")
    dlo, dhi = cfg.rebate_delta_range
    if not (0 <= dlo <= dhi):
        v.append("rebate_delta_range must be a nonempty nonnegative interval")
    if cfg.demand_alpha <= 0 or cfg.demand_beta <= 0:
        v.append("demand_alpha and demand_beta must be > 0")
    if cfg.markup <= 0:
        v.append("markup must be > 0")
    if cfg.profit_scale <= 0:
        v.append("profit_scale must be > 0")
    if cfg.demand_indexation < 0:
        v.append("demand_indexation must be >= 0")
    rlo, rhi = cfg.consumer_reliability_range
    if not (0 < rlo <= rhi < 1):
        v.append("consumer_reliability_range must lie inside (0, 1)")
    # cross-field: the largest rebate may never drive effective cost negative
    # at the lowest possible initial price.
    if not v and dhi * np.sqrt(qhi) >= lo:
        v.append(
            "rebate_delta_range upper bound too large: "
            "delta_max * sqrt(q_max) must stay below the minimum initial price"
        )
    return ValidationReport(v)


class RngStream:
    """Deterministic, splittable random stream.

    Child streams are derived from the root seed and the full path of child
    names, so ``RngStream(seed).child('a').child('b')`` always yields the same
    draw sequence and never shares state with any sibling.
    """

    def __init__(self, seed: int, _path: tuple[str, ...] = ()):
        self.seed = int(seed)
        self.path = _path
        digest = hashlib.sha256(("/".join(_path)).encode()).digest()
        words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, *words]))
        )

    def child(self, name: str) -> "RngStream":
        return RngStream(self.seed, self.path + (name,))

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high, size=None):
        """Uniform integer in [low, high] inclusive."""
        return self._gen.integers(low, high, size=size, endpoint=True)

    def choice(self, seq):
        return seq[int(self._gen.integers(0, len(seq)))]


def build_initial_network(cfg: ScenarioConfig, rng: RngStream | None = None) -> NetworkState:
    """Create the period-0 network: configured node counts, no edges.

    Links form endogenously during the first evaluation pass; starting empty
    avoids biasing the first link-survival measurement.
    """
    report = validate_config(cfg)
    if not report.ok:
        raise ValueError("invalid config: " + "; ".join(report.violations))
    net = NetworkState(
        suppliers={supplier(i) for i in range(cfg.n_suppliers)},
        distributors={distributor(i) for i in range(cfg.n_distributors)},
        consumers={consumer(i) for i in range(cfg.n_consumers)},
    )
    net.check_invariants()
    return net


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}

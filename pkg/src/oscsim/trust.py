"""Adaptive belief maintenance.

The simulation engine uses the exponentially smoothed update
B' = (1 - lambda) B + lambda s; the exact two-hypothesis Bayesian update and
its additive log-odds form are provided as the reference rules they
approximate. All beliefs are clamped to the open-interval guard band
[1e-6, 1 - 1e-6] so that logit transforms stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import AgentId

GUARD = 1e-6


def clamp_belief(b: float) -> float:
    return min(1.0 - GUARD, max(GUARD, b))


@dataclass
class TrustState:
    """Belief matrices over SD and DC pairs plus per-agent learning rates.

    Beliefs are keyed by (upstream, downstream) agent pairs; learning rates
    are keyed by the agent that holds and updates the belief.
    """

    sd_beliefs: dict[tuple[AgentId, AgentId], float] = field(default_factory=dict)
    dc_beliefs: dict[tuple[AgentId, AgentId], float] = field(default_factory=dict)
    learning_rate: dict[AgentId, float] = field(default_factory=dict)

    def all_beliefs(self) -> dict[tuple[AgentId, AgentId], float]:
        return {**self.sd_beliefs, **self.dc_beliefs}

    def check_invariants(self) -> None:
        for key, b in self.all_beliefs().items():
            if not (GUARD <= b <= 1.0 - GUARD):
                raise ValueError(f"belief {b} for {key} outside guard band")

    def drop_agent(self, agent: AgentId) -> None:
        """Remove every belief row/column touching an exiting agent."""
        self.sd_beliefs = {k: v for k, v in self.sd_beliefs.items() if agent not in k}
        self.dc_beliefs = {k: v for k, v in self.dc_beliefs.items() if agent not in k}
        self.learning_rate.pop(agent, None)


def smoothed_update(belief: float, lam: float, outcome: int) -> float:
    """Exponentially smoothed belief update, clamped to the guard band."""
    if not (0 <= lam <= 1):
        raise ValueError("lambda must be in [0, 1]")
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    return clamp_belief((1.0 - lam) * belief + lam * outcome)


def bayes_update(
    belief: float, p_success_reliable: float, p_success_unreliable: float, outcome: int
) -> float:
    """Exact two-hypothesis Bayesian posterior for a binary outcome."""
    for p in (p_success_reliable, p_success_unreliable):
        if not (0 < p < 1):
            raise ValueError("likelihood parameters must be strictly inside (0, 1)")
    if outcome == 1:
        like_r, like_u = p_success_reliable, p_success_unreliable
    elif outcome == 0:
        like_r, like_u = 1.0 - p_success_reliable, 1.0 - p_success_unreliable
    else:
        raise ValueError("outcome must be 0 or 1")
    num = like_r * belief
    return num / (num + like_u * (1.0 - belief))


def log_odds(belief: float) -> float:
    if not (0 < belief < 1):
        raise ValueError("belief must be strictly inside (0, 1)")
    return math.log(belief / (1.0 - belief))


def from_log_odds(tau: float) -> float:
    # logistic inverse, numerically stable for both tails
    if tau >= 0:
        return 1.0 / (1.0 + math.exp(-tau))
    e = math.exp(tau)
    return e / (1.0 + e)


def log_odds_update(
    belief: float, p_success_reliable: float, p_success_unreliable: float, outcome: int
) -> float:
    """Additive log-odds form of :func:`bayes_update` (same posterior)."""
    if outcome == 1:
        ratio = p_success_reliable / p_success_unreliable
    elif outcome == 0:
        ratio = (1.0 - p_success_reliable) / (1.0 - p_success_unreliable)
    else:
        raise ValueError("outcome must be 0 or 1")
    return from_log_odds(log_odds(belief) + math.log(ratio))


def transaction_outcome(success_probability: float, rng) -> int:
    """Bernoulli fulfillment outcome: 1 = success, 0 = failure."""
    if not (0 < success_probability < 1):
        raise ValueError("success probability must be strictly inside (0, 1)")
    return 1 if rng.uniform() < success_probability else 0

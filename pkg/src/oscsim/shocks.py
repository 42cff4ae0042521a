"""Exogenous disturbances: price spikes, node exits, trust collapses.

Every shock occurrence additionally applies the global multiplicative trust
decay (optionally restricted to trust-collapse events by config). Exited
nodes never re-enter.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .core import AgentId, NetworkState, RngStream, ScenarioConfig
from .pricing import PriceState
from .trust import TrustState, clamp_belief


class ShockKind(str, Enum):
    PRICE_SPIKE = "price_spike"
    NODE_EXIT = "node_exit"
    TRUST_COLLAPSE = "trust_collapse"


@dataclass(frozen=True)
class ShockEvent:
    kind: ShockKind
    period: int
    target: AgentId | None = None  # supplier for spikes, any agent for exits
    pair: tuple[AgentId, AgentId] | None = None  # DC pair for trust collapse


def _exit_candidates(net: NetworkState) -> list[AgentId]:
    """Agents whose layer would retain at least one node after removal."""
    out: list[AgentId] = []
    for layer in (net.suppliers, net.distributors, net.consumers):
        if len(layer) > 1:
            out.extend(sorted(layer))
    return out


def maybe_draw_shock(
    cfg: ScenarioConfig, net: NetworkState, rng: RngStream, period: int
) -> ShockEvent | None:
    """With probability shock_probability, draw one shock of a uniform kind.

    A node-exit draw degrades to no shock when every layer is down to a
    single node (or exits are disabled by config).
    """
    if rng.uniform() >= cfg.shock_probability:
        return None
    kind = rng.choice([ShockKind.PRICE_SPIKE, ShockKind.NODE_EXIT, ShockKind.TRUST_COLLAPSE])
    if kind is ShockKind.PRICE_SPIKE:
        target = rng.choice(sorted(net.suppliers))
        return ShockEvent(kind, period, target=target)
    if kind is ShockKind.NODE_EXIT:
        if not cfg.allow_node_exit:
            return None
        candidates = _exit_candidates(net)
        if not candidates:
            return None
        return ShockEvent(kind, period, target=rng.choice(candidates))
    pairs = sorted(net.dc_edges) or [
        (d, c) for d in sorted(net.distributors) for c in sorted(net.consumers)
    ]
    return ShockEvent(kind, period, pair=rng.choice(pairs))


def apply_shock(
    event: ShockEvent,
    net: NetworkState,
    trust: TrustState,
    prices: dict[AgentId, PriceState],
    cfg: ScenarioConfig,
) -> None:
    """Mutate network, trust and price state according to one shock event."""
    if event.kind is ShockKind.PRICE_SPIKE:
        s = event.target
        if s not in prices:
            raise ValueError(f"price spike targets unknown supplier {s}")
        st = prices[s]
        prices[s] = PriceState(st.price * cfg.price_spike_factor, st.mu, st.sigma)
    elif event.kind is ShockKind.NODE_EXIT:
        a = event.target
        if a not in net.nodes():
            raise ValueError(f"node exit targets unknown agent {a}")
        for layer in (net.suppliers, net.distributors, net.consumers):
            layer.discard(a)
        net.sd_edges = {e for e in net.sd_edges if a not in e}
        net.dc_edges = {e for e in net.dc_edges if a not in e}
        trust.drop_agent(a)
        prices.pop(a, None)
    else:  # trust collapse on one DC pair
        pair = event.pair
        if pair is not None and pair in trust.dc_beliefs:
            trust.dc_beliefs[pair] = clamp_belief(
                trust.dc_beliefs[pair] * cfg.trust_collapse_factor
            )

    decay = event.kind is ShockKind.TRUST_COLLAPSE or cfg.decay_on_all_shocks
    if decay:
        for key in trust.sd_beliefs:
            trust.sd_beliefs[key] = clamp_belief(trust.sd_beliefs[key] * cfg.shock_trust_decay)
        for key in trust.dc_beliefs:
            trust.dc_beliefs[key] = clamp_belief(trust.dc_beliefs[key] * cfg.shock_trust_decay)

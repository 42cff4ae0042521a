"""Link utilities, logistic activation, improvement-dynamics stability, and
the exact Markov-chain analyzer for tiny instances.

The simulator activates each candidate link independently through a logistic
function of an additive utility (economic + trust + structural terms); the
global normalized form of the link model is intractable at simulation scale,
so it is exercised exactly only on tiny instances by the transition-matrix
analyzer below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .core import AgentId, Echelon, Link, NetworkState, RngStream
from .trust import log_odds


@dataclass(frozen=True)
class LologParams:
    """Sensitivities to the profitability, trust and structural terms."""

    theta_p: float
    theta_t: float
    theta_q: float

    def __post_init__(self):
        for v in (self.theta_p, self.theta_t, self.theta_q):
            if not math.isfinite(v):
                raise ValueError("theta coefficients must be finite")


def candidate_links(net: NetworkState) -> list[Link]:
    """All supplier->distributor and distributor->consumer pairs, sorted."""
    sd = [(s, d) for s in sorted(net.suppliers) for d in sorted(net.distributors)]
    dc = [(d, c) for d in sorted(net.distributors) for c in sorted(net.consumers)]
    return sd + dc


def squash_profit(psi: float) -> float:
    """Map a raw economic term into (-1, 1): psi / (1 + |psi|)."""
    return psi / (1.0 + abs(psi))


def risk_adjusted(psi: float, sigma: float, risk_aversion: float) -> float:
    """Volatility discount on the economic term: psi - r * sigma * |psi|.

    Nonincreasing in sigma for either sign of psi, so greater volatility
    always lowers risk-adjusted profitability.
    """
    return psi - risk_aversion * sigma * abs(psi)


def link_utility(psi: float, trust: float, structural: float, params: LologParams) -> float:
    """Additive link utility: theta_p * squash(psi) + theta_t * logit(trust)
    + theta_q * structural."""
    return (
        params.theta_p * squash_profit(psi)
        + params.theta_t * log_odds(trust)
        + params.theta_q * structural
    )


def activation_probability(utility: float) -> float:
    """Logistic activation F(u) = 1 / (1 + exp(-u)), strictly inside (0, 1)."""
    if not math.isfinite(utility):
        raise ValueError("utility must be finite")
    if utility >= 0:
        return 1.0 / (1.0 + math.exp(-utility))
    e = math.exp(utility)
    return e / (1.0 + e)


def evaluate_candidate_mask(
    psi: np.ndarray,
    trust: np.ndarray,
    structural: np.ndarray,
    params: LologParams,
    epsilon: float,
    rng: RngStream,
) -> np.ndarray:
    """Vectorized activation pass over parallel candidate arrays.

    A candidate is active next period iff its economic term exceeds the
    profitability threshold AND an independent uniform draw falls below the
    logistic activation probability. Candidates at or below the threshold are
    dissolved deterministically and consume no randomness; survivors consume
    one uniform draw each, in candidate order.
    """
    psi = np.asarray(psi, dtype=float)
    trust = np.asarray(trust, dtype=float)
    structural = np.asarray(structural, dtype=float)
    if not (np.isfinite(psi).all() and np.isfinite(structural).all()):
        raise ValueError("psi and structural terms must be finite")
    if np.any((trust <= 0.0) | (trust >= 1.0)):
        raise ValueError("trust must be strictly inside (0, 1)")
    mask = np.zeros(psi.shape, dtype=bool)
    alive = psi > epsilon
    n = int(alive.sum())
    if n == 0:
        return mask
    p, t = psi[alive], trust[alive]
    u = (
        params.theta_p * (p / (1.0 + np.abs(p)))
        + params.theta_t * np.log(t / (1.0 - t))
        + params.theta_q * structural[alive]
    )
    with np.errstate(over="ignore"):
        prob = 1.0 / (1.0 + np.exp(-u))
    mask[alive] = rng.uniform(size=n) < prob
    return mask


def evaluate_candidates(
    links: Iterable[Link],
    psi_of: Callable[[Link], float],
    trust_of: Callable[[Link], float],
    structural_of: Callable[[Link], float],
    params: LologParams,
    epsilon: float,
    rng: RngStream,
) -> set[Link]:
    """Stochastic activation pass over an ordered collection of candidates.

    Convenience wrapper around :func:`evaluate_candidate_mask` taking per-link
    accessor callables instead of parallel arrays.
    """
    links = list(links)
    mask = evaluate_candidate_mask(
        np.array([psi_of(l) for l in links], dtype=float),
        np.array([trust_of(l) for l in links], dtype=float),
        np.array([structural_of(l) for l in links], dtype=float),
        params,
        epsilon,
        rng,
    )
    return {link for link, keep in zip(links, mask) if keep}


def evaluate_links(
    net: NetworkState,
    psi_of: Callable[[Link], float],
    trust_of: Callable[[Link], float],
    structural_of: Callable[[Link], float],
    params: LologParams,
    epsilon: float,
    rng: RngStream,
) -> tuple[set[Link], set[Link]]:
    """One full evaluation pass over every candidate link of the network.

    Returns the new (sd_edges, dc_edges).
    """
    active = evaluate_candidates(
        candidate_links(net), psi_of, trust_of, structural_of, params, epsilon, rng
    )
    sd = {link for link in active if link[0].echelon is Echelon.SUPPLIER}
    return sd, active - sd


# ---------------------------------------------------------------------------
# Improvement-dynamics stability finder
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrozenInstance:
    """A frozen-profit snapshot on which stability can be decided exactly.

    ``link_profit(link, edges)`` must be deterministic; ``decider`` names the
    agent that controls each candidate link (the downstream party choosing
    whether to source/buy through it). An agent's payoff is the sum of
    link profits over its active controlled links.
    """

    candidates: tuple[Link, ...]
    decider: dict[Link, AgentId]
    link_profit: Callable[[Link, frozenset], float]

    def agent_payoff(self, agent: AgentId, edges: frozenset) -> float:
        return sum(
            self.link_profit(link, edges)
            for link in edges
            if self.decider[link] == agent
        )


class ImprovementCycleError(RuntimeError):
    """Improvement dynamics failed to make progress (should be unreachable)."""


def _improving_move(
    instance: FrozenInstance, edges: frozenset, epsilon: float
) -> frozenset | None:
    """First strictly improving admissible single-link toggle, scanning agents
    in index order and candidates in enumeration order."""
    agents = sorted({instance.decider[link] for link in instance.candidates})
    for agent in agents:
        base = instance.agent_payoff(agent, edges)
        for link in instance.candidates:
            if instance.decider[link] != agent:
                continue
            toggled = edges ^ {link}
            if link in toggled and instance.link_profit(link, toggled) <= epsilon:
                continue  # adding an unprofitable link is inadmissible
            if instance.agent_payoff(agent, toggled) > base:
                return toggled
    return None


def find_stable_configuration(
    instance: FrozenInstance, epsilon: float, start: Iterable[Link] = ()
) -> frozenset:
    """Run strict-improvement dynamics to a locally stable configuration.

    At the fixed point no agent can strictly raise its payoff with a single
    toggle of a controlled link, and every active link clears the
    profitability threshold.
    """
    edges = frozenset(start)
    # Dissolve any seeded links already below the threshold.
    edges = frozenset(
        link for link in edges if instance.link_profit(link, edges) > epsilon
    )
    max_steps = 2 ** len(instance.candidates)
    seen: set[frozenset] = set()
    for _ in range(max_steps + 1):
        if edges in seen:
            raise ImprovementCycleError("improvement path revisited a configuration")
        seen.add(edges)
        nxt = _improving_move(instance, edges, epsilon)
        if nxt is None:
            # sweep out links that fell to or below the threshold
            trimmed = frozenset(
                link for link in edges if instance.link_profit(link, edges) > epsilon
            )
            if trimmed != edges:
                edges = trimmed
                continue
            return edges
        edges = nxt
    raise ImprovementCycleError("improvement dynamics exceeded the step bound")


def is_stable(instance: FrozenInstance, edges: frozenset, epsilon: float) -> bool:
    """Exhaustive single-toggle verification of local stability."""
    for link in edges:
        if instance.link_profit(link, edges) <= epsilon:
            return False
    return _improving_move(instance, edges, epsilon) is None


# ---------------------------------------------------------------------------
# Exact Markov-chain analyzer (tiny instances)
# ---------------------------------------------------------------------------

MAX_CANDIDATES = 12


@dataclass(frozen=True)
class ErgodicityConfig:
    eta: float  # uniform positivity floor on toggle and stay probabilities
    max_states: int = 2**MAX_CANDIDATES

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be > 0")


@dataclass
class TinyNetSpec:
    """Frozen supplier/distributor bipartite instance for exact-chain analysis.

    Per-link economic terms and trust beliefs are fixed; only the structural
    term (supplier degree and quality) varies with the configuration.
    """

    n_suppliers: int
    n_distributors: int
    psi: np.ndarray  # (n_suppliers, n_distributors) economic terms
    trust: np.ndarray  # same shape, beliefs in (0, 1)
    quality: np.ndarray  # (n_suppliers,) in (0, 1]
    structural_quality_weight: float = 0.5
    structural_degree_weight: float = 0.5

    @property
    def links(self) -> list[tuple[int, int]]:
        return [
            (i, j) for i in range(self.n_suppliers) for j in range(self.n_distributors)
        ]

    @classmethod
    def random(cls, n_suppliers: int, n_distributors: int, rng: RngStream) -> "TinyNetSpec":
        shape = (n_suppliers, n_distributors)
        return cls(
            n_suppliers,
            n_distributors,
            psi=rng.uniform(0.5, 20.0, shape),
            trust=rng.uniform(0.2, 0.9, shape),
            quality=rng.uniform(0.4, 1.0, n_suppliers),
        )

    def utility(self, link_idx: int, state: int, params: LologParams) -> float:
        i, j = self.links[link_idx]
        degree = sum(
            1
            for k, (si, _) in enumerate(self.links)
            if si == i and state >> k & 1
        )
        structural = (
            self.structural_quality_weight * self.quality[i]
            + self.structural_degree_weight * degree / self.n_distributors
        )
        return link_utility(float(self.psi[i, j]), float(self.trust[i, j]), structural, params)


def build_transition_matrix(
    spec: TinyNetSpec, params: LologParams, eta: float
) -> np.ndarray:
    """Row-stochastic matrix of the single-toggle chain over all configurations.

    From each state the m single-link toggles and the stay option share
    probability mass as eta + (1 - (m+1) eta) * w, where w are the normalized
    weights: F(U) for an addition, 1 - F(U) for a deletion, and unit weight
    for staying. Every transition therefore has probability at least eta.
    """
    m = len(spec.links)
    if m > MAX_CANDIDATES:
        raise ValueError(f"state space cap exceeded: {m} candidate links > {MAX_CANDIDATES}")
    if not (0 < eta <= 1.0 / (m + 1)):
        raise ValueError("eta must lie in (0, 1/(m+1)]")
    n_states = 2**m
    P = np.zeros((n_states, n_states))
    residual = 1.0 - (m + 1) * eta
    for state in range(n_states):
        raw = np.empty(m + 1)
        for k in range(m):
            f = activation_probability(spec.utility(k, state, params))
            raw[k] = 1.0 - f if state >> k & 1 else f
        raw[m] = 1.0  # stay option
        w = raw / raw.sum()
        for k in range(m):
            P[state, state ^ (1 << k)] = eta + residual * w[k]
        P[state, state] = eta + residual * w[m]
    return P


class ReducibleChainError(ValueError):
    """The transition matrix does not define a unique stationary law."""


def _strongly_connected(positive: np.ndarray) -> bool:
    n = positive.shape[0]

    def reach(adj):
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            u = stack.pop()
            for v in np.nonzero(adj[u])[0]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        return seen.all()

    return reach(positive) and reach(positive.T)


def stationary_distribution(
    P: np.ndarray, tol: float = 1e-12, max_iter: int = 1_000_000
) -> np.ndarray:
    """Unique stationary vector of an irreducible aperiodic chain.

    Computed by power iteration to an L1 residual below ``tol``. Reducible
    chains (positive-entry graph not strongly connected, or zero diagonal
    everywhere) are rejected.
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("P must be square")
    if not np.allclose(P.sum(axis=1), 1.0, atol=1e-10):
        raise ValueError("P must be row-stochastic")
    positive = P > 0
    if not _strongly_connected(positive):
        raise ReducibleChainError("positive-entry graph is not strongly connected")
    if not positive.diagonal().any():
        raise ReducibleChainError("no positive self-transition; aperiodicity not verified")
    pi = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(max_iter):
        nxt = pi @ P
        if np.abs(nxt - pi).sum() < tol:
            pi = nxt
            break
        pi = nxt
    else:
        raise RuntimeError("power iteration did not converge")
    return pi / pi.sum()


def simulate_chain(
    P: np.ndarray, t_sim: int, rng: RngStream, start_state: int = 0
) -> np.ndarray:
    """Sample a trajectory of state indices of length t_sim."""
    cum = np.cumsum(P, axis=1)
    draws = rng.uniform(size=t_sim)
    states = np.empty(t_sim, dtype=np.int64)
    s = start_state
    for t in range(t_sim):
        s = int(np.searchsorted(cum[s], draws[t], side="right"))
        states[t] = s
    return states


def ergodic_average_check(
    spec: TinyNetSpec,
    params: LologParams,
    eta: float,
    f: Callable[[int], float],
    t_sim: int,
    rng: RngStream,
    start_state: int = 0,
) -> tuple[float, float, float]:
    """Compare the trajectory time-average of f with its stationary expectation.

    Returns (time_average, stationary_expectation, absolute gap).
    """
    P = build_transition_matrix(spec, params, eta)
    pi = stationary_distribution(P)
    values = np.array([f(s) for s in range(P.shape[0])])
    states = simulate_chain(P, t_sim, rng, start_state)
    time_avg = float(values[states].mean())
    expectation = float(values @ pi)
    return time_avg, expectation, abs(time_avg - expectation)


def edge_count(state: int) -> float:
    """Bounded statistic: number of active links in a configuration."""
    return float(bin(state).count("1"))


def influence_index(
    node: AgentId,
    net: NetworkState,
    beliefs: dict[tuple[AgentId, AgentId], float],
    profit_of: Callable[[Link], float],
) -> float:
    """Trust-weighted sum of expected downstream profits over active out-links."""
    total = 0.0
    for link in sorted(net.edges()):
        if link[0] == node:
            total += profit_of(link) * beliefs[link]
    return total

"""Per-period orchestration loop and replication running.

Frozen evaluation order within each period (documented in every output
header so traces can be matched):

    shock -> price/quality step -> contract emission -> SD link evaluation
    -> SD transactions & trust updates -> distributor pricing & DC link
    evaluation -> DC transactions & trust updates -> metrics

Distributors resell at a configurable markup over their cheapest effective
procurement cost; procured quantities become sellable stock, downstream
sales decrement it, and unsold perishable stock decays in value.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from . import economics, trust as trust_mod
from .core import (
    AgentId,
    Link,
    NetworkState,
    RngStream,
    ScenarioConfig,
    build_initial_network,
    validate_config,
)
from .economics import Contract, DemandParams
from .metrics import MetricsSeries, PeriodRecord, mlsp, ncr
from .netdyn import LologParams, evaluate_candidate_mask, risk_adjusted
from .pricing import PriceState, QualityState, gbm_step, quality_step
from .shocks import ShockEvent, apply_shock, maybe_draw_shock
from .trust import GUARD, TrustState, bayes_update, smoothed_update

EVALUATION_ORDER = "shock,price,contracts,sd_links,sd_trust,dc_links,dc_trust,metrics"


@dataclass
class SimulationResult:
    metrics: MetricsSeries
    final_network: NetworkState
    final_trust_summary: dict  # mean/min/max over all beliefs
    shock_log: list[ShockEvent]
    config_echo: ScenarioConfig
    # frozen final-period snapshot used for influence reporting
    final_link_profit: dict[Link, float] = field(default_factory=dict)
    final_beliefs: dict[tuple[AgentId, AgentId], float] = field(default_factory=dict)


def _draw_agent_type(cfg: ScenarioConfig, rng: RngStream) -> int:
    u = rng.uniform()
    acc = 0.0
    for i, w in enumerate(cfg.agent_type_weights):
        acc += w
        if u < acc:
            return i
    return len(cfg.agent_type_weights) - 1


def _success_probability(quality: float, belief: float, weight: float) -> float:
    p = weight * quality + (1.0 - weight) * belief
    return min(1.0 - GUARD, max(GUARD, p))


class _Simulation:
    """Mutable state of one run; ``run`` drives the period loop."""

    def __init__(self, cfg: ScenarioConfig):
        report = validate_config(cfg)
        if not report.ok:
            raise ValueError("invalid config: " + "; ".join(report.violations))
        self.cfg = cfg
        self.params = LologParams(cfg.theta_p, cfg.theta_t, cfg.theta_q)
        self.demand = DemandParams(cfg.demand_alpha, cfg.demand_beta)
        # demand indexation anchor: the resale price implied by the mean
        # initial supplier price, so indexed and static demand coincide at t=0
        self.price_anchor = cfg.markup * 0.5 * sum(cfg.initial_price_range)

        root = RngStream(cfg.seed)
        self.rng_init = root.child("init")
        self.rng_pricing = root.child("pricing")
        self.rng_quality = root.child("quality")
        self.rng_shocks = root.child("shocks")
        self.rng_links = root.child("links")
        self.rng_trust = root.child("trust")

        self.net = build_initial_network(cfg)
        lo, hi = cfg.initial_price_range
        self.prices: dict[AgentId, PriceState] = {}
        self.qualities: dict[AgentId, QualityState] = {}
        self.q_caps: dict[AgentId, int] = {}
        self.deltas: dict[AgentId, float] = {}
        for s in sorted(self.net.suppliers):
            self.prices[s] = PriceState(float(self.rng_init.uniform(lo, hi)), cfg.mu, cfg.sigma)
            # production quality: fresh each period; perishable decay applies
            # per batch (one period of aging before sale), not compounded
            # across the horizon
            self.qualities[s] = QualityState(
                float(self.rng_init.uniform(0.7, 1.0)), cfg.gamma, False
            )
            self.q_caps[s] = int(self.rng_init.integers(*cfg.q_max_range))
            self.deltas[s] = float(self.rng_init.uniform(*cfg.rebate_delta_range))

        self.trust = TrustState()
        for d in sorted(self.net.distributors):
            t = _draw_agent_type(cfg, self.rng_init)
            self.trust.learning_rate[d] = cfg.learning_rates_by_type[t]
        rlo, rhi = cfg.consumer_reliability_range
        self.consumer_reliability: dict[AgentId, float] = {}
        for c in sorted(self.net.consumers):
            t = _draw_agent_type(cfg, self.rng_init)
            self.trust.learning_rate[c] = cfg.learning_rates_by_type[t]
            self.consumer_reliability[c] = float(self.rng_init.uniform(rlo, rhi))
        for s in sorted(self.net.suppliers):
            for d in sorted(self.net.distributors):
                self.trust.sd_beliefs[(s, d)] = cfg.baseline_trust
        for d in sorted(self.net.distributors):
            for c in sorted(self.net.consumers):
                self.trust.dc_beliefs[(d, c)] = cfg.baseline_trust

        self.stock: dict[AgentId, float] = {d: 0.0 for d in self.net.distributors}
        self.stock_value: dict[AgentId, float] = {d: 0.0 for d in self.net.distributors}
        self.shock_log: list[ShockEvent] = []
        self.series = MetricsSeries()
        self.link_profit: dict[Link, float] = {}
        self._refresh_agent_lists()

    def _refresh_agent_lists(self) -> None:
        self._sup = sorted(self.net.suppliers)
        self._dist = sorted(self.net.distributors)
        self._cons = sorted(self.net.consumers)

    def _indexed_demand(self, price: float) -> DemandParams:
        g = (price / self.price_anchor) ** self.cfg.demand_indexation
        return DemandParams(self.demand.alpha * g, self.demand.beta * g)

    # -- belief updates ----------------------------------------------------

    def _update_belief(self, table: dict, key, holder: AgentId, outcome: int) -> None:
        cfg = self.cfg
        if cfg.trust_rule == "bayes":
            table[key] = trust_mod.clamp_belief(
                bayes_update(table[key], cfg.bayes_p_reliable, cfg.bayes_p_unreliable, outcome)
            )
        else:
            table[key] = smoothed_update(table[key], self.trust.learning_rate[holder], outcome)

    # -- one period --------------------------------------------------------

    def step(self, period: int) -> None:
        cfg = self.cfg
        net = self.net
        prev_edges = net.edges()
        prev_nodes = net.nodes()
        sd_deg = Counter(e[0] for e in net.sd_edges)
        dc_deg = Counter(e[0] for e in net.dc_edges)

        # 1. shock draw/apply (stream untouched when shocks are disabled)
        shock_type = "none"
        if cfg.shock_probability > 0:
            event = maybe_draw_shock(cfg, net, self.rng_shocks, period)
            if event is not None:
                apply_shock(event, net, self.trust, self.prices, cfg)
                self.shock_log.append(event)
                shock_type = event.kind.value
                self.stock = {d: self.stock.get(d, 0.0) for d in net.distributors}
                self.stock_value = {d: self.stock_value.get(d, 0.0) for d in net.distributors}
                if cfg.perishable:
                    # disruption delays spoil one period's worth of freshness;
                    # the production state itself stays on the noise walk
                    for s in net.suppliers:
                        decayed = quality_step(
                            QualityState(self.qualities[s].phi, cfg.gamma, True)
                        )
                        self.qualities[s] = QualityState(decayed.phi, cfg.gamma, False)
                self._refresh_agent_lists()
                net.check_invariants()
        suppliers, distributors, consumers = self._sup, self._dist, self._cons

        # 2. price and quality step per surviving supplier (batched draws,
        # consumed in sorted supplier order)
        z = self.rng_pricing.normal(size=len(suppliers))
        noises = self.rng_quality.normal(size=len(suppliers)) * cfg.quality_noise_amplitude
        for i, s in enumerate(suppliers):
            self.prices[s] = gbm_step(self.prices[s], float(z[i]))
            self.qualities[s] = quality_step(self.qualities[s], float(noises[i]))
        # goods quality as experienced downstream: perishables age one period
        # between production and sale
        aging = cfg.gamma if cfg.perishable else 1.0
        offered_phi = {s: aging * self.qualities[s].phi for s in suppliers}

        # 3. contract emission (rebate capped so effective cost stays positive
        # even after price falls)
        contracts: dict[AgentId, Contract] = {}
        for s in suppliers:
            p = self.prices[s].price
            cap = self.q_caps[s]
            delta = min(self.deltas[s], 0.99 * p / math.sqrt(cap))
            contracts[s] = Contract(p, cap, offered_phi[s], delta)

        # 4. SD link evaluation: each distributor solves its procurement
        # problem against every supplier's contract; its downstream set is the
        # currently active consumer links, or the full candidate set while it
        # has none (prospecting).
        q_star: dict[Link, float] = {}
        raw_profit: dict[Link, float] = {}
        n_s, n_d, n_c = len(suppliers), len(distributors), len(consumers)
        psi_sd = np.empty(n_s * n_d)
        trust_sd = np.empty(n_s * n_d)
        downstream_of = {d: [] for d in distributors}
        for dd, c in net.dc_edges:
            downstream_of[dd].append(c)
        demand_by_supplier = {
            s: self._indexed_demand(cfg.markup * contracts[s].unit_price) for s in suppliers
        }
        for j, d in enumerate(distributors):
            downstream = downstream_of[d] or consumers
            belief_sum = sum(self.trust.dc_beliefs[(d, c)] for c in downstream)
            for i, s in enumerate(suppliers):
                dem = demand_by_supplier[s]
                q, profit = economics.procure_single_term(
                    belief_sum * dem.alpha, belief_sum * dem.beta, contracts[s]
                )
                link = (s, d)
                q_star[link] = q
                raw_profit[link] = profit
                k = i * n_d + j
                psi_sd[k] = risk_adjusted(
                    profit / cfg.profit_scale, cfg.sigma, cfg.risk_aversion
                )
                trust_sd[k] = self.trust.sd_beliefs[link]

        # structural term: supplier quality blended with its relative degree
        struct_sd = np.repeat(
            [
                cfg.structural_quality_weight * offered_phi[s]
                + cfg.structural_degree_weight * sd_deg[s] / max(1, n_d)
                for s in suppliers
            ],
            n_d,
        )
        sd_mask = evaluate_candidate_mask(
            psi_sd, trust_sd, struct_sd, self.params, cfg.epsilon, self.rng_links
        )
        new_sd = {
            (suppliers[k // n_d], distributors[k % n_d]) for k in np.flatnonzero(sd_mask)
        }

        # 5. SD transactions: procure, then update trust from the outcome
        # (one batched uniform draw per transacting link, in sorted order)
        unit_cost: dict[AgentId, float] = {}
        sd_links = sorted(new_sd)
        draws = self.rng_trust.uniform(size=len(sd_links))
        for link, u in zip(sd_links, draws):
            s, d = link
            q = math.floor(q_star[link])
            cost = economics.effective_cost(contracts[s], q_star[link])
            if q > 0:
                self.stock[d] += q
                self.stock_value[d] += cost * q
            unit_cost[d] = min(unit_cost.get(d, math.inf), cost)
            p_success = _success_probability(
                offered_phi[s], self.trust.sd_beliefs[link], cfg.outcome_quality_weight
            )
            self._update_belief(self.trust.sd_beliefs, link, d, int(u < p_success))

        # 6. distributor pricing and DC link evaluation; the consumer-side
        # surplus depends only on the distributor's posted price
        resale_price: dict[AgentId, float] = {
            d: cfg.markup * c for d, c in unit_cost.items()
        }
        supplier_quality: dict[AgentId, float] = {d: 0.0 for d in distributors}
        for s, d in new_sd:
            supplier_quality[d] = max(supplier_quality[d], offered_phi[s])
        utility_d: dict[AgentId, float] = {}
        psi_d: dict[AgentId, float] = {}
        wanted_d: dict[AgentId, int] = {}
        for d in distributors:
            price = resale_price.get(d)
            if price is None:
                utility_d[d] = psi_d[d] = 0.0
                wanted_d[d] = 0
            else:
                dem = self._indexed_demand(price)
                q_dem, util = economics.consumer_utility(dem, price)
                utility_d[d] = util
                wanted_d[d] = math.floor(q_dem)
                psi_d[d] = risk_adjusted(
                    util / cfg.profit_scale, cfg.sigma, cfg.risk_aversion
                )
        psi_dc = np.repeat([psi_d[d] for d in distributors], n_c)
        struct_dc = np.repeat(
            [
                cfg.structural_quality_weight * supplier_quality[d]
                + cfg.structural_degree_weight * dc_deg[d] / max(1, n_c)
                for d in distributors
            ],
            n_c,
        )
        trust_dc = np.array(
            [self.trust.dc_beliefs[(d, c)] for d in distributors for c in consumers]
        )
        dc_mask = evaluate_candidate_mask(
            psi_dc, trust_dc, struct_dc, self.params, cfg.epsilon, self.rng_links
        )
        new_dc = {
            (distributors[k // n_c], consumers[k % n_c]) for k in np.flatnonzero(dc_mask)
        }

        # 7. DC transactions against the stock ledger, then trust updates
        dc_links = sorted(new_dc)
        draws = self.rng_trust.uniform(size=len(dc_links))
        for link, u in zip(dc_links, draws):
            d, c = link
            served = min(self.stock[d], wanted_d[d])
            if served > 0 and self.stock[d] > 0:
                fraction = served / self.stock[d]
                self.stock_value[d] -= fraction * self.stock_value[d]
            self.stock[d] -= served
            if self.stock[d] < 0:
                raise RuntimeError(f"period {period}: stock ledger went negative for {d}")
            p_success = _success_probability(
                self.consumer_reliability[c], self.trust.dc_beliefs[link], cfg.outcome_quality_weight
            )
            self._update_belief(self.trust.dc_beliefs, link, d, int(u < p_success))
        if cfg.perishable:
            for d in distributors:
                self.stock_value[d] *= cfg.gamma

        # 8. commit the new configuration and record metrics
        net.sd_edges = new_sd
        net.dc_edges = new_dc
        net.period = period
        if period == cfg.horizon_T:
            net.check_invariants()
            self.trust.check_invariants()
        self.link_profit = {
            **raw_profit,
            **{(d, c): utility_d[d] for d in distributors for c in consumers},
        }

        beliefs = list(self.trust.all_beliefs().values())
        self.series.records.append(
            PeriodRecord(
                period=period,
                mlsp=mlsp(prev_edges, net.edges()),
                ncr=ncr(prev_nodes, net.nodes()),
                n_edges=len(net.edges()),
                n_nodes=len(net.nodes()),
                mean_trust=float(np.mean(beliefs)) if beliefs else 0.0,
                mean_price=float(np.mean([self.prices[s].price for s in sorted(net.suppliers)])),
                shock_type=shock_type,
            )
        )

    def run(self) -> SimulationResult:
        for t in range(1, self.cfg.horizon_T + 1):
            try:
                self.step(t)
            except (ValueError, RuntimeError) as exc:
                raise RuntimeError(f"period {t}: {exc}") from exc
        beliefs = list(self.trust.all_beliefs().values())
        summary = {
            "mean": float(np.mean(beliefs)) if beliefs else 0.0,
            "min": float(np.min(beliefs)) if beliefs else 0.0,
            "max": float(np.max(beliefs)) if beliefs else 0.0,
        }
        return SimulationResult(
            metrics=self.series,
            final_network=self.net,
            final_trust_summary=summary,
            shock_log=self.shock_log,
            config_echo=self.cfg,
            final_link_profit=dict(self.link_profit),
            final_beliefs=self.trust.all_beliefs(),
        )


def run_simulation(cfg: ScenarioConfig) -> SimulationResult:
    """Execute one deterministic T-period run of the configured scenario."""
    return _Simulation(cfg).run()


def run_replications(
    cfg: ScenarioConfig, n_reps: int, base_seed: int, n_jobs: int = -1
) -> tuple[list[SimulationResult], dict]:
    """Run n_reps independent replications (seed = base_seed + r).

    Results are ordered by replication index regardless of scheduling, so
    aggregates are deterministic. Returns (results, aggregate) where the
    aggregate holds the mean and standard error of the per-run mean MLSP
    and mean NCR.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    configs = [cfg.with_overrides(seed=base_seed + r) for r in range(n_reps)]
    if n_reps == 1 or n_jobs == 1:
        results = [run_simulation(c) for c in configs]
    else:
        results = Parallel(n_jobs=n_jobs)(delayed(run_simulation)(c) for c in configs)
    mlsps = np.array([r.metrics.mean_mlsp for r in results])
    ncrs = np.array([r.metrics.mean_ncr for r in results])

    def _se(x):
        return float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0

    aggregate = {
        "mean_mlsp": float(mlsps.mean()),
        "stderr_mlsp": _se(mlsps),
        "mean_ncr": float(ncrs.mean()),
        "stderr_ncr": _se(ncrs),
    }
    return results, aggregate

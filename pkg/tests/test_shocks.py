import pytest

from oscsim.core import (
    RngStream,
    ScenarioConfig,
    build_initial_network,
    consumer,
    distributor,
    supplier,
)
from oscsim.pricing import PriceState
from oscsim.shocks import ShockEvent, ShockKind, apply_shock, maybe_draw_shock
from oscsim.trust import TrustState


def _setup(cfg=None):
    cfg = cfg or ScenarioConfig()
    net = build_initial_network(cfg)
    trust = TrustState()
    prices = {}
    for s in sorted(net.suppliers):
        prices[s] = PriceState(10.0, cfg.mu, cfg.sigma)
        for d in sorted(net.distributors):
            trust.sd_beliefs[(s, d)] = cfg.baseline_trust
    for d in sorted(net.distributors):
        for c in sorted(net.consumers):
            trust.dc_beliefs[(d, c)] = cfg.baseline_trust
    return cfg, net, trust, prices


def test_zero_probability_never_fires():
    cfg, net, _, _ = _setup(ScenarioConfig(shock_probability=0.0))
    rng = RngStream(0).child("shocks")
    assert all(maybe_draw_shock(cfg, net, rng, t) is None for t in range(200))


def test_kind_shares_when_certain():
    cfg, net, _, _ = _setup(ScenarioConfig(shock_probability=1.0))
    rng = RngStream(0).child("shocks")
    counts = {k: 0 for k in ShockKind}
    n = 3000
    for t in range(n):
        ev = maybe_draw_shock(cfg, net, rng, t)
        assert ev is not None
        counts[ev.kind] += 1
    for k in ShockKind:
        assert 0.28 <= counts[k] / n <= 0.39


def test_occurrence_frequency():
    cfg, net, _, _ = _setup(ScenarioConfig(shock_probability=0.2))
    rng = RngStream(1).child("shocks")
    n = 10_000
    fired = sum(maybe_draw_shock(cfg, net, rng, t) is not None for t in range(n))
    assert 0.18 <= fired / n <= 0.22


def test_node_exit_degrades_on_minimal_layers():
    cfg, net, _, _ = _setup(
        ScenarioConfig(n_suppliers=1, n_distributors=1, n_consumers=1, shock_probability=1.0)
    )
    rng = RngStream(2).child("shocks")
    for t in range(500):
        ev = maybe_draw_shock(cfg, net, rng, t)
        assert ev is None or ev.kind is not ShockKind.NODE_EXIT


def test_price_spike():
    cfg, net, trust, prices = _setup()
    s = supplier(0)
    prices[s] = PriceState(100.0, cfg.mu, cfg.sigma)
    apply_shock(ShockEvent(ShockKind.PRICE_SPIKE, 3, target=s), net, trust, prices, cfg)
    assert prices[s].price == pytest.approx(140.0)  # factor 1.4
    with pytest.raises(ValueError):
        apply_shock(ShockEvent(ShockKind.PRICE_SPIKE, 3, target=supplier(99)),
                    net, trust, prices, cfg)


def test_global_trust_decay_on_any_shock():
    cfg, net, trust, prices = _setup()
    key = (supplier(0), distributor(0))
    trust.sd_beliefs[key] = 0.8
    apply_shock(ShockEvent(ShockKind.PRICE_SPIKE, 1, target=supplier(1)),
                net, trust, prices, cfg)
    assert trust.sd_beliefs[key] == pytest.approx(0.8 * 0.85)  # 0.68
    trust.check_invariants()


def test_trust_collapse_on_pair():
    cfg, net, trust, prices = _setup()
    pair = (distributor(0), consumer(0))
    trust.dc_beliefs[pair] = 0.8
    apply_shock(ShockEvent(ShockKind.TRUST_COLLAPSE, 1, pair=pair), net, trust, prices, cfg)
    # pair collapse factor, then the global decay
    assert trust.dc_beliefs[pair] == pytest.approx(0.8 * cfg.trust_collapse_factor * 0.85)
    other = (distributor(1), consumer(0))
    assert trust.dc_beliefs[other] == pytest.approx(cfg.baseline_trust * 0.85)


def test_node_exit_removes_node_and_edges():
    cfg, net, trust, prices = _setup()
    d = distributor(0)
    net.sd_edges = {(supplier(0), d), (supplier(1), d)}
    net.dc_edges = {(d, consumer(0)), (distributor(1), consumer(1))}
    apply_shock(ShockEvent(ShockKind.NODE_EXIT, 5, target=d), net, trust, prices, cfg)
    assert d not in net.nodes()
    assert net.sd_edges == set()
    assert net.dc_edges == {(distributor(1), consumer(1))}
    assert all(d not in k for k in trust.sd_beliefs)
    assert all(d not in k for k in trust.dc_beliefs)
    net.check_invariants()

import math

import numpy as np
import pytest

from oscsim.core import RngStream
from oscsim.economics import (
    Contract,
    DemandParams,
    DownstreamLink,
    NonConcaveObjectiveError,
    ProcurementProblem,
    check_concavity,
    consumer_utility,
    demand_quantity,
    effective_cost,
    expected_profit,
    grid_search_procurement,
    optimal_procurement,
    procure_single_term,
    rebate,
    willingness_to_pay,
)


def test_rebate_values():
    assert rebate(1.0, 4.0) == 2.0
    assert rebate(2.0, 9.0) == 6.0
    assert rebate(0.0, 100.0) == 0.0
    with pytest.raises(ValueError):
        rebate(-0.1, 1.0)


def test_effective_cost():
    c = Contract(10.0, 9, 0.8, rebate_delta=1.0)
    assert effective_cost(c, 4.0) == 8.0
    with pytest.raises(ValueError):
        effective_cost(c, 10.0)  # above capacity


def test_contract_validation():
    with pytest.raises(ValueError):
        Contract(0.0, 5, 0.8)
    with pytest.raises(ValueError):
        Contract(10.0, 0, 0.8)
    with pytest.raises(ValueError):
        Contract(10.0, 5, 1.5)
    with pytest.raises(ValueError):
        Contract(2.0, 9, 0.8, rebate_delta=1.0)  # 1*sqrt(9) > 2
    # rebate exactly exhausting the unit price at capacity is allowed
    Contract(2.0, 4, 0.8, rebate_delta=1.0)


def test_demand_quantity():
    d = DemandParams(10.0, 2.0)
    assert demand_quantity(d, 4.0) == 3.0
    assert demand_quantity(d, 12.0) == 0.0  # clamped


def test_willingness_to_pay():
    assert willingness_to_pay(DemandParams(10.0, 2.0), 3.0) == pytest.approx(21.0)
    assert willingness_to_pay(DemandParams(1.0, 1.0), 1.0) == pytest.approx(0.5)


def test_consumer_utility():
    d = DemandParams(10.0, 2.0)
    q, u = consumer_utility(d, 4.0)
    assert (q, u) == (3.0, pytest.approx(9.0))
    q, u = consumer_utility(d, 4.0, rebate_delta=1.0)
    assert q == 3.0
    assert u == pytest.approx(9.0 + 3.0 * math.sqrt(3.0))
    q, u = consumer_utility(d, 10.0)  # price at the demand intercept
    assert (q, u) == (0.0, 0.0)


def test_expected_profit_example():
    contract = Contract(2.0, 4, 0.9, rebate_delta=1.0)
    link = DownstreamLink(0.5, DemandParams(8.0, 4.0 / 3.0), 3.0)
    # revenue 0.5 * (8 - 4) * 3 = 6; effective cost (2 - 2) * 4 = 0
    assert expected_profit(contract, 4.0, [link]) == pytest.approx(6.0)


def test_expected_profit_degenerate():
    contract = Contract(2.0, 4, 0.9)
    assert expected_profit(contract, 4.0, []) == pytest.approx(-8.0)
    link = DownstreamLink(1e-9 + 1e-12, DemandParams(8.0, 1.0), 3.0)
    # belief ~ 0 wipes out the revenue side
    assert expected_profit(contract, 0.0, [link]) == pytest.approx(0.0, abs=1e-6)


def test_expected_profit_linear_in_belief():
    # the objective is affine in each downstream belief; the finite
    # difference must match the analytic slope (alpha - beta q) q
    rng = RngStream(3).child("lemma")
    contract = Contract(5.0, 10, 0.8, rebate_delta=0.3)
    for _ in range(50):
        alpha = float(rng.uniform(5.0, 20.0))
        beta = float(rng.uniform(0.5, 2.0))
        qk = float(rng.uniform(0.0, alpha / beta))
        b = float(rng.uniform(0.1, 0.9))
        h = 1e-3
        lo = [DownstreamLink(b - h, DemandParams(alpha, beta), qk)]
        hi = [DownstreamLink(b + h, DemandParams(alpha, beta), qk)]
        fd = (expected_profit(contract, 2.0, hi) - expected_profit(contract, 2.0, lo)) / (2 * h)
        assert fd == pytest.approx((alpha - beta * qk) * qk, abs=1e-9)


def test_optimal_procurement_examples():
    # max (10 - q) q - 2 q  ->  q* = 4
    p1 = ProcurementProblem(((1.0, 10.0, 1.0),), Contract(2.0, 10, 0.8))
    q, _ = optimal_procurement(p1)
    assert q == pytest.approx(4.0, abs=1e-6)
    # max (10 - q) q - 4 q  ->  q* = 3
    p2 = ProcurementProblem(((1.0, 10.0, 1.0),), Contract(4.0, 10, 0.8))
    q, _ = optimal_procurement(p2)
    assert q == pytest.approx(3.0, abs=1e-6)
    # binding capacity
    p3 = ProcurementProblem(((1.0, 10.0, 1.0),), Contract(2.0, 2, 0.8))
    q, resid = optimal_procurement(p3)
    assert q == 2.0 and resid >= 0


def test_zero_procurement_when_unprofitable():
    prob = ProcurementProblem(((0.5, 3.0, 1.0),), Contract(8.0, 10, 0.8))
    q, _ = optimal_procurement(prob)
    assert q == 0.0


def test_grid_oracle_agreement():
    rng = RngStream(17).child("oracle")
    checked = 0
    while checked < 30:
        alpha = float(rng.uniform(5.0, 25.0))
        beta = float(rng.uniform(0.5, 2.5))
        belief = float(rng.uniform(0.2, 1.0))
        q_max = int(rng.integers(4, 15))
        price = float(rng.uniform(1.0, 0.8 * alpha))
        delta = float(rng.uniform(0.0, 0.4)) * price / math.sqrt(q_max)
        prob = ProcurementProblem(((belief, alpha, beta),), Contract(price, q_max, 0.8, delta))
        try:
            q_solver, _ = optimal_procurement(prob)
        except NonConcaveObjectiveError:
            continue
        q_grid, _ = grid_search_procurement(prob, resolution=1e-4)
        assert abs(q_solver - q_grid) < 1e-3
        checked += 1


def test_closed_form_matches_general_solver():
    rng = RngStream(23).child("closed")
    for _ in range(100):
        alpha = float(rng.uniform(5.0, 25.0))
        beta = float(rng.uniform(0.5, 2.5))
        q_max = int(rng.integers(4, 15))
        price = float(rng.uniform(1.0, 0.8 * alpha))
        delta = float(rng.uniform(0.0, 0.4)) * price / math.sqrt(q_max)
        contract = Contract(price, q_max, 0.8, delta)
        q_fast, v_fast = procure_single_term(alpha, beta, contract)
        prob = ProcurementProblem(((1.0, alpha, beta),), contract)
        try:
            q_gen, _ = optimal_procurement(prob)
        except NonConcaveObjectiveError:
            q_gen, _ = grid_search_procurement(prob, resolution=1e-4)
        assert abs(q_fast - q_gen) < 1e-3
        assert v_fast == pytest.approx(prob.objective(q_fast), abs=1e-9)


def test_concavity_probe_rejects_convex_region():
    # rebate curvature dominating the revenue side is flagged
    prob = ProcurementProblem(((1.0, 0.5, 0.01),), Contract(5.0, 1, 0.8, rebate_delta=4.9))
    with pytest.raises(NonConcaveObjectiveError):
        check_concavity(prob)


def test_comparative_statics_single_instance():
    # q* nondecreasing in belief, nonincreasing in price
    q_by_belief = []
    for b in np.linspace(0.3, 1.0, 8):
        prob = ProcurementProblem(((float(b), 10.0, 1.0),), Contract(2.0, 12, 0.8, 0.1))
        q_by_belief.append(optimal_procurement(prob)[0])
    assert all(b - a >= -1e-6 for a, b in zip(q_by_belief, q_by_belief[1:]))
    q_by_price = []
    for p in np.linspace(1.0, 8.0, 8):
        prob = ProcurementProblem(((0.8, 10.0, 1.0),), Contract(float(p), 12, 0.8, 0.1))
        q_by_price.append(optimal_procurement(prob)[0])
    assert all(b - a <= 1e-6 for a, b in zip(q_by_price, q_by_price[1:]))


def test_downstream_link_validation():
    with pytest.raises(ValueError):
        DownstreamLink(0.0, DemandParams(5.0, 1.0), 1.0)
    with pytest.raises(ValueError):
        DownstreamLink(0.5, DemandParams(5.0, 1.0), -1.0)

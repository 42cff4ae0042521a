import math

import pytest

from oscsim.core import RngStream, supplier, distributor
from oscsim.trust import (
    GUARD,
    TrustState,
    bayes_update,
    clamp_belief,
    from_log_odds,
    log_odds,
    log_odds_update,
    smoothed_update,
    transaction_outcome,
)


def test_smoothed_update_examples():
    assert smoothed_update(0.5, 0.2, 1) == pytest.approx(0.6)
    assert smoothed_update(0.5, 0.0, 1) == 0.5  # zero learning rate: frozen
    assert smoothed_update(0.5, 1.0, 0) == GUARD  # full jump, clamped


def test_smoothed_update_validation():
    with pytest.raises(ValueError):
        smoothed_update(0.5, -0.1, 1)
    with pytest.raises(ValueError):
        smoothed_update(0.5, 1.1, 0)
    with pytest.raises(ValueError):
        smoothed_update(0.5, 0.2, 2)


def test_smoothed_contraction_exact():
    # |B_t - s| = (1 - lam)^t |B_0 - s|, exactly in floating point for
    # lam = 1/2 and dyadic starting beliefs
    lam = 0.5
    for b0 in (0.5, 0.25, 0.875):
        for s in (0, 1):
            b = b0
            # stay above the guard-band clamp
            for t in range(1, 16):
                b = smoothed_update(b, lam, s)
                assert abs(b - s) == (1.0 - lam) ** t * abs(b0 - s)


def test_bayes_update_examples():
    assert bayes_update(0.5, 0.8, 0.2, 1) == pytest.approx(0.8)
    assert bayes_update(0.5, 0.8, 0.2, 0) == pytest.approx(0.2)
    # symmetric likelihoods carry no information
    assert bayes_update(0.37, 0.6, 0.6, 1) == pytest.approx(0.37)


def test_bayes_update_validation():
    with pytest.raises(ValueError):
        bayes_update(0.5, 1.0, 0.2, 1)
    with pytest.raises(ValueError):
        bayes_update(0.5, 0.8, 0.2, -1)


def test_log_odds_roundtrip():
    assert log_odds(0.5) == 0.0
    assert log_odds(0.8) == pytest.approx(math.log(4.0))
    for b in (0.1, 0.37, 0.93):
        assert from_log_odds(log_odds(b)) == pytest.approx(b, abs=1e-12)
    assert 0.0 < from_log_odds(-30.0) < from_log_odds(30.0) < 1.0


def test_log_odds_equals_bayes():
    rng = RngStream(9).child("equiv")
    for _ in range(1000):
        b = float(rng.uniform(0.01, 0.99))
        pr = float(rng.uniform(0.55, 0.95))
        pu = float(rng.uniform(0.05, 0.45))
        o = int(rng.uniform() < 0.5)
        assert abs(bayes_update(b, pr, pu, o) - log_odds_update(b, pr, pu, o)) < 1e-12


def test_transaction_outcome_frequency():
    rng = RngStream(1).child("bern")
    p = 0.7
    n = 10_000
    hits = sum(transaction_outcome(p, rng) for _ in range(n))
    # 4-sigma binomial band
    assert abs(hits / n - p) < 4 * math.sqrt(p * (1 - p) / n)
    with pytest.raises(ValueError):
        transaction_outcome(0.0, rng)


def test_clamp_belief():
    assert clamp_belief(-3.0) == GUARD
    assert clamp_belief(2.0) == 1.0 - GUARD
    assert clamp_belief(0.42) == 0.42


def test_trust_state_bookkeeping():
    ts = TrustState()
    s0, d0, d1 = supplier(0), distributor(0), distributor(1)
    ts.sd_beliefs[(s0, d0)] = 0.6
    ts.sd_beliefs[(s0, d1)] = 0.4
    ts.learning_rate[d0] = 0.2
    ts.check_invariants()
    ts.drop_agent(d0)
    assert (s0, d0) not in ts.sd_beliefs
    assert (s0, d1) in ts.sd_beliefs
    assert d0 not in ts.learning_rate
    ts.sd_beliefs[(s0, d1)] = 1.5
    with pytest.raises(ValueError):
        ts.check_invariants()

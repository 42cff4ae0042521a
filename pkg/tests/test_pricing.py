import math
import time

import numpy as np
import pytest

from oscsim.core import RngStream
from oscsim.pricing import PriceState, QualityState, gbm_step, quality_step


def test_gbm_zero_noise_step():
    # p' = p * exp(mu - sigma^2/2) when z = 0
    st = PriceState(100.0, 0.02, 0.30)
    out = gbm_step(st, 0.0)
    assert out.price == pytest.approx(100.0 * math.exp(0.02 - 0.5 * 0.09), abs=1e-12)
    assert out.price == pytest.approx(97.5310, abs=1e-4)


def test_gbm_unit_shock():
    st = PriceState(50.0, 0.0, 0.5)
    out = gbm_step(st, 1.0)
    assert out.price == pytest.approx(50.0 * math.exp(-0.125 + 0.5), abs=1e-12)
    assert out.price == pytest.approx(72.7496, abs=1e-4)


def test_gbm_degenerate_is_identity():
    st = PriceState(10.0, 0.0, 0.0)
    for z in (-3.0, 0.0, 2.5):
        assert gbm_step(st, z).price == 10.0


def test_gbm_preserves_parameters():
    st = PriceState(5.0, 0.1, 0.2)
    out = gbm_step(st, 0.7)
    assert (out.mu, out.sigma) == (0.1, 0.2)


def test_gbm_log_return_statistics():
    # sample moments of the exact one-step solution match the lognormal law
    mu, sigma, n = 0.02, 0.30, 10_000
    rng = RngStream(42).child("gbm-stats")
    st = PriceState(100.0, mu, sigma)
    lr = np.empty(n)
    t0 = time.perf_counter()
    for i in range(n):
        nxt = gbm_step(st, float(rng.normal()))
        assert nxt.price > 0
        lr[i] = math.log(nxt.price / st.price)
        st = nxt
    elapsed = time.perf_counter() - t0
    target = mu - 0.5 * sigma**2
    assert abs(lr.mean() - target) < 4 * sigma / math.sqrt(n)
    assert abs(lr.var(ddof=1) - sigma**2) < 0.10 * sigma**2
    assert elapsed < 1.0


def test_gbm_input_validation():
    with pytest.raises(ValueError):
        PriceState(0.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        PriceState(10.0, 0.0, -0.1)
    st = PriceState(10.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        gbm_step(st, float("nan"))
    with pytest.raises(ValueError):
        gbm_step(st, 0.0, dt=0.0)


def test_quality_perishable_decay():
    st = QualityState(1.0, 0.9, True)
    once = quality_step(st)
    assert once.phi == pytest.approx(0.9, abs=1e-12)
    assert quality_step(once).phi == pytest.approx(0.81, abs=1e-12)


def test_quality_walk_zero_noise():
    st = QualityState(0.7, 0.9, False)
    assert quality_step(st, 0.0).phi == 0.7


def test_quality_walk_clamped():
    st = QualityState(0.95, 0.9, False)
    assert quality_step(st, 0.5).phi == 1.0
    assert quality_step(QualityState(0.05, 0.9, False), -0.5).phi == 0.01


def test_quality_validation():
    with pytest.raises(ValueError):
        QualityState(0.0, 0.9)
    with pytest.raises(ValueError):
        QualityState(1.1, 0.9)
    with pytest.raises(ValueError):
        QualityState(0.5, 0.0)

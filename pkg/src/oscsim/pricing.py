"""Stochastic price evolution (geometric Brownian motion) and quality dynamics.

Prices follow the exact lognormal one-step solution of the GBM SDE rather
than an Euler scheme, so positivity is guaranteed and there is no
discretization bias. Quality either decays geometrically (perishable goods)
or follows a small clamped random walk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class PriceState:
    price: float  # currency per unit, > 0
    mu: float  # drift per period
    sigma: float  # volatility per sqrt-period, >= 0

    def __post_init__(self):
        if not (self.price > 0):
            raise ValueError("price must be > 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


@dataclass(frozen=True)
class QualityState:
    phi: float  # reliability / quality level in (0, 1]
    gamma: float = 0.90  # perishability decay factor in (0, 1]
    perishable: bool = False

    def __post_init__(self):
        if not (0 < self.phi <= 1):
            raise ValueError("phi must be in (0, 1]")
        if not (0 < self.gamma <= 1):
            raise ValueError("gamma must be in (0, 1]")


def gbm_step(state: PriceState, z: float, dt: float = 1.0) -> PriceState:
    """One exact GBM step: p' = p * exp((mu - sigma^2/2) dt + sigma sqrt(dt) z).

    ``z`` is a standard-normal draw; the result is strictly positive for any
    finite ``z``.
    """
    if not math.isfinite(z):
        raise ValueError("z must be finite")
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError("dt must be positive and finite")
    growth = (state.mu - 0.5 * state.sigma**2) * dt + state.sigma * math.sqrt(dt) * z
    return replace(state, price=state.price * math.exp(growth))


def quality_step(state: QualityState, noise: float = 0.0) -> QualityState:
    """Advance quality one period.

    Perishable goods decay deterministically by the factor gamma; otherwise
    quality takes a bounded random-walk step (caller supplies the noise draw)
    clamped to [0.01, 1.0].
    """
    if state.perishable:
        return replace(state, phi=state.gamma * state.phi)
    phi = min(1.0, max(0.01, state.phi + noise))
    return replace(state, phi=phi)

"""Contracts, demand, consumer surplus, distributor profit, and the
procurement optimizer.

The distributor's procurement problem maximizes

    U(q) = sum_k B_k * (alpha_k - beta_k q) * q  -  (p - delta sqrt(q)) * q

over q in [0, q_max]. Under linear demand the revenue side is strictly
concave; the sqrt-rebate makes the cost side mildly non-convex near q = 0,
so concavity is probed numerically at construction instead of trusted.
The solver is golden-section search refined by bisection on the derivative
sign; an independent dense-grid search is provided as a cross-check oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/golden ratio


class NonConcaveObjectiveError(ValueError):
    """Raised when the procurement objective fails the concavity probe."""


@dataclass(frozen=True)
class Contract:
    """Supplier offer: unit price, capacity, quality and rebate coefficient."""

    unit_price: float
    q_max: int
    phi: float
    rebate_delta: float = 0.0

    def __post_init__(self):
        if self.unit_price <= 0:
            raise ValueError("unit_price must be > 0")
        if self.q_max < 1:
            raise ValueError("q_max must be >= 1")
        if not (0 < self.phi <= 1):
            raise ValueError("phi must be in (0, 1]")
        if self.rebate_delta < 0:
            raise ValueError("rebate_delta must be >= 0")
        if self.rebate_delta * math.sqrt(self.q_max) > self.unit_price:
            raise ValueError("rebate would drive effective cost negative")


@dataclass(frozen=True)
class DemandParams:
    alpha: float  # demand intercept, > 0
    beta: float  # demand slope, > 0

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be > 0")


@dataclass(frozen=True)
class DownstreamLink:
    """One downstream customer relationship: belief, demand curve, quantity."""

    belief: float
    demand: DemandParams
    quantity: float

    def __post_init__(self):
        if not (0 < self.belief < 1):
            raise ValueError("belief must be strictly inside (0, 1)")
        if self.quantity < 0:
            raise ValueError("quantity must be >= 0")


def rebate(delta: float, q: float) -> float:
    """Concave volume rebate delta * sqrt(q)."""
    if delta < 0 or q < 0:
        raise ValueError("rebate inputs must be nonnegative")
    return delta * math.sqrt(q)


def effective_cost(contract: Contract, q: float) -> float:
    """Per-unit procurement cost after the volume rebate."""
    if q < 0 or q > contract.q_max:
        raise ValueError("q must lie in [0, q_max]")
    return contract.unit_price - rebate(contract.rebate_delta, q)


def demand_quantity(d: DemandParams, price: float) -> float:
    """Quantity demanded at a posted price; negative raw demand clamps to 0."""
    return max(0.0, (d.alpha - price) / d.beta)


def willingness_to_pay(d: DemandParams, q: float) -> float:
    """Area under the inverse demand curve up to q."""
    if q < 0:
        raise ValueError("q must be >= 0")
    return d.alpha * q - 0.5 * d.beta * q * q


def consumer_utility(
    d: DemandParams, distributor_price: float, rebate_delta: float = 0.0
) -> tuple[float, float]:
    """Net consumer surplus at the demand-optimal quantity.

    Returns (q_star, utility) where utility is willingness-to-pay minus
    expenditure plus the rebate recovered on the purchased volume.
    """
    if distributor_price < 0:
        raise ValueError("price must be >= 0")
    q = demand_quantity(d, distributor_price)
    utility = (
        (d.alpha - distributor_price) * q
        - 0.5 * d.beta * q * q
        + rebate(rebate_delta, q) * q
    )
    return q, utility


def expected_profit(
    contract: Contract, q_procured: float, downstream: list[DownstreamLink]
) -> float:
    """Belief-weighted downstream revenue minus effective procurement cost."""
    if q_procured < 0 or q_procured > contract.q_max:
        raise ValueError("q_procured must lie in [0, q_max]")
    revenue = sum(
        link.belief
        * (link.demand.alpha - link.demand.beta * link.quantity)
        * link.quantity
        for link in downstream
    )
    return revenue - effective_cost(contract, q_procured) * q_procured


@dataclass(frozen=True)
class ProcurementProblem:
    """Belief-weighted revenue terms plus the contract being considered.

    Each revenue term contributes B * (alpha - beta q) * q at the common
    procurement quantity q.
    """

    terms: tuple[tuple[float, float, float], ...]  # (belief, alpha, beta)
    contract: Contract

    def objective(self, q: float) -> float:
        rev = sum(b * (a - bb * q) * q for b, a, bb in self.terms)
        return rev - (self.contract.unit_price - self.contract.rebate_delta * math.sqrt(q)) * q

    def derivative(self, q: float) -> float:
        rev = sum(b * (a - 2.0 * bb * q) for b, a, bb in self.terms)
        cost = self.contract.unit_price - 1.5 * self.contract.rebate_delta * math.sqrt(q)
        return rev - cost

    def objective_vec(self, q: np.ndarray) -> np.ndarray:
        rev = np.zeros_like(q)
        for b, a, bb in self.terms:
            rev += b * (a - bb * q) * q
        return rev - (self.contract.unit_price - self.contract.rebate_delta * np.sqrt(q)) * q


def check_concavity(problem: ProcurementProblem, n_points: int = 10, tol: float = 1e-9) -> None:
    """Three-point second-difference probe; raises on a convex region.

    Probe points are interior, so the sqrt-rebate's vanishing-q curvature
    spike is only flagged when it actually reaches into the feasible range.
    """
    q_max = float(problem.contract.q_max)
    h = q_max / (2 * (n_points + 1))
    scale = max(1.0, abs(problem.objective(q_max)), abs(problem.objective(q_max / 2)))
    for k in range(1, n_points + 1):
        q = q_max * k / (n_points + 1)
        second = problem.objective(q - h) - 2.0 * problem.objective(q) + problem.objective(q + h)
        if second > tol * scale:
            raise NonConcaveObjectiveError(
                f"objective not concave near q={q:.4g} (second difference {second:.3g})"
            )


def grid_search_procurement(
    problem: ProcurementProblem, resolution: float = 1e-4
) -> tuple[float, float]:
    """Independent brute-force oracle: dense grid argmax over [0, q_max]."""
    q_max = float(problem.contract.q_max)
    n = int(round(q_max / resolution))
    qs = np.linspace(0.0, q_max, n + 1)
    vals = problem.objective_vec(qs)
    i = int(np.argmax(vals))
    return float(qs[i]), float(vals[i])


def procure_single_term(
    a_eff: float, b_eff: float, contract: Contract
) -> tuple[float, float]:
    """Closed-form maximizer for the one-term objective
    ``(a_eff - b_eff q) q - (p - delta sqrt(q)) q`` on [0, q_max].

    Substituting x = sqrt(q) turns the first-order condition into the
    quadratic 2 b x^2 - 1.5 delta x - (a_eff - p) = 0, so the interior
    stationary point is available directly. Returns (q_star, objective).
    Hot-path equivalent of :func:`optimal_procurement` for the aggregated
    problem the simulation engine builds each period.
    """
    if b_eff <= 0:
        raise ValueError("b_eff must be > 0")
    p, delta, q_max = contract.unit_price, contract.rebate_delta, float(contract.q_max)

    def obj(q: float) -> float:
        return (a_eff - b_eff * q) * q - (p - delta * math.sqrt(q)) * q

    candidates = [0.0, q_max]
    disc = 2.25 * delta * delta + 8.0 * b_eff * (a_eff - p)
    if disc >= 0:
        root = math.sqrt(disc)
        for x in ((1.5 * delta + root) / (4.0 * b_eff), (1.5 * delta - root) / (4.0 * b_eff)):
            if 0.0 < x * x < q_max:
                candidates.append(x * x)
    q_star = max(candidates, key=obj)
    return q_star, obj(q_star)


def optimal_procurement(
    problem: ProcurementProblem, tol: float = 1e-6
) -> tuple[float, float]:
    """Unique maximizer of the concave procurement objective on [0, q_max].

    Returns (q_star, foc_residual). For an interior optimum the residual is
    the gap in the first-order condition (marginal revenue minus marginal
    cost); for a boundary optimum it is the one-sided derivative confirming
    optimality (>= 0 at q_max, <= 0 at 0, up to tolerance).
    """
    check_concavity(problem)
    q_max = float(problem.contract.q_max)

    # Boundary shortcuts via the derivative sign at the ends. The derivative
    # of a concave function is nonincreasing, so a nonpositive derivative at 0
    # (nonnegative at q_max) pins the optimum to that boundary.
    d_hi = problem.derivative(q_max)
    if d_hi >= 0:
        return q_max, d_hi
    d_lo = problem.derivative(min(tol, q_max))
    if d_lo <= 0:
        return 0.0, problem.derivative(min(tol, q_max))

    # Golden-section bracket, then bisection on the derivative sign.
    a, b = 0.0, q_max
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = problem.objective(c), problem.objective(d)
    while b - a > max(tol, 1e-10):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = problem.objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = problem.objective(d)
    lo, hi = max(0.0, a - tol), min(q_max, b + tol)
    # Bisection refinement: derivative is positive at lo, negative at hi for
    # an interior optimum; fall back to the golden-section midpoint otherwise.
    if problem.derivative(lo) > 0 > problem.derivative(hi):
        iters = 0
        while hi - lo > 1e-12 and iters < 100:
            mid = 0.5 * (lo + hi)
            if problem.derivative(mid) > 0:
                lo = mid
            else:
                hi = mid
            iters += 1
        q_star = 0.5 * (lo + hi)
    else:
        q_star = 0.5 * (a + b)
    return q_star, problem.derivative(q_star)

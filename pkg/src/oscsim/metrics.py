"""Resilience metrics, the volatility-survival curve, and threshold estimation.

MLSP (mean link survival probability) is the fraction of previous-period
links still active; NCR (node churn rate) is the normalized symmetric
difference of consecutive node sets. The survival curve S(sigma) is
estimated by the mean MLSP across replications run under common random
numbers, projected onto nonincreasing curves by pool-adjacent-violators
before the critical volatility threshold is extracted.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .core import AgentId, NetworkState, ScenarioConfig
from .netdyn import influence_index


@dataclass
class PeriodRecord:
    period: int
    mlsp: float
    ncr: float
    n_edges: int
    n_nodes: int
    mean_trust: float
    mean_price: float
    shock_type: str  # none | price_spike | node_exit | trust_collapse


@dataclass
class MetricsSeries:
    records: list[PeriodRecord] = field(default_factory=list)

    @property
    def mean_mlsp(self) -> float:
        return float(np.mean([r.mlsp for r in self.records]))

    @property
    def mean_ncr(self) -> float:
        return float(np.mean([r.ncr for r in self.records]))


def mlsp(prev_edges: set, cur_edges: set) -> float:
    """Intersection ratio |E_{t-1} ∩ E_t| / |E_{t-1}|, or 0 when E_{t-1} is empty."""
    if not prev_edges:
        return 0.0
    return len(prev_edges & cur_edges) / len(prev_edges)


def ncr(prev_nodes: set, cur_nodes: set) -> float:
    """Symmetric-difference cardinality over the previous node count."""
    if not prev_nodes:
        raise ValueError("previous node set must be nonempty")
    return len(prev_nodes ^ cur_nodes) / len(prev_nodes)


def temporal_averages(series: MetricsSeries, horizon: int | None = None) -> tuple[float, float]:
    """Arithmetic means of MLSP and NCR over the full horizon."""
    if not series.records:
        raise ValueError("series must be nonempty")
    if horizon is not None and len(series.records) != horizon:
        raise ValueError(f"series length {len(series.records)} != horizon {horizon}")
    return series.mean_mlsp, series.mean_ncr


def pav_nonincreasing(values, weights=None) -> np.ndarray:
    """Pool-adjacent-violators projection onto nonincreasing sequences."""
    values = np.asarray(values, dtype=float)
    if weights is None:
        weights = np.ones_like(values)
    else:
        weights = np.asarray(weights, dtype=float)
    # blocks of (mean, weight, count), merged while an ascent remains
    means: list[float] = []
    wts: list[float] = []
    counts: list[int] = []
    for v, w in zip(values, weights):
        means.append(float(v))
        wts.append(float(w))
        counts.append(1)
        while len(means) > 1 and means[-2] < means[-1]:
            w_new = wts[-2] + wts[-1]
            m_new = (means[-2] * wts[-2] + means[-1] * wts[-1]) / w_new
            means[-2:] = [m_new]
            wts[-2:] = [w_new]
            counts[-2:] = [counts[-2] + counts[-1]]
    return np.repeat(means, counts)


@dataclass
class SurvivalCurve:
    sigmas: np.ndarray
    s_raw: np.ndarray
    stderr: np.ndarray
    s_fit: np.ndarray  # nonincreasing PAV fit of s_raw
    rep_means: np.ndarray | None = None  # (n_sigma, n_reps) per-replication MLSP means

    def __post_init__(self):
        if not np.all(np.diff(self.sigmas) >= 0):
            raise ValueError("sigma grid must be sorted ascending")
        if np.any(np.diff(self.s_fit) > 1e-12):
            raise ValueError("monotone fit must be nonincreasing")


def fit_survival_curve(sigmas, s_raw, stderr, rep_means=None) -> SurvivalCurve:
    sigmas = np.asarray(sigmas, dtype=float)
    s_raw = np.asarray(s_raw, dtype=float)
    return SurvivalCurve(
        sigmas=sigmas,
        s_raw=s_raw,
        stderr=np.asarray(stderr, dtype=float),
        s_fit=pav_nonincreasing(s_raw),
        rep_means=None if rep_means is None else np.asarray(rep_means, dtype=float),
    )


def survival_curve(
    base_cfg: ScenarioConfig,
    sigma_grid,
    replications: int,
    common_seed: int,
    n_jobs: int = -1,
) -> SurvivalCurve:
    """Empirical survival curve: mean-of-means MLSP at each volatility level.

    Replication r uses seed common_seed + r at every sigma (common random
    numbers), so differences along the grid reflect volatility, not noise.
    """
    from .engine import run_replications  # deferred: engine depends on this module

    sigma_grid = sorted(float(s) for s in sigma_grid)
    if replications < 1:
        raise ValueError("replications must be >= 1")
    rep_means = []
    for sigma in sigma_grid:
        cfg = replace(base_cfg, sigma=sigma)
        results, _ = run_replications(cfg, replications, common_seed, n_jobs=n_jobs)
        rep_means.append([r.metrics.mean_mlsp for r in results])
    rep_means = np.asarray(rep_means)
    s_raw = rep_means.mean(axis=1)
    stderr = (
        rep_means.std(axis=1, ddof=1) / np.sqrt(replications)
        if replications > 1
        else np.zeros(len(sigma_grid))
    )
    curve = fit_survival_curve(sigma_grid, s_raw, stderr)
    curve.rep_means = rep_means
    return curve


def estimate_sigma_c(curve: SurvivalCurve, s_star: float) -> float | None:
    """Infimum volatility at which the fitted survival curve falls below s_star.

    Linear interpolation between the bracketing grid points; None when the
    fitted curve never crosses. If even the first point is already below
    s_star, the smallest grid sigma is returned (degenerate crossing).
    """
    if not (0 < s_star < 1):
        raise ValueError("s_star must be in (0, 1)")
    fit = curve.s_fit
    below = np.nonzero(fit < s_star)[0]
    if below.size == 0:
        return None
    i = int(below[0])
    if i == 0:
        return float(curve.sigmas[0])
    s_hi, s_lo = fit[i - 1], fit[i]
    frac = (s_hi - s_star) / (s_hi - s_lo) if s_hi > s_lo else 0.0
    return float(curve.sigmas[i - 1] + frac * (curve.sigmas[i] - curve.sigmas[i - 1]))


def influence_report(
    net: NetworkState,
    beliefs: dict[tuple[AgentId, AgentId], float],
    profit_of: Callable,
) -> list[tuple[AgentId, float]]:
    """Influence index for every supplier and distributor, sorted descending.

    Ties break by agent order (echelon, then index).
    """
    agents = sorted(net.suppliers) + sorted(net.distributors)
    scored = [(a, influence_index(a, net, beliefs, profit_of)) for a in agents]
    return sorted(scored, key=lambda t: (-t[1], t[0]))

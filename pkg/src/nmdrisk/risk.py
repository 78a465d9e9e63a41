"""Liquidity risk metrics over a simulated ensemble.

Value-at-risk is the empirical lower quantile in the order-statistic sense:
the smallest sample value with at least a fraction 1 - alpha of the sample
at or below it. Expected shortfall averages every sample at or below that
value (the VaR point itself included), so reports are reproducible
bit-for-bit given an ensemble. The Term Structure of Liquidity divides the
quantile of the running minimum M(t) by the initial volume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "lower_quantile",
    "var_volume",
    "running_min",
    "tsl",
    "expected_shortfall",
    "RiskReport",
    "build_risk_report",
]


def lower_quantile(sample: np.ndarray, p: float) -> float:
    """Smallest order statistic with cumulative fraction >= p at or below it."""
    x = np.asarray(sample, dtype=float).reshape(-1)
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty sample")
    # the 1e-9 nudge keeps e.g. n*p = 5.0000000000000004 at rank 5
    j = max(1, int(math.ceil(n * p - 1e-9)))
    j = min(j, n)
    return float(np.partition(x, j - 1)[j - 1])


def _volumes(ensemble) -> np.ndarray:
    if hasattr(ensemble, "volumes"):
        return ensemble.volumes()
    v = np.asarray(ensemble, dtype=float)
    if v.ndim != 2:
        raise ValueError("ensemble must provide an (n_paths, steps+1) volume array")
    return v


def _check_alpha(alpha: float) -> None:
    if not 0.5 < alpha < 1.0:
        raise ValueError("alpha must lie in (0.5, 1)")


def var_volume(ensemble, t_step: int, alpha: float) -> float:
    """Value-at-risk of the volume at a grid step: the (1 - alpha) lower
    quantile of D(t)."""
    _check_alpha(alpha)
    d = _volumes(ensemble)
    if not 0 <= t_step < d.shape[1]:
        raise ValueError(f"t_step {t_step} outside the simulated grid")
    return lower_quantile(d[:, t_step], 1.0 - alpha)


def running_min(ensemble) -> np.ndarray:
    """Per-path running minimum M(t) = min_{s <= t} D(s)."""
    d = _volumes(ensemble)
    return np.minimum.accumulate(d, axis=1)


def tsl(ensemble, alpha: float) -> np.ndarray:
    """Term Structure of Liquidity: VaR_alpha(M(t)) / D(0) per grid step."""
    _check_alpha(alpha)
    d = _volumes(ensemble)
    d0 = float(d[0, 0])
    if d0 <= 0.0:
        raise ValueError("initial volume must be > 0")
    m = np.minimum.accumulate(d, axis=1)
    p = 1.0 - alpha
    return np.array([lower_quantile(m[:, t], p) for t in range(d.shape[1])]) / d0


def expected_shortfall(ensemble, t_step: int, alpha: float) -> float:
    """Mean of the samples at or below the alpha-VaR at the given step."""
    _check_alpha(alpha)
    d = _volumes(ensemble)
    if not 0 <= t_step < d.shape[1]:
        raise ValueError(f"t_step {t_step} outside the simulated grid")
    col = d[:, t_step]
    v = lower_quantile(col, 1.0 - alpha)
    tail = col[col <= v]
    if tail.size == 0:  # cannot happen: the VaR is itself a sample point
        return float(col.min())
    return float(tail.mean())


@dataclass
class RiskReport:
    """Per-step risk curves plus the horizon table.

    Curves are indexed by grid step; var_curves and tsl_curves map a
    confidence level to its curve. The table holds, per horizon (rows),
    the running-minimum VaR at each table confidence level and the
    running-minimum expected shortfall, all normalized by D(0).
    """

    grid: np.ndarray
    d0: float
    mean_curve: np.ndarray
    var_curves: dict[float, np.ndarray]
    es_curve: np.ndarray
    es_alpha: float
    tsl_curves: dict[float, np.ndarray]
    horizons_years: tuple[float, ...]
    table_alphas: tuple[float, ...]
    table: np.ndarray = field(default=None)   # (n_horizons, n_alphas + 1)


def build_risk_report(ensemble, alphas=(0.95, 0.99), es_alpha: float = 0.975,
                      horizons_years=(1, 3, 5, 10),
                      steps_per_year: int = 12) -> RiskReport:
    """Compute all standard metrics on one ensemble."""
    for a in alphas:
        _check_alpha(a)
    _check_alpha(es_alpha)
    d = _volumes(ensemble)
    n_steps = d.shape[1]
    d0 = float(d[0, 0])
    if d0 <= 0.0:
        raise ValueError("initial volume must be > 0")
    m = np.minimum.accumulate(d, axis=1)

    mean_curve = d.mean(axis=0)
    var_curves = {
        a: np.array([lower_quantile(d[:, t], 1.0 - a) for t in range(n_steps)])
        for a in alphas
    }
    es_curve = np.array([expected_shortfall(d, t, es_alpha) for t in range(n_steps)])
    tsl_curves = {
        a: np.array([lower_quantile(m[:, t], 1.0 - a) for t in range(n_steps)]) / d0
        for a in alphas
    }

    rows = []
    for h in horizons_years:
        t = int(round(h * steps_per_year))
        if not 0 <= t < n_steps:
            raise ValueError(f"horizon {h}y outside the simulated grid")
        row = [lower_quantile(m[:, t], 1.0 - a) / d0 for a in alphas]
        row.append(expected_shortfall(m, t, es_alpha) / d0)
        rows.append(row)

    return RiskReport(
        grid=np.arange(n_steps),
        d0=d0,
        mean_curve=mean_curve,
        var_curves=var_curves,
        es_curve=es_curve,
        es_alpha=es_alpha,
        tsl_curves=tsl_curves,
        horizons_years=tuple(float(h) for h in horizons_years),
        table_alphas=tuple(float(a) for a in alphas),
        table=np.array(rows),
    )

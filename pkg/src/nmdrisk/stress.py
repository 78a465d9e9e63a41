"""Embedding bank-run severity into the calibrated model.

RDO(t_k, h) is the relative deposit outflow over h steps at confidence
alpha, conditional on the observed state at t_k; its average over all
admissible conditioning points of the panel is the calibration target.
stress_calibrate re-shapes the volume-noise NIG component until that
average hits a prescribed outflow (e.g. 25% over 6 months missed with
probability 0.1%), keeping the noise mean and variance at their calibrated
values: gamma_3 stays fixed, beta_3 is moved by bisection and (delta_3,
mu_3) are re-derived from the moment constraints at every trial. All trials
share one seed, so they see the same underlying variates (common random
numbers) and the empirical objective is a deterministic, effectively
monotone function of beta_3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .estimation import _states
from .levy_ou import Var1Params
from .nig import NigFree, NigParams, annualize_moments, expand_constrained, nig_moments
from .risk import lower_quantile
from .simulation import conditional_simulate

__all__ = ["StressTarget", "StressResult", "rdo", "rdo_bar", "stress_calibrate"]


@dataclass(frozen=True)
class StressTarget:
    """Target outflow embedded at a confidence level over a horizon."""

    outflow_fraction: float = 0.25
    alpha: float = 0.999
    horizon_steps: int = 6          # months on the monthly grid
    mc_paths: int = 20_000
    confirm_paths: int = 100_000
    tolerance: float = 0.005        # absolute, on the achieved average RDO
    max_bisect: int = 60
    max_bracket_expand: int = 30

    def __post_init__(self):
        if not 0.0 < self.outflow_fraction < 1.0:
            raise ValueError("outflow_fraction must lie in (0, 1)")
        if not 0.5 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0.5, 1)")
        if self.horizon_steps < 1:
            raise ValueError("horizon_steps must be >= 1")
        if self.mc_paths < 1 or self.confirm_paths < 1:
            raise ValueError("path counts must be >= 1")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be > 0")


@dataclass
class StressResult:
    params: Var1Params              # full stressed parameter set
    nig3: NigParams                 # stressed volume-noise component
    beta3: float
    log_gamma3: float
    achieved: float                 # average RDO at the calibration path count
    confirmed: float                # average RDO re-measured at confirm_paths
    annual_skewness: float
    annual_excess_kurtosis: float
    trace: list[tuple[float, float]]   # (beta3, average RDO) per trial


def rdo(params: Var1Params, panel, k_index: int, h_steps: int, alpha: float,
        seed: int, n_paths: int = 20_000) -> float:
    """Relative deposit outflow over h steps at confidence alpha, conditional
    on the panel state at k_index: 1 - VaR_alpha(D(t+h)/D(t) | state)."""
    if not 0.5 < alpha < 1.0:
        raise ValueError("alpha must lie in (0.5, 1)")
    x = _states(panel)
    if not 0 <= k_index < x.shape[0]:
        raise ValueError("k_index outside the panel")
    ratios = conditional_simulate(params, x[k_index], h_steps, n_paths,
                                  seed=seed, stream=k_index + 1)
    return 1.0 - lower_quantile(ratios, 1.0 - alpha)


def rdo_bar(params: Var1Params, panel, h_steps: int, alpha: float,
            seed: int, n_paths: int = 20_000) -> float:
    """Average RDO over every conditioning point t_k with t_k + h inside the
    panel (k = 0 .. n - h)."""
    x = _states(panel)
    if x.shape[0] <= h_steps:
        raise ValueError("panel must be longer than the outflow horizon")
    m = x.shape[0] - 1 - h_steps
    total = 0.0
    for k in range(m + 1):
        ratios = conditional_simulate(params, x[k], h_steps, n_paths,
                                      seed=seed, stream=k + 1)
        total += 1.0 - lower_quantile(ratios, 1.0 - alpha)
    return total / (m + 1)


def _with_beta3(calibrated: Var1Params, log_gamma3: float, beta3: float) -> Var1Params:
    sigma3 = float(calibrated.sigma[2])
    nig3 = expand_constrained(NigFree(log_gamma3, beta3, sigma3))
    return Var1Params(a=calibrated.a, B=calibrated.B, S=calibrated.S,
                      sigma=calibrated.sigma, noise_family="nig",
                      nig=(calibrated.nig[0], calibrated.nig[1], nig3),
                      dt=calibrated.dt)


def stress_calibrate(calibrated: Var1Params, panel,
                     target: StressTarget, seed: int = 0) -> StressResult:
    """Find the beta_3 that reproduces the target average RDO.

    The search is a 1-d bisection over beta_3 on (-inf, beta_3_calibrated]
    with gamma_3 frozen, under common random numbers. More negative beta_3
    thickens the left tail of the volume noise and raises the average RDO,
    so the bracket is expanded leftward until the target is enclosed. Raises
    ConvergenceError (carrying the extremal achieved value) if the target
    cannot be bracketed or the bisection stalls.
    """
    if calibrated.noise_family != "nig":
        raise ValueError("stress calibration requires a NIG-family parameter set")
    free3 = NigFree.from_params(calibrated.nig[2])
    lg3 = free3.log_gamma
    gamma3 = math.exp(lg3)
    h, alpha, n_mc = target.horizon_steps, target.alpha, target.mc_paths
    goal = target.outflow_fraction
    trace: list[tuple[float, float]] = []

    def measure(beta3: float) -> tuple[Var1Params, float]:
        p = _with_beta3(calibrated, lg3, beta3)
        rb = rdo_bar(p, panel, h, alpha, seed=seed, n_paths=n_mc)
        trace.append((beta3, rb))
        return p, rb

    beta_right = free3.beta
    p_right, g_right = measure(beta_right)

    def finish(params: Var1Params, beta3: float, achieved: float) -> StressResult:
        confirmed = rdo_bar(params, panel, h, alpha, seed=seed,
                            n_paths=target.confirm_paths)
        mom = nig_moments(params.nig[2])
        sk, xk = annualize_moments(mom.skewness, mom.excess_kurtosis,
                                   round(1.0 / calibrated.dt))
        return StressResult(params=params, nig3=params.nig[2], beta3=beta3,
                            log_gamma3=lg3, achieved=achieved, confirmed=confirmed,
                            annual_skewness=sk, annual_excess_kurtosis=xk,
                            trace=trace)

    if abs(g_right - goal) <= target.tolerance:
        return finish(p_right, beta_right, g_right)
    if g_right > goal:
        raise ConvergenceError(
            f"calibrated model already exceeds the target outflow "
            f"({g_right:.4f} > {goal:.4f}); the stress search only thickens "
            "the left tail", best=(beta_right, g_right))

    # expand leftward until the target is enclosed, tightening the right edge
    # with every point that still falls short of the target
    width = max(gamma3, abs(beta_right), 1.0)
    hi = beta_right
    beta_left, g_left = beta_right, g_right
    for _ in range(target.max_bracket_expand):
        beta_left = beta_right - width
        p_left, g_left = measure(beta_left)
        if abs(g_left - goal) <= target.tolerance:
            return finish(p_left, beta_left, g_left)
        if g_left > goal:
            break
        hi = beta_left
        width *= 2.0
    else:
        raise ConvergenceError(
            f"target outflow {goal:.4f} not reachable within the beta bracket; "
            f"extremal achieved average RDO = {g_left:.4f} at beta3 = {beta_left:.4g}",
            best=(beta_left, g_left))

    lo = beta_left                          # g(lo) > goal > g(hi)
    for _ in range(target.max_bisect):
        mid = 0.5 * (lo + hi)
        p_mid, g_mid = measure(mid)
        if abs(g_mid - goal) <= target.tolerance:
            return finish(p_mid, mid, g_mid)
        if g_mid > goal:
            lo = mid
        else:
            hi = mid
    best_beta, best_g = min(trace, key=lambda bg: abs(bg[1] - goal))
    raise ConvergenceError(
        f"bisection exhausted without reaching the target within tolerance; "
        f"closest achieved average RDO = {best_g:.4f} at beta3 = {best_beta:.4g}",
        best=(best_beta, best_g))

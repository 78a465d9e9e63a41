"""Univariate normal inverse Gaussian (NIG) distribution.

Density, log-density, moments, the moment-constrained two-parameter
reparameterization used inside the likelihood, exact sampling via the
inverse-Gaussian mixture representation, and convolution. Also provides
the modified Bessel function K1 that the density needs, implemented with
piecewise series / Chebyshev approximations so that a log-scaled variant
is available (the likelihood evaluates K1 at arguments large enough for
the plain value to underflow).

Parameter conventions: alpha > 0 is the tail-heaviness parameter, beta
(|beta| < alpha) the asymmetry, delta > 0 the scale, mu the location, and
gamma = sqrt(alpha^2 - beta^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

__all__ = [
    "NigParams",
    "NigFree",
    "NigMoments",
    "bessel_k1",
    "log_bessel_k1",
    "nig_logpdf",
    "nig_pdf",
    "nig_moments",
    "annualize_moments",
    "expand_constrained",
    "nig_sample",
    "nig_convolve",
]

_EULER_GAMMA = 0.57721566490153286061

# Chebyshev coefficients of g(t) = exp(x) sqrt(2x/pi) K1(x) with t = 4/x - 1,
# valid on x in [2, inf). Generated by a 50-digit Chebyshev fit of the exact
# function; the truncated series is accurate to < 1e-19 relative on the
# interval, so double-precision evaluation is limited by rounding only.
_K1E_CHEB = np.array([
    2.170745633103452240796,
    0.08291914491558649624218,
    -0.002280207949895145247055,
    0.0001557594482174180455024,
    -0.00001544862470244902745062,
    0.000001920097185683804325134,
    -2.794160297743656797388e-7,
    4.580722385967014931087e-8,
    -8.254724141098337811607e-9,
    1.607777088921307316832e-9,
    -3.343419366765728849457e-10,
    7.355151364804849418657e-11,
    -1.699468453288186517616e-11,
    4.100839143561441979042e-12,
    -1.028611999630939765676e-12,
    2.671652354631771085711e-13,
    -7.162374471604970912504e-14,
    1.976483269809329305604e-14,
    -5.601019632835790593282e-15,
    1.62664978040270239574e-15,
    -4.832824501299198605128e-16,
    1.466586484997365844863e-16,
    -4.539534566633093103067e-17,
    1.431445632400726550503e-17,
    -4.593217542733375520603e-18,
    1.498319642499657303805e-18,
    -4.964154717570553602361e-19,
    1.669104707829933861687e-19,
])


def _k1_series_small(x):
    """Ascending series with log term, for 0 < x <= 2.

    K1(x) = 1/x + log(x/2) I1(x)
            - (x/4) sum_k [psi(k+1) + psi(k+2)] r^k / (k! (k+1)!),  r = x^2/4.
    """
    r = 0.25 * x * x
    i1 = np.zeros_like(x)
    s = np.zeros_like(x)
    term = np.ones_like(x)
    psi_a = -_EULER_GAMMA       # psi(k+1)
    psi_b = 1.0 - _EULER_GAMMA  # psi(k+2)
    for k in range(18):
        i1 = i1 + term
        s = s + (psi_a + psi_b) * term
        term = term * r / ((k + 1.0) * (k + 2.0))
        psi_a = psi_b
        psi_b = psi_b + 1.0 / (k + 2.0)
    i1 = 0.5 * x * i1
    return 1.0 / x + np.log(0.5 * x) * i1 - 0.25 * x * s


def _k1e_cheb(x):
    """exp(x) sqrt(2x/pi) K1(x) via Clenshaw recurrence, for x >= 2."""
    t = 4.0 / x - 1.0
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    for c in _K1E_CHEB[:0:-1]:
        b1, b2 = 2.0 * t * b1 - b2 + c, b1
    return t * b1 - b2 + 0.5 * _K1E_CHEB[0]


def _validated_positive(x, name):
    scalar = np.ndim(x) == 0
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError(f"{name} requires finite x > 0")
    return arr, scalar


def bessel_k1(x):
    """Modified Bessel function of the second kind, order 1.

    Accepts a positive scalar or array. Relative accuracy is at rounding
    level across (0, ~700]; beyond ~705 the result underflows and
    log_bessel_k1 should be used instead.
    """
    arr, scalar = _validated_positive(x, "bessel_k1")
    out = np.empty_like(arr)
    small = arr <= 2.0
    if small.any():
        out[small] = _k1_series_small(arr[small])
    if (~small).any():
        xl = arr[~small]
        out[~small] = np.sqrt(0.5 * np.pi / xl) * _k1e_cheb(xl) * np.exp(-xl)
    return float(out[0]) if scalar else out


def log_bessel_k1(x):
    """log K1(x), computed without underflow for large x."""
    arr, scalar = _validated_positive(x, "log_bessel_k1")
    out = np.empty_like(arr)
    small = arr <= 2.0
    if small.any():
        out[small] = np.log(_k1_series_small(arr[small]))
    if (~small).any():
        xl = arr[~small]
        out[~small] = 0.5 * np.log(0.5 * np.pi / xl) + np.log(_k1e_cheb(xl)) - xl
    return float(out[0]) if scalar else out


class NigMoments(NamedTuple):
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float


@dataclass(frozen=True)
class NigParams:
    """Parameters (alpha, beta, delta, mu) of a univariate NIG law."""

    alpha: float
    beta: float
    delta: float
    mu: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            raise ValueError("alpha must be finite and > 0")
        if not (math.isfinite(self.beta) and abs(self.beta) < self.alpha):
            raise ValueError("beta must satisfy |beta| < alpha")
        if not (math.isfinite(self.delta) and self.delta > 0.0):
            raise ValueError("delta must be finite and > 0")
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")
        g = self.gamma
        if not (math.isfinite(g) and g > 0.0):
            raise ValueError("gamma = sqrt(alpha^2 - beta^2) must be finite and > 0")

    @property
    def gamma(self) -> float:
        # (alpha - beta)(alpha + beta) avoids cancellation when |beta| ~ alpha
        return math.sqrt((self.alpha - self.beta) * (self.alpha + self.beta))


@dataclass(frozen=True)
class NigFree:
    """Free optimization coordinates (log gamma, beta) plus the pinned
    standard deviation sigma; expand_constrained maps this to a NigParams
    with mean exactly 0 and variance exactly sigma^2."""

    log_gamma: float
    beta: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.log_gamma):
            raise ValueError("log_gamma must be finite")
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValueError("sigma must be finite and > 0")

    @classmethod
    def from_params(cls, p: NigParams) -> "NigFree":
        m = nig_moments(p)
        return cls(log_gamma=math.log(p.gamma), beta=p.beta,
                   sigma=math.sqrt(m.variance))


def nig_moments(p: NigParams) -> NigMoments:
    """Mean, variance, skewness and excess kurtosis of a NIG law.

    The location mu enters the mean as an additive shift; the remaining
    moments are shift-invariant.
    """
    g = p.gamma
    mean = p.delta * p.beta / g + p.mu
    variance = p.delta * p.alpha ** 2 / g ** 3
    skewness = 3.0 * p.beta / (p.alpha * math.sqrt(p.delta * g))
    excess = 3.0 * (p.alpha ** 2 + 4.0 * p.beta ** 2) / (p.delta * p.alpha ** 2 * g)
    return NigMoments(mean, variance, skewness, excess)


def annualize_moments(skew_per_step: float, exkurt_per_step: float,
                      steps_per_year: int) -> tuple[float, float]:
    """Aggregate per-step skewness / excess kurtosis over one year of iid steps.

    Under convolution of n iid increments, skewness scales by 1/sqrt(n) and
    excess kurtosis by 1/n.
    """
    n = int(steps_per_year)
    if n < 1 or n != steps_per_year:
        raise ValueError("steps_per_year must be a positive integer")
    return skew_per_step / math.sqrt(n), exkurt_per_step / n


def expand_constrained(f: NigFree) -> NigParams:
    """Expand (log gamma, beta, sigma) to the full quadruple with the moment
    constraints mean = 0 and variance = sigma^2 built in:

        gamma = exp(log_gamma), alpha = sqrt(gamma^2 + beta^2),
        delta = sigma^2 gamma^3 / alpha^2, mu = -delta beta / gamma.
    """
    g = math.exp(f.log_gamma)
    alpha = math.hypot(g, f.beta)
    delta = f.sigma ** 2 * g ** 3 / alpha ** 2
    mu = -delta * f.beta / g
    return NigParams(alpha=alpha, beta=f.beta, delta=delta, mu=mu)


def nig_logpdf(x, p: NigParams):
    """Log-density of NIG(p) at x (scalar or array).

    log f = log(alpha/pi) + delta*gamma + beta*delta*tau - log c
            + log K1(alpha*delta*c),
    with tau = (x - mu)/delta and c = sqrt(1 + tau^2). The Bessel factor is
    evaluated in log space so large arguments do not underflow.
    """
    xa = np.asarray(x, dtype=float)
    tau = (xa - p.mu) / p.delta
    c = np.sqrt(1.0 + tau * tau)
    out = (math.log(p.alpha / math.pi) + p.delta * p.gamma
           + p.beta * p.delta * tau - np.log(c)
           + log_bessel_k1(p.alpha * p.delta * c))
    return float(out) if np.ndim(x) == 0 else out


def nig_pdf(x, p: NigParams):
    """Density of NIG(p) at x."""
    return np.exp(nig_logpdf(x, p))


def _inverse_gaussian_from_variates(y, u, mean, shape):
    """Map a chi-square(1) variate y and a uniform u to an inverse-Gaussian
    draw with the given mean and shape (transformation-with-selection method).

    The smaller root of the defining quadratic is computed in the
    subtraction-free form x1 = mean (s - w) / (s + w), w = mean*y,
    s = sqrt(w (4 shape + w)), then x1 is kept with probability
    mean / (mean + x1), else mean^2 / x1.
    """
    w = mean * y
    s = np.sqrt(w * (4.0 * shape + w))
    denom = s + w
    x1 = np.where(denom > 0.0, mean * (s - w) / np.where(denom > 0.0, denom, 1.0), mean)
    return np.where(u * (mean + x1) <= mean, x1, mean * mean / x1)


def nig_sample(p: NigParams, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n iid NIG(p) variates from an explicit random stream.

    Uses the normal variance-mean mixture: V inverse-Gaussian with mean
    delta/gamma and shape delta^2, then X = mu + beta V + sqrt(V) Z. Three
    variates are consumed per draw (one squared normal, one uniform, one
    normal), always in that order, so the output is a pure function of the
    stream state.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    nu = rng.standard_normal(n)
    y = nu * nu
    u = rng.random(n)
    v = _inverse_gaussian_from_variates(y, u, p.delta / p.gamma, p.delta ** 2)
    z = rng.standard_normal(n)
    return p.mu + p.beta * v + np.sqrt(v) * z


def nig_convolve(p1: NigParams, p2: NigParams) -> Optional[NigParams]:
    """Convolve two NIG laws.

    The family is closed under convolution only when the tail and asymmetry
    parameters agree; in that case the scales and locations add. Returns
    None when the parameters are incompatible (no closed form exists).
    """
    same = (math.isclose(p1.alpha, p2.alpha, rel_tol=1e-12, abs_tol=0.0)
            and math.isclose(p1.beta, p2.beta, rel_tol=1e-12, abs_tol=1e-300))
    if not same:
        return None
    return NigParams(alpha=p1.alpha, beta=p1.beta,
                     delta=p1.delta + p2.delta, mu=p1.mu + p2.mu)

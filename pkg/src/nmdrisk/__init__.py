"""Three-factor Levy-driven OU model of non-maturing deposits.

Library layout:

* nig         - univariate NIG distribution and the Bessel K1 it needs
* levy_ou     - continuous-time model objects and the exact VAR(1) mapping
* estimation  - two-step initialization + constrained maximum likelihood
* simulation  - reproducible Monte Carlo path engine
* risk        - VaR, expected shortfall, liquidity term structure
* stress      - bank-run outflow measures and stressed re-calibration
* io / cli    - panel ingestion, run configuration, artifact files, CLI
"""

__version__ = "0.1.0"

from .nig import (NigFree, NigMoments, NigParams, annualize_moments, bessel_k1,
                  expand_constrained, log_bessel_k1, nig_convolve, nig_logpdf,
                  nig_moments, nig_pdf, nig_sample)
from .levy_ou import (OuParams, StationarityResult, Var1Params,
                      gaussian_step_covariance, ou_to_var1, stationarity_check,
                      var1_to_ou)
from .estimation import (FitConfig, FitResult, decompose_covariance, fit,
                         loglik, ols_init, residuals)
from .simulation import PathEnsemble, SimSpec, conditional_simulate, simulate
from .risk import (RiskReport, build_risk_report, expected_shortfall,
                   lower_quantile, running_min, tsl, var_volume)
from .stress import StressResult, StressTarget, rdo, rdo_bar, stress_calibrate
from .errors import ConfigError, ConvergenceError, DataError

__all__ = [
    "__version__",
    "NigParams", "NigFree", "NigMoments", "bessel_k1", "log_bessel_k1",
    "nig_logpdf", "nig_pdf", "nig_moments", "annualize_moments",
    "expand_constrained", "nig_sample", "nig_convolve",
    "OuParams", "Var1Params", "StationarityResult", "ou_to_var1", "var1_to_ou",
    "gaussian_step_covariance", "stationarity_check",
    "FitConfig", "FitResult", "ols_init", "decompose_covariance", "residuals",
    "loglik", "fit",
    "SimSpec", "PathEnsemble", "simulate", "conditional_simulate",
    "RiskReport", "build_risk_report", "lower_quantile", "var_volume",
    "running_min", "tsl", "expected_shortfall",
    "StressTarget", "StressResult", "rdo", "rdo_bar", "stress_calibrate",
    "ConfigError", "DataError", "ConvergenceError",
]

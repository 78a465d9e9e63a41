"""Illustrative parameter sets for the bundled synthetic dataset.

The constants below describe a three-factor model (market rate level,
deposit log-rate, deposit log-volume) calibrated on aggregate Italian
banking series at monthly frequency. They are used to generate
``data/synthetic_panel.csv``, as defaults in the demo scripts, and as
anchors in the test suite.

The NIG noise components are stated through their (gamma, beta) shape
coordinates together with the per-step standard deviations, and expanded
through the moment constraints, so every set constructed here has noise
with mean exactly 0 and variance exactly sigma_i^2.
"""
from __future__ import annotations

import math

import numpy as np

from .levy_ou import Var1Params

__all__ = ["gaussian_reference", "nig_reference", "reference_x0", "DT_MONTHLY"]

DT_MONTHLY = 1.0 / 12.0

_GAUSS_A = (-0.000039, -0.114547, 0.047423)
_GAUSS_B = ((0.988688, 0.0, 0.0),
            (1.734262, 0.986268, 0.0),
            (-0.060261, 0.000000, 0.996912))
_GAUSS_S = ((1.0, 0.0, 0.0),
            (10.072156, 1.0, 0.0),
            (-0.000031, 0.000004, 1.0))
_GAUSS_SIGMA = (0.002045, 0.055157, 0.019052)

_NIG_A = (-0.000112, -0.074274, 0.062410)
_NIG_B = ((0.996328, 0.0, 0.0),
          (1.130800, 0.992096, 0.0),
          (-0.147520, 0.000000, 0.995876))
_NIG_S = ((1.0, 0.0, 0.0),
          (5.859505, 1.0, 0.0),
          (-0.000246, 0.007663, 1.0))
_NIG_SIGMA = (0.002729, 0.059975, 0.019063)
# (alpha, beta) of the three idiosyncratic noise components; gamma is derived
_NIG_SHAPE = ((52.52986, -9.29901),
              (17.09158, -9.14173),
              (71.33072, 12.01585))


def gaussian_reference() -> Var1Params:
    """Gaussian-noise benchmark parameter set."""
    return Var1Params(a=np.array(_GAUSS_A), B=np.array(_GAUSS_B),
                      S=np.array(_GAUSS_S), sigma=np.array(_GAUSS_SIGMA),
                      noise_family="gaussian", dt=DT_MONTHLY)


def nig_reference() -> Var1Params:
    """NIG-noise parameter set (the one the synthetic panel is drawn from)."""
    log_gamma = [0.5 * math.log((al - be) * (al + be)) for al, be in _NIG_SHAPE]
    beta = [be for _, be in _NIG_SHAPE]
    return Var1Params.from_nig_free(np.array(_NIG_A), np.array(_NIG_B),
                                    np.array(_NIG_S), np.array(_NIG_SIGMA),
                                    log_gamma, beta, dt=DT_MONTHLY)


def reference_x0() -> np.ndarray:
    """Early-2002-style starting state for the synthetic panel: market rate
    3.3%, deposit rate 1.1% (log), volume 400,000 EUR mn (log)."""
    return np.array([0.033, math.log(0.011), math.log(4.0e5)])

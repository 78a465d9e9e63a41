import os

import numpy as np
import pytest

from nmdrisk.io import RunConfig, ingest
from nmdrisk.nig import NigParams
from nmdrisk.reference import gaussian_reference, nig_reference, reference_x0

DATA_CSV = os.path.join(os.path.dirname(__file__), "..", "data", "synthetic_panel.csv")

# idiosyncratic noise components of the illustrative calibration
# (market rate, deposit log-rate, deposit log-volume), per monthly step
NOISE_L1 = NigParams(alpha=52.52986, beta=-9.29901, delta=0.00037, mu=0.00007)
NOISE_L2 = NigParams(alpha=17.09158, beta=-9.14173, delta=0.03709, mu=0.02348)
NOISE_L3 = NigParams(alpha=71.33072, beta=12.01585, delta=0.02483, mu=-0.00424)
STRESSED_NOISE = NigParams(alpha=269.4450, beta=-256.7294, delta=0.0027, mu=0.0086)
SIGMAS = (0.002729, 0.059975, 0.019063)


@pytest.fixture(scope="session")
def panel():
    return ingest(DATA_CSV, RunConfig())


@pytest.fixture(scope="session")
def nig_ref():
    return nig_reference()


@pytest.fixture(scope="session")
def gauss_ref():
    return gaussian_reference()


@pytest.fixture(scope="session")
def x0_ref():
    return reference_x0()


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)

import copy

import numpy as np
import pytest

from stellosc.background import load_model
from stellosc.forms import FormContext

# Exponential atmosphere with hydrostatically aligned potential:
# q_r = -3 everywhere, the curvature matrix m1 vanishes identically,
# m2 = omega^2 I, sector angle 0.  gamma = 0.1, omega = 1.
STANDARD_CONFIG = {
    "name": "standard-atmosphere",
    "omega": 1.0,
    "Omega": [0.0, 0.0, 0.0],
    "G": 1.0,
    "rho": {"kind": "exponential", "C": 1.0, "alpha": 3.0},
    "cs": {"kind": "constant", "value": 1.0},
    "p": {"kind": "exponential", "C": 1.0, "alpha": 3.0},
    "phi": {"kind": "polynomial", "coeffs": [0.0, -3.0]},
    "gamma": {"kind": "constant", "value": 0.1},
    "b": {"kind": "zero"},
    "r1": 0.6,
    "r2": 1.0,
    "r3": 1.4,
    "r_max": 3.0,
}


def make_config(**overrides):
    cfg = copy.deepcopy(STANDARD_CONFIG)
    cfg.update(overrides)
    return cfg


@pytest.fixture(scope="session")
def standard_model():
    return load_model(STANDARD_CONFIG)


@pytest.fixture(scope="session")
def flow_model():
    cfg = make_config(
        name="toroidal-flow",
        b={"kind": "toroidal", "amplitude": 0.1, "r_lo": 0.1, "r_hi": 0.55},
    )
    return load_model(cfg)


@pytest.fixture(scope="session")
def rotating_model():
    return load_model(make_config(name="rotating", Omega=[0.0, 0.2, 0.3]))


@pytest.fixture(scope="session")
def standard_ctx(standard_model):
    return FormContext(standard_model, r_out=3.0)


@pytest.fixture(scope="session")
def flow_ctx(flow_model):
    return FormContext(flow_model, r_out=3.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)

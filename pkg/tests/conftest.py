import math

import numpy as np
import pytest

from thinfilm_spdc.materials import build_stack
from thinfilm_spdc.optics import LayerStack, Medium, angular_frequency
from thinfilm_spdc.spdc import make_setting

LAMBDA_P = 500e-9
LAMBDA_S = 1e-6


def deg(x):
    return math.radians(x)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def omega_s():
    return angular_frequency(LAMBDA_S)


@pytest.fixture
def gaas_stack():
    """Reference air / GaAs / SiO2 stack, 5 nm thick, flat permittivities."""
    return build_stack(0.01 * LAMBDA_P)


def matched_stack(eps=2.25, thickness=100e-9):
    m = Medium(eps)
    trio = (m, m, m)
    return LayerStack(thickness, trio, trio, trio)


@pytest.fixture
def bell_setting():
    return make_setting(deg(45), 0.0, r=1.0, thickness=0.01 * LAMBDA_P)

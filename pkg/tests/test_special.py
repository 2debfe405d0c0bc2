import math

import numpy as np
import pytest
from scipy.special import digamma as sp_digamma

from hybridqm.special import digamma

EULER_GAMMA = 0.5772156649015329


def test_digamma_one():
    assert digamma(1.0) == pytest.approx(-EULER_GAMMA, abs=1e-10)


def test_digamma_half():
    assert digamma(0.5) == pytest.approx(-EULER_GAMMA - 2 * math.log(2), abs=1e-12)


@pytest.mark.parametrize("x", [0.01, 0.3, 1.5, 2.0, 3.7, 6.0, 25.0, 1e4, -0.5, -2.3])
def test_digamma_matches_scipy(x):
    assert digamma(x) == pytest.approx(float(sp_digamma(x)), rel=1e-12, abs=1e-12)


def test_digamma_recurrence():
    for x in np.linspace(0.2, 9.0, 17):
        assert digamma(x + 1) - digamma(x) == pytest.approx(1 / x, rel=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0, -3.0])
def test_digamma_poles(x):
    with pytest.raises(ValueError):
        digamma(x)

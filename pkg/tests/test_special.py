import math

import numpy as np
import pytest
from scipy import special as sp

from lz78source.special import EULER_GAMMA, digamma, harmonic, log_beta


@pytest.mark.parametrize("x", np.concatenate([np.geomspace(1e-3, 1e3, 61), [0.5, 1.0, 2.0, 9.99, 10.0]]))
def test_digamma_matches_scipy(x):
    assert digamma(float(x)) == pytest.approx(sp.digamma(x), abs=1e-12, rel=1e-13)


def test_digamma_at_one_is_minus_euler():
    assert digamma(1.0) == pytest.approx(-EULER_GAMMA, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 10, 57])
def test_harmonic_integers(n):
    assert harmonic(n) == pytest.approx(sum(1.0 / k for k in range(1, n + 1)), abs=1e-12)


def test_harmonic_half():
    # H_{1/2} = 2 - 2 ln 2
    assert harmonic(0.5) == pytest.approx(2 - 2 * math.log(2), abs=1e-12)


@pytest.mark.parametrize("alpha", [(0.5, 0.5), (2.0, 3.0), (0.1, 1.0, 7.5)])
def test_log_beta(alpha):
    ref = sum(sp.gammaln(a) for a in alpha) - sp.gammaln(sum(alpha))
    assert log_beta(alpha) == pytest.approx(ref, abs=1e-12)

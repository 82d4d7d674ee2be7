import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from penshape import H, H_eps, H_eps_prime, Smoothing


def test_pieces():
    s = Smoothing(0.2)
    assert H_eps(s, -1.0) == 0.0
    assert H_eps(s, 0.0) == 0.0
    assert H_eps(s, 0.2) == 1.0
    assert H_eps(s, 5.0) == 1.0
    assert H_eps(s, 0.1) == 0.5
    # v^2 (3 eps - 2 v) / eps^3 at v = eps/4
    assert H_eps(s, 0.05) == pytest.approx(0.15625, abs=1e-15)


def test_scalar_and_array_returns():
    assert isinstance(H_eps(0.1, 0.03), float)
    assert isinstance(H(0.3), float)
    assert H_eps(0.1, np.zeros((2, 3))).shape == (2, 3)


def test_sharp_heaviside_convention():
    assert H(0.0) == 0.0 and H(1e-300) == 1.0 and H(-1.0) == 0.0


@pytest.mark.parametrize("eps", [0.0, -1.0, np.inf, np.nan])
def test_invalid_smoothing(eps):
    with pytest.raises(ValueError):
        Smoothing(eps)


def test_derivative_matches_central_difference():
    eps = 0.3
    v = np.linspace(0.01, 0.29, 57)
    t = 1e-7
    fd = (H_eps(eps, v + t) - H_eps(eps, v - t)) / (2 * t)
    assert np.allclose(fd, H_eps_prime(eps, v), rtol=1e-6, atol=1e-8)
    assert H_eps_prime(eps, -0.1) == 0.0 and H_eps_prime(eps, 0.5) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 10), st.floats(-20, 20), st.floats(0.01, 1.0))
def test_order_properties(eps, v, ratio):
    he = H_eps(eps, v)
    assert 0.0 <= he <= 1.0
    assert he <= H(v)
    # narrower smoothing dominates
    assert H_eps(eps * ratio, v) >= he - 1e-15


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-4, 1), st.floats(-2, 2), st.floats(-2, 2))
def test_monotone(eps, a, b):
    lo, hi = min(a, b), max(a, b)
    assert H_eps(eps, lo) <= H_eps(eps, hi)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize, special

from svlab.errors import OutOfDomain
from svlab.lambertw import INV_E, lambert_w, lambert_w_asymptotic


def test_exact_values():
    assert lambert_w(0.0) == 0.0
    assert lambert_w(math.e) == pytest.approx(1.0, abs=1e-15)
    assert lambert_w(-INV_E) == pytest.approx(-1.0, abs=1e-7)


def test_omega_constant_against_bisection():
    ref = optimize.bisect(lambda w: w * math.exp(w) - 1.0, 0.0, 1.0, xtol=1e-15)
    assert lambert_w(1.0) == pytest.approx(ref, abs=1e-14)
    assert lambert_w(1.0) == pytest.approx(0.5671432904, abs=1e-10)


def test_out_of_domain():
    with pytest.raises(OutOfDomain):
        lambert_w(-0.5)


def test_round_trip_residual():
    y = np.concatenate([-INV_E + np.logspace(-6, math.log10(INV_E), 5000),
                        np.logspace(-12, 12, 5000)])
    w = lambert_w(y)
    assert np.max(np.abs(w * np.exp(w) - y) / np.maximum(1.0, np.abs(y))) <= 1e-12


@given(st.floats(-INV_E + 1e-4, 1e300))
def test_matches_scipy(y):
    assert lambert_w(y) == pytest.approx(special.lambertw(y).real, rel=1e-12, abs=1e-12)


@given(st.floats(-INV_E, -INV_E + 1e-4))
def test_near_branch_point(y):
    # W is ill-conditioned here, so check the defining equation instead
    w = lambert_w(y)
    assert -1.0 <= w <= -0.97
    assert abs(w * math.exp(w) - y) <= 1e-15


def test_array_shape_preserved():
    y = np.array([[0.0, 1.0], [2.0, 10.0]])
    assert lambert_w(y).shape == (2, 2)


def test_improved_asymptote():
    y = np.logspace(math.log10(3.0), 12, 400)
    rel = np.abs(lambert_w(y) - lambert_w_asymptotic(y)) / lambert_w(y)
    assert rel.max() < 0.02

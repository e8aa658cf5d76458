import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from svlab.errors import ChainDoesNotClose, DivergentMoment, NotGarch, UnsupportedExponents
from svlab.model_core import ModelSpec, preset
from svlab.moment_engine import (
    DIVERGENT,
    FINITE,
    acf_proxy_v1,
    evolve_moments,
    garch_tail_exponent,
    longtime_limit,
    stationary_s_moment,
)
from svlab.sde_engine import SimConfig, simulate_paths

SQRT2 = math.sqrt(2.0)
CLOSING = ["stein-stein", "ou", "heston", "garch"]


def test_stein_stein_mean_relaxation():
    spec = preset("stein-stein").build(1.0, 1.0, 0.5)
    traj = evolve_moments(spec, 0, 1, [math.log(2.0)], s0=0.0)
    assert traj[0, 1][0] == pytest.approx(0.5, abs=1e-12)


def test_heston_variance_is_linear():
    spec = preset("heston").build(1.0, 1.0, 0.5)
    t = np.linspace(0, 10, 21)
    traj = evolve_moments(spec, 2, 0, t)
    assert np.max(np.abs(traj[2, 0] - spec.sigma * t)) < 1e-10


@pytest.mark.parametrize("name", ["geometric-ou", "three-halves", "expou"])
def test_chain_does_not_close(name):
    with pytest.raises(ChainDoesNotClose):
        evolve_moments(preset(name).build(), 2, 2, [1.0])


@pytest.mark.parametrize("method", ["expm", "radau"])
def test_normalization_moment_is_one(method):
    spec = preset("garch").build(1.0, 1.0, 1.0)
    traj = evolve_moments(spec, 4, 2, np.linspace(0, 5, 6), method=method)
    assert np.allclose(traj[0, 0], 1.0, atol=1e-12)


def test_expm_and_radau_agree():
    spec = preset("heston").build(1.0, 1.0, 0.5)
    t = np.linspace(0, 10, 11)
    e = evolve_moments(spec, 4, 3, t)
    r = evolve_moments(spec, 4, 3, t, method="radau")
    for idx in e.values:
        assert np.allclose(e[idx], r[idx], rtol=1e-6, atol=1e-8)


def test_odd_x_moments_vanish():
    traj = evolve_moments(preset("ou").build(1, 1, 0.5), 3, 2, [0.5, 5.0])
    for n in range(3):
        assert np.all(traj[1, n] == 0) and np.all(traj[3, n] == 0)


def test_stationary_moment_examples():
    ss = preset("stein-stein").build(1.0, 1.0, SQRT2)
    assert stationary_s_moment(ss, 2) == pytest.approx(2.0)
    garch = preset("garch").build(1.0, 1.0, 1.0)
    assert stationary_s_moment(garch, 2) == pytest.approx(2.0)
    assert math.isinf(stationary_s_moment(garch, 3))


@given(st.floats(0.1, 5), st.floats(0.01, 5), st.floats(0.1, 3))
def test_heston_mean_is_sigma(a, sigma, g):
    assert stationary_s_moment(preset("heston").build(a, sigma, g), 1) == pytest.approx(sigma)


def test_stationary_moment_needs_closed_form():
    with pytest.raises(UnsupportedExponents):
        stationary_s_moment(preset("geometric-ou").build(), 2)


def test_expou_moments_are_gaussian():
    spec = preset("expou").build(2.0, 0.0, 1.0)
    assert stationary_s_moment(spec, 3) == 0.0
    assert stationary_s_moment(spec, 4) == pytest.approx(3 * 0.25**2)


def test_longtime_examples():
    assert longtime_limit(preset("heston").build(1, 1, 0.5), 1, 0).value == pytest.approx(1.0)
    assert longtime_limit(preset("stein-stein").build(1, 1, SQRT2), 2, 0).value == pytest.approx(12.0)
    garch = preset("garch").build(1.0, 1.0, 1.0)
    # the existence condition is l + n < 1 + 2a/g^2 = 3
    assert longtime_limit(garch, 2, 0).status == FINITE
    assert longtime_limit(garch, 2, 0).value == pytest.approx(3.0)
    assert longtime_limit(garch, 3, 0).status == DIVERGENT
    assert longtime_limit(garch, 1, 2).status == DIVERGENT


def test_expou_longtime_variance():
    spec = preset("expou").build(1.0, 0.2, 0.5)
    lim = longtime_limit(spec, 1, 0)
    assert lim.value == pytest.approx(math.exp(0.4 + 0.25))


@pytest.mark.parametrize("a,g,tau", [(1, 1, 7), (1, 2, 4)])
def test_garch_tail_exponent(a, g, tau):
    assert garch_tail_exponent(preset("garch").build(a, 1, g)) == pytest.approx(tau)


@given(st.floats(1e-6, 10), st.floats(0.05, 10))
def test_garch_tail_exponent_exceeds_three(a, g):
    assert garch_tail_exponent(preset("garch").build(a, 1, g)) > 3


def test_tail_exponent_rejects_non_garch():
    with pytest.raises(NotGarch):
        garch_tail_exponent(preset("heston").build())


def test_acf_proxy_examples():
    spec = preset("stein-stein").build(1.0, 1.0, SQRT2)
    assert acf_proxy_v1(spec, 1, 1.0) == pytest.approx(1 + math.exp(-1), abs=1e-12)
    assert acf_proxy_v1(spec, 1, 0.0) == pytest.approx(stationary_s_moment(spec, 2))
    assert acf_proxy_v1(spec, 2, 1e3) == pytest.approx(spec.sigma * stationary_s_moment(spec, 2))


def test_acf_proxy_needs_finite_moments():
    with pytest.raises(DivergentMoment):
        acf_proxy_v1(preset("garch").build(1, 1, 1), 2, 1.0)


@pytest.mark.parametrize("name", CLOSING)
def test_relaxation_to_stationary_moments(name):
    spec = preset(name).build(1.0, 1.0, 0.5)
    traj = evolve_moments(spec, 0, 6, [20.0])
    for n in range(7):
        ref = stationary_s_moment(spec, n)
        if traj.status[0, n] == FINITE and math.isfinite(ref):
            assert traj[0, n][0] == pytest.approx(ref, rel=1e-6)


def _longtime_errors(spec, t):
    traj = evolve_moments(spec, 6, 6, [t])
    errs = {}
    for l in range(4):
        for n in range(7 - 2 * l):
            lim = longtime_limit(spec, l, n)
            if lim.finite and traj.status[2 * l, n] == FINITE:
                errs[l, n] = traj[2 * l, n][0] / t**l / lim.value - 1
    return errs


@pytest.mark.parametrize("name", CLOSING)
def test_longtime_convergence(name):
    # transients leave an O(1/(a t)) relative offset that reaches a few
    # percent for the highest orders at t = 50/a; check the limit at 1000/a
    # and the 1/t rate between 50/a and 200/a
    spec = preset(name).build(1.0, 1.0, 0.5)
    late = _longtime_errors(spec, 1000.0)
    assert late and max(abs(e) for e in late.values()) < 0.01
    e50, e200 = _longtime_errors(spec, 50.0), _longtime_errors(spec, 200.0)
    for idx in e50:
        if abs(e50[idx]) > 1e-6:
            assert e200[idx] / e50[idx] == pytest.approx(0.25, abs=0.05)
    low = [e for (l, n), e in e50.items() if l <= 1 and n <= 2]
    assert max(abs(e) for e in low) < 0.01


def test_stein_stein_return_variance_closed_form():
    a, sigma, g = 1.3, 0.8, 0.6
    spec = preset("stein-stein").build(a, sigma, g)
    t = np.linspace(0, 10, 41)
    v = g**2 / (2 * a)
    exact = sigma**2 * t + v * (t - (1 - np.exp(-2 * a * t)) / (2 * a))
    assert np.max(np.abs(evolve_moments(spec, 2, 0, t)[2, 0] - exact)) < 1e-10


@pytest.mark.parametrize("name", ["stein-stein", "ou", "heston"])
def test_kurtosis_ratio_tends_to_one(name):
    spec = preset(name).build(1.0, 1.0, 0.5)
    traj = evolve_moments(spec, 4, 0, [50.0])
    assert traj[4, 0][0] / (3 * traj[2, 0][0] ** 2) == pytest.approx(1.0, abs=0.02)


def test_moments_match_simulation():
    spec = preset("heston").build(1.0, 1.0, 0.5)
    cfg = SimConfig(dt=0.01, t_end=10.0, n_paths=4000, seed=12, record_stride=100)
    ens = simulate_paths(spec, cfg)
    traj = evolve_moments(spec, 2, 2, ens.times)
    for (m, n) in [(0, 1), (0, 2), (2, 0), (2, 1)]:
        mc = ens.x**m * ens.s**n
        mean = mc.mean(axis=0)[1:]
        se = mc.std(axis=0, ddof=1)[1:] / math.sqrt(cfg.n_paths)
        ref = traj[m, n][1:]
        # Euler bias at dt = 0.01 is well below the statistical error here
        assert np.all(np.abs(mean - ref) < 4 * se + 1e-3 * np.abs(ref))

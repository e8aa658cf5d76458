import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from svlab.errors import (
    InsufficientHorizon,
    LagNotOnGrid,
    MemoryCapExceeded,
    NonFiniteState,
    StabilityGuard,
    UsageError,
)
from svlab.model_core import ModelSpec, preset
from svlab.sde_engine import (
    SimConfig,
    extract_returns,
    simulate_paths,
    step,
    volatility_samples,
)


def test_zero_noise_fixed_point():
    spec = preset("ou").build(1.0, 1.0, 0.0 + 1e-300).with_params(g=1e-300)
    x, s = step((0.3, 1.0), spec, 0.01, (0.7, -2.0))
    assert s == pytest.approx(1.0, abs=1e-15)
    assert x == pytest.approx(0.3 + math.sqrt(1.0) * 0.1 * 0.7)


def test_multiplicative_noise_vanishes_at_origin():
    # with sigma = 0 the drift also vanishes, so s = 0 is absorbing
    spec = preset("garch").build(1.0, 0.0, 1.0)
    for n2 in (-3.0, 0.0, 2.5):
        _, s = step((0.0, 0.0), spec, 0.01, (0.1, n2))
        assert s == 0.0


def test_stein_stein_hand_step():
    spec = preset("stein-stein").build(1.0, 1.0, 0.5)
    x, s = step((0.0, 1.2), spec, 0.01, (0.0, -1.0))
    assert s == pytest.approx(1.148, abs=1e-14)
    assert x == 0.0


def test_reflection_and_unbounded_stein_stein():
    spec = preset("stein-stein").build(1.0, 1.0, 0.5)
    _, s_ref = step((0.0, 0.01), spec, 0.01, (0.0, -5.0))
    _, s_raw = step((0.0, 0.01), spec, 0.01, (0.0, -5.0), reflect=False)
    assert s_raw < 0 and s_ref == pytest.approx(-s_raw)


def test_array_step_matches_scalar():
    spec = preset("heston").build(1.0, 1.0, 0.5)
    n = np.array([[0.1, -0.4], [1.2, 0.3], [-2.0, 2.0]])
    xs, ss = step((np.zeros(3), np.array([0.5, 1.0, 2.0])), spec, 0.01, (n[:, 0], n[:, 1]))
    for i in range(3):
        assert (xs[i], ss[i]) == step((0.0, [0.5, 1.0, 2.0][i]), spec, 0.01, tuple(n[i]))


def test_deterministic_volatility_without_noise():
    spec = preset("heston").build(1.0, 0.7, 1.0).with_params(g=1e-300)
    ens = simulate_paths(spec, SimConfig(dt=0.01, t_end=2.0, n_paths=1, record_stride=10))
    assert np.all(ens.s == 0.7)


def test_threads_do_not_change_results():
    spec = preset("heston").build(1.0, 1.0, 0.5)
    cfg = SimConfig(dt=0.01, t_end=2.0, n_paths=37, seed=9, record_stride=5)
    one = simulate_paths(spec, cfg, threads=1)
    three = simulate_paths(spec, cfg, threads=3)
    assert np.array_equal(one.x, three.x) and np.array_equal(one.s, three.s)


def test_same_config_same_ensemble():
    spec = preset("ou").build(1.0, 1.0, 0.5)
    cfg = SimConfig(dt=0.01, t_end=1.0, n_paths=5, seed=4, record_stride=10)
    assert np.array_equal(simulate_paths(spec, cfg).s, simulate_paths(spec, cfg).s)
    other = simulate_paths(spec, SimConfig(dt=0.01, t_end=1.0, n_paths=5, seed=5, record_stride=10))
    assert not np.array_equal(simulate_paths(spec, cfg).s, other.s)


@given(st.sampled_from(["ou", "heston", "garch", "three-halves", "geometric-ou"]),
       st.floats(0.2, 3.0), st.floats(0.0, 2.0), st.floats(0.1, 2.0), st.integers(0, 1000))
def test_reflected_volatility_never_negative(name, a, sigma, g, seed):
    spec = preset(name).build(a, max(sigma, 0.05), g)
    cfg = SimConfig(dt=0.05 / a, t_end=4.0 / a, n_paths=8, seed=seed, record_stride=1)
    try:
        ens = simulate_paths(spec, cfg)
    except NonFiniteState:
        # Euler steps may explode only when drift or noise grows faster than linearly
        assert spec.beta > 1 or spec.alpha > 0
        return
    assert ens.s.min() >= 0
    assert np.all(np.isfinite(ens.x))


def test_overflow_is_reported():
    spec = preset("three-halves").build(1.0, 1.0, 2.0)
    cfg = SimConfig(dt=0.05, t_end=4.0, n_paths=8, seed=3, record_stride=1)
    with pytest.raises(NonFiniteState):
        simulate_paths(spec, cfg)


def test_stability_guard():
    spec = preset("ou").build(1.0, 1.0, 0.5)
    with pytest.raises(StabilityGuard):
        simulate_paths(spec, SimConfig(dt=0.2, t_end=2.0))
    with pytest.raises(StabilityGuard):
        simulate_paths(spec, SimConfig(dt=0.03, t_end=1.0))  # not a multiple
    with pytest.raises(StabilityGuard):
        simulate_paths(spec, SimConfig(dt=0.01, t_end=1.0, record_stride=7))


def test_memory_cap():
    spec = preset("ou").build(1.0, 1.0, 0.5)
    with pytest.raises(MemoryCapExceeded):
        simulate_paths(spec, SimConfig(dt=0.01, t_end=1.0, n_paths=1000, record_stride=1,
                                       memory_cap=1000))


def test_unbounded_only_for_stein_stein():
    with pytest.raises(UsageError):
        simulate_paths(preset("ou").build(), SimConfig(dt=0.01, t_end=1.0, reflect=False,
                                                        record_stride=10))
    simulate_paths(preset("stein-stein").build(), SimConfig(dt=0.01, t_end=1.0, reflect=False,
                                                             record_stride=10, n_paths=2))


def test_one_step_matches_ou_transition_law():
    a, sigma, g, s0, dt = 1.0, 1.0, 0.5, 1.6, 0.01
    spec = preset("stein-stein").build(a, sigma, g)
    n = 200000
    ens = simulate_paths(spec, SimConfig(dt=dt, t_end=2 * dt, n_paths=n, seed=2, record_stride=1,
                                         initial_s=s0, reflect=False))
    s1 = ens.s[:, 1]
    mean = sigma + (s0 - sigma) * math.exp(-a * dt)
    var = g**2 * (1 - math.exp(-2 * a * dt)) / (2 * a)
    se = math.sqrt(var / n)
    # Euler mean is off by O(dt^2), variance by O(dt) relative
    assert abs(s1.mean() - mean) < 4 * se + abs(s0 - sigma) * (a * dt) ** 2
    assert abs(s1.var() / var - 1) < 4 * math.sqrt(2 / n) + 2 * a * dt


def test_halving_dt_is_within_noise():
    spec = preset("ou").build(1.0, 1.0, 0.3)
    res = []
    for dt in (0.02, 0.01):
        cfg = SimConfig(dt=dt, t_end=40.0, n_paths=2000, seed=3, record_stride=int(round(0.2 / dt)))
        res.append(simulate_paths(spec, cfg).summary(burn_in=10.0))
    for key in ("s_mean", "s2_mean"):
        diff = abs(res[0][key] - res[1][key])
        se = math.hypot(res[0][key + "_se"], res[1][key + "_se"])
        # the two runs use independent noise, so their difference has spread se
        assert diff < 3 * se


def test_brownian_returns():
    spec = preset("ou").build(1.0, 1.0, 0.5).with_params(g=1e-300)
    cfg = SimConfig(dt=0.01, t_end=40.0, n_paths=200, seed=1, record_stride=10)
    r = extract_returns(simulate_paths(spec, cfg), delta_t=0.5)
    n = r.values.size
    assert abs(r.values.var() / 0.5 - 1) < 4 * math.sqrt(2 / n)


def test_returns_need_grid_lags_and_horizon():
    spec = preset("ou").build()
    ens = simulate_paths(spec, SimConfig(dt=0.01, t_end=12.0, n_paths=3, record_stride=10))
    with pytest.raises(LagNotOnGrid):
        extract_returns(ens, 0.15)
    with pytest.raises(InsufficientHorizon):
        extract_returns(ens, 5.0)
    with pytest.raises(UsageError):
        extract_returns(ens, 0.1, burn_in=1.0)


def test_heston_long_lag_return_variance():
    spec = preset("heston").build(1.0, 1.0, 0.5)
    cfg = SimConfig(dt=0.01, t_end=210.0, n_paths=1000, seed=6, record_stride=100)
    r = extract_returns(simulate_paths(spec, cfg), delta_t=20.0, burn_in=10.0)
    v = r.values
    se = math.sqrt(np.var(v**2) / v.size) / 20.0
    assert abs(np.mean(v**2) / 20.0 - spec.sigma) < 3 * se


def test_volatility_samples_thinning():
    spec = preset("heston").build()
    ens = simulate_paths(spec, SimConfig(dt=0.01, t_end=20.0, n_paths=4, record_stride=10))
    s = volatility_samples(ens, burn_in=10.0, spacing=2.0)
    assert s.size == 4 * 6


def test_csv_dump(tmp_path):
    ens = simulate_paths(preset("ou").build(), SimConfig(dt=0.01, t_end=0.2, n_paths=2, record_stride=10))
    path = tmp_path / "paths.csv"
    ens.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,path_id,x,s" and len(lines) == 1 + 2 * 3

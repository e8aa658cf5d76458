import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate, stats

from svlab.errors import MomentDiverges, NonPositiveArgument, NotNormalizable, UnnormalizedInput
from svlab.estimators import ks_distance
from svlab.model_core import ModelSpec, preset
from svlab.moment_engine import stationary_s_moment
from svlab.stationary_dist import (
    DensityCurve,
    log_density_unnormalized,
    normalizable,
    normalize,
    sample_stationary,
    stationary_moment_check,
)


def test_heston_exponential_case():
    spec = preset("heston").build(1.0, 1.0, math.sqrt(2.0))
    s = np.array([0.1, 1.0, 3.0])
    lp = log_density_unnormalized(spec, s)
    assert np.allclose(lp - lp[0], -(s - s[0]))


def test_gaussian_case_is_gaussian_in_s():
    a, sigma, g = 1.5, 0.7, 0.4
    spec = ModelSpec(alpha=0, beta=0, gamma=1, a=a, sigma=sigma, g=g)
    s = np.linspace(0.1, 2.0, 7)
    lp = log_density_unnormalized(spec, s)
    ref = -(a / g**2) * s**2 + (2 * a * sigma / g**2) * s
    assert np.allclose(lp - ref, (lp - ref)[0])


def test_garch_case_powers():
    spec = preset("garch").build(1.0, 1.0, 1.0)
    s = np.array([0.5, 2.0, 7.0])
    assert np.allclose(log_density_unnormalized(spec, s), -4 * np.log(s) - 2.0 / s)


def test_density_needs_positive_argument():
    with pytest.raises(NonPositiveArgument):
        log_density_unnormalized(preset("heston").build(), [1.0, -0.5])


@pytest.mark.parametrize("spec,norm", [
    (preset("heston").build(1.0, 0.5, 1.0), 2.0),
    (ModelSpec(alpha=0, beta=0, gamma=1, a=2.0, sigma=0.0, g=0.5),
     2.0 / math.sqrt(2 * math.pi * 0.25 / 4.0)),
    (preset("garch").build(1.0, 1.0, 1.0), 4.0),
])
def test_normalization_constants(spec, norm):
    curve = normalize(spec)
    assert curve.norm_const == pytest.approx(norm, rel=1e-8)


@pytest.mark.parametrize("name", ["heston", "garch", "ou", "stein-stein", "three-halves",
                                  "geometric-ou", "expou"])
def test_trapezoid_integral_is_one(name):
    curve = normalize(preset(name).build(1.0, 1.0, 0.7))
    assert np.trapezoid(curve.pdf_values, curve.grid) == pytest.approx(1.0, abs=1e-3)
    assert np.all(np.diff(curve.grid) > 0)


def test_pdf_vanishes_off_support():
    curve = normalize(preset("heston").build())
    assert np.all(curve.pdf([-1.0, 0.0]) == 0)


def test_not_normalizable():
    # GARCH-type (d2 = 0) with 2beta + 2a/g^2 = 1
    spec = ModelSpec(alpha="-3/2", beta="1/4", gamma="1/2", a=1.0, sigma=1.0, g=2.0)
    assert not normalizable(spec)[0]
    with pytest.raises(NotNormalizable):
        normalize(spec)
    with pytest.raises(NotNormalizable):
        normalize(preset("heston").build(1.0, 0.0, 1.0))  # s^-1 at the origin


def test_three_halves_is_normalizable():
    ok, _ = normalizable(preset("three-halves").build(1.0, 1.0, 0.5))
    assert ok


def test_sampling_exponential_mean():
    spec = preset("heston").build(1.0, 0.5, 1.0)
    x = sample_stationary(normalize(spec), 100000, 3)
    assert abs(x.mean() - 0.5) < 3 * 0.5 / math.sqrt(x.size)


def test_sampling_empty_and_unnormalized():
    curve = normalize(preset("heston").build())
    assert sample_stationary(curve, 0, 1).size == 0
    raw = DensityCurve(curve.grid, curve.log_values, 0.0, curve.support, curve.spec,
                       normalized=False)
    with pytest.raises(UnnormalizedInput):
        sample_stationary(raw, 10, 1)


def test_garch_tail_fraction():
    spec = preset("garch").build(1.0, 1.0, 1.0)
    curve = normalize(spec)
    x = sample_stationary(curve, 200000, 5)
    # P(S > 10) = int_0^{1/10} 4 u^2 e^{-2u} du after u = 1/s
    p = integrate.quad(lambda u: 4 * u**2 * math.exp(-2 * u), 0, 0.1)[0]
    assert curve.sf(10.0) == pytest.approx(p, rel=1e-4)
    assert abs(np.mean(x > 10) - p) < 4 * math.sqrt(p * (1 - p) / x.size)


@pytest.mark.parametrize("name", ["heston", "garch", "ou", "three-halves", "expou"])
def test_sampling_ks(name):
    curve = normalize(preset(name).build(1.0, 1.0, 0.5))
    n = 100000
    x = sample_stationary(curve, n, 8)
    assert ks_distance(x, curve.cdf) < 1.63 / math.sqrt(n)


def test_moment_check_examples():
    heston = normalize(preset("heston").build(1.0, 1.3, 0.5))
    assert stationary_moment_check(heston, 1) == pytest.approx(1.3, rel=1e-8)
    ss = preset("stein-stein").build(1.0, 3.0, 0.5)
    assert stationary_moment_check(normalize(ss), 2) == pytest.approx(9.0 + 0.125, rel=1e-8)
    with pytest.raises(MomentDiverges):
        stationary_moment_check(normalize(preset("garch").build(1.0, 1.0, 1.0)), 3)


def test_moment_check_sees_truncation():
    # with sigma below the positivity threshold the truncated density differs
    spec = preset("stein-stein").build(1.0, 0.5, 0.5)
    assert stationary_moment_check(spec, 2) != pytest.approx(0.375, rel=1e-3)


@st.composite
def closing_specs(draw):
    beta = draw(st.sampled_from(["0", "1/2", "1"]))
    a = draw(st.floats(0.5, 3.0))
    g = draw(st.floats(0.2, 1.5))
    sigma = draw(st.floats(0.2, 3.0))
    if beta == "0":
        sigma = max(sigma, 7 * g / math.sqrt(2 * a))
    spec = ModelSpec(alpha=0, beta=beta, gamma="1/2", a=a, sigma=sigma, g=g)
    n = draw(st.integers(1, 6))
    return spec, n


@given(closing_specs())
def test_quadrature_matches_closed_form(case):
    spec, n = case
    assume(normalizable(spec)[0])
    closed = stationary_s_moment(spec, n)
    if spec.beta == 1:
        # stay away from the divergence edge where the power tail is slow
        assume(2 + spec.c - n - 1 >= 0.5)
    assume(math.isfinite(closed))
    assert stationary_moment_check(spec, n) == pytest.approx(closed, rel=1e-6)


def test_gaussian_class_total_variation():
    a, g = 1.0, 0.5
    spec = preset("stein-stein").build(a, 3 * g / math.sqrt(a), g)
    curve = normalize(spec)
    s = np.linspace(-1.0, 3.0, 40001)
    ref = stats.norm.pdf(s, spec.sigma, g / math.sqrt(2 * a))
    tv = 0.5 * np.trapezoid(np.abs(curve.pdf(s) - ref), s)
    assert tv < 1e-2


def test_csv_columns(tmp_path):
    curve = normalize(preset("heston").build())
    path = tmp_path / "density.csv"
    curve.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "s,pdf,cdf" and len(lines) == curve.grid.size + 1

"""Short-time return density: frozen-volatility mixing integral and its tail asymptotes.

For lags much shorter than 1/a the volatility is frozen at its stationary law
P_S and the return density is the Gaussian mixture

    P(dx; dt) = int s^-gamma exp(-dx^2 / (2 dt s^{2 gamma})) P_S(s) ds / sqrt(2 pi dt).

:func:`mixing_density` evaluates it by log-space quadrature. That is the
numerical oracle for the tail formulas below, all written in the scaled
return y = |dx| / sqrt(dt):

* generic classes: stretched exponential from a saddle-point expansion whose
  constants R_N, R_1, R_2, R_3 are computed numerically
  (:func:`saddle_constants`);
* Heston-type, gamma = 1/2: exact modified-Bessel closed form;
* GARCH-type, gamma = 1/2: exact algebraic closed form; gamma = 1: leading
  power law with its exact constant;
* expOU: Lambert-W saddle point.

Saddle-point constants are expressed in the scaled volatility v = s / Y with
Y = y^{2/(d2 + 2 gamma)}, where the exponent of the integrand becomes
-Y^d2 phi(v) + sigma Y^d1 h(v) with

    phi(v) = 1 / (2 v^{2 gamma}) + c v^d2 / d2,   h(v) = c v^d1 / d1.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import optimize, special

from .errors import (
    DegenerateExponent,
    MinimizationFailure,
    UnsupportedClass,
    UnsupportedGamma,
)
from . import rng
from .lambertw import lambert_w
from .model_core import HALF, Family, ModelSpec, classify
from .quadrature import DEFAULT_QUAD, QuadConfig, log_integrate
from .stationary_dist import _log_density_s, log_normalizer, normalize, sample_stationary

LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


class TailForm(enum.Enum):
    STRETCHED_EXPONENTIAL = "stretched-exponential"
    EXPONENTIAL_BESSEL = "exponential-bessel"
    POWER_LAW = "power-law"
    LAMBERT_W = "lambert-w"


@functools.lru_cache(maxsize=256)
def _log_norm(spec: ModelSpec, quad: QuadConfig = DEFAULT_QUAD) -> float:
    return -log_normalizer(spec, quad)


# --------------------------------------------------------------------------
# numerical oracle


def log_mixing_density(spec: ModelSpec, delta_x: float, delta_t: float,
                       quad: QuadConfig = DEFAULT_QUAD) -> float:
    """Natural log of :func:`mixing_density`."""
    y2 = delta_x**2 / delta_t
    log_n = _log_norm(spec, quad)
    if spec.is_expou:
        sd = spec.g / math.sqrt(2 * spec.a)
        sigma = spec.sigma

        def logf(s):
            v = sigma + s
            with np.errstate(over="ignore"):
                return -spec.a * s**2 / spec.g**2 - v - 0.5 * y2 * np.exp(-2.0 * v)

        centre = 0.5 * math.log(y2) - sigma if y2 > 0 else 0.0
        lo, hi = min(-12 * sd, centre) - 5.0, max(12 * sd, centre) + 5.0
        val = log_integrate(logf, lo, hi, quad)
    else:
        gam = float(spec.gamma)

        def logf(u):
            with np.errstate(over="ignore"):
                return (1.0 - gam) * u - 0.5 * y2 * np.exp(-2.0 * gam * u) + \
                    _log_density_s(spec, np.exp(u))

        lo, hi = -40.0, 40.0
        if y2 > 0:
            u_k = 0.5 * math.log(y2) / gam
            lo, hi = min(lo, u_k - 10.0), max(hi, u_k + 10.0)
        val = log_integrate(logf, lo, hi, quad)
    return val + log_n - LOG_SQRT_2PI - 0.5 * math.log(delta_t)


def mixing_density(spec: ModelSpec, delta_x, delta_t: float,
                   quad: QuadConfig = DEFAULT_QUAD):
    """Short-time return density by quadrature over the stationary volatility law.

    The Gaussian kernel carries the negative exponent -dx^2 / (2 dt s^{2 gamma}).
    For expOU the kernel variance is dt exp(2(sigma + s)) and S is Gaussian.
    """
    if np.ndim(delta_x) == 0:
        return math.exp(log_mixing_density(spec, float(delta_x), delta_t, quad))
    return np.array([math.exp(log_mixing_density(spec, float(x), delta_t, quad))
                     for x in np.ravel(delta_x)]).reshape(np.shape(delta_x))


def sample_returns(spec: ModelSpec, count: int, delta_t: float, seed: int) -> np.ndarray:
    """Draws from the mixing density: S from the stationary law, then a Gaussian return.

    Uniforms and normals come from disjoint counter ranges of the sampling stream.
    """
    s = sample_stationary(normalize(spec), count, seed)
    z = rng.normals(seed, 1, (count + 1) // 2, rng.TAG_SAMPLING).ravel()[:count]
    scale = np.exp(spec.sigma + s) if spec.is_expou else s ** float(spec.gamma)
    return scale * math.sqrt(delta_t) * z


# --------------------------------------------------------------------------
# saddle-point constants


@dataclass(frozen=True)
class SaddleConstants:
    """Constants of the generic tail

    P ~ R_N / sqrt(dt) y^p exp(-R_1 y^q + R_2 sigma y^r + R_4 sigma^2 y^r2) (1 + R_3 sigma y^-w)

    with q the stretch exponent, p the prefactor power, r = q (d1/d2),
    r2 = 2r - q and w = 2 / (d2 + 2 gamma). ``R_N`` includes the density
    normalization. R_4 = h'^2 / (2 phi'') is the second-order shift of the
    saddle value; for alpha = 2 beta its power r2 vanishes and it is an O(1)
    constant in the log density. ``loop_coefficient`` is L in the neglected
    next-order Laplace factor 1 + L y^-q; it only sets the tail window.
    """

    R_N: float
    R_1: float
    R_2: float
    R_3: float
    R_4: float
    loop_coefficient: float
    v_star: float
    phi_curvature: float
    stretch_exponent: float
    prefactor_power: float
    shift_exponent: float
    correction_exponent: float
    second_order_exponent: float


def _check_tail_class(spec: ModelSpec, gamma: Fraction):
    if spec.is_expou:
        raise UnsupportedClass("expOU tails are handled by expou_tail")
    if gamma not in (HALF, Fraction(1)):
        raise UnsupportedGamma(f"tail asymptotes exist for gamma in {{1/2, 1}}, got {gamma}")
    k = 2 * gamma
    if spec.d2 + k == 0:
        raise DegenerateExponent(
            f"{2 + k}+alpha-2beta = 0: the saddle-point scaling y^(2/(d2+2gamma)) is undefined")
    fam = classify(spec).family
    if spec.d2 < 0:
        raise UnsupportedClass(
            f"d2 = {spec.d2} < 0: the stationary density has a power-law tail and no saddle exists")
    return fam, k


def _stationary_point(c: float, d2: float, k: float) -> float:
    """Minimizer of phi(v) = 1/(2 v^k) + c v^d2 / d2 on v > 0 (safeguarded root of phi')."""
    # v^{k+1} phi'(v) = c v^{d2+k} - k/2 is increasing in ln v
    def dphi_scaled(w):
        return c * math.exp((d2 + k) * w) - 0.5 * k

    lo, hi = -1.0, 1.0
    for _ in range(200):
        if dphi_scaled(lo) < 0:
            break
        lo *= 2
    for _ in range(200):
        if dphi_scaled(hi) > 0:
            break
        hi *= 2
    if not dphi_scaled(lo) < 0 < dphi_scaled(hi):
        raise MinimizationFailure("could not bracket the saddle point")
    w = optimize.brentq(dphi_scaled, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(w)


def saddle_constants(spec: ModelSpec, gamma=None) -> SaddleConstants:
    """R_N, R_1, R_2, R_3 of the stretched-exponential tail (generic and gamma=1 Heston-type)."""
    gamma = spec.gamma if gamma is None else Fraction(gamma)
    fam, k = _check_tail_class(spec, gamma)
    if fam is Family.GARCH_TYPE:
        raise UnsupportedClass("GARCH-type tails are algebraic; no saddle constants")
    if fam is Family.HESTON_TYPE and gamma == HALF:
        raise UnsupportedClass("Heston-type gamma=1/2 has an exact Bessel form")
    k = float(k)
    g_ = float(gamma)
    c, sigma = spec.c, spec.sigma
    d1, d2 = float(spec.d1), float(spec.d2)
    heston = fam is Family.HESTON_TYPE

    v = _stationary_point(c, d2, k)
    phi = 0.5 * v**-k + c * v**d2 / d2
    phi2 = 0.5 * k * (k + 1) * v ** (-k - 2) + c * (d2 - 1) * v ** (d2 - 2)
    phi3 = -0.5 * k * (k + 1) * (k + 2) * v ** (-k - 3) + c * (d2 - 1) * (d2 - 2) * v ** (d2 - 3)
    phi4 = 0.5 * k * (k + 1) * (k + 2) * (k + 3) * v ** (-k - 4) + \
        c * (d2 - 1) * (d2 - 2) * (d2 - 3) * v ** (d2 - 4)
    if not phi2 > 0:
        raise MinimizationFailure("saddle point is not a minimum")

    q_exp = -g_ - 2 * float(spec.beta) + (c * sigma if heston else 0.0)
    if heston:
        h = h1 = h2 = 0.0
    else:
        h = c * v**d1 / d1
        h1 = c * v ** (d1 - 1)
        h2 = c * (d1 - 1) * v ** (d1 - 2)
    v1 = h1 / phi2
    R_3 = v1 * q_exp / v - (phi3 * v1 - h2) / (2 * phi2)
    R_N = math.exp(_log_norm(spec)) * v**q_exp / math.sqrt(phi2)
    loop = (q_exp * (q_exp - 1) / (2 * v**2 * phi2) - q_exp * phi3 / (2 * v * phi2**2)
            - phi4 / (8 * phi2**2) + 5 * phi3**2 / (24 * phi2**3))
    scale = 2.0 / (d2 + k)
    return SaddleConstants(
        R_N=R_N, R_1=phi, R_2=h, R_3=R_3, R_4=h1**2 / (2 * phi2),
        loop_coefficient=loop, v_star=v, phi_curvature=phi2,
        stretch_exponent=d2 * scale,
        prefactor_power=(1.0 + q_exp - d2 / 2.0) * scale,
        shift_exponent=d1 * scale,
        correction_exponent=scale,
        second_order_exponent=(2 * d1 - d2) * scale,
    )


def psi(u, eta: float, spec: ModelSpec, gamma=None):
    """Exponent function of the source's substitution, before the xi/2 factor.

    gamma=1/2: u^{-2/(1-4b)} + u^{2 d2/(1-4b)} - eta u^{2 d1/(1-4b)}, or for
    beta=1/4 the exponential form e^-u + e^{(alpha+3/2)u} - eta e^{(alpha+1/2)u}.
    gamma=1: u^{1/b} + u^{-d2/(2b)} - eta u^{-d1/(2b)}.
    """
    gamma = spec.gamma if gamma is None else Fraction(gamma)
    u = np.asarray(u, dtype=float)
    a_, b_ = float(spec.alpha), float(spec.beta)
    d1, d2 = float(spec.d1), float(spec.d2)
    if gamma == HALF:
        if spec.beta == Fraction(1, 4):
            return np.exp(-u) + np.exp((a_ + 1.5) * u) - eta * np.exp((a_ + 0.5) * u)
        e = 1.0 - 4 * b_
        return u ** (-2 / e) + u ** (2 * d2 / e) - eta * u ** (2 * d1 / e)
    if b_ == 0:
        raise DegenerateExponent("gamma=1, beta=0 needs the exponential substitution; use saddle_constants")
    return u ** (1 / b_) + u ** (-d2 / (2 * b_)) - eta * u ** (-d1 / (2 * b_))


def psi_minimum(spec: ModelSpec, gamma=None) -> tuple[float, float]:
    """(u*, psi(u*; 0)) for the source's psi, by bounded minimization on ln u."""
    gamma = spec.gamma if gamma is None else Fraction(gamma)
    expo = gamma == HALF and spec.beta == Fraction(1, 4)

    def f(w):
        u = w if expo else math.exp(w)
        return float(psi(u, 0.0, spec, gamma))

    grid = np.linspace(-30, 30, 6001)
    with np.errstate(over="ignore"):
        vals = np.array([f(w) for w in grid])
    i = int(np.nanargmin(vals))
    res = optimize.minimize_scalar(f, bracket=(grid[max(i - 1, 0)], grid[i], grid[min(i + 1, 6000)]),
                                   method="brent", options={"xtol": 1e-14})
    if not res.success:
        raise MinimizationFailure(res.message)
    u = res.x if expo else math.exp(res.x)
    return float(u), float(res.fun)


# --------------------------------------------------------------------------
# tail asymptotes


@dataclass(frozen=True)
class TailAsymptote:
    family: Family
    gamma: Fraction
    form: TailForm
    stretch_exponent: float
    prefactor_power: float
    constants: SaddleConstants | None
    spec: ModelSpec

    def log_density(self, delta_x, delta_t: float):
        return _log_asymptote(self, np.asarray(delta_x, dtype=float), delta_t)

    def density(self, delta_x, delta_t: float):
        return np.exp(self.log_density(delta_x, delta_t))

    def tail_window(self, width: float = 100.0) -> tuple[float, float]:
        """Range of y = |dx|/sqrt(dt) where the asymptote is expected to hold.

        Lower end: the first sigma correction and the next Laplace order are
        both below 0.1, and the leading exponent exceeds 25 nats. Exact forms
        return a fixed window.
        """
        if self.constants is None:
            if self.form is TailForm.POWER_LAW and self.gamma == 1:
                # the neglected cross term is of relative order c sigma / y
                y_lo = max(10.0, 100.0 * self.spec.c * self.spec.sigma)
                return y_lo, width * y_lo
            return 1.0, width
        k = self.constants
        r3 = abs(k.R_3) * self.spec.sigma
        y_corr = (10.0 * r3) ** (1.0 / k.correction_exponent) if r3 > 0 else 0.0
        y_lead = (25.0 / k.R_1) ** (1.0 / k.stretch_exponent)
        y_loop = (10.0 * abs(k.loop_coefficient)) ** (1.0 / k.stretch_exponent)
        y_lo = max(y_corr, y_lead, y_loop, 1.0)
        return y_lo, width * y_lo


def _log_asymptote(tail: TailAsymptote, dx: np.ndarray, dt: float):
    spec = tail.spec
    y = np.abs(dx) / math.sqrt(dt)
    log_n = _log_norm(spec)
    c, sigma, b2 = spec.c, spec.sigma, 2 * float(spec.beta)
    with np.errstate(divide="ignore"):
        ly = np.log(y)
    if tail.form is TailForm.EXPONENTIAL_BESSEL:
        nu = 0.5 - b2 + c * sigma
        z = y * math.sqrt(2 * c)
        log_k = np.log(special.kve(nu, z)) - z
        out = math.log(2) + log_n - LOG_SQRT_2PI - 0.5 * math.log(dt) + \
            0.5 * nu * (2 * ly - math.log(2 * c)) + log_k
    elif tail.form is TailForm.POWER_LAW and tail.gamma == HALF:
        mu = b2 + c - 0.5
        out = log_n - LOG_SQRT_2PI - 0.5 * math.log(dt) + special.gammaln(mu) - \
            mu * np.log(0.5 * y**2 + c * sigma)
    elif tail.form is TailForm.POWER_LAW:
        mu = b2 + c
        out = log_n - LOG_SQRT_2PI - 0.5 * math.log(dt) + (0.5 * mu - 1) * math.log(2) + \
            special.gammaln(0.5 * mu) - mu * ly
    else:
        k = tail.constants
        out = math.log(k.R_N) - 0.5 * math.log(dt) + k.prefactor_power * ly \
            - k.R_1 * y**k.stretch_exponent + k.R_2 * sigma * y**k.shift_exponent \
            + k.R_4 * sigma**2 * y**k.second_order_exponent \
            + np.log1p(k.R_3 * sigma * y**-k.correction_exponent)
    return float(out) if np.ndim(out) == 0 else out


def _tail(spec: ModelSpec, gamma: Fraction) -> TailAsymptote:
    fam, _ = _check_tail_class(spec, gamma)
    b2, c = 2 * float(spec.beta), spec.c
    if fam is Family.GARCH_TYPE:
        power = -(2 * b2 + 2 * c - 1) if gamma == HALF else -(b2 + c)
        return TailAsymptote(fam, gamma, TailForm.POWER_LAW, 0.0, power, None, spec)
    if fam is Family.HESTON_TYPE and gamma == HALF:
        return TailAsymptote(fam, gamma, TailForm.EXPONENTIAL_BESSEL, 1.0,
                             c * spec.sigma - b2, None, spec)
    k = saddle_constants(spec, gamma)
    return TailAsymptote(fam, gamma, TailForm.STRETCHED_EXPONENTIAL, k.stretch_exponent,
                         k.prefactor_power, k, spec)


def tail_asymptote(spec: ModelSpec) -> TailAsymptote:
    """Tail description for ``spec.gamma`` (1/2 or 1)."""
    return _tail(spec, spec.gamma)


def tail_asymptote_gamma_half(spec: ModelSpec, delta_x, delta_t: float):
    """Tail approximation of the return density for gamma = 1/2."""
    if spec.gamma != HALF:
        raise UnsupportedGamma(f"expected gamma = 1/2, got {spec.gamma}")
    return _tail(spec, HALF).density(delta_x, delta_t)


def tail_asymptote_gamma_one(spec: ModelSpec, delta_x, delta_t: float):
    """Tail approximation of the return density for gamma = 1."""
    if spec.gamma != 1:
        raise UnsupportedGamma(f"expected gamma = 1, got {spec.gamma}")
    return _tail(spec, Fraction(1)).density(delta_x, delta_t)


# --------------------------------------------------------------------------
# expOU


def expou_saddle_exponent(xi, a: float, g: float):
    """-(a / 2g^2) [(1 + W(xi))^2 - 1]: the saddle value of exp(-a psi / 2g^2),
    psi(u) = 2 xi u + (ln u)^2, at u* = W(xi)/xi."""
    w = lambert_w(xi)
    return -(a / (2 * g**2)) * ((1 + w) ** 2 - 1)


def _expou_effective(spec: ModelSpec, delta_x, delta_t):
    # the log-volatility S has stationary variance g^2/2a; in psi's
    # normalization that corresponds to the noise amplitude sqrt(2) g
    g_eff2 = 2 * spec.g**2
    x = np.abs(np.asarray(delta_x, dtype=float)) * math.exp(-spec.sigma)
    xi = g_eff2 * x**2 / (2 * spec.a * delta_t)
    return g_eff2, x, xi


def expou_xi(spec: ModelSpec, delta_x, delta_t: float):
    """The variable g^2 dx^2 / (2 a dt) (after the exp(-sigma) rescaling of dx)."""
    x = np.abs(np.asarray(delta_x, dtype=float)) * math.exp(-spec.sigma)
    return spec.g**2 * x**2 / (2 * spec.a * delta_t)


def expou_log_tail(spec: ModelSpec, delta_x, delta_t: float):
    """Log of the Lambert-W saddle-point density, one-loop fluctuation factor included."""
    if not spec.is_expou:
        raise UnsupportedClass("expou_tail needs an expOU model")
    g_eff2, x, xi = _expou_effective(spec, delta_x, delta_t)
    K = spec.a / (2 * g_eff2)
    w = lambert_w(xi)
    with np.errstate(divide="ignore"):
        log_u = np.where(xi > 0, np.log(np.where(xi > 0, w, 1.0)) - np.log(np.where(xi > 0, xi, 1.0)), 0.0)
    exponent = expou_saddle_exponent(xi, spec.a, math.sqrt(g_eff2))
    # psi''(u*) = 2 (1 - ln u*) / u*^2 ;  integrand carries u^{-1/2}
    log_curv = math.log(2.0) + np.log1p(w) - 2 * log_u
    log_fluct = 0.5 * (math.log(2 * math.pi) - math.log(K) - log_curv)
    log_pref = -math.log(2) - 0.5 * math.log(2 * math.pi * delta_t) + \
        0.5 * math.log(spec.a / (math.pi * spec.g**2)) - spec.sigma
    out = log_pref - 0.5 * log_u + exponent + log_fluct
    return float(out) if np.ndim(out) == 0 else out


def expou_tail(spec: ModelSpec, delta_x, delta_t: float):
    return np.exp(expou_log_tail(spec, delta_x, delta_t))


def expou_far_tail_power(spec: ModelSpec, delta_x):
    """Effective power -(2a/g_eff^2) ln dx of the far tail P ~ dx^{-(2a/g_eff^2) ln dx}, g_eff^2 = 2g^2."""
    x = np.abs(np.asarray(delta_x, dtype=float)) * math.exp(-spec.sigma)
    return -(2 * spec.a / (2 * spec.g**2)) * np.log(x)

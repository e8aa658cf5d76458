"""Stationary volatility density from the zero-current Fokker-Planck solution.

With c = 2a/g^2, d1 = 1+alpha-2beta, d2 = 2+alpha-2beta the unnormalized log
density on s > 0 is

    generic      -2beta ln s - c s^d2/d2 + c sigma s^d1/d1
    Heston-type  (c sigma - 2beta) ln s - c s                  (d1 = 0)
    GARCH-type   (-2beta - c) ln s - c sigma / s                (d2 = 0)

and for expOU the Gaussian exp(-a s^2/g^2) on the whole line. Densities are
handled in log space on the axis u = ln s.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import (
    MomentDiverges,
    NonPositiveArgument,
    NotNormalizable,
    UnnormalizedInput,
)
from .model_core import Family, ModelSpec, classify
from .quadrature import DEFAULT_QUAD, QuadConfig, log_integrate, U_LIMIT

SUPPORT_DROP = math.log(1e30)
GRID_POINTS = 2048
FINE_POINTS = 16385


def _log_density_s(spec: ModelSpec, s):
    """Unnormalized log density; no domain check (s > 0 assumed for algebraic)."""
    s = np.asarray(s, dtype=float)
    c = spec.c
    if spec.is_expou:
        return -spec.a * s**2 / spec.g**2
    fam = classify(spec).family
    b2 = 2 * float(spec.beta)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        ln_s = np.log(s)
        if fam is Family.HESTON_TYPE:
            return (c * spec.sigma - b2) * ln_s - c * s
        if fam is Family.GARCH_TYPE:
            out = (-b2 - c) * ln_s - c * spec.sigma / s
            return out
        d1, d2 = float(spec.d1), float(spec.d2)
        out = -b2 * ln_s - c * np.exp(d2 * ln_s) / d2
        if spec.sigma != 0:
            out = out + c * spec.sigma * np.exp(d1 * ln_s) / d1
        return out


def log_density_unnormalized(spec: ModelSpec, s):
    """Log of the stationary density without its normalization constant."""
    s_arr = np.asarray(s, dtype=float)
    if not spec.is_expou and np.any(s_arr <= 0):
        raise NonPositiveArgument("stationary density is defined for s > 0")
    out = _log_density_s(spec, s_arr)
    return float(out) if np.ndim(out) == 0 else out


def _log_mass_u(spec: ModelSpec, u):
    """log of P(e^u) e^u, the mass per unit of u = ln s."""
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore"):
        return _log_density_s(spec, np.exp(u)) + u


def normalizable(spec: ModelSpec) -> tuple[bool, str]:
    """Analytic integrability test of the unnormalized density on (0, inf)."""
    if spec.is_expou:
        return True, "gaussian"
    c, sigma, b2 = spec.c, spec.sigma, 2 * float(spec.beta)
    fam = classify(spec).family
    d2 = spec.d2
    if fam is Family.HESTON_TYPE:
        if c * sigma - b2 > -1:
            return True, "gamma-type density"
        return False, f"s^{c * sigma - b2:g} is not integrable at 0 (need c sigma - 2beta > -1)"
    if fam is Family.GARCH_TYPE:
        if sigma <= 0:
            return False, "GARCH-type density needs sigma > 0 for an essential zero at s=0"
        if b2 + c > 1:
            return True, "inverse-gamma-type density"
        return False, f"tail s^-{b2 + c:g} is not integrable (need 2beta + 2a/g^2 > 1)"
    if d2 > 0:
        if spec.d1 < 0 and sigma > 0:
            return True, "essential zero at the origin"
        if b2 < 1:
            return True, "integrable power at the origin"
        return False, f"s^-{b2:g} is not integrable at 0"
    # d2 < 0: both exponential terms vanish at infinity, leaving s^-2beta
    if sigma <= 0:
        return False, "density blows up at the origin when sigma = 0 and d2 < 0"
    if b2 > 1:
        return True, "power-law tail s^-2beta"
    return False, f"tail s^-{b2:g} is not integrable"


def moment_finite(spec: ModelSpec, n: int) -> bool:
    """Whether <S^n> exists under the (normalizable) stationary density."""
    if spec.is_expou or n == 0:
        return True
    fam = classify(spec).family
    b2 = 2 * float(spec.beta)
    if fam is Family.GARCH_TYPE:
        return b2 + spec.c - n > 1
    if fam is Family.HESTON_TYPE or spec.d2 > 0:
        return True
    return b2 - n > 1


def _scan_window(spec: ModelSpec) -> tuple[float, float]:
    if spec.is_expou:
        sd = spec.g / math.sqrt(2 * spec.a)
        return -10 * sd, 10 * sd
    return -40.0, 40.0


def log_normalizer(spec: ModelSpec, quad: QuadConfig = DEFAULT_QUAD) -> float:
    """log of the integral of the unnormalized density (= -log N)."""
    ok, why = normalizable(spec)
    if not ok:
        raise NotNormalizable(why)
    lo, hi = _scan_window(spec)
    if spec.is_expou:
        return 0.5 * math.log(math.pi * spec.g**2 / spec.a)
    return log_integrate(lambda u: _log_mass_u(spec, u), lo, hi, quad)


@dataclass
class DensityCurve:
    """Normalized stationary density sampled on a grid.

    ``pdf = exp(log_values + log_norm)``; ``log_norm`` is the log of the
    normalization constant N. ``cdf``/``sf`` are tabulated on ``fine_u``
    (u = ln s, or s itself for expOU) for inversion and evaluation.
    """

    grid: np.ndarray
    log_values: np.ndarray
    log_norm: float
    support: tuple
    spec: ModelSpec
    fine_u: np.ndarray = field(repr=False, default=None)
    fine_cdf: np.ndarray = field(repr=False, default=None)
    fine_sf: np.ndarray = field(repr=False, default=None)
    normalized: bool = True

    @property
    def log_axis(self) -> bool:
        return not self.spec.is_expou

    @property
    def norm_const(self) -> float:
        return math.exp(self.log_norm)

    @property
    def pdf_values(self) -> np.ndarray:
        return np.exp(self.log_values + self.log_norm)

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.exp(_log_density_s(self.spec, s) + self.log_norm)
        if self.log_axis:
            val = np.where(s > 0, val, 0.0)
        return val

    def _axis(self, s):
        s = np.asarray(s, dtype=float)
        if not self.log_axis:
            return s
        with np.errstate(divide="ignore"):
            return np.log(np.where(s > 0, s, 0.0))

    def cdf(self, s):
        u = self._axis(s)
        out = np.interp(u, self.fine_u, self.fine_cdf, left=0.0, right=1.0)
        return float(out) if np.ndim(out) == 0 else out

    def sf(self, s):
        u = self._axis(s)
        out = np.interp(u, self.fine_u, self.fine_sf, left=1.0, right=0.0)
        return float(out) if np.ndim(out) == 0 else out

    def ppf(self, q):
        """Inverse CDF; upper half inverted through the survival function."""
        q = np.asarray(q, dtype=float)
        u = np.empty_like(q)
        low = q < 0.5
        u[low] = np.interp(q[low], self.fine_cdf, self.fine_u)
        with np.errstate(divide="ignore"):
            log_sf = np.log(self.fine_sf)
            target = np.log1p(-q[~low])
        # log_sf decreases along the grid; np.interp needs increasing abscissae
        u[~low] = np.interp(target, log_sf[::-1], self.fine_u[::-1])
        return np.exp(u) if self.log_axis else u

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "pdf", "cdf"])
            for s, p, c in zip(self.grid, self.pdf_values, self.cdf(self.grid)):
                w.writerow([repr(float(s)), repr(float(p)), repr(float(c))])


def _cumulative(u: np.ndarray, logmass: np.ndarray, log_z: float):
    """Trapezoid CDF and survival function of exp(logmass - log_z) along u."""
    dens = np.exp(logmass - log_z)
    seg = 0.5 * (dens[1:] + dens[:-1]) * np.diff(u)
    cdf = np.concatenate([[0.0], np.cumsum(seg)])
    sf = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    total = cdf[-1]
    return cdf / total, sf / total


def normalize(spec: ModelSpec, quad: QuadConfig = DEFAULT_QUAD,
              points: int = GRID_POINTS) -> DensityCurve:
    """Normalize the stationary density and tabulate it.

    The effective support is where the mass per unit ln s exceeds 1e-30 of
    its peak. The output grid mixes points uniform in ln s with points at
    equally spaced quantiles, which refines it where the density changes fast.
    """
    log_z = log_normalizer(spec, quad)
    logmass = (lambda v: -spec.a * v**2 / spec.g**2) if spec.is_expou else \
        (lambda v: _log_mass_u(spec, v))
    lo, hi = _scan_window(spec)
    from .quadrature import _edge, find_peak
    peak, fmax = find_peak(logmass, lo, hi)
    hard = (-np.inf, np.inf) if spec.is_expou else (-U_LIMIT, U_LIMIT)
    u_lo = _edge(logmass, peak, fmax, -1, SUPPORT_DROP, hard[0])
    u_hi = _edge(logmass, peak, fmax, +1, SUPPORT_DROP, hard[1])

    fine_u = np.linspace(u_lo, u_hi, FINE_POINTS)
    fine_u = np.union1d(fine_u, [peak])
    fine_lm = logmass(fine_u)
    cdf, sf = _cumulative(fine_u, fine_lm, log_z)

    half = points // 2
    uni = np.linspace(u_lo, u_hi, points - half)
    quant = np.interp(np.linspace(0, 1, half + 2)[1:-1], cdf, fine_u)
    grid_u = np.unique(np.concatenate([uni, quant]))
    if spec.is_expou:
        grid = grid_u
        support = (float(u_lo), float(u_hi))
    else:
        grid = np.exp(grid_u)
        support = (float(np.exp(u_lo)), float(np.exp(u_hi)))
    log_values = _log_density_s(spec, grid)
    return DensityCurve(grid, log_values, -log_z, support, spec, fine_u, cdf, sf)


def sample_stationary(density: DensityCurve, count: int, seed: int) -> np.ndarray:
    """Inverse-CDF samples from a normalized curve (counter-based uniforms)."""
    if not getattr(density, "normalized", False) or density.fine_cdf is None:
        raise UnnormalizedInput("sample_stationary needs a curve produced by normalize()")
    if count == 0:
        return np.empty(0)
    return density.ppf(rng.uniform_stream(seed, count))


def stationary_moment_check(density, n: int, quad: QuadConfig = DEFAULT_QUAD) -> float:
    """<S^n> by quadrature of s^n P(s); accepts a DensityCurve or a ModelSpec."""
    if isinstance(density, DensityCurve):
        if not density.normalized:
            raise UnnormalizedInput("curve is not normalized")
        spec, log_norm = density.spec, density.log_norm
    else:
        spec = density
        log_norm = -log_normalizer(spec, quad)
    if not moment_finite(spec, n):
        raise MomentDiverges(f"<S^{n}> diverges for this model")
    if n == 0:
        return 1.0
    if spec.is_expou:
        if n % 2:
            return 0.0
        sd = spec.g / math.sqrt(2 * spec.a)
        # even integrand: integrate over s > 0 on the log axis and double
        val = log_integrate(lambda u: _log_density_s(spec, np.exp(u)) + (n + 1) * u,
                            math.log(sd) - 20, math.log(sd) + 20, quad)
        return 2.0 * math.exp(val + log_norm)
    lo, hi = _scan_window(spec)
    val = log_integrate(lambda u: _log_mass_u(spec, u) + n * u, lo, hi, quad)
    return math.exp(val + log_norm)

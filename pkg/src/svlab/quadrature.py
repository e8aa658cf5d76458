"""Log-space adaptive quadrature for sharply peaked, positive integrands.

The integrand is supplied as its logarithm. The peak is located by a coarse
scan plus bounded refinement, the integration window is grown geometrically
until the integrand has dropped by ``cut`` nats on each side, and the scaled
integrand ``exp(logf - max)`` is handed to QUADPACK. Everything stays finite
even when the integral itself under- or overflows a double.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import QuadratureFailure

U_LIMIT = 700.0


@dataclass(frozen=True)
class QuadConfig:
    epsrel: float = 1e-11
    cut: float = 60.0
    scan_points: int = 4001
    limit: int = 500


DEFAULT_QUAD = QuadConfig()


def _safe(logf, u):
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        v = np.asarray(logf(u), dtype=float)
    return np.where(np.isnan(v), -np.inf, v)


def find_peak(logf, lo: float, hi: float, n: int = 4001) -> tuple[float, float]:
    """Global maximum of ``logf`` on [lo, hi] (scan, then bounded refinement)."""
    grid = np.linspace(lo, hi, n)
    vals = _safe(logf, grid)
    i = int(np.argmax(vals))
    if not np.isfinite(vals[i]):
        raise QuadratureFailure("integrand is zero on the whole scan window")
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, n - 1)]
    res = optimize.minimize_scalar(lambda u: -float(_safe(logf, u)), bounds=(a, b),
                                   method="bounded", options={"xatol": 1e-13 * max(1.0, abs(grid[i]))})
    if res.success and -res.fun >= vals[i]:
        return float(res.x), float(-res.fun)
    return float(grid[i]), float(vals[i])


def _edge(logf, peak: float, fmax: float, direction: int, cut: float, hard: float) -> float:
    h = 1e-9 * max(1.0, abs(peak))
    while True:
        u = peak + direction * h
        if direction * (u - hard) >= 0:
            return hard
        if float(_safe(logf, u)) < fmax - cut:
            return u
        h *= 2.0


def log_integrate(logf, lo: float, hi: float, config: QuadConfig = DEFAULT_QUAD,
                  hard: tuple[float, float] = (-U_LIMIT, U_LIMIT)) -> float:
    """log of the integral of exp(logf(u)) du over the real line (or ``hard`` range).

    ``[lo, hi]`` is the scan window that must contain the dominant peak.
    """
    peak, fmax = find_peak(logf, lo, hi, config.scan_points)
    left = _edge(logf, peak, fmax, -1, config.cut, hard[0])
    right = _edge(logf, peak, fmax, +1, config.cut, hard[1])

    def scaled(u):
        return math.exp(float(_safe(logf, u)) - fmax)

    total, err = 0.0, 0.0
    for a, b in ((left, peak), (peak, right)):
        if b <= a:
            continue
        val, e = integrate.quad(scaled, a, b, epsabs=0.0, epsrel=config.epsrel,
                                limit=config.limit)
        total += val
        err += e
    if not total > 0 or not math.isfinite(total):
        raise QuadratureFailure(f"quadrature returned {total}")
    if err > 1e-6 * total:
        raise QuadratureFailure(f"quadrature error estimate {err:.2e} too large for value {total:.2e}")
    return fmax + math.log(total)

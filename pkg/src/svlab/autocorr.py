"""Stationary volatility autocorrelations C_{u,v}(dt) = <S_t^u S_{t+dt}^v>.

In the lag variable the functions obey, for alpha = 0,

    d/d dt C_{u,v} = v a (sigma C_{u,v-1} - C_{u,v}) + g^2/2 v(v-1) C_{u,v-2+2beta},

a lower-triangular system in v with rates -l a (beta in {0, 1/2}). Its
solution is a sum of exponentials sum_l f_l e^{-l a dt}; the f_l follow
from the equal-time values C_{u,v'}(0) = <S^{u+v'}> by a triangular solve.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    DivergentMoment,
    InsufficientHorizon,
    NonPositiveResidual,
    UnsupportedExponents,
    UnsupportedOrder,
)
from .model_core import ModelSpec
from .moment_engine import acf_proxy_v1, stationary_s_moment
from .sde_engine import PathEnsemble, _burn_index, _lag_steps


class Source(enum.Enum):
    ANALYTIC = "analytic"
    EMPIRICAL = "empirical"


@dataclass
class AcfCurve:
    lags: np.ndarray
    values: np.ndarray
    u: int
    v: int
    source: Source
    stderr: np.ndarray | None = None
    asymptote: float | None = None
    """C(infinity): exact for analytic curves, <S^u><S^v> from the data otherwise."""

    def write_csv(self, path) -> None:
        err = np.zeros_like(self.values) if self.stderr is None else self.stderr
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lag", "value", "stderr", "source"])
            for lag, val, e in zip(self.lags, self.values, err):
                w.writerow([repr(float(lag)), repr(float(val)), repr(float(e)), self.source.value])


def _moment(spec: ModelSpec, n: int) -> float:
    val = stationary_s_moment(spec, n)
    if math.isinf(val):
        raise DivergentMoment(f"stationary <S^{n}> diverges")
    return val


def lag_matrix(spec: ModelSpec, v: int) -> np.ndarray:
    """Generator of (C_{u,0}, ..., C_{u,v}) in the lag variable."""
    two_b = int(2 * spec.beta) if not spec.is_expou else 0
    sigma = 0.0 if spec.is_expou else spec.sigma
    a, g2 = spec.a, spec.g**2
    A = np.zeros((v + 1, v + 1))
    for k in range(v + 1):
        A[k, k] -= k * a
        if k >= 1:
            A[k, k - 1] += k * a * sigma
        if k >= 2:
            A[k, k - 2 + two_b] += 0.5 * g2 * k * (k - 1)
    return A


def exponential_coefficients(spec: ModelSpec, u: int, v: int) -> np.ndarray:
    """Weights w_l of C_{u,v}(dt) = sum_l w_l exp(-l a dt), l = 0..v."""
    A = lag_matrix(spec, v)
    n = v + 1
    # eigenvector l is zero above row l, 1 at row l, then fixed by forward substitution
    E = np.zeros((n, n))
    for l in range(n):
        lam = A[l, l]
        E[l, l] = 1.0
        for i in range(l + 1, n):
            E[i, l] = -(A[i, :i] @ E[:i, l]) / (A[i, i] - lam)
    c0 = np.array([_moment(spec, u + k) for k in range(n)])
    f = solve_triangular(E, c0, lower=True)
    return E[v, :] * f


def analytic_acf(spec: ModelSpec, u: int, v: int, lags) -> AcfCurve:
    """Stationary C_{u,v} on ``lags``.

    v = 1 uses the two-term formula valid for every alpha = 0 model; v > 1
    needs beta in {0, 1/2} (or expOU, whose S is a centred OU process).
    """
    lags = np.asarray(lags, dtype=float)
    if not spec.is_expou and spec.alpha != 0:
        raise UnsupportedExponents("analytic autocorrelations need alpha = 0")
    target = 0.0 if spec.is_expou else spec.sigma
    if v == 0:
        mu = _moment(spec, u)
        return AcfCurve(lags, np.full_like(lags, mu), u, v, Source.ANALYTIC, asymptote=mu)
    if v == 1:
        vals = np.asarray(acf_proxy_v1(spec, u, lags), dtype=float)
        return AcfCurve(lags, vals, u, v, Source.ANALYTIC, asymptote=target * _moment(spec, u))
    if not spec.is_expou and spec.beta not in (0, 0.5):
        raise UnsupportedOrder(
            f"C_{{u,v}} with v={v} is not available for beta={spec.beta}: some rates "
            "l1 a - l2 g^2/2 are not negative, so the stationary functions need not exist")
    w = exponential_coefficients(spec, u, v)
    rates = np.arange(v + 1) * spec.a
    vals = np.exp(-np.outer(lags, rates)) @ w
    return AcfCurve(lags, vals, u, v, Source.ANALYTIC, asymptote=float(w[0]))


def empirical_acf(ensemble: PathEnsemble, u: int, v: int, lags,
                  burn_in: float | None = None, groups: int = 20) -> AcfCurve:
    """Time-and-ensemble average of S_t^u S_{t+dt}^v after ``burn_in`` (>= 10/a).

    Standard errors come from a delete-one-group jackknife over path groups.
    """
    lags = np.asarray(lags, dtype=float)
    i0 = _burn_index(ensemble, burn_in, 10.0)
    steps = [0 if lag == 0 else _lag_steps(ensemble, lag) for lag in lags]
    s = ensemble.s[:, i0:]
    n_t = s.shape[1]
    if max(steps) >= n_t:
        raise InsufficientHorizon(f"largest lag needs {max(steps)} records after burn-in, have {n_t}")
    su = s**u
    sv = s**v
    groups = max(2, min(groups, ensemble.n_paths))
    bounds = np.linspace(0, ensemble.n_paths, groups + 1).astype(int)

    # per-group sums; the jackknife replicates drop one group at a time
    sums = np.empty((groups, len(lags)))
    counts = np.empty(groups)
    mean_u = np.empty(groups)
    mean_v = np.empty(groups)
    for gi, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:])):
        counts[gi] = hi - lo
        mean_u[gi] = su[lo:hi].mean(axis=1).sum()
        mean_v[gi] = sv[lo:hi].mean(axis=1).sum()
        for j, k in enumerate(steps):
            sums[gi, j] = (su[lo:hi, : n_t - k] * sv[lo:hi, k:]).mean(axis=1).sum()

    total = sums.sum(axis=0) / counts.sum()
    loo = (sums.sum(axis=0) - sums) / (counts.sum() - counts)[:, None]
    stderr = np.sqrt((groups - 1) / groups * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))
    asym = (mean_u.sum() / counts.sum()) * (mean_v.sum() / counts.sum())
    return AcfCurve(lags, total, u, v, Source.EMPIRICAL, stderr, float(asym))


@dataclass(frozen=True)
class DecayFit:
    rate: float
    stderr: float
    intercept: float


def fit_decay_rate(curve: AcfCurve, lag_window=None, asymptote: float | None = None) -> DecayFit:
    """Least-squares slope of ln(C(dt) - C(inf)) against dt.

    ``lag_window`` is ``(lo, hi)``; the default uses every lag. When the
    curve has standard errors the fit is weighted by them.
    """
    c_inf = curve.asymptote if asymptote is None else asymptote
    if c_inf is None:
        raise ValueError("curve has no asymptote; pass one explicitly")
    lags, vals = curve.lags, curve.values
    mask = np.ones(len(lags), dtype=bool)
    if lag_window is not None:
        mask = (lags >= lag_window[0]) & (lags <= lag_window[1])
    resid = vals[mask] - c_inf
    scale = max(1.0, abs(c_inf))
    if mask.sum() < 2 or np.any(resid <= 1e-14 * scale):
        raise NonPositiveResidual("C(dt) - C(inf) must be positive on the fit window")
    x, y = lags[mask], np.log(resid)
    if curve.stderr is not None and np.all(curve.stderr[mask] > 0):
        w = resid / curve.stderr[mask]
    else:
        w = np.ones_like(y)
    X = np.column_stack([np.ones_like(x), x])
    Xw = X * w[:, None]
    coef, *_ = np.linalg.lstsq(Xw, y * w, rcond=None)
    cov = np.linalg.inv(Xw.T @ Xw)
    if curve.stderr is None:
        dof = max(len(x) - 2, 1)
        cov = cov * float(((y - X @ coef) ** 2).sum()) / dof
    return DecayFit(rate=float(-coef[1]), stderr=float(math.sqrt(cov[1, 1])),
                    intercept=float(coef[0]))

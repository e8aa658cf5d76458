"""Tail index, moments with errors and Kolmogorov-Smirnov distance."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample, EmptySample, InsufficientTail, NonMonotoneCdf

MIN_K = 50


@dataclass(frozen=True)
class TailReport:
    """Hill estimate of the survival-function tail index.

    A density tail |x|^-tau corresponds to ``index = tau - 1``.
    """

    index: float
    stderr: float
    k: int
    threshold: float


def default_k(n: int) -> int:
    """floor(n^0.6) clipped to [50, n/10]."""
    return int(min(max(math.floor(n**0.6), MIN_K), n // 10))


def _sorted_abs(samples) -> np.ndarray:
    x = np.abs(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise EmptySample("no samples")
    return np.sort(x)[::-1]


def _hill_sorted(x: np.ndarray, k: int) -> TailReport:
    if k < MIN_K or k > len(x) // 10:
        raise InsufficientTail(f"need 50 <= k <= n/10, got k={k} with n={len(x)}")
    thr = x[k]
    if not thr > 0:
        raise DegenerateSample("the (k+1)-th largest |x| is zero")
    logs = np.log(x[:k] / thr)
    total = float(logs.sum())
    if not total > 0:
        raise DegenerateSample("the k largest values are all equal")
    index = k / total
    return TailReport(index, index / math.sqrt(k), int(k), float(thr))


def hill_estimator(samples, k: int | None = None) -> TailReport:
    """Hill estimator from the k largest order statistics of |samples|."""
    x = _sorted_abs(samples)
    if len(x) < 10 * MIN_K:
        raise InsufficientTail(f"need at least {10 * MIN_K} samples, got {len(x)}")
    if np.all(x == x[0]):
        raise DegenerateSample("all samples are equal")
    return _hill_sorted(x, default_k(len(x)) if k is None else int(k))


def hill_plot(samples, ks=None, points: int = 40) -> list[TailReport]:
    """Hill estimates over a k sweep (log-spaced from 50 to n/10 by default)."""
    x = _sorted_abs(samples)
    if ks is None:
        ks = np.unique(np.geomspace(MIN_K, len(x) // 10, points).astype(int))
    # cumulative sums make each k O(1)
    logs = np.log(x[: max(ks) + 1])
    cums = np.cumsum(logs)
    out = []
    for k in ks:
        k = int(k)
        if k < MIN_K or k > len(x) // 10:
            raise InsufficientTail(f"k={k} outside [50, n/10]")
        total = float(cums[k - 1] - k * logs[k])
        if not total > 0:
            raise DegenerateSample("the k largest values are all equal")
        idx = k / total
        out.append(TailReport(idx, idx / math.sqrt(k), k, float(x[k])))
    return out


def write_hill_plot(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "index", "stderr"])
        for r in reports:
            w.writerow([r.k, repr(r.index), repr(r.stderr)])


def empirical_moment(samples, order: int) -> tuple[float, float]:
    """Sample mean of x^order and its standard error."""
    if order < 1:
        raise ValueError("order must be >= 1")
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise EmptySample("no samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    p = x**order
    se = float(p.std(ddof=1) / math.sqrt(p.size)) if p.size > 1 else 0.0
    return float(p.mean()), se


def ks_distance(samples, cdf) -> float:
    """sup |F_n(x) - F(x)| for a callable CDF ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise EmptySample("no samples")
    f = np.asarray(cdf(x), dtype=float)
    if np.any(np.diff(f) < -1e-12) or np.any(f < -1e-12) or np.any(f > 1 + 1e-12):
        raise NonMonotoneCdf("cdf is not a monotone map into [0, 1] on the sample range")
    # ties: the ECDF jumps once per distinct value
    upper = np.searchsorted(x, x, side="right") / n
    lower = np.searchsorted(x, x, side="left") / n
    return float(max(np.max(upper - f), np.max(f - lower)))

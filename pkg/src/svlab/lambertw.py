"""Principal branch of the Lambert W function, W(y) exp(W(y)) = y, for real y >= -1/e."""

from __future__ import annotations

import numpy as np

from .errors import OutOfDomain

INV_E = float(np.exp(-1.0))
_MAX_ITER = 60


def _initial(y: np.ndarray) -> np.ndarray:
    w = np.empty_like(y)
    near = y < -0.25
    mid = (~near) & (y <= np.e)
    big = y > np.e
    # branch-point series in p = sqrt(2(e y + 1))
    p = np.sqrt(np.maximum(2.0 * (np.e * y[near] + 1.0), 0.0))
    w[near] = -1.0 + p - p**2 / 3.0 + 11.0 / 72.0 * p**3
    l1 = np.log1p(y[mid])
    w[mid] = l1 * (1.0 - np.log1p(l1) / (2.0 + l1))
    L1 = np.log(y[big])
    L2 = np.log(L1)
    w[big] = L1 - L2 + L2 / L1
    return w


def lambert_w(y):
    """W_0(y) by Halley iteration; raises OutOfDomain for y < -1/e."""
    y_arr = np.asarray(y, dtype=float)
    scalar = y_arr.ndim == 0
    y_arr = np.atleast_1d(y_arr)
    if np.any(y_arr < -INV_E):
        # exactly representable -1/e rounds just above the true branch point
        bad = y_arr[y_arr < -INV_E]
        if np.any(bad < -INV_E * (1 + 4e-16)):
            raise OutOfDomain(f"lambert_w needs y >= -1/e, got {bad.min()}")
        y_arr = np.maximum(y_arr, -INV_E)

    w = np.zeros_like(y_arr)
    finite = np.isfinite(y_arr)
    w[~finite] = y_arr[~finite]
    work = finite & (y_arr != 0.0)
    yy = y_arr[work]
    ww = _initial(yy)
    active = np.ones(len(yy), dtype=bool)
    for _ in range(_MAX_ITER):
        if not active.any():
            break
        wa, ya = ww[active], yy[active]
        ew = np.exp(wa)
        f = wa * ew - ya
        wp1 = wa + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            # w = -1 at the branch point makes denom 0/0; the step is zeroed below
            denom = ew * wp1 - (wa + 2.0) * f / (2.0 * wp1)
            step = np.where(np.abs(wp1) > 1e-300, f / denom, 0.0)
        step = np.where(np.isfinite(step), step, 0.0)
        wn = wa - step
        # stay on the principal branch
        wn = np.maximum(wn, -1.0)
        done = np.abs(wn - wa) <= 4e-16 * (1.0 + np.abs(wn))
        ww[active] = wn
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    w[work] = ww
    return float(w[0]) if scalar else w


def lambert_w_log(y):
    """Leading asymptote W(y) ~ ln y."""
    return np.log(y)


def lambert_w_asymptotic(y):
    """Two-term asymptote ln y + (1/(1 + ln y) - 1) ln ln y, usable for y >~ 3."""
    L1 = np.log(y)
    return L1 + (1.0 / (1.0 + L1) - 1.0) * np.log(L1)

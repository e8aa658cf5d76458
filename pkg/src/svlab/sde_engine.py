"""Euler-Maruyama integration of the coupled price/volatility system.

The volatility update is reflected at zero (``s' = |s_raw|``) and all
coefficients are evaluated at ``max(s, 0)``, so fractional powers never see a
negative argument. Paths are independent tasks: each path draws its noise from
the counter-based generator in :mod:`svlab.rng`, keyed by (seed, path, step),
which makes an ensemble bit-identical for any number of worker threads.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numba as nb
import numpy as np

from . import rng
from .errors import (
    InsufficientHorizon,
    LagNotOnGrid,
    MemoryCapExceeded,
    NonFiniteState,
    StabilityGuard,
    UsageError,
)
from .model_core import ModelSpec, validate

MAX_DT_A = 0.1
DEFAULT_MEMORY_CAP = 2**30  # bytes for the recorded x and s arrays


@dataclass(frozen=True)
class SimConfig:
    """Time grid, ensemble size and seeding for :func:`simulate_paths`.

    ``initial_s=None`` means "start at sigma" for the algebraic family and at
    0 for expOU. ``reflect=False`` keeps negative volatilities and is only
    accepted for the Stein-Stein exponents (alpha=beta=0, gamma=1).
    """

    dt: float = 1e-3
    t_end: float = 50.0
    n_paths: int = 1000
    seed: int = 0
    record_stride: int = 100
    initial_x: float = 0.0
    initial_s: float | None = None
    reflect: bool = True
    memory_cap: int = DEFAULT_MEMORY_CAP

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def n_records(self) -> int:
        return self.n_steps // self.record_stride + 1

    @property
    def record_dt(self) -> float:
        return self.dt * self.record_stride

    @classmethod
    def defaults_for(cls, spec: ModelSpec, **kwargs) -> "SimConfig":
        """dt = 1e-3/a and a horizon of 50/a unless overridden."""
        kwargs.setdefault("dt", 1e-3 / spec.a)
        kwargs.setdefault("t_end", 50.0 / spec.a)
        return cls(**kwargs)


def check_config(spec: ModelSpec, config: SimConfig) -> float:
    """Validate ``config`` against ``spec``; returns the effective initial S."""
    if not config.dt > 0:
        raise StabilityGuard(f"dt must be > 0, got {config.dt}")
    if not config.t_end > config.dt:
        raise StabilityGuard(f"t_end must exceed dt (t_end={config.t_end}, dt={config.dt})")
    if config.dt * spec.a > MAX_DT_A * (1 + 1e-12):
        raise StabilityGuard(
            f"stability guard: dt*a = {config.dt * spec.a:g} exceeds {MAX_DT_A}")
    if config.n_paths < 1:
        raise StabilityGuard("n_paths must be >= 1")
    if config.record_stride < 1:
        raise StabilityGuard("record_stride must be >= 1")
    if abs(config.n_steps * config.dt - config.t_end) > 1e-9 * config.t_end:
        raise StabilityGuard("t_end must be an integer multiple of dt")
    if config.n_steps % config.record_stride:
        raise StabilityGuard("number of steps must be a multiple of record_stride")
    if not 0 <= config.seed < 2**64:
        raise StabilityGuard("seed must fit in 64 bits")

    s0 = config.initial_s
    if spec.is_expou:
        s0 = 0.0 if s0 is None else float(s0)
    else:
        s0 = spec.sigma if s0 is None else float(s0)
        stein_stein = spec.alpha == 0 and spec.beta == 0 and spec.gamma == 1
        if not config.reflect and not stein_stein:
            raise UsageError("reflect=False is only allowed for alpha=beta=0, gamma=1")
        if s0 <= 0 and not (spec.beta == 0 and spec.gamma == 1):
            raise UsageError(f"initial_s must be > 0 for this model, got {s0}")

    nbytes = 2 * 8 * config.n_paths * config.n_records
    if nbytes > config.memory_cap:
        raise MemoryCapExceeded(
            f"ensemble needs {nbytes / 2**20:.0f} MiB > cap {config.memory_cap / 2**20:.0f} MiB;"
            " raise record_stride or lower n_paths")
    return s0


@nb.njit(cache=True, nogil=True, inline="always")
def _pow(s, p):
    if p == 0.0:
        return 1.0
    if p == 1.0:
        return s
    if p == 0.5:
        return math.sqrt(s)
    if p == 1.5:
        return s * math.sqrt(s)
    if p == 2.0:
        return s * s
    return s**p


@nb.njit(cache=True, nogil=True)
def _em_step(x, s, expou, alpha, beta, gamma, a, sigma, g, dt, sqdt, n1, n2, reflect):
    if expou:
        return x + math.exp(sigma + s) * sqdt * n1, s - a * s * dt + g * sqdt * n2
    se = max(s, 0.0) if reflect else s
    x_new = x + _pow(se, gamma) * sqdt * n1
    s_raw = s + a * (sigma - s) * _pow(se, alpha) * dt + g * _pow(se, beta) * sqdt * n2
    if reflect:
        s_raw = abs(s_raw)
    return x_new, s_raw


@nb.njit(cache=True, nogil=True)
def _simulate_block(first, last, seed, n_steps, stride, expou, alpha, beta, gamma,
                    a, sigma, g, dt, reflect, x0, s0, x_out, s_out):
    k0, k1 = rng.split_seed(seed)
    sqdt = math.sqrt(dt)
    for p in range(first, last):
        x = x0
        s = s0
        x_out[p, 0] = x
        s_out[p, 0] = s
        j = 1
        for k in range(n_steps):
            n1, n2 = rng.normal_pair(k0, k1, p, k, rng.TAG_SDE)
            x, s = _em_step(x, s, expou, alpha, beta, gamma, a, sigma, g, dt, sqdt,
                            n1, n2, reflect)
            if (k + 1) % stride == 0:
                x_out[p, j] = x
                s_out[p, j] = s
                j += 1


def step(state, spec: ModelSpec, dt: float, noises, reflect: bool = True):
    """One Euler-Maruyama step from ``state=(x, s)`` with standard-normal ``noises``.

    Works elementwise on scalars or arrays.
    """
    x, s = state
    n1, n2 = noises
    args = (spec.is_expou, float(spec.alpha), float(spec.beta), float(spec.gamma),
            spec.a, spec.sigma, spec.g, dt, math.sqrt(dt))
    if np.ndim(x) == 0 and np.ndim(s) == 0 and np.ndim(n1) == 0 and np.ndim(n2) == 0:
        return _em_step(float(x), float(s), *args, float(n1), float(n2), reflect)
    x, s, n1, n2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, s, n1, n2)))
    out = [_em_step(xi, si, *args, a1, a2, reflect) for xi, si, a1, a2 in
           zip(x.ravel(), s.ravel(), n1.ravel(), n2.ravel())]
    xs = np.array([o[0] for o in out]).reshape(x.shape)
    ss = np.array([o[1] for o in out]).reshape(x.shape)
    return xs, ss


@dataclass
class PathEnsemble:
    """Recorded trajectories; ``x`` and ``s`` have shape ``(n_paths, n_times)``."""

    times: np.ndarray
    x: np.ndarray
    s: np.ndarray
    spec: ModelSpec
    config: SimConfig
    runtime: float = 0.0

    @property
    def n_paths(self) -> int:
        return self.x.shape[0]

    @property
    def record_dt(self) -> float:
        return self.config.record_dt

    def index_of(self, t: float) -> int:
        i = t / self.record_dt
        k = int(round(i))
        if abs(i - k) > 1e-9 * max(1.0, abs(i)) or not 0 <= k < len(self.times):
            raise LagNotOnGrid(f"time {t} is not on the recorded grid (spacing {self.record_dt})")
        return k

    def moment(self, m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Ensemble mean of X^m S^n at every recorded time, with standard error."""
        vals = self.x**m * self.s**n
        mean = vals.mean(axis=0)
        se = vals.std(axis=0, ddof=1) / math.sqrt(self.n_paths) if self.n_paths > 1 \
            else np.zeros_like(mean)
        return mean, se

    def summary(self, burn_in: float | None = None) -> dict:
        burn_in = 10.0 / self.spec.a if burn_in is None else burn_in
        i0 = min(int(math.ceil(burn_in / self.record_dt - 1e-9)), len(self.times) - 1)
        tail = self.s[:, i0:]
        per_path = [tail.mean(axis=1), (tail**2).mean(axis=1)]
        out = {
            "n_paths": int(self.n_paths),
            "n_times": int(len(self.times)),
            "t_end": float(self.times[-1]),
            "burn_in": float(burn_in),
            "min_s": float(self.s.min()),
            "s_mean": float(per_path[0].mean()),
            "s_mean_se": _se(per_path[0]),
            "s2_mean": float(per_path[1].mean()),
            "s2_mean_se": _se(per_path[1]),
            "x_var_final": float(self.x[:, -1].var()),
            "runtime_s": float(self.runtime),
        }
        return out

    def write_csv(self, path) -> None:
        """Raw dump with header ``t,path_id,x,s``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "path_id", "x", "s"])
            for p in range(self.n_paths):
                for i, t in enumerate(self.times):
                    w.writerow([repr(float(t)), p, repr(float(self.x[p, i])),
                                repr(float(self.s[p, i]))])


def _se(v: np.ndarray) -> float:
    return float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0


def simulate_paths(spec: ModelSpec, config: SimConfig, threads: int | None = 1) -> PathEnsemble:
    """Integrate ``config.n_paths`` independent trajectories.

    ``threads`` sets the size of the worker pool; the output does not depend
    on it. Raises NonFiniteState if any recorded value overflowed.
    """
    validate(spec)
    s0 = check_config(spec, config)
    n_paths, n_rec = config.n_paths, config.n_records
    x_out = np.empty((n_paths, n_rec))
    s_out = np.empty((n_paths, n_rec))
    params = (np.uint64(config.seed), config.n_steps, config.record_stride, spec.is_expou,
              float(spec.alpha), float(spec.beta), float(spec.gamma), spec.a, spec.sigma,
              spec.g, config.dt, config.reflect, float(config.initial_x), s0, x_out, s_out)

    threads = max(1, int(threads or 1))
    n_chunks = min(n_paths, threads * 4)
    bounds = np.linspace(0, n_paths, n_chunks + 1).astype(int)
    started = time.perf_counter()
    if threads == 1:
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            _simulate_block(lo, hi, *params)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_simulate_block, lo, hi, *params)
                       for lo, hi in zip(bounds[:-1], bounds[1:])]
            for f in futures:
                f.result()
    runtime = time.perf_counter() - started
    bad = ~(np.isfinite(x_out).all(axis=1) & np.isfinite(s_out).all(axis=1))
    if bad.any():
        raise NonFiniteState(f"{int(bad.sum())} of {n_paths} paths overflowed (first: path "
                             f"{int(np.argmax(bad))}); reduce dt or g")
    times = np.arange(n_rec) * config.record_dt
    return PathEnsemble(times, x_out, s_out, spec, config, runtime)


@dataclass
class ReturnSample:
    delta_t: float
    values: np.ndarray
    burn_in: float = 0.0
    meta: dict = field(default_factory=dict)


def _lag_steps(ensemble: PathEnsemble, delta_t: float) -> int:
    ratio = delta_t / ensemble.record_dt
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-9 * max(1.0, ratio):
        raise LagNotOnGrid(
            f"lag {delta_t} is not a multiple of the recorded spacing {ensemble.record_dt}")
    return k


def _burn_index(ensemble: PathEnsemble, burn_in: float | None, minimum: float) -> int:
    a = ensemble.spec.a
    burn_in = 10.0 / a if burn_in is None else burn_in
    if burn_in < minimum / a * (1 - 1e-12):
        raise UsageError(f"burn_in must be >= {minimum:g}/a, got {burn_in}")
    return int(math.ceil(burn_in / ensemble.record_dt - 1e-9))


def extract_returns(ensemble: PathEnsemble, delta_t: float,
                    burn_in: float | None = None) -> ReturnSample:
    """Non-overlapping increments X(t+delta_t) - X(t) for t >= burn_in, pooled over paths."""
    k = _lag_steps(ensemble, delta_t)
    i0 = _burn_index(ensemble, burn_in, 5.0)
    n_rec = ensemble.x.shape[1]
    starts = np.arange(i0, n_rec - k, k)
    if len(starts) == 0:
        raise InsufficientHorizon(
            f"no increment of length {delta_t} fits after burn-in {i0 * ensemble.record_dt}")
    incr = ensemble.x[:, starts + k] - ensemble.x[:, starts]
    return ReturnSample(delta_t, incr.ravel(), i0 * ensemble.record_dt,
                        {"per_path": len(starts), "n_paths": ensemble.n_paths})


def volatility_samples(ensemble: PathEnsemble, burn_in: float | None = None,
                       spacing: float | None = None) -> np.ndarray:
    """Post-burn-in S values, thinned to one every ``spacing`` time units."""
    i0 = _burn_index(ensemble, burn_in, 5.0)
    k = 1 if spacing is None else _lag_steps(ensemble, spacing)
    return ensemble.s[:, i0::k].ravel()


def config_dict(config: SimConfig) -> dict:
    return asdict(config)

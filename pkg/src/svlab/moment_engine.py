"""Method of moments for mu_{m,n}(t) = <X^m S^n>.

For alpha = 0 the moment equations

    d/dt mu_{m,n} = n a (sigma mu_{m,n-1} - mu_{m,n})
                    + m(m-1)/2 mu_{m-2,n+2gamma}
                    + g^2/2 n(n-1) mu_{m,n-2+2beta}

form a closed, linear system that is lower triangular when indices are
ordered by (m, n). It is solved exactly as mu(t) = expm(A t) mu(0); an
implicit Radau integration of the same system is available as an
independent route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import (
    ChainDoesNotClose,
    DivergentMoment,
    NotGarch,
    ToleranceNotMet,
    UnsupportedExponents,
)
from .model_core import ModelSpec

DIVERGENCE_GUARD = 1e12
FINITE = "Finite"
DIVERGENT = "Divergent"


def log_double_factorial_ratio(k: int) -> float:
    """log of (2k)! / (2^k k!), the 2k-th moment of a unit Gaussian."""
    return math.lgamma(2 * k + 1) - k * math.log(2.0) - math.lgamma(k + 1)


def gaussian_moment_factor(k: int) -> float:
    return math.exp(log_double_factorial_ratio(k))


def _require_closure(spec: ModelSpec) -> tuple[int, int]:
    """Return (2*gamma, 2*beta) as ints, or raise ChainDoesNotClose."""
    if spec.is_expou:
        raise ChainDoesNotClose("expOU moments involve exp(S); no polynomial moment chain")
    two_b, two_g = 2 * spec.beta, 2 * spec.gamma
    if spec.alpha != 0 or two_b not in (0, 1, 2) or two_g not in (1, 2):
        raise ChainDoesNotClose(
            f"moment chain does not close for alpha={spec.alpha}, beta={spec.beta}, "
            f"gamma={spec.gamma} (needs alpha=0, 2beta in {{0,1,2}}, 2gamma in {{1,2}})")
    return int(two_g), int(two_b)


def _dependencies(m: int, n: int, two_g: int, two_b: int):
    if n >= 1:
        yield (m, n - 1)
    if m >= 2:
        yield (m - 2, n + two_g)
    if n >= 2 and two_b < 2:
        yield (m, n - 2 + two_b)


def _closure(targets, two_g: int, two_b: int) -> list[tuple[int, int]]:
    seen = set()
    stack = list(targets)
    while stack:
        idx = stack.pop()
        if idx in seen:
            continue
        seen.add(idx)
        stack.extend(_dependencies(*idx, two_g, two_b))
    return sorted(seen)


def diagonal_rate(spec: ModelSpec, n: int) -> float:
    """Growth rate of mu_{m,n} from its own coefficient (negative = relaxing)."""
    rate = -n * spec.a
    if spec.beta == 1:
        rate += 0.5 * spec.g**2 * n * (n - 1)
    return rate


def moment_matrix(spec: ModelSpec, indices) -> np.ndarray:
    two_g, two_b = _require_closure(spec)
    pos = {idx: i for i, idx in enumerate(indices)}
    A = np.zeros((len(indices), len(indices)))
    a, sigma, g2 = spec.a, spec.sigma, spec.g**2
    for (m, n), i in pos.items():
        A[i, i] += -n * a
        if n >= 1:
            A[i, pos[(m, n - 1)]] += n * a * sigma
        if m >= 2:
            A[i, pos[(m - 2, n + two_g)]] += 0.5 * m * (m - 1)
        if n >= 2:
            A[i, pos[(m, n - 2 + two_b)]] += 0.5 * g2 * n * (n - 1)
    return A


@dataclass
class MomentTrajectory:
    t_grid: np.ndarray
    values: dict
    status: dict
    spec: ModelSpec = None

    def __getitem__(self, idx) -> np.ndarray:
        return self.values[tuple(idx)]

    def rows(self):
        """Rows ``(t, m, n, value, status)`` ordered by index then time."""
        for idx in sorted(self.values):
            for t, v in zip(self.t_grid, self.values[idx]):
                yield float(t), idx[0], idx[1], float(v), self.status[idx]


def evolve_moments(spec: ModelSpec, max_m: int, max_n: int, t_grid, initial=None,
                   x0: float = 0.0, s0: float | None = None,
                   method: str = "expm", rtol: float = 1e-9) -> MomentTrajectory:
    """Moments mu_{m,n}(t) for all m <= max_m, n <= max_n on ``t_grid``.

    Initial moments default to a deterministic start ``X0=x0``, ``S0=s0``
    (``s0`` defaults to sigma); ``initial`` maps ``(m, n)`` to overriding
    values. ``method`` is ``"expm"`` (exact) or ``"radau"``.
    """
    two_g, two_b = _require_closure(spec)
    s0 = spec.sigma if s0 is None else s0
    targets = [(m, n) for m in range(max_m + 1) for n in range(max_n + 1)]
    indices = _closure(targets, two_g, two_b)
    A = moment_matrix(spec, indices)
    mu0 = np.array([x0**m * s0**n for m, n in indices], dtype=float)
    if initial is not None:
        for i, idx in enumerate(indices):
            if idx in initial:
                mu0[i] = initial[idx]
    t_grid = np.asarray(t_grid, dtype=float)

    if method == "expm":
        with np.errstate(over="ignore", invalid="ignore"):
            sol = np.array([expm(A * t) @ mu0 for t in t_grid]).T
    elif method == "radau":
        res = solve_ivp(lambda t, y: A @ y, (0.0, float(t_grid.max())), mu0, method="Radau",
                        t_eval=t_grid, rtol=rtol, atol=rtol, jac=A)
        if not res.success:
            raise ToleranceNotMet(f"moment integration failed: {res.message}")
        sol = res.y
    else:
        raise ValueError(f"unknown method {method!r}")

    pos = {idx: i for i, idx in enumerate(indices)}
    values, status = {}, {}
    for idx in targets:
        v = sol[pos[idx]]
        deps = _closure([idx], two_g, two_b)
        growing = any(n >= 1 and diagonal_rate(spec, n) >= 0 for _, n in deps)
        blown = not np.all(np.isfinite(v)) or np.any(np.abs(v) > DIVERGENCE_GUARD)
        values[idx] = v
        status[idx] = DIVERGENT if growing or blown else FINITE
    return MomentTrajectory(t_grid, values, status, spec)


def stationary_s_moment(spec: ModelSpec, n: int) -> float:
    """Stationary <S^n>; ``math.inf`` marks a divergent moment."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return 1.0
    g2a = spec.g**2 / (2 * spec.a)
    if spec.is_expou:
        if n % 2:
            return 0.0
        k = n // 2
        return math.exp(log_double_factorial_ratio(k) + k * math.log(g2a))
    if spec.alpha != 0:
        raise UnsupportedExponents(f"no closed-form stationary moments for alpha={spec.alpha}")
    sigma = spec.sigma
    if spec.beta == 0:
        total = 0.0
        for k in range(n // 2 + 1):
            logc = (math.lgamma(n + 1) - math.lgamma(n - 2 * k + 1) - math.lgamma(2 * k + 1)
                    + log_double_factorial_ratio(k) + k * math.log(g2a))
            total += math.exp(logc) * sigma ** (n - 2 * k)
        return total
    if spec.beta == Fraction(1, 2):
        z = sigma / g2a
        if z == 0:
            return 0.0
        return math.exp(n * math.log(g2a) + math.lgamma(z + n) - math.lgamma(z))
    if spec.beta == 1:
        if n >= 1 + 1 / g2a:
            return math.inf
        prod = 1.0
        for j in range(1, n):
            prod *= 1.0 - j * g2a
        return sigma**n / prod
    raise UnsupportedExponents(f"no closed-form stationary moments for beta={spec.beta}")


@dataclass(frozen=True)
class LongTimeLimit:
    l: int
    n: int
    value: float
    status: str = FINITE

    @property
    def finite(self) -> bool:
        return self.status == FINITE


def diffusion_scale(spec: ModelSpec) -> float:
    """Long-time variance rate of X: <S^{2 gamma}> (or <exp(2(sigma+S))> for expOU)."""
    if spec.is_expou:
        return math.exp(2 * spec.sigma + spec.g**2 / spec.a)
    _require_closure(spec)
    return stationary_s_moment(spec, int(2 * spec.gamma))


def longtime_limit(spec: ModelSpec, l: int, n: int) -> LongTimeLimit:
    """lim t^{-l} mu_{2l,n}(t).

    For expOU ``n`` is the power of S and the limit assumes X0 = S0 = 0.
    """
    if spec.is_expou:
        D = diffusion_scale(spec)
        val = math.exp(log_double_factorial_ratio(l) + l * math.log(D)) * stationary_s_moment(spec, n)
        return LongTimeLimit(l, n, val)
    two_g, _ = _require_closure(spec)
    if spec.beta == 1 and n + l * two_g >= 1 + 2 * spec.a / spec.g**2:
        return LongTimeLimit(l, n, math.inf, DIVERGENT)
    D = diffusion_scale(spec)
    sn = stationary_s_moment(spec, n)
    if math.isinf(sn) or math.isinf(D):
        return LongTimeLimit(l, n, math.inf, DIVERGENT)
    val = gaussian_moment_factor(l) * D**l * sn
    return LongTimeLimit(l, n, val)


def garch_tail_exponent(spec: ModelSpec) -> float:
    """Density tail exponent tau of long-time returns for alpha=0, beta=1.

    Moments mu_{2l,0} exist iff 2 gamma l < 1 + 2a/g^2, so
    tau = 1 + (1 + 2a/g^2)/gamma, i.e. 3 + 4a/g^2 for gamma = 1/2.
    """
    if spec.is_expou or spec.alpha != 0 or spec.beta != 1:
        raise NotGarch(f"tail exponent is defined for alpha=0, beta=1; got {spec.alpha}, {spec.beta}")
    return 1.0 + (1.0 + 2 * spec.a / spec.g**2) / float(spec.gamma)


def _target(spec: ModelSpec) -> float:
    return 0.0 if spec.is_expou else spec.sigma


def acf_proxy_v1(spec: ModelSpec, u: int, delta_t) -> np.ndarray | float:
    """C_{u,1}(dt) = sigma mu_u + (mu_{u+1} - sigma mu_u) exp(-a dt) for alpha = 0."""
    if not spec.is_expou and spec.alpha != 0:
        raise UnsupportedExponents("the v=1 autocorrelation needs alpha = 0")
    mu_u = stationary_s_moment(spec, u)
    mu_u1 = stationary_s_moment(spec, u + 1)
    if math.isinf(mu_u) or math.isinf(mu_u1):
        raise DivergentMoment(f"stationary moments of order {u}, {u + 1} must be finite")
    target = _target(spec)
    return target * mu_u + (mu_u1 - target * mu_u) * np.exp(-spec.a * np.asarray(delta_t, dtype=float))

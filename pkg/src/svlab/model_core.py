"""Model specifications for the algebraic-coefficient stochastic-volatility family.

The algebraic family is

    dX = S^gamma dW1
    dS = a (sigma - S) S^alpha dt + g S^beta dW2

and the exponential Ornstein-Uhlenbeck (expOU) model is

    dX = exp(sigma + S) dW1
    dS = -a S dt + g dW2

with W1, W2 independent Wiener processes (Ito convention).

Exponents are stored as :class:`fractions.Fraction` so that the family
discriminants ``1 + alpha - 2 beta`` and ``2 + alpha - 2 beta`` are tested for
zero exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import NamedTuple, Union

from .errors import (
    NonFiniteParameter,
    NonPositiveRate,
    UnknownPreset,
    UnsupportedGamma,
    UsageError,
)

RationalLike = Union[Fraction, int, float, str]

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)
ANALYTIC_GAMMAS = (HALF, Fraction(1))

# Sigma must exceed this many stationary standard deviations (g / sqrt(a))
# before the beta = 0 moment method is considered safe from negative S.
POSITIVITY_SIGMAS = 3.0


class Kind(enum.Enum):
    ALGEBRAIC = "algebraic"
    EXPOU = "expou"


class Family(enum.Enum):
    GENERIC = "generic"
    HESTON_TYPE = "heston-type"
    GARCH_TYPE = "garch-type"
    GAUSSIAN_STATIONARY = "gaussian-stationary"
    SPECIAL_BETA_QUARTER = "special-beta-quarter"
    SPECIAL_BETA_ZERO = "special-beta-zero"
    EXPOU = "expou"


def as_fraction(value: RationalLike) -> Fraction:
    """Parse an exponent given as Fraction, int, ``"p/q"`` string or float."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise UsageError(f"not an exponent: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"cannot parse exponent {value!r}") from exc
    if isinstance(value, float):
        if not math.isfinite(value):
            raise NonFiniteParameter(f"exponent must be finite, got {value}")
        return Fraction(value).limit_denominator(10_000)
    raise UsageError(f"not an exponent: {value!r}")


@dataclass(frozen=True)
class ModelSpec:
    """Six model parameters plus the model kind.

    For ``Kind.EXPOU`` the exponents are carried along but ignored; ``sigma``
    is then the additive offset of the log-volatility.
    """

    alpha: Fraction = Fraction(0)
    beta: Fraction = Fraction(0)
    gamma: Fraction = HALF
    a: float = 1.0
    sigma: float = 1.0
    g: float = 0.5
    kind: Kind = Kind.ALGEBRAIC

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        for name in ("a", "sigma", "g"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not isinstance(self.kind, Kind):
            object.__setattr__(self, "kind", Kind(self.kind))

    @property
    def is_expou(self) -> bool:
        return self.kind is Kind.EXPOU

    @property
    def d1(self) -> Fraction:
        return 1 + self.alpha - 2 * self.beta

    @property
    def d2(self) -> Fraction:
        return 2 + self.alpha - 2 * self.beta

    @property
    def c(self) -> float:
        """The ubiquitous combination 2a/g^2."""
        return 2.0 * self.a / self.g**2

    def with_params(self, **kwargs) -> "ModelSpec":
        return replace(self, **kwargs)

    def to_config_text(self) -> str:
        """Flat ``key=value`` serialization (one pair per line)."""
        lines = [f"kind={self.kind.value}"]
        for name in ("alpha", "beta", "gamma"):
            frac = getattr(self, name)
            lines.append(f"{name}_num={frac.numerator}")
            lines.append(f"{name}_den={frac.denominator}")
        for name in ("a", "sigma", "g"):
            lines.append(f"{name}={getattr(self, name)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_config_text(cls, text: str) -> "ModelSpec":
        return cls.from_mapping(parse_key_values(text))

    @classmethod
    def from_mapping(cls, values: dict) -> "ModelSpec":
        kwargs = {}
        if "kind" in values:
            kwargs["kind"] = Kind(str(values["kind"]).lower())
        for name in ("alpha", "beta", "gamma"):
            if f"{name}_num" in values:
                den = int(values.get(f"{name}_den", 1))
                kwargs[name] = Fraction(int(values[f"{name}_num"]), den)
            elif name in values:
                kwargs[name] = as_fraction(str(values[name]))
        for name in ("a", "sigma", "g"):
            if name in values:
                kwargs[name] = float(values[name])
        return cls(**kwargs)


def parse_key_values(text: str) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


@dataclass(frozen=True)
class ValidatedModel:
    spec: ModelSpec
    warnings: tuple = field(default_factory=tuple)
    ignored_fields: tuple = field(default_factory=tuple)

    @property
    def positivity_warning(self) -> bool:
        return any(w.startswith("positivity") for w in self.warnings)


def validate(spec: ModelSpec, analytic: bool = False) -> ValidatedModel:
    """Check parameter constraints.

    ``analytic=True`` additionally requires gamma in {1/2, 1}, the only values
    for which the closed-form machinery exists; simulation accepts any
    gamma > 0.
    """
    for name in ("a", "sigma", "g"):
        if not math.isfinite(getattr(spec, name)):
            raise NonFiniteParameter(f"{name} must be finite, got {getattr(spec, name)}")
    if spec.a <= 0:
        raise NonPositiveRate(f"a must be > 0, got {spec.a}")
    if spec.g <= 0:
        raise NonPositiveRate(f"g must be > 0, got {spec.g}")

    warnings = []
    ignored = ()
    if spec.is_expou:
        ignored = ("alpha", "beta", "gamma")
    else:
        if spec.sigma < 0:
            raise UsageError(f"sigma must be >= 0 for the algebraic family, got {spec.sigma}")
        if spec.gamma <= 0:
            raise UnsupportedGamma(f"gamma must be > 0, got {spec.gamma}")
        if analytic and spec.gamma not in ANALYTIC_GAMMAS:
            raise UnsupportedGamma(
                f"analytic operations need gamma in {{1/2, 1}}, got {spec.gamma}")
        threshold = POSITIVITY_SIGMAS * spec.g / math.sqrt(spec.a)
        if spec.beta == 0 and spec.sigma < threshold:
            warnings.append(
                f"positivity: sigma={spec.sigma:g} < {POSITIVITY_SIGMAS:g} g/sqrt(a)="
                f"{threshold:g}; negative-volatility excursions are not negligible")
    return ValidatedModel(spec, tuple(warnings), ignored)


@dataclass(frozen=True)
class Classification:
    family: Family
    d1: Fraction
    d2: Fraction


def classify(spec: ModelSpec) -> Classification:
    """Short-time / stationary-density class of a model.

    Depends only on (alpha, beta) except for the two special-substitution
    flags, which also look at gamma.
    """
    d1, d2 = spec.d1, spec.d2
    if spec.is_expou:
        return Classification(Family.EXPOU, d1, d2)
    if d1 == 0:
        fam = Family.HESTON_TYPE
    elif d2 == 0:
        fam = Family.GARCH_TYPE
    elif spec.alpha - 2 * spec.beta == 0:
        fam = Family.GAUSSIAN_STATIONARY
    elif spec.gamma == HALF and spec.beta == QUARTER:
        fam = Family.SPECIAL_BETA_QUARTER
    elif spec.gamma == 1 and spec.beta == 0:
        fam = Family.SPECIAL_BETA_ZERO
    else:
        fam = Family.GENERIC
    return Classification(fam, d1, d2)


class PresetTemplate(NamedTuple):
    name: str
    alpha: Fraction
    beta: Fraction
    gamma: Fraction
    kind: Kind = Kind.ALGEBRAIC

    def build(self, a: float = 1.0, sigma: float = 1.0, g: float = 0.5) -> ModelSpec:
        return ModelSpec(self.alpha, self.beta, self.gamma, a, sigma, g, self.kind)


# Names follow the model table of the source; "ou" and "garch" are its labels,
# not the econometric models of the same name.
PRESETS = {
    "stein-stein": PresetTemplate("stein-stein", Fraction(0), Fraction(0), Fraction(1)),
    "ou": PresetTemplate("ou", Fraction(0), Fraction(0), HALF),
    "heston": PresetTemplate("heston", Fraction(0), HALF, HALF),
    "garch": PresetTemplate("garch", Fraction(0), Fraction(1), HALF),
    "geometric-ou": PresetTemplate("geometric-ou", Fraction(1), Fraction(1), HALF),
    "three-halves": PresetTemplate("three-halves", Fraction(0), Fraction(3, 2), HALF),
    "expou": PresetTemplate("expou", Fraction(0), Fraction(0), HALF, Kind.EXPOU),
}


def preset(name: str) -> PresetTemplate:
    key = name.strip().lower().replace("_", "-")
    aliases = {"3/2": "three-halves", "3-2": "three-halves", "exp-ou": "expou",
               "steinstein": "stein-stein", "geometric_ou": "geometric-ou"}
    key = aliases.get(key, key)
    try:
        return PRESETS[key]
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None

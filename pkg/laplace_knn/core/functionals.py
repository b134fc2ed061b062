# ---
# jupyter:
#   jupytext:
#     formats: ipynb,py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#       jupytext_version: 1.19.1
#   kernelspec:
#     display_name: Python (miniforge)
#     language: python
#     name: miniforge-base
# ---

# %%
# core/functionals.py

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np

from laplace_knn.core.config import DEFAULT_SETTINGS, EstimatorSettings
from laplace_knn.core.errors import (
    DomainError,
    InvalidOrderError,
    UnknownNameError,
)
from laplace_knn.core.special import (
    EULER_GAMMA,
    binom,
    digamma,
    gamma_ratio,
    harmonic,
    log_gamma,
)

logger = logging.getLogger(__name__)

Scalar = Union[float, np.ndarray]


# %%
class FunctionalKind(str, Enum):
    ENTROPY = "entropy"
    RENYI_ENTROPY = "renyi-entropy"
    GENERALIZED_ENTROPY = "gen-entropy"
    KL = "kl"
    GENERALIZED_BETA = "gen-beta"
    REVERSE_KL = "reverse-kl"
    JENSEN_SHANNON = "jsd"
    L2_SQUARED = "l2sq"
    RENYI_DIVERGENCE = "renyi-div"
    HELLINGER = "hellinger"
    CHI_SQUARED = "chi2"
    NN_CLASSIFICATION = "nn-class"


_SINGLE = {
    FunctionalKind.ENTROPY,
    FunctionalKind.RENYI_ENTROPY,
    FunctionalKind.GENERALIZED_ENTROPY,
}

# kind -> parameter names carried after the ':' in the string form
_PARAMS = {
    FunctionalKind.RENYI_ENTROPY: ("alpha",),
    FunctionalKind.GENERALIZED_ENTROPY: ("alpha", "beta"),
    FunctionalKind.GENERALIZED_BETA: ("beta",),
    FunctionalKind.RENYI_DIVERGENCE: ("alpha",),
}

# envelopes not printed alongside the closed forms; fitted from them
_DERIVED_ENVELOPES = {
    FunctionalKind.GENERALIZED_ENTROPY,
    FunctionalKind.JENSEN_SHANNON,
    FunctionalKind.L2_SQUARED,
    FunctionalKind.NN_CLASSIFICATION,
}


@dataclass(frozen=True)
class FunctionalSpec:
    """
    A target functional T_f, named by kind plus its real parameters.

    Example:
        >>> spec = parse_functional("renyi-div:3")
        >>> (spec.arity, spec.alpha, spec.name)
        (2, 3.0, 'renyi-div:3')
    """
    kind: FunctionalKind
    alpha: Optional[float] = None
    beta: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", FunctionalKind(self.kind))
        self.validate()

    @property
    def arity(self) -> int:
        return 1 if self.kind in _SINGLE else 2

    @property
    def name(self) -> str:
        names = _PARAMS.get(self.kind, ())
        if not names:
            return self.kind.value
        vals = ",".join(f"{getattr(self, n):g}" for n in names)
        return f"{self.kind.value}:{vals}"

    def validate(self) -> None:
        needed = _PARAMS.get(self.kind, ())
        for n in ("alpha", "beta"):
            given = getattr(self, n) is not None
            if given != (n in needed):
                raise DomainError(
                    f"{self.kind.value} takes parameters {list(needed)}, "
                    f"got alpha={self.alpha}, beta={self.beta}"
                )
        if self.alpha is not None:
            if not math.isfinite(self.alpha) or self.alpha < 0 or self.alpha == 1:
                raise DomainError(
                    f"{self.kind.value} requires alpha >= 0 and alpha != 1, got {self.alpha}"
                )
        if self.beta is not None:
            if not math.isfinite(self.beta):
                raise DomainError(f"beta must be finite, got {self.beta}")
            if self.kind is FunctionalKind.GENERALIZED_ENTROPY and self.beta < 0:
                raise DomainError(f"gen-entropy requires beta >= 0, got {self.beta}")

    def check_orders(self, k: int, l: Optional[int] = None) -> None:
        """Raise InvalidOrderError unless (k, l) meet this functional's side conditions."""
        if int(k) != k or k < 1:
            raise InvalidOrderError(f"k must be a positive integer, got {k!r}")
        kind = self.kind
        if kind in (FunctionalKind.RENYI_ENTROPY, FunctionalKind.GENERALIZED_ENTROPY):
            if not k > self.alpha - 1:
                raise InvalidOrderError(f"{self.name} needs k > alpha - 1, got k={k}")
        if self.arity == 1:
            return
        if l is None or int(l) != l or l < 1:
            raise InvalidOrderError(f"l must be a positive integer, got {l!r}")
        if kind in (FunctionalKind.REVERSE_KL, FunctionalKind.JENSEN_SHANNON) and l < 2:
            raise InvalidOrderError(f"{self.name} needs l >= 2, got l={l}")
        if kind is FunctionalKind.CHI_SQUARED and l < 3:
            raise InvalidOrderError(f"chi2 needs l >= 3, got l={l}")
        if kind is FunctionalKind.L2_SQUARED and (k < 2 or l < 3):
            raise InvalidOrderError(f"l2sq needs k >= 2 and l >= 3, got k={k}, l={l}")
        if kind is FunctionalKind.RENYI_DIVERGENCE:
            if not (k > self.alpha - 1 and l > 1 - self.alpha):
                raise InvalidOrderError(
                    f"{self.name} needs k > alpha - 1 and l > 1 - alpha, got k={k}, l={l}"
                )
        if kind is FunctionalKind.GENERALIZED_BETA and not k > self.beta - 1:
            raise InvalidOrderError(f"{self.name} needs k > beta - 1, got k={k}")


def parse_functional(text: str) -> FunctionalSpec:
    """
    Parse names such as ``entropy``, ``renyi-entropy:2``, ``gen-entropy:2,1``.

    Example:
        >>> spec = parse_functional("gen-entropy:2,1")
        >>> (spec.kind.value, spec.alpha, spec.beta)
        ('gen-entropy', 2.0, 1.0)
        >>> try:
        ...     parse_functional("tsallis")
        ... except UnknownNameError as e:
        ...     print(e)
        Unknown functional 'tsallis'
    """
    head, _, tail = text.strip().partition(":")
    try:
        kind = FunctionalKind(head)
    except ValueError:
        raise UnknownNameError(f"Unknown functional {text!r}")
    names = _PARAMS.get(kind, ())
    raw = tail.split(",") if tail else []
    if len(raw) != len(names):
        raise UnknownNameError(
            f"{kind.value} expects {len(names)} parameter(s) {list(names)}, got {text!r}"
        )
    try:
        vals = {n: float(r) for n, r in zip(names, raw)}
    except ValueError:
        raise UnknownNameError(f"Non-numeric parameter in {text!r}")
    return FunctionalSpec(kind, **vals)


# %%
def f_value(spec: FunctionalSpec, p: Scalar, q: Optional[Scalar] = None) -> Scalar:
    """
    The integrand f(p) or f(p, q), so that T_f = E_p[f]. Scalars or arrays.

    Example:
        >>> f_value(parse_functional("nn-class"), 1.0, 1.0)
        0.5
        >>> f_value(parse_functional("entropy"), math.e)
        -1.0
    """
    scalar = np.ndim(p) == 0 and np.ndim(q) == 0
    p = np.asarray(p, dtype=float)
    if not np.all(p > 0):
        raise DomainError("f_value needs p > 0")
    kind = spec.kind
    if spec.arity == 1:
        if kind is FunctionalKind.ENTROPY:
            out = -np.log(p)
        elif kind is FunctionalKind.RENYI_ENTROPY:
            out = np.power(p, spec.alpha - 1)
        else:
            out = np.power(p, spec.alpha - 1) * np.exp(-spec.beta * p)
        return float(out) if scalar else out

    if q is None:
        raise DomainError(f"{spec.name} needs a second density value q")
    q = np.asarray(q, dtype=float)
    if not np.all(q > 0):
        raise DomainError(f"{spec.name} needs q > 0")
    r = q / p
    if kind is FunctionalKind.KL:
        out = np.log(p / q)
    elif kind is FunctionalKind.GENERALIZED_BETA:
        out = np.power(p, spec.beta - 1) * np.log(p / q)
    elif kind is FunctionalKind.REVERSE_KL:
        out = r * np.log(r)
    elif kind is FunctionalKind.JENSEN_SHANNON:
        out = (r + 1) * np.log(2 / (r + 1)) + r * np.log(r)
    elif kind is FunctionalKind.L2_SQUARED:
        out = (p - q) ** 2 / p
    elif kind is FunctionalKind.RENYI_DIVERGENCE:
        out = np.power(p / q, spec.alpha - 1)
    elif kind is FunctionalKind.HELLINGER:
        out = 2 * (1 - np.sqrt(r))
    elif kind is FunctionalKind.CHI_SQUARED:
        out = r ** 2 - 1
    else:
        out = p / (p + q)
    return float(out) if scalar else out


# %%
def _finish(out: np.ndarray, scalar: bool, strict: bool, what: str):
    if strict and not np.all(np.isfinite(out)):
        raise DomainError(f"{what} is not finite at the given volume(s)")
    return float(out) if scalar else out


def phi_single(
    spec: FunctionalSpec,
    k: int,
    u: Scalar,
    *,
    strict: bool = True,
) -> Scalar:
    """
    Estimator function phi_k with E[phi_k(U)] = f(p) for U ~ Gamma(k, rate p).

    Accepts a scalar or an array of volumes. With ``strict=False`` non-finite
    values (only possible at u = 0) are returned as-is for the caller to drop.

    Example:
        >>> round(phi_single(parse_functional("entropy"), 2, 1.0), 5)
        -0.42278
        >>> round(phi_single(parse_functional("renyi-entropy:2"), 3, 2.0), 12)
        1.0
        >>> phi_single(parse_functional("gen-entropy:2,1"), 3, 0.5)
        0.0
    """
    if spec.arity != 1:
        raise DomainError(f"{spec.name} is a two-density functional")
    spec.check_orders(k)
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise DomainError("volumes must be nonnegative")
    kind = spec.kind
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if kind is FunctionalKind.ENTROPY:
            out = np.log(u) - harmonic(k - 1) + EULER_GAMMA
        elif kind is FunctionalKind.RENYI_ENTROPY:
            a = spec.alpha
            out = gamma_ratio(k, k - a + 1) * np.power(u, 1 - a)
        else:
            a, b = spec.alpha, spec.beta
            base = np.maximum(u - b, 0.0)
            val = gamma_ratio(k, k - a + 1) * np.power(base, k - a) / np.power(u, k - 1)
            out = np.where(u >= b, val, 0.0)
    return _finish(out, scalar, strict, f"phi for {spec.name}")


# %%
def _c_coefficient(k: int, l: int) -> float:
    n = k + l - 2
    return math.fsum(
        binom(n, j) * (-1) ** j / (l - 1 - j) for j in range(n + 1) if j != l - 1
    )


def jsd_coefficient_c(k: int, l: int) -> float:
    """
    c_{k,l} = sum over j in 0..k+l-2, j != l-1, of C(k+l-2, j) (-1)^j / (l-1-j).

    Example:
        >>> jsd_coefficient_c(1, 2)
        1.0
        >>> jsd_coefficient_c(2, 2)
        0.0
    """
    if int(k) != k or k < 1:
        raise InvalidOrderError(f"k must be a positive integer, got {k!r}")
    if int(l) != l or l < 2:
        raise InvalidOrderError(f"c_(k,l) needs l >= 2, got {l!r}")
    return _c_coefficient(int(k), int(l))


def _nn_kernel(k: int, l: int, rho: np.ndarray) -> np.ndarray:
    # E over Gamma(k, p) x Gamma(l, q) of this equals p / (p + q)
    n = k + l - 2
    c = binom(n, k - 1)
    below = sum((-1) ** m * binom(n, k - 1 + m) * rho ** m for m in range(l))
    above = sum(
        (-1) ** m * binom(n, l + m) * rho ** (-(m + 1)) for m in range(k - 1)
    )
    return np.where(rho < 1, below, above) / c


def _nn_log_integral(k: int, l: int, rho: np.ndarray) -> np.ndarray:
    # integral over (0, rho) of (1 - kernel(x)) / x
    n = k + l - 2
    c = binom(n, k - 1)
    below = -sum(
        (-1) ** m * binom(n, k - 1 + m) * rho ** m / m for m in range(1, l)
    )
    above = (
        (-1) ** l * _c_coefficient(k, l)
        + c * np.log(rho)
        + sum(
            (-1) ** m * binom(n, l + m) * rho ** (-(m + 1)) / (m + 1)
            for m in range(k - 1)
        )
    )
    return np.where(rho <= 1, below, above) / c


def phi_two(
    spec: FunctionalSpec,
    k: int,
    l: int,
    u: Scalar,
    v: Scalar,
    *,
    strict: bool = True,
) -> Scalar:
    """
    Estimator function phi_{k,l} with E[phi(U, V)] = f(p, q) for independent
    U ~ Gamma(k, rate p) and V ~ Gamma(l, rate q).

    Example:
        >>> round(phi_two(parse_functional("kl"), 2, 3, 1.0, 2.0), 5)
        0.19315
        >>> phi_two(parse_functional("chi2"), 1, 3, 1.0, 2.0)
        -0.75
        >>> round(phi_two(parse_functional("hellinger"), 2, 2, 1.0, 1.0), 5)
        0.30235
    """
    if spec.arity != 2:
        raise DomainError(f"{spec.name} is a single-density functional")
    spec.check_orders(k, l)
    scalar = np.ndim(u) == 0 and np.ndim(v) == 0
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(u < 0) or np.any(v < 0):
        raise DomainError("volumes must be nonnegative")
    kind = spec.kind
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        rho = u / v
        if kind is FunctionalKind.KL:
            out = -np.log(rho) + harmonic(k - 1) - harmonic(l - 1)
        elif kind is FunctionalKind.GENERALIZED_BETA:
            b = spec.beta
            out = gamma_ratio(k, k - b + 1) * np.power(u, 1 - b) * (
                digamma(k - b + 1) - digamma(l) - np.log(rho)
            )
        elif kind is FunctionalKind.REVERSE_KL:
            out = (l - 1) / k * rho * (np.log(rho) + harmonic(l - 2) - harmonic(k))
        elif kind is FunctionalKind.JENSEN_SHANNON:
            w = (l - 1) / k * rho
            out = (
                (1 + w) * math.log(2)
                + w * (np.log(rho) + harmonic(l - 2) - harmonic(k))
                - _nn_log_integral(k, l, rho)
                - w * _nn_log_integral(k + 1, l - 1, rho)
            )
        elif kind is FunctionalKind.L2_SQUARED:
            out = (k - 1) / u - 2 * (l - 1) / v + (l - 1) * (l - 2) / k * u / v ** 2
        elif kind is FunctionalKind.RENYI_DIVERGENCE:
            a = spec.alpha
            coef = math.exp(
                log_gamma(k) + log_gamma(l) - log_gamma(k - a + 1) - log_gamma(l + a - 1)
            )
            out = coef * np.power(rho, 1 - a)
        elif kind is FunctionalKind.HELLINGER:
            coef = math.exp(
                log_gamma(k) + log_gamma(l) - log_gamma(k + 0.5) - log_gamma(l - 0.5)
            )
            out = 2 * (1 - coef * np.sqrt(rho))
        elif kind is FunctionalKind.CHI_SQUARED:
            out = (l - 1) * (l - 2) / ((k + 1) * k) * rho ** 2 - 1
        else:
            out = _nn_kernel(k, l, rho)
    return _finish(np.asarray(out, dtype=float), scalar, strict, f"phi for {spec.name}")


# %%
@dataclass(frozen=True)
class TailEnvelope:
    """
    Exponents of eta_{a,b}(u) = u^a on (0, 1], u^b on (1, inf), and the
    matching (a_tilde, b_tilde) for the second volume of a divergence.
    """
    a: float
    b: float
    a_tilde: Optional[float] = None
    b_tilde: Optional[float] = None
    derived: bool = False   # fitted from the closed form rather than quoted

    @property
    def arity(self) -> int:
        return 1 if self.a_tilde is None else 2

    def as_tuple(self) -> Tuple[float, ...]:
        if self.arity == 1:
            return (self.a, self.b)
        return (self.a, self.b, self.a_tilde, self.b_tilde)

    def eta(self, u: Scalar, *, second: bool = False) -> Scalar:
        lo, hi = (self.a_tilde, self.b_tilde) if second else (self.a, self.b)
        u = np.asarray(u, dtype=float)
        return np.where(u <= 1, np.power(u, lo), np.power(u, hi))

    def bound(self, u: Scalar, v: Optional[Scalar] = None) -> Scalar:
        out = self.eta(u)
        if self.arity == 2:
            out = out * self.eta(v, second=True)
        return out

    def violations(self, k: int, l: Optional[int] = None) -> List[str]:
        """Rate-bound conditions this envelope fails at (k, l)."""
        out: List[str] = []
        if self.arity == 1:
            if not self.a > -k:
                out.append(f"a={self.a:g} must exceed -k={-k}")
            return out
        if not self.a >= -k / 2:
            out.append(f"a={self.a:g} must be >= -k/2={-k / 2:g}")
        if l is not None and not self.a_tilde >= -l / 2:
            out.append(f"a_tilde={self.a_tilde:g} must be >= -l/2={-l / 2:g}")
        return out


def tail_envelope(
    spec: FunctionalSpec,
    k: int,
    l: Optional[int] = None,
    *,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> TailEnvelope:
    """
    Tail-envelope exponents of phi for ``spec``; log-type functionals use
    the small constant ``settings.epsilon``.

    Example:
        >>> tail_envelope(parse_functional("renyi-div:3"), 4, 4).as_tuple()
        (-2.0, -2.0, 2.0, 2.0)
        >>> tail_envelope(parse_functional("hellinger"), 2, 2).as_tuple()
        (0.5, 0.5, -0.5, -0.5)
    """
    eps = settings.epsilon
    kind = spec.kind
    if kind is FunctionalKind.ENTROPY:
        exps: Tuple[float, ...] = (-eps, eps)
    elif kind in (FunctionalKind.RENYI_ENTROPY, FunctionalKind.GENERALIZED_ENTROPY):
        exps = (1 - spec.alpha, 1 - spec.alpha)
    elif kind is FunctionalKind.KL:
        exps = (-eps, eps, -eps, eps)
    elif kind is FunctionalKind.GENERALIZED_BETA:
        b = spec.beta
        exps = (1 - b - eps, 1 - b + eps, -eps, eps)
    elif kind is FunctionalKind.REVERSE_KL:
        exps = (1 - eps, 1 + eps, -1 - eps, -1 + eps)
    elif kind is FunctionalKind.JENSEN_SHANNON:
        exps = (-eps, 1 + eps, -1 - eps, eps)
    elif kind is FunctionalKind.L2_SQUARED:
        exps = (-1.0, 1.0, -2.0, 0.0)
    elif kind is FunctionalKind.RENYI_DIVERGENCE:
        a = spec.alpha
        exps = (1 - a, 1 - a, a - 1, a - 1)
    elif kind is FunctionalKind.HELLINGER:
        exps = (0.5, 0.5, -0.5, -0.5)
    elif kind is FunctionalKind.CHI_SQUARED:
        exps = (2.0, 2.0, -2.0, -2.0)
    else:
        exps = (0.0, 0.0, 0.0, 0.0)
    env = TailEnvelope(*[float(e) for e in exps], derived=kind in _DERIVED_ENVELOPES)
    for problem in env.violations(k, l):
        logger.warning("tail envelope of %s at k=%s l=%s: %s", spec.name, k, l, problem)
    return env


# %%
def plugin_bias_correction(spec: FunctionalSpec, k: int) -> float:
    """
    phi_k(k / p) - f(p) for entropy: the constant by which the inverse-Laplace
    estimator shifts the plug-in log(U / k).

    Example:
        >>> round(plugin_bias_correction(parse_functional("entropy"), 1), 6)
        0.577216
    """
    if spec.kind is not FunctionalKind.ENTROPY:
        raise DomainError(f"the plug-in correction is a constant only for entropy, not {spec.name}")
    spec.check_orders(k)
    return math.log(k) - harmonic(k - 1) + EULER_GAMMA

# %%

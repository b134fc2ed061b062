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
# core/oracle.py

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
import logging
import math
from typing import Callable, Optional, Sequence, Tuple

from scipy.integrate import quad

from laplace_knn.core.config import DEFAULT_SETTINGS, EstimatorSettings
from laplace_knn.core.errors import DomainError, QuadratureError
from laplace_knn.core.functionals import (
    FunctionalKind,
    FunctionalSpec,
    f_value,
    phi_single,
    phi_two,
)
from laplace_knn.core.special import log_gamma

logger = logging.getLogger(__name__)


# %%
def integrate_pieces(
    fn: Callable[[float], float],
    breaks: Sequence[float],
    *,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
    what: str = "integral",
) -> Tuple[float, float]:
    """
    Sum of adaptive quadratures of ``fn`` over consecutive intervals of
    ``breaks`` (the last break may be ``math.inf``). Returns (value, abserr).

    Example:
        >>> val, err = integrate_pieces(lambda t: math.exp(-t), [0.0, 1.0, math.inf])
        >>> round(val, 9)
        1.0
    """
    total, abserr = 0.0, 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if not hi > lo:
            continue
        res = quad(
            fn, lo, hi,
            epsabs=settings.quad_abs_tol,
            epsrel=settings.quad_abs_tol,
            limit=settings.quad_limit,
            full_output=1,
        )
        val, err = res[0], res[1]
        if not math.isfinite(val):
            raise QuadratureError(f"{what} is not finite on [{lo:g}, {hi:g}]")
        if len(res) > 3 and err > 1e3 * settings.quad_abs_tol:
            raise QuadratureError(
                f"{what} did not converge on [{lo:g}, {hi:g}]: {res[3]}", abserr=err
            )
        total += val
        abserr += err
    return total, abserr


# %%
def _gamma_pdf(k: float) -> Callable[[float], float]:
    # Gamma(k, 1) density with the normalizer computed once
    log_norm = log_gamma(k)

    def pdf(t: float) -> float:
        if not t > 0:
            return 0.0
        return math.exp((k - 1) * math.log(t) - t - log_norm)

    return pdf


def _beta_pdf(k: float, l: float) -> Callable[[float], float]:
    log_norm = log_gamma(k) + log_gamma(l) - log_gamma(k + l)

    def pdf(b: float) -> float:
        if not 0 < b < 1:
            return 0.0
        return math.exp((k - 1) * math.log(b) + (l - 1) * math.log1p(-b) - log_norm)

    return pdf


# %%
def homogeneity_degree(spec: FunctionalSpec) -> float:
    """
    h such that phi(c u, c v) = c^h phi(u, v) for every two-density phi.
    """
    if spec.kind is FunctionalKind.GENERALIZED_BETA:
        return 1.0 - spec.beta
    if spec.kind is FunctionalKind.L2_SQUARED:
        return -1.0
    return 0.0


def gamma_oracle_expectation(
    spec: FunctionalSpec,
    k: int,
    l: Optional[int] = None,
    p: float = 1.0,
    q: Optional[float] = None,
    *,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> Tuple[float, float]:
    """
    E[phi(U)] for U ~ Gamma(k, rate p), or E[phi(U, V)] with an independent
    V ~ Gamma(l, rate q), by adaptive quadrature. Returns (value, abserr).

    Two-density expectations use U = T B / p and V = T (1 - B) / q with
    T ~ Gamma(k + l) and B ~ Beta(k, l) independent, so that homogeneity of
    phi leaves a one-dimensional integral over B.
    """
    if not p > 0:
        raise DomainError(f"rate p must be positive, got {p!r}")
    if spec.arity == 1:
        spec.check_orders(k)
        g = _gamma_pdf(k)
        breaks = [0.0, float(k)]
        if spec.kind is FunctionalKind.GENERALIZED_ENTROPY and spec.beta > 0:
            # indicator edge of phi at u = beta
            breaks.append(p * spec.beta)
        return integrate_pieces(
            lambda t: phi_single(spec, k, t / p, strict=False) * g(t),
            sorted(set(breaks)) + [math.inf],
            settings=settings,
            what=f"E[phi] for {spec.name}",
        )

    if q is None or not q > 0:
        raise DomainError(f"rate q must be positive, got {q!r}")
    spec.check_orders(k, l)
    h = homogeneity_degree(spec)
    scale = math.exp(log_gamma(k + l + h) - log_gamma(k + l))
    b_pdf = _beta_pdf(k, l)
    b_star = p / (p + q)
    val, err = integrate_pieces(
        lambda b: phi_two(spec, k, l, b / p, (1 - b) / q, strict=False) * b_pdf(b),
        [0.0, b_star, 1.0],
        settings=settings,
        what=f"E[phi] for {spec.name}",
    )
    return scale * val, scale * err


def gamma_oracle_residual(
    spec: FunctionalSpec,
    k: int,
    l: Optional[int],
    p: float,
    q: Optional[float] = None,
    *,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> float:
    """
    E[phi] - f(p[, q]); zero for a correct estimator function.

    Example:
        >>> from laplace_knn.core.functionals import parse_functional
        >>> abs(gamma_oracle_residual(parse_functional("entropy"), 3, None, 1.0)) < 1e-8
        True
        >>> abs(gamma_oracle_residual(parse_functional("nn-class"), 2, 2, 3.0, 3.0)) < 1e-8
        True
    """
    value, err = gamma_oracle_expectation(spec, k, l, p, q, settings=settings)
    target = f_value(spec, p, q)
    logger.debug(
        "oracle %s k=%s l=%s p=%s q=%s: %.12g vs %.12g (abserr %.2g)",
        spec.name, k, l, p, q, value, target, err,
    )
    return value - target

# %%

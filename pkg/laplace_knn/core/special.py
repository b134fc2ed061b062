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
# core/special.py

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
import math

import numpy as np
from scipy import special as sc

from laplace_knn.core.errors import DomainError

# %%
EULER_GAMMA = float(np.euler_gamma)

# Exact summation below this; digamma(n + 1) + gamma above.
_HARMONIC_EXACT_MAX = 1024


def harmonic(n: int) -> float:
    """
    n-th harmonic number H_n = 1 + 1/2 + ... + 1/n, with H_0 = 0.

    Example:
        >>> harmonic(0)
        0.0
        >>> round(harmonic(4), 10)
        2.0833333333
    """
    if int(n) != n or n < 0:
        raise DomainError(f"harmonic number needs a nonnegative integer, got {n!r}")
    n = int(n)
    if n <= _HARMONIC_EXACT_MAX:
        return math.fsum(1.0 / i for i in range(1, n + 1))
    return float(sc.digamma(n + 1) + EULER_GAMMA)


def digamma(x: float) -> float:
    """
    Example:
        >>> round(digamma(1), 10) == round(-EULER_GAMMA, 10)
        True
    """
    if not x > 0:
        raise DomainError(f"digamma is evaluated on positive reals only, got {x!r}")
    return float(sc.digamma(x))


def log_gamma(x: float) -> float:
    if not x > 0:
        raise DomainError(f"log_gamma is evaluated on positive reals only, got {x!r}")
    return float(sc.gammaln(x))


def gamma_ratio(num: float, den: float) -> float:
    # Gamma(num) / Gamma(den) through log-gamma; both arguments positive
    return math.exp(log_gamma(num) - log_gamma(den))


def log_binom(n: int, j: int) -> float:
    if j < 0 or j > n:
        raise DomainError(f"binomial C({n}, {j}) is outside 0 <= j <= n")
    return float(sc.gammaln(n + 1) - sc.gammaln(j + 1) - sc.gammaln(n - j + 1))


def binom(n: int, j: int) -> float:
    """
    Binomial coefficient from log-gamma, rounded back to the nearest integer
    while that is exactly representable.

    Example:
        >>> binom(6, 2)
        15.0
    """
    value = math.exp(log_binom(n, j))
    if value < 2.0 ** 52:
        return float(round(value))
    return value


def lower_incomplete_gamma(s: float, x: float) -> float:
    # gamma(s, x) = int_0^x t^{s-1} e^{-t} dt  (not regularized)
    if not s > 0:
        raise DomainError(f"incomplete gamma needs s > 0, got {s!r}")
    if x < 0:
        raise DomainError(f"incomplete gamma needs x >= 0, got {x!r}")
    return float(math.exp(sc.gammaln(s)) * sc.gammainc(s, x))


def upper_incomplete_gamma(s: float, x: float) -> float:
    # Gamma(s, x) = int_x^inf t^{s-1} e^{-t} dt  (not regularized)
    if not s > 0:
        raise DomainError(f"incomplete gamma needs s > 0, got {s!r}")
    if x < 0:
        raise DomainError(f"incomplete gamma needs x >= 0, got {x!r}")
    return float(math.exp(sc.gammaln(s)) * sc.gammaincc(s, x))

# %%

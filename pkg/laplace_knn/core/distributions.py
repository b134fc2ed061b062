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
# core/distributions.py

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Union

import numpy as np
from scipy import special as sc
from scipy.integrate import quad

from laplace_knn.core.errors import (
    ConfigurationError,
    InsufficientPointsError,
    InvalidDimensionError,
    UnknownNameError,
)
from laplace_knn.core.interfaces import Density, Piece, Seed
from laplace_knn.core.knn import ArrayLike, PointSet, as_point_array, unit_ball_volume

logger = logging.getLogger(__name__)

MIN_ACCEPTANCE = 1e-6


# %%
@dataclass(frozen=True)
class SmoothnessClass:
    """
    Membership data for the density class P(sigma): sigma-Hoelder interior,
    bounded above, int p e^{-beta p} <= c0 e^{-c1 beta}, and a boundary of
    finite Hausdorff measure.
    """
    sigma: float
    sup_p: float
    holder_constant: float
    boundary_measure: float
    c0: float = 1.0
    c1: float = 0.0

    def d2_bound(self, beta: float) -> float:
        return self.c0 * math.exp(-self.c1 * beta)


def _fmt(x: float) -> str:
    short = f"{x:g}"
    return short if float(short) == x else repr(float(x))


class _TruncatedFamily:
    """
    Shared pdf and rejection-sampling logic; subclasses supply the unnormalized
    parent density, its proposal draws and the support indicator.
    """
    d: int

    def _check_d(self) -> None:
        if int(self.d) != self.d or self.d < 1:
            raise InvalidDimensionError(f"dimension must be a positive integer, got {self.d!r}")

    def pdf(self, x: ArrayLike) -> Union[float, np.ndarray]:
        single = np.ndim(x) <= 1 and (self.d > 1 or np.size(x) == 1)
        pts = as_point_array(x, self.d)
        inside = self.contains(pts)
        with np.errstate(over="ignore", under="ignore"):
            out = np.where(inside, self._density(pts), 0.0)
        return float(out[0]) if single else out

    @property
    def acceptance_probability(self) -> float:
        return 1.0

    def sample(self, m: int, seed: Seed = None) -> PointSet:
        if m < 1:
            raise InsufficientPointsError(f"need m >= 1 draws, got {m}")
        acc = self.acceptance_probability
        if acc < MIN_ACCEPTANCE:
            raise ConfigurationError(
                f"{self.name}: rejection acceptance {acc:.3g} is below {MIN_ACCEPTANCE:g}"
            )
        rng = np.random.default_rng(seed)
        kept: List[np.ndarray] = []
        have, proposed = 0, 0
        while have < m:
            batch = int(math.ceil(1.1 * (m - have) / acc)) + 16
            prop = self._propose(rng, batch)
            ok = self.contains(prop)
            kept.append(prop[ok])
            have += int(np.count_nonzero(ok))
            proposed += batch
        logger.debug("%s d=%d: accepted %d of %d proposals", self.name, self.d, have, proposed)
        return PointSet(np.concatenate(kept)[:m])


# %%
@dataclass(frozen=True)
class TruncatedGaussian(_TruncatedFamily):
    """
    Standard Gaussian restricted to the ball of radius ``radius``, then
    scaled by ``scale`` (covariance scale^2 I before truncation).

    Example:
        >>> p = TruncatedGaussian(d=1, radius=3.0)
        >>> p.pdf([3.5])
        0.0
    """
    d: int
    radius: float = 3.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        self._check_d()
        if not (self.radius > 0 and self.scale > 0):
            raise ConfigurationError("radius and scale must be positive")

    @property
    def name(self) -> str:
        if self.scale == 1.0:
            return f"tgauss:{_fmt(self.radius)}"
        return f"tgauss:{_fmt(self.radius)},{_fmt(self.scale)}"

    @cached_property
    def radial_mass(self) -> float:
        # K_d(R) = int_0^R d r^{d-1} e^{-r^2/2} dr
        d = self.d
        val, _ = quad(lambda r: d * r ** (d - 1) * math.exp(-r * r / 2), 0.0, self.radius)
        return val

    @cached_property
    def peak(self) -> float:
        # sup of the unscaled density, Gamma(d/2 + 1) / (pi^{d/2} K_d(R))
        return 1.0 / (unit_ball_volume(self.d) * self.radial_mass)

    @property
    def acceptance_probability(self) -> float:
        return float(sc.gammainc(self.d / 2, self.radius ** 2 / 2))

    def contains(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(x, axis=1) <= self.radius * self.scale

    def _density(self, x: np.ndarray) -> np.ndarray:
        z2 = np.sum((x / self.scale) ** 2, axis=1)
        return self.peak * np.exp(-z2 / 2) / self.scale ** self.d

    def _propose(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.scale * rng.standard_normal((n, self.d))

    def smoothness_class(self) -> SmoothnessClass:
        d, R, s = self.d, self.radius, self.scale
        sup0 = self.peak
        return SmoothnessClass(
            sigma=2.0,
            sup_p=sup0 / s ** d,
            holder_constant=sup0 * math.sqrt(R ** 4 + d) / s ** (d + 2),
            boundary_measure=d * unit_ball_volume(d) * (s * R) ** (d - 1),
            c0=1.0,
            c1=sup0 * math.exp(-R * R / 2) / s ** d,
        )

    def support_pieces(self) -> List[Piece]:
        rho = self.radius * self.scale
        if self.d == 1:
            return [(-rho, 0.0), (0.0, rho)]
        lo = lambda x: -math.sqrt(max(rho * rho - x * x, 0.0))
        hi = lambda x: math.sqrt(max(rho * rho - x * x, 0.0))
        return [(-rho, 0.0, lo, hi), (0.0, rho, lo, hi)]


@dataclass(frozen=True)
class TruncatedExponential(_TruncatedFamily):
    """
    e^{-(x_1 + ... + x_d)} on the corner simplex x >= 0, sum(x) <= radius.

    Example:
        >>> round(TruncatedExponential(d=1, radius=2.0).pdf([0.0]), 10) == round(1 / (1 - math.exp(-2)), 10)
        True
    """
    d: int
    radius: Optional[float] = None   # default 2d

    def __post_init__(self) -> None:
        self._check_d()
        if self.radius is None:
            object.__setattr__(self, "radius", 2.0 * self.d)
        if not self.radius > 0:
            raise ConfigurationError("radius must be positive")

    @property
    def name(self) -> str:
        return f"texp:{_fmt(self.radius)}"

    @cached_property
    def mass(self) -> float:
        # 1 - e^{-R} sum_{i<d} R^i / i!
        return float(sc.gammainc(self.d, self.radius))

    @property
    def acceptance_probability(self) -> float:
        return self.mass

    def contains(self, x: np.ndarray) -> np.ndarray:
        return np.all(x >= 0, axis=1) & (np.sum(x, axis=1) <= self.radius)

    def _density(self, x: np.ndarray) -> np.ndarray:
        return np.exp(-np.sum(x, axis=1)) / self.mass

    def _propose(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return -np.log1p(-rng.random((n, self.d)))

    def smoothness_class(self) -> SmoothnessClass:
        d, R = self.d, self.radius
        sup = 1.0 / self.mass
        return SmoothnessClass(
            sigma=2.0,
            sup_p=sup,
            holder_constant=d * sup,
            boundary_measure=(math.sqrt(d) / math.factorial(d - 1) + d) * R ** (d - 1),
            c0=1.0,
            c1=math.exp(-R) * sup,
        )

    def support_pieces(self) -> List[Piece]:
        R = self.radius
        if self.d == 1:
            return [(0.0, R)]
        return [(0.0, R, lambda x: 0.0, lambda x: R - x)]


@dataclass(frozen=True)
class TruncatedLaplace(_TruncatedFamily):
    """
    e^{-|x|_1} on the L1 ball of radius ``radius``; Lipschitz but not C^2.
    """
    d: int
    radius: float = 3.0

    def __post_init__(self) -> None:
        self._check_d()
        if not self.radius > 0:
            raise ConfigurationError("radius must be positive")

    @property
    def name(self) -> str:
        return f"tlaplace:{_fmt(self.radius)}"

    @cached_property
    def mass(self) -> float:
        return 2.0 ** self.d * float(sc.gammainc(self.d, self.radius))

    @property
    def acceptance_probability(self) -> float:
        return float(sc.gammainc(self.d, self.radius))

    def contains(self, x: np.ndarray) -> np.ndarray:
        return np.sum(np.abs(x), axis=1) <= self.radius

    def _density(self, x: np.ndarray) -> np.ndarray:
        return np.exp(-np.sum(np.abs(x), axis=1)) / self.mass

    def _propose(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random((n, self.d)) - 0.5
        return -np.sign(u) * np.log1p(-2 * np.abs(u))

    def smoothness_class(self) -> SmoothnessClass:
        d, R = self.d, self.radius
        sup = 1.0 / self.mass
        return SmoothnessClass(
            sigma=1.0,
            sup_p=sup,
            holder_constant=math.sqrt(d) * sup,
            boundary_measure=2 ** d * math.sqrt(d) / math.factorial(d - 1) * R ** (d - 1),
            c0=1.0,
            c1=math.exp(-R) * sup,
        )

    def support_pieces(self) -> List[Piece]:
        R = self.radius
        if self.d == 1:
            return [(-R, 0.0), (0.0, R)]
        return [
            (-R, 0.0, lambda x: -(R + x), lambda x: R + x),
            (0.0, R, lambda x: -(R - x), lambda x: R - x),
        ]


@dataclass(frozen=True)
class TruncatedCauchy(_TruncatedFamily):
    """
    Multivariate Cauchy density (1 + |x|^2)^{-(d+1)/2} on the ball of radius ``radius``.
    """
    d: int
    radius: float = 3.0

    def __post_init__(self) -> None:
        self._check_d()
        if not self.radius > 0:
            raise ConfigurationError("radius must be positive")

    @property
    def name(self) -> str:
        return f"tcauchy:{_fmt(self.radius)}"

    @cached_property
    def angular_mass(self) -> float:
        # L_d(R): probability that an untruncated draw falls in the ball
        d = self.d
        num, _ = quad(lambda t: math.sin(t) ** (d - 1), 0.0, math.atan(self.radius))
        den, _ = quad(lambda t: math.sin(t) ** (d - 1), 0.0, math.pi / 2)
        return num / den

    @cached_property
    def peak(self) -> float:
        d = self.d
        return math.exp(sc.gammaln((d + 1) / 2)) / (math.pi ** ((d + 1) / 2) * self.angular_mass)

    @property
    def acceptance_probability(self) -> float:
        return self.angular_mass

    def contains(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(x, axis=1) <= self.radius

    def _density(self, x: np.ndarray) -> np.ndarray:
        return self.peak * (1 + np.sum(x * x, axis=1)) ** (-(self.d + 1) / 2)

    def _propose(self, rng: np.random.Generator, n: int) -> np.ndarray:
        z = rng.standard_normal((n, self.d))
        w = rng.standard_normal((n, 1))
        return z / np.abs(w)

    def smoothness_class(self) -> SmoothnessClass:
        d, R = self.d, self.radius
        sup = self.peak
        return SmoothnessClass(
            sigma=2.0,
            sup_p=sup,
            holder_constant=(d + 1) * sup * math.sqrt(R ** 4 * (d + 1) * (d + 3) + d),
            boundary_measure=d * unit_ball_volume(d) * R ** (d - 1),
            c0=1.0,
            c1=sup * (1 + R * R) ** (-(d + 1) / 2),
        )

    def support_pieces(self) -> List[Piece]:
        R = self.radius
        if self.d == 1:
            return [(-R, 0.0), (0.0, R)]
        lo = lambda x: -math.sqrt(max(R * R - x * x, 0.0))
        hi = lambda x: math.sqrt(max(R * R - x * x, 0.0))
        return [(-R, 0.0, lo, hi), (0.0, R, lo, hi)]


@dataclass(frozen=True)
class UniformBox(_TruncatedFamily):
    """
    Uniform density on [0, side]^d.

    Example:
        >>> UniformBox(d=2).pdf([0.5, 0.5])
        1.0
    """
    d: int
    side: float = 1.0

    def __post_init__(self) -> None:
        self._check_d()
        if not self.side > 0:
            raise ConfigurationError("side must be positive")

    @property
    def name(self) -> str:
        return f"uniform:{_fmt(self.side)}"

    def contains(self, x: np.ndarray) -> np.ndarray:
        return np.all((x >= 0) & (x <= self.side), axis=1)

    def _density(self, x: np.ndarray) -> np.ndarray:
        return np.full(x.shape[0], self.side ** (-self.d))

    def _propose(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(0.0, self.side, size=(n, self.d))

    def smoothness_class(self) -> SmoothnessClass:
        d, s = self.d, self.side
        return SmoothnessClass(
            sigma=2.0,
            sup_p=s ** (-d),
            holder_constant=0.0,
            boundary_measure=2 * d * s ** (d - 1),
            c0=1.0,
            c1=s ** (-d),
        )

    def support_pieces(self) -> List[Piece]:
        s = self.side
        if self.d == 1:
            return [(0.0, s)]
        return [(0.0, s, lambda x: 0.0, lambda x: s)]


# %%
def parse_density(text: str, d: int) -> Density:
    """
    Build a density from ``tgauss:<R>[,scale]``, ``texp:<R>``, ``tlaplace:<R>``,
    ``tcauchy:<R>`` or ``uniform:<side>``; the parameter may be omitted.

    Example:
        >>> parse_density("tgauss:3,2", d=2).name
        'tgauss:3,2'
        >>> parse_density("texp", d=3).radius
        6.0
    """
    head, _, tail = text.strip().partition(":")
    try:
        args = [float(t) for t in tail.split(",")] if tail else []
    except ValueError:
        raise UnknownNameError(f"Non-numeric density parameter in {text!r}")
    arity = {"tgauss": 2, "texp": 1, "tlaplace": 1, "tcauchy": 1, "uniform": 1}
    if head not in arity:
        raise UnknownNameError(f"Unknown density {text!r}")
    if len(args) > arity[head]:
        raise UnknownNameError(f"Too many parameters in {text!r}")
    if head == "tgauss":
        return TruncatedGaussian(d, *args)
    if head == "texp":
        return TruncatedExponential(d, *args)
    if head == "tlaplace":
        return TruncatedLaplace(d, *args)
    if head == "tcauchy":
        return TruncatedCauchy(d, *args)
    return UniformBox(d, *args)


def pdf(density: Density, x: ArrayLike) -> Union[float, np.ndarray]:
    return density.pdf(x)


def sample(density: Density, m: int, seed: Seed = None) -> PointSet:
    return density.sample(m, seed)


def smoothness_class(density: Density) -> SmoothnessClass:
    """
    Example:
        >>> smoothness_class(TruncatedLaplace(d=2)).sigma
        1.0
    """
    return density.smoothness_class()

# %%

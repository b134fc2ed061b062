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
# core/interfaces.py

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
from typing import TYPE_CHECKING, Callable, List, Optional, Protocol, Tuple, Union

import numpy as np

from laplace_knn.core.knn import ArrayLike, PointSet

if TYPE_CHECKING:
    from laplace_knn.core.distributions import SmoothnessClass

Seed = Union[int, np.random.SeedSequence, np.random.Generator, None]

# One rectangle-like piece of a support in d <= 2:
#   d = 1: (lo, hi)
#   d = 2: (x_lo, x_hi, y_lo(x), y_hi(x))
Piece = Union[Tuple[float, float], Tuple[float, float, Callable[[float], float], Callable[[float], float]]]


# %%
class Density(Protocol):
    d: int

    @property
    def name(self) -> str:
        # Canonical CLI/config string, e.g. "tgauss:3"
        ...

    def pdf(self, x: ArrayLike) -> Union[float, np.ndarray]:
        # Exact density, 0 off the support; one value per row of x
        ...

    def contains(self, x: np.ndarray) -> np.ndarray:
        # Boolean support indicator per row
        ...

    def sample(self, m: int, seed: Seed = None) -> PointSet:
        # m i.i.d. draws, deterministic in the seed
        ...

    def smoothness_class(self) -> "SmoothnessClass":
        ...

    def support_pieces(self) -> List[Piece]:
        """
        Integration regions covering the support for d <= 2 quadrature.
        """
        ...


class VolumeEstimator(Protocol):
    def __call__(self, sample_x: PointSet, sample_y: Optional[PointSet] = None) -> float:
        # One estimate of T_f from one (or two) samples
        ...

# %%

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
# core/ground_truth.py

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
import csv
import io
import logging
import math
from dataclasses import dataclass
from importlib import resources
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import dblquad

from laplace_knn.core.config import DEFAULT_SETTINGS, EstimatorSettings
from laplace_knn.core.distributions import UniformBox
from laplace_knn.core.errors import (
    ConfigurationError,
    DimensionMismatchError,
    OracleUndefinedError,
    QuadratureError,
)
from laplace_knn.core.functionals import FunctionalSpec, f_value, parse_functional
from laplace_knn.core.interfaces import Density
from laplace_knn.core.oracle import integrate_pieces

logger = logging.getLogger(__name__)

GOLDEN_COLUMNS = ("functional", "density1", "density2", "d", "value", "tolerance", "oracle")
SUPPORT_DRAWS = 4096


# %%
@dataclass(frozen=True)
class OracleValue:
    value: float
    error: float      # quadrature error estimate or Monte Carlo standard error
    method: str       # "analytic" | "quadrature" | "monte-carlo" | "golden:<oracle>"

    def __float__(self) -> float:
        return self.value


def _integrand(spec: FunctionalSpec, p: Density, q: Optional[Density]):
    def weighted(x: np.ndarray) -> np.ndarray:
        px = np.atleast_1d(p.pdf(x))
        out = np.zeros_like(px)
        live = px > 0
        if not np.any(live):
            return out
        if q is None:
            out[live] = f_value(spec, px[live]) * px[live]
            return out
        qx = np.atleast_1d(q.pdf(x))
        if np.any(qx[live] <= 0):
            raise OracleUndefinedError(
                f"{spec.name}: q = {q.name} vanishes where p = {p.name} is positive"
            )
        out[live] = f_value(spec, px[live], qx[live]) * px[live]
        return out
    return weighted


def _check_support(p: Density, q: Density, seed: int) -> None:
    draws = p.sample(SUPPORT_DRAWS, seed).points
    outside = int(np.count_nonzero(~q.contains(draws)))
    if outside:
        raise OracleUndefinedError(
            f"supp({p.name}) is not contained in supp({q.name}): "
            f"{outside} of {SUPPORT_DRAWS} draws fall outside"
        )


def _quadrature(weighted, p: Density, settings: EstimatorSettings, what: str) -> Tuple[float, float]:
    total, err = 0.0, 0.0
    for piece in p.support_pieces():
        if p.d == 1:
            lo, hi = piece
            val, e = integrate_pieces(
                lambda t: float(weighted(np.array([[t]]))[0]),
                [lo, hi],
                settings=settings,
                what=what,
            )
        else:
            x_lo, x_hi, y_lo, y_hi = piece
            val, e = dblquad(
                lambda y, x: float(weighted(np.array([[x, y]]))[0]),
                x_lo, x_hi, y_lo, y_hi,
                epsabs=settings.quad_abs_tol,
                epsrel=settings.quad_abs_tol,
            )
            if not math.isfinite(val):
                raise QuadratureError(f"{what} is not finite", abserr=e)
        total += val
        err += e
    return total, err


def _monte_carlo(
    spec: FunctionalSpec,
    p: Density,
    q: Optional[Density],
    settings: EstimatorSettings,
    seed: int,
) -> Tuple[float, float]:
    # E_p[f(p(X), q(X))] from exact pdf evaluations at draws of p
    rng = np.random.default_rng(seed)
    sums: List[float] = []
    squares: List[float] = []
    done = 0
    while done < settings.mc_draws:
        size = min(settings.mc_chunk, settings.mc_draws - done)
        x = p.sample(size, rng).points
        px = p.pdf(x)
        if q is None:
            vals = f_value(spec, px)
        else:
            qx = q.pdf(x)
            if np.any(qx <= 0):
                raise OracleUndefinedError(
                    f"{spec.name}: q = {q.name} vanishes where p = {p.name} is positive"
                )
            vals = f_value(spec, px, qx)
        sums.append(math.fsum(vals.tolist()))
        squares.append(math.fsum((vals * vals).tolist()))
        done += size
    n = settings.mc_draws
    mean = math.fsum(sums) / n
    var = max(math.fsum(squares) / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n)


# %%
def true_functional(
    spec: FunctionalSpec,
    p: Density,
    q: Optional[Density] = None,
    *,
    method: str = "auto",
    settings: EstimatorSettings = DEFAULT_SETTINGS,
    seed: int = 0,
) -> OracleValue:
    """
    T_f = int f(p(x)[, q(x)]) p(x) dx.

    ``method`` is "auto" (quadrature for d <= 2, Monte Carlo otherwise),
    "quadrature" or "monte-carlo". Identical densities and single-density
    functionals of a uniform box are answered exactly.

    Example:
        >>> true_functional(parse_functional("entropy"), UniformBox(d=3)).value
        0.0
        >>> from laplace_knn.core.distributions import TruncatedGaussian
        >>> g = TruncatedGaussian(d=2)
        >>> true_functional(parse_functional("kl"), g, g).method
        'analytic'
    """
    if spec.arity == 2 and q is None:
        raise ConfigurationError(f"{spec.name} needs a second density")
    if spec.arity == 1 and q is not None:
        raise ConfigurationError(f"{spec.name} takes a single density")
    if q is not None and q.d != p.d:
        raise DimensionMismatchError(f"densities have dimensions {p.d} and {q.d}")
    if method not in ("auto", "quadrature", "monte-carlo"):
        raise ConfigurationError(f"unknown oracle method {method!r}")

    if q is not None and q == p:
        # every two-density f(p, p) is a constant
        return OracleValue(float(f_value(spec, 1.0, 1.0)), 0.0, "analytic")
    if q is None and isinstance(p, UniformBox):
        # + 0.0 folds -0.0 from -log(1)
        return OracleValue(float(f_value(spec, p.side ** (-p.d))) + 0.0, 0.0, "analytic")
    if q is not None:
        _check_support(p, q, seed)

    if method == "auto":
        method = "quadrature" if p.d <= 2 else "monte-carlo"
    what = f"T[{spec.name}] for {p.name}" + (f" vs {q.name}" if q is not None else "")
    if method == "quadrature":
        if p.d > 2:
            raise ConfigurationError("quadrature oracle is limited to d <= 2")
        value, err = _quadrature(_integrand(spec, p, q), p, settings, what)
    else:
        value, err = _monte_carlo(spec, p, q, settings, seed)
    logger.debug("%s d=%d by %s: %.12g (+- %.2g)", what, p.d, method, value, err)
    return OracleValue(value, err, method)


# %%
@dataclass(frozen=True)
class GoldenRow:
    functional: str
    density1: str
    density2: str     # "" for single-density functionals
    d: int
    value: float
    tolerance: float
    oracle: str

    @property
    def key(self) -> Tuple[str, str, str, int]:
        return (self.functional, self.density1, self.density2, self.d)


def _golden_from_csv(text: str) -> List[GoldenRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != GOLDEN_COLUMNS:
        raise ConfigurationError(
            f"golden file header must be {','.join(GOLDEN_COLUMNS)}, got {reader.fieldnames}"
        )
    rows = []
    for i, raw in enumerate(reader, start=2):
        try:
            rows.append(GoldenRow(
                functional=parse_functional(raw["functional"]).name,
                density1=raw["density1"],
                density2=raw["density2"] or "",
                d=int(raw["d"]),
                value=float(raw["value"]),
                tolerance=float(raw["tolerance"]),
                oracle=raw["oracle"],
            ))
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"golden file line {i}: {e}")
    return rows


class GoldenStore:
    """
    Ground-truth values recorded ahead of time, keyed by
    (functional, density1, density2, d).

    Example:
        >>> store = GoldenStore.packaged()
        >>> store.lookup("entropy", "uniform:1", None, 2).value
        0.0
    """

    def __init__(self, rows: List[GoldenRow]):
        self._rows: Dict[Tuple[str, str, str, int], GoldenRow] = {}
        for row in rows:
            if row.key in self._rows:
                raise ConfigurationError(f"duplicate golden entry {row.key}")
            self._rows[row.key] = row

    def __len__(self) -> int:
        return len(self._rows)

    def __iter__(self):
        return iter(self._rows.values())

    @classmethod
    def from_csv(cls, text: str) -> "GoldenStore":
        return cls(_golden_from_csv(text))

    @classmethod
    def packaged(cls) -> "GoldenStore":
        text = resources.files("laplace_knn").joinpath("data/golden.csv").read_text(encoding="utf-8")
        return cls.from_csv(text)

    def lookup(
        self,
        functional: str,
        density1: str,
        density2: Optional[str],
        d: int,
    ) -> Optional[GoldenRow]:
        return self._rows.get((functional, density1, density2 or "", int(d)))


def resolve_truth(
    spec: FunctionalSpec,
    p: Density,
    q: Optional[Density] = None,
    *,
    store: Optional[GoldenStore] = None,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
    seed: int = 0,
) -> OracleValue:
    """Golden value when one is recorded, otherwise ``true_functional``."""
    store = store if store is not None else GoldenStore.packaged()
    row = store.lookup(spec.name, p.name, q.name if q is not None else None, p.d)
    if row is not None:
        logger.debug("golden hit for %s", row.key)
        return OracleValue(row.value, row.tolerance, f"golden:{row.oracle}")
    logger.debug("golden miss for %s on %s d=%d", spec.name, p.name, p.d)
    return true_functional(spec, p, q, settings=settings, seed=seed)

# %%

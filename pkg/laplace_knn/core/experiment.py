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
# core/experiment.py

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from laplace_knn.core.config import DEFAULT_SETTINGS, EstimatorSettings
from laplace_knn.core.distributions import parse_density
from laplace_knn.core.errors import (
    ConfigurationError,
    DegenerateFitError,
    DomainError,
    InsufficientPointsError,
)
from laplace_knn.core.estimator import choose_truncation, estimate_single, estimate_two
from laplace_knn.core.functionals import FunctionalSpec
from laplace_knn.core.ground_truth import GoldenStore, resolve_truth
from laplace_knn.core.interfaces import Density, VolumeEstimator
from laplace_knn.core.knn import ArrayLike, KnnIndex, as_point_array, unit_ball_volume
from laplace_knn.core.metrics import SizeSummary, summarize_runs

logger = logging.getLogger(__name__)

DEFAULT_SIZES: Tuple[int, ...] = (200, 290, 420, 610, 880, 1270, 1830, 2500)
VARIANTS = ("untruncated", "truncated")
SEED_MODES = ("per-run", "shared")


# %%
@dataclass(frozen=True)
class ExperimentConfig:
    """
    One MSE sweep: a functional, its density (or densities), orders and sizes.

    Example:
        >>> from laplace_knn.core.functionals import parse_functional
        >>> cfg = ExperimentConfig(parse_functional("entropy"), "uniform:1", d=2, k=3, sizes=(50, 100, 200), runs=4)
        >>> cfg.densities()[0].name
        'uniform:1'
        >>> try:
        ...     ExperimentConfig(parse_functional("entropy"), "uniform:1", d=2, k=3, sizes=(100, 50), runs=4)
        ... except ConfigurationError as e:
        ...     print(e)
        sizes must be strictly increasing, got (100, 50)
    """
    functional: FunctionalSpec
    density: str
    density2: Optional[str] = None
    d: int = 2
    k: int = 5
    l: Optional[int] = None
    sizes: Tuple[int, ...] = DEFAULT_SIZES
    runs: int = 100
    seed: int = 0
    variants: Tuple[str, ...] = ("untruncated",)
    sigma: Optional[float] = None       # None: taken from the density's smoothness class
    tau: Optional[float] = None
    seed_mode: str = "per-run"          # "shared" reuses one seed across runs
    workers: int = 1
    out: Optional[str] = None
    settings: EstimatorSettings = field(default=DEFAULT_SETTINGS)

    def __post_init__(self) -> None:
        object.__setattr__(self, "sizes", tuple(int(m) for m in self.sizes))
        object.__setattr__(self, "variants", tuple(self.variants))
        self.validate()

    def validate(self) -> None:
        spec = self.functional
        if spec.arity == 2 and (self.density2 is None or self.l is None):
            raise ConfigurationError(f"{spec.name} needs density2 and l")
        if spec.arity == 1 and (self.density2 is not None or self.l is not None):
            raise ConfigurationError(f"{spec.name} takes one density and no l")
        spec.check_orders(self.k, self.l)
        if not self.sizes:
            raise ConfigurationError("sizes must not be empty")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ConfigurationError(f"sizes must be strictly increasing, got {self.sizes}")
        order = max(self.k, self.l or 0)
        if self.sizes[0] <= order:
            raise ConfigurationError(
                f"every size must exceed max(k, l) = {order}, got {self.sizes[0]}"
            )
        if self.runs < 2:
            raise ConfigurationError(f"runs must be >= 2, got {self.runs}")
        if not self.variants or any(v not in VARIANTS for v in self.variants):
            raise ConfigurationError(f"variants must be drawn from {list(VARIANTS)}, got {list(self.variants)}")
        if len(set(self.variants)) != len(self.variants):
            raise ConfigurationError(f"duplicate variants in {list(self.variants)}")
        if self.seed_mode not in SEED_MODES:
            raise ConfigurationError(f"seed_mode must be one of {list(SEED_MODES)}, got {self.seed_mode!r}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        self.densities()
        if "truncated" in self.variants:
            sigma, tau = self.smoothness()
            choose_truncation(
                spec, self.sizes[0], self.k, self.d,
                sigma=sigma, l=self.l, n=self.sizes[0], tau=tau,
                settings=self.settings,
            )

    def densities(self) -> Tuple[Density, Optional[Density]]:
        p = parse_density(self.density, self.d)
        q = parse_density(self.density2, self.d) if self.density2 is not None else None
        return p, q

    def smoothness(self) -> Tuple[float, Optional[float]]:
        """
        (sigma, tau) for the rate schedule. Unset values come from the
        smoothness class of the reference densities.

        Example:
            >>> from laplace_knn.core.functionals import parse_functional
            >>> ExperimentConfig(parse_functional("entropy"), "tlaplace:3", d=2, k=3, sizes=(50, 100, 200), runs=4).smoothness()
            (1.0, None)
        """
        p, q = self.densities()
        sigma = p.smoothness_class().sigma if self.sigma is None else self.sigma
        tau = self.tau
        if tau is None and q is not None:
            tau = q.smoothness_class().sigma
        return sigma, tau


# %%
def make_volume_estimator(config: ExperimentConfig, variant: str, m: int) -> VolumeEstimator:
    """The estimator a sweep applies to samples of size m (n = m for two densities)."""
    spec, k, l, s = config.functional, config.k, config.l, config.settings
    windows = None
    if variant == "truncated":
        sigma, tau = config.smoothness()
        first, second = choose_truncation(
            spec, m, k, config.d, sigma=sigma, l=l, n=m, tau=tau, settings=s
        )
        windows = first if spec.arity == 1 else (first, second)

    def estimate(sample_x, sample_y=None) -> float:
        if spec.arity == 1:
            return estimate_single(sample_x, spec, k, windows, settings=s)
        return estimate_two(sample_x, sample_y, spec, k, l, windows, settings=s)

    return estimate


def _run_seed(config: ExperimentConfig, run: int, m: int) -> np.random.SeedSequence:
    # keyed by (seed, run, m) so serial and parallel sweeps draw the same samples
    run_key = 0 if config.seed_mode == "shared" else run
    return np.random.SeedSequence([config.seed, run_key, m])


def _one_run(config: ExperimentConfig, m: int, run: int) -> Dict[str, float]:
    p, q = config.densities()
    seed_x, seed_y = _run_seed(config, run, m).spawn(2)
    sample_x = p.sample(m, seed_x)
    sample_y = q.sample(m, seed_y) if q is not None else None
    return {
        v: make_volume_estimator(config, v, m)(sample_x, sample_y)
        for v in config.variants
    }


def _one_size(config: ExperimentConfig, m: int) -> List[Dict[str, float]]:
    return [_one_run(config, m, run) for run in range(config.runs)]


def run_mse_sweep(
    config: ExperimentConfig,
    *,
    store: Optional[GoldenStore] = None,
    truth: Optional[float] = None,
) -> List[SizeSummary]:
    """
    For each size, ``runs`` independent estimates aggregated against the
    ground truth. Rows are ordered by size, then by variant.
    """
    p, q = config.densities()
    if truth is None:
        truth = resolve_truth(
            config.functional, p, q, store=store, settings=config.settings, seed=config.seed
        ).value
    logger.info(
        "sweep %s on %s%s d=%d: %d sizes x %d runs, truth %.10g",
        config.functional.name, p.name, f" vs {q.name}" if q is not None else "",
        config.d, len(config.sizes), config.runs, truth,
    )

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_one_size, config, m) for m in config.sizes]
            per_size = [f.result() for f in futures]
    else:
        per_size = [_one_size(config, m) for m in config.sizes]

    label = len(config.variants) > 1
    table: List[SizeSummary] = []
    for m, runs in zip(config.sizes, per_size):
        for v in config.variants:
            row = summarize_runs(m, [r[v] for r in runs], truth, variant=v if label else None)
            table.append(row)
            logger.info("m=%d %s: mse=%.4g (stderr %.2g)", m, v, row.mse, row.stderr)
    return table


# %%
@dataclass(frozen=True)
class RateFit:
    slope: float           # empirical MSE exponent, reported positive
    intercept: float
    r_squared: float
    n_points: int

    def to_json(self) -> Dict[str, float]:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "n_points": self.n_points,
        }


def fit_rate_exponent(table: Sequence[SizeSummary]) -> RateFit:
    """
    OLS of log(mse) on log(m); the slope is negated so decay is positive.

    Example:
        >>> rows = [SizeSummary(m, 1.0 / m, 0.0, 0.0, 0.0) for m in (200, 400, 800)]
        >>> fit = fit_rate_exponent(rows)
        >>> (round(fit.slope, 10), round(fit.r_squared, 10))
        (1.0, 1.0)
    """
    if len({r.variant for r in table}) > 1:
        raise ConfigurationError("fit one variant at a time (see fit_by_variant)")
    if len(table) < 3:
        raise DegenerateFitError(f"a rate fit needs at least 3 sizes, got {len(table)}")
    m = np.array([r.m for r in table], dtype=float)
    mse = np.array([r.mse for r in table], dtype=float)
    if not np.all(np.isfinite(mse) & (mse > 0)):
        raise DegenerateFitError(f"every mse must be positive and finite, got {mse.tolist()}")
    x, y = np.log(m), np.log(mse)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r2 = 1.0 if np.ptp(y) == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return RateFit(slope=-float(slope), intercept=float(intercept), r_squared=r2, n_points=len(table))


def fit_by_variant(table: Sequence[SizeSummary]) -> Dict[str, RateFit]:
    groups: Dict[str, List[SizeSummary]] = {}
    for r in table:
        groups.setdefault(r.variant or "default", []).append(r)
    return {v: fit_rate_exponent(rows) for v, rows in groups.items()}


# %%
def ks_gamma_statistic(volumes: ArrayLike, k: int, p: float) -> float:
    """
    Kolmogorov-Smirnov distance between ``volumes`` and Gamma(k, rate p).

    Example:
        >>> v = stats.gamma(2, scale=0.5).ppf((np.arange(1000) + 0.5) / 1000)
        >>> ks_gamma_statistic(v, 2, 2.0) <= 0.001
        True
    """
    return float(stats.kstest(np.asarray(volumes, dtype=float), stats.gamma(k, scale=1.0 / p).cdf).statistic)


def gamma_limit_volumes(
    density: Density,
    x: ArrayLike,
    k: int,
    m: int,
    reps: int,
    seed: int = 0,
    *,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> np.ndarray:
    """
    m V_d r_k(x | X)^d over ``reps`` independent samples, x an external query.
    """
    q = as_point_array(x, density.d)
    if q.shape[0] != 1:
        raise DomainError("the Gamma-limit test takes a single query point")
    if not float(np.atleast_1d(density.pdf(q))[0]) > 0:
        raise DomainError(f"query point {q[0].tolist()} lies outside supp({density.name})")
    if not m > k:
        raise InsufficientPointsError(f"need m > k, got m={m}, k={k}")
    if reps < 1:
        raise ConfigurationError(f"reps must be >= 1, got {reps}")
    vd = unit_ball_volume(density.d)
    out = np.empty(reps)
    for rep in range(reps):
        sample = density.sample(m, np.random.SeedSequence([seed, rep, m]))
        r = KnnIndex(sample, settings=settings).query(q, k)[0]
        out[rep] = m * vd * r ** density.d
    return out


def run_ks_gamma_test(
    density: Density,
    x: ArrayLike,
    k: int,
    m: int,
    reps: int,
    seed: int = 0,
    *,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> float:
    """KS statistic of the normalized k-NN volume at x against Gamma(k, p(x))."""
    volumes = gamma_limit_volumes(density, x, k, m, reps, seed, settings=settings)
    px = float(np.atleast_1d(density.pdf(as_point_array(x, density.d)))[0])
    stat = ks_gamma_statistic(volumes, k, px)
    logger.info("KS vs Gamma(%d, %.4g) at m=%d over %d reps: %.4f", k, px, m, reps, stat)
    return stat

# %%

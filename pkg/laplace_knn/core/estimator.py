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
# core/estimator.py

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from laplace_knn.core.config import DEFAULT_SETTINGS, EstimatorSettings
from laplace_knn.core.errors import (
    ConfigurationError,
    DimensionMismatchError,
    InsufficientPointsError,
    ScheduleUndefinedError,
)
from laplace_knn.core.functionals import (
    FunctionalSpec,
    phi_single,
    phi_two,
    tail_envelope,
)
from laplace_knn.core.knn import PointSet, cross_knn_statistic, self_knn_statistic

logger = logging.getLogger(__name__)

Window = Tuple[float, float]
NO_TRUNCATION: Window = (0.0, math.inf)


# %%
@dataclass(frozen=True)
class TruncationSchedule:
    """
    alpha_m = lower_constant * m^lower_exponent (or 0), and
    beta_m = upper_constant * (log m)^upper_power (or infinity).

    Example:
        >>> s = TruncationSchedule(lower="power", lower_exponent=-1/9, upper="polylog")
        >>> alpha, beta = s.points(10**9)
        >>> round(alpha, 10)
        0.1
    """
    lower: str = "zero"              # "zero" | "power"
    lower_exponent: float = 0.0
    lower_constant: float = 1.0
    upper: str = "infinite"          # "infinite" | "polylog"
    upper_power: float = 1.1
    upper_constant: float = 1.0

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.lower not in ("zero", "power"):
            raise ConfigurationError(f"unknown lower rule {self.lower!r}")
        if self.upper not in ("infinite", "polylog"):
            raise ConfigurationError(f"unknown upper rule {self.upper!r}")
        if self.lower_exponent > 0:
            raise ConfigurationError(
                f"lower exponent must be <= 0, got {self.lower_exponent}"
            )
        if self.upper == "polylog" and not self.upper_power > 1:
            raise ConfigurationError(
                f"polylog power must exceed 1, got {self.upper_power}"
            )
        if not (self.lower_constant > 0 and self.upper_constant > 0):
            raise ConfigurationError("schedule constants must be positive")

    def points(self, m: float) -> Window:
        if not m > 1:
            raise InsufficientPointsError(f"schedules need m > 1, got {m}")
        alpha = 0.0
        if self.lower == "power":
            alpha = self.lower_constant * m ** self.lower_exponent
        beta = math.inf
        if self.upper == "polylog":
            beta = self.upper_constant * math.log(m) ** self.upper_power
        return alpha, beta

    @classmethod
    def untruncated(cls) -> "TruncationSchedule":
        return cls()

    @classmethod
    def for_rates(
        cls,
        sigma: float,
        a: float,
        k: int,
        d: int,
        *,
        settings: EstimatorSettings = DEFAULT_SETTINGS,
    ) -> "TruncationSchedule":
        """The rate-optimal schedule for smoothness sigma and envelope exponent a."""
        if not 0 < sigma <= 2:
            raise ConfigurationError(f"sigma must lie in (0, 2], got {sigma}")
        upper = dict(
            upper="polylog",
            upper_power=settings.polylog_power,
            upper_constant=settings.beta_constant,
        )
        if a >= -1:
            return cls(**upper)
        if k == 1:
            raise ScheduleUndefinedError(
                f"no lower truncation rule for k=1 with a={a:g} < -1"
            )
        if a >= -sigma / d - 1:
            exponent = -1.0 / (d * (k - 1))
        else:
            exponent = -min(sigma, 1.0) / (d * (k - 1))
        return cls(
            lower="power",
            lower_exponent=exponent,
            lower_constant=settings.alpha_constant,
            **upper,
        )

    @classmethod
    def for_consistency(
        cls,
        k: int,
        d: int,
        *,
        settings: EstimatorSettings = DEFAULT_SETTINGS,
    ) -> "TruncationSchedule":
        """The schedule that gives consistency without knowledge of sigma."""
        if k == 1:
            raise ScheduleUndefinedError("the consistency schedule needs k >= 2")
        return cls(
            lower="power",
            lower_exponent=-1.0 / (d * (k - 1)),
            lower_constant=settings.alpha_constant,
            upper="polylog",
            upper_power=settings.polylog_power,
            upper_constant=settings.beta_constant,
        )


def truncation_points_single(
    m: float,
    sigma: float,
    a: float,
    k: int,
    d: int,
    *,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> Window:
    """
    (alpha_m, beta_m) for a sample of size m.

    Example:
        >>> truncation_points_single(10**6, 2, 0.0, 5, 2)[0]
        0.0
        >>> round(truncation_points_single(math.exp(100), 2, 0.0, 5, 2)[1], 6) == round(100 ** 1.1, 6)
        True
    """
    if not m > k:
        raise InsufficientPointsError(f"need m > k, got m={m}, k={k}")
    return TruncationSchedule.for_rates(sigma, a, k, d, settings=settings).points(m)


def truncation_points_two(
    n: float,
    tau: float,
    a_tilde: float,
    l: int,
    d: int,
    *,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> Window:
    # (alpha~_n, beta~_n): the same rule driven by the second sample
    if not n >= l:
        raise InsufficientPointsError(f"need n >= l, got n={n}, l={l}")
    return TruncationSchedule.for_rates(tau, a_tilde, l, d, settings=settings).points(n)


def consistency_schedule(
    m: float,
    k: int,
    d: int,
    *,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> Window:
    return TruncationSchedule.for_consistency(k, d, settings=settings).points(m)


def _points_without_smoothness(
    m: float,
    a: float,
    k: int,
    d: int,
    *,
    settings: EstimatorSettings,
) -> Window:
    # the lower point is 0 for a >= -1 whatever sigma is
    if a >= -1:
        schedule = TruncationSchedule(
            upper="polylog",
            upper_power=settings.polylog_power,
            upper_constant=settings.beta_constant,
        )
        return schedule.points(m)
    return consistency_schedule(m, k, d, settings=settings)


def choose_truncation(
    spec: FunctionalSpec,
    m: int,
    k: int,
    d: int,
    *,
    sigma: Optional[float] = None,
    l: Optional[int] = None,
    n: Optional[int] = None,
    tau: Optional[float] = None,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> Tuple[Window, Optional[Window]]:
    """
    Windows for ``spec``: the rate schedule when sigma (and tau) are known.
    Without sigma, an envelope exponent a >= -1 still gives alpha = 0; only
    a < -1 falls back to the consistency schedule.

    Example:
        >>> from laplace_knn.core.functionals import parse_functional
        >>> first, second = choose_truncation(parse_functional("entropy"), 500, 1, 2)
        >>> first[0], second
        (0.0, None)
    """
    env = tail_envelope(spec, k, l, settings=settings)
    if sigma is not None:
        first = truncation_points_single(m, sigma, env.a, k, d, settings=settings)
    else:
        first = _points_without_smoothness(m, env.a, k, d, settings=settings)
    if spec.arity == 1:
        return first, None
    tau = sigma if tau is None else tau
    if tau is not None:
        second = truncation_points_two(n, tau, env.a_tilde, l, d, settings=settings)
    else:
        second = _points_without_smoothness(n, env.a_tilde, l, d, settings=settings)
    return first, second


# %%
@dataclass(frozen=True)
class EstimateResult:
    value: float
    m: int                       # terms in the average
    in_window: int               # terms with every volume inside its window
    dropped_nonfinite: int       # in-window terms whose phi was not finite
    window: Window
    window_tilde: Optional[Window] = None

    def __float__(self) -> float:
        return self.value

    def to_json(self) -> dict:
        out = {
            "value": self.value,
            "m": self.m,
            "in_window": self.in_window,
            "dropped_nonfinite": self.dropped_nonfinite,
            "window": list(self.window),
        }
        if self.window_tilde is not None:
            out["window_tilde"] = list(self.window_tilde)
        return out


def _check_window(w: Window) -> Window:
    lo, hi = float(w[0]), float(w[1])
    if not (lo >= 0 and lo <= hi):
        raise ConfigurationError(f"truncation window needs 0 <= alpha <= beta, got {w}")
    return lo, hi


def truncated_average(
    phi_values: np.ndarray,
    inside: np.ndarray,
    *,
    label: str = "estimate",
) -> Tuple[float, int, int]:
    """
    (1/m) * sum of phi over in-window terms. Out-of-window terms contribute 0;
    so do non-finite in-window terms, which are counted and reported.

    Example:
        >>> truncated_average(np.array([1.0, 2.0, np.inf]), np.array([True, False, True]))
        (0.3333333333333333, 2, 1)
    """
    m = int(phi_values.shape[0])
    picked = phi_values[inside]
    finite = np.isfinite(picked)
    dropped = int(np.count_nonzero(~finite))
    if dropped:
        logger.warning("%s: dropped %d non-finite phi value(s)", label, dropped)
    if m and not picked.shape[0]:
        logger.warning(
            "%s: none of %d terms fell inside the truncation window; the estimate is 0",
            label,
            m,
        )
    total = math.fsum(picked[finite].tolist())
    return total / m, int(picked.shape[0]), dropped


def estimate_single_detailed(
    sample: PointSet,
    spec: FunctionalSpec,
    k: int,
    truncation: Optional[Window] = None,
    *,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> EstimateResult:
    if spec.arity != 1:
        raise ConfigurationError(f"{spec.name} needs two samples")
    spec.check_orders(k)
    lo, hi = _check_window(truncation or NO_TRUNCATION)
    stat = self_knn_statistic(sample, k, settings=settings)
    if stat.duplicates:
        logger.debug("%s: %d point(s) with a zero k-NN radius", spec.name, stat.duplicates)
    u = stat.u
    inside = (u >= lo) & (u <= hi)
    phi = np.zeros_like(u)
    if np.any(inside):
        phi[inside] = phi_single(spec, k, u[inside], strict=False)
    value, n_in, dropped = truncated_average(phi, inside, label=spec.name)
    return EstimateResult(value, sample.m, n_in, dropped, (lo, hi))


def estimate_single(
    sample: PointSet,
    spec: FunctionalSpec,
    k: int,
    truncation: Optional[Window] = None,
    *,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> float:
    """
    (1/m) sum_i phi_k(U_i) 1{alpha <= U_i <= beta}; ``truncation=None``
    means the untruncated estimator.
    """
    return estimate_single_detailed(sample, spec, k, truncation, settings=settings).value


def estimate_two_detailed(
    sample_x: PointSet,
    sample_y: PointSet,
    spec: FunctionalSpec,
    k: int,
    l: int,
    truncations: Optional[Tuple[Window, Window]] = None,
    *,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> EstimateResult:
    if spec.arity != 2:
        raise ConfigurationError(f"{spec.name} takes a single sample")
    if sample_x.d != sample_y.d:
        raise DimensionMismatchError(
            f"samples have dimensions {sample_x.d} and {sample_y.d}"
        )
    if sample_x is sample_y or (
        sample_x.points.shape == sample_y.points.shape
        and np.array_equal(sample_x.points, sample_y.points)
    ):
        raise ConfigurationError(
            f"{spec.name} needs two independent samples; X and Y are the same points"
        )
    spec.check_orders(k, l)
    first, second = truncations or (NO_TRUNCATION, NO_TRUNCATION)
    lo, hi = _check_window(first)
    lo2, hi2 = _check_window(second)
    u = self_knn_statistic(sample_x, k, settings=settings).u
    v = cross_knn_statistic(sample_x, sample_y, l, settings=settings).u
    inside = (u >= lo) & (u <= hi) & (v >= lo2) & (v <= hi2)
    phi = np.zeros_like(u)
    if np.any(inside):
        phi[inside] = phi_two(spec, k, l, u[inside], v[inside], strict=False)
    value, n_in, dropped = truncated_average(phi, inside, label=spec.name)
    return EstimateResult(value, sample_x.m, n_in, dropped, (lo, hi), (lo2, hi2))


def estimate_two(
    sample_x: PointSet,
    sample_y: PointSet,
    spec: FunctionalSpec,
    k: int,
    l: int,
    truncations: Optional[Tuple[Window, Window]] = None,
    *,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> float:
    """
    (1/m) sum_i phi_{k,l}(U_i, V_i) with both volumes restricted to their windows.
    """
    return estimate_two_detailed(
        sample_x, sample_y, spec, k, l, truncations, settings=settings
    ).value

# %%

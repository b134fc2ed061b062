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
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from laplace_knn.core.distributions import TruncatedGaussian, UniformBox
from laplace_knn.core.errors import (
    ConfigurationError,
    DimensionMismatchError,
    InsufficientPointsError,
    ScheduleUndefinedError,
)
from laplace_knn.core.estimator import (
    NO_TRUNCATION,
    TruncationSchedule,
    choose_truncation,
    consistency_schedule,
    estimate_single,
    estimate_single_detailed,
    estimate_two,
    estimate_two_detailed,
    truncated_average,
    truncation_points_single,
    truncation_points_two,
)
from laplace_knn.core.functionals import parse_functional
from laplace_knn.core.knn import PointSet, self_knn_volumes

ENTROPY = parse_functional("entropy")
KL = parse_functional("kl")


# %%
# ---- tests for core/estimator.py ----

def test_truncation_point_examples():
    assert truncation_points_single(10 ** 6, 2, 0.0, 5, 2)[0] == 0.0
    alpha, _ = truncation_points_single(10 ** 9, 2, -2, 4, 3)
    assert abs(alpha - 0.1) < 1e-12
    _, beta = truncation_points_single(math.exp(100), 2, 0.0, 5, 2)
    assert abs(beta - 100 ** 1.1) < 1e-9 * 100 ** 1.1


def test_between_region_uses_one_over_d_k_minus_one():
    # a in [-sigma/d - 1, -1): exponent -1/(d(k-1)) regardless of sigma
    alpha, _ = truncation_points_single(2 ** 12, 1, -1.2, 4, 2)
    assert abs(alpha - 2.0 ** (-2)) < 1e-12


def test_schedule_undefined_for_k_one():
    with pytest.raises(ScheduleUndefinedError):
        truncation_points_single(100, 2, -2, 1, 2)
    with pytest.raises(ScheduleUndefinedError):
        TruncationSchedule.for_consistency(1, 2)


def test_two_sample_schedule_and_consistency_schedule():
    assert truncation_points_two(10 ** 6, 2, 2.0, 5, 2)[0] == 0.0
    alpha, beta = consistency_schedule(2 ** 12, 4, 2)
    assert abs(alpha - 2.0 ** (-2)) < 1e-12
    assert abs(beta - math.log(2 ** 12) ** 1.1) < 1e-9


def test_schedule_validation():
    with pytest.raises(ConfigurationError):
        TruncationSchedule(lower="power", lower_exponent=0.5)
    with pytest.raises(ConfigurationError):
        TruncationSchedule(upper="polylog", upper_power=1.0)
    with pytest.raises(ConfigurationError):
        TruncationSchedule(lower="sometimes")
    assert TruncationSchedule.untruncated().points(100) == NO_TRUNCATION


def test_choose_truncation_for_one_and_two_samples():
    first, second = choose_truncation(ENTROPY, 1000, 5, 2, sigma=2)
    assert first[0] == 0.0 and second is None
    first, second = choose_truncation(parse_functional("renyi-div:3"), 1000, 4, 3, sigma=2, l=4, n=1000)
    assert first[0] > 0.0 and second[0] == 0.0


def test_unknown_sigma_keeps_alpha_zero_when_a_is_at_least_minus_one():
    first, second = choose_truncation(ENTROPY, 1000, 1, 2)
    assert second is None
    assert first == TruncationSchedule(upper="polylog").points(1000)
    # a = -2 on the first volume, a~ = 2 on the second
    first, second = choose_truncation(parse_functional("renyi-div:3"), 4096, 4, 2, l=4, n=1000)
    assert first == consistency_schedule(4096, 4, 2)
    assert second[0] == 0.0


def test_truncated_average_counts(caplog):
    with caplog.at_level(logging.WARNING, logger="laplace_knn.core.estimator"):
        value, inside, dropped = truncated_average(
            np.array([1.0, 2.0, np.inf]), np.array([True, False, True])
        )
    assert (value, inside, dropped) == (1.0 / 3.0, 2, 1)
    assert any("non-finite" in r.getMessage() for r in caplog.records)


def test_empty_window_gives_zero(caplog):
    pts = UniformBox(d=2).sample(200, seed=1)
    u = self_knn_volumes(pts, 3)
    with caplog.at_level(logging.WARNING, logger="laplace_knn.core.estimator"):
        result = estimate_single_detailed(pts, ENTROPY, 3, (0.0, 0.5 * float(u.min())))
    assert result.value == 0.0
    assert result.in_window == 0
    assert any("none of 200 terms" in r.getMessage() for r in caplog.records)


def test_two_sample_window_that_misses_every_term_is_logged(caplog):
    g = TruncatedGaussian(d=3)
    x, y = g.sample(200, seed=11), g.sample(200, seed=12)
    with caplog.at_level(logging.WARNING, logger="laplace_knn.core.estimator"):
        result = estimate_two_detailed(x, y, KL, 5, 5, ((1e9, 2e9), NO_TRUNCATION))
    assert (result.value, result.in_window) == (0.0, 0)
    assert any("truncation window" in r.getMessage() for r in caplog.records)


def test_wide_window_matches_untruncated():
    pts = TruncatedGaussian(d=2).sample(300, seed=2)
    assert estimate_single(pts, ENTROPY, 4, (0.0, 1e12)) == estimate_single(pts, ENTROPY, 4)


def test_bad_window_and_arity():
    pts = UniformBox(d=1).sample(50, seed=3)
    with pytest.raises(ConfigurationError):
        estimate_single(pts, ENTROPY, 2, (2.0, 1.0))
    with pytest.raises(ConfigurationError):
        estimate_single(pts, KL, 2)
    with pytest.raises(InsufficientPointsError):
        estimate_single(PointSet([0.0, 1.0]), ENTROPY, 2)


def test_uniform_entropy_is_near_zero():
    pts = UniformBox(d=1).sample(2000, seed=4)
    assert abs(estimate_single(pts, ENTROPY, 5)) < 0.05


def test_entropy_shifts_by_d_log_c_under_scaling():
    pts = TruncatedGaussian(d=2).sample(300, seed=5)
    base = estimate_single(pts, ENTROPY, 3)
    scaled = estimate_single(pts.scaled(2.0), ENTROPY, 3)
    assert abs(scaled - base - 2 * math.log(2.0)) < 1e-9


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**31 - 1))
def test_estimate_is_permutation_invariant(seed):
    pts = PointSet(np.random.default_rng(seed).standard_normal((120, 2)))
    order = np.random.default_rng(seed + 1).permutation(pts.m)
    assert estimate_single(pts, ENTROPY, 3) == estimate_single(pts.take(order), ENTROPY, 3)


def test_kl_of_a_density_with_itself_is_near_zero():
    g = TruncatedGaussian(d=2)
    x = g.sample(2000, seed=6)
    y = g.sample(2000, seed=7)
    assert abs(estimate_two(x, y, KL, 5, 5)) < 0.1


def test_estimate_two_diagnostics_and_errors():
    g = TruncatedGaussian(d=2)
    x, y = g.sample(100, seed=8), g.sample(120, seed=9)
    result = estimate_two_detailed(x, y, KL, 3, 3)
    assert result.m == 100 and result.in_window == 100 and result.dropped_nonfinite == 0
    assert result.window_tilde == NO_TRUNCATION
    assert set(result.to_json()) == {"value", "m", "in_window", "dropped_nonfinite", "window", "window_tilde"}
    with pytest.raises(DimensionMismatchError):
        estimate_two(x, TruncatedGaussian(d=3).sample(50, seed=1), KL, 3, 3)
    with pytest.raises(ConfigurationError):
        estimate_two(x, y, ENTROPY, 3, 3)


def test_same_sample_for_x_and_y_is_rejected():
    g = TruncatedGaussian(d=2)
    x = g.sample(100, seed=13)
    hellinger = parse_functional("hellinger")
    with pytest.raises(ConfigurationError, match="independent samples"):
        estimate_two(x, x, hellinger, 2, 2)
    with pytest.raises(ConfigurationError, match="independent samples"):
        estimate_two(x, PointSet(np.array(x.points)), KL, 3, 3)

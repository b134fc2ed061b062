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
import math

import numpy as np
import pytest
from scipy import stats

from laplace_knn.core.distributions import TruncatedGaussian, UniformBox, parse_density
from laplace_knn.core.estimator import estimate_single, truncation_points_single
from laplace_knn.core.errors import (
    ConfigurationError,
    DegenerateFitError,
    DomainError,
    InsufficientPointsError,
    InvalidOrderError,
)
from laplace_knn.core.experiment import (
    ExperimentConfig,
    RateFit,
    fit_by_variant,
    fit_rate_exponent,
    gamma_limit_volumes,
    ks_gamma_statistic,
    make_volume_estimator,
    run_ks_gamma_test,
    run_mse_sweep,
)
from laplace_knn.core.functionals import parse_functional, tail_envelope
from laplace_knn.core.ground_truth import GoldenStore
from laplace_knn.core.metrics import SizeSummary
from laplace_knn.core.rates import theoretical_exponent_single, theoretical_exponent_two

ENTROPY = parse_functional("entropy")
KL = parse_functional("kl")


def _rows(mses, sizes=(200, 400, 800, 1600), variant=None):
    return [SizeSummary(m, e, 0.0, e, 0.0, variant) for m, e in zip(sizes, mses)]


def _small(**kw):
    base = dict(functional=ENTROPY, density="uniform:1", d=2, k=3, sizes=(60, 120, 240), runs=4)
    base.update(kw)
    return ExperimentConfig(**base)


# %%
# ---- tests for core/experiment.py ----

def test_config_validation():
    with pytest.raises(ConfigurationError, match="strictly increasing"):
        _small(sizes=(120, 60))
    with pytest.raises(ConfigurationError, match="must exceed"):
        _small(sizes=(3, 10))
    with pytest.raises(ConfigurationError, match="runs"):
        _small(runs=1)
    with pytest.raises(ConfigurationError, match="variants"):
        _small(variants=("sometimes",))
    with pytest.raises(ConfigurationError, match="seed_mode"):
        _small(seed_mode="never")
    with pytest.raises(ConfigurationError, match="density2 and l"):
        _small(functional=KL)
    with pytest.raises(ConfigurationError, match="one density"):
        _small(density2="uniform:1")
    with pytest.raises(InvalidOrderError):
        _small(functional=parse_functional("renyi-entropy:3"), k=2)


def test_make_volume_estimator_variants():
    cfg = _small(variants=("untruncated", "truncated"))
    sample = UniformBox(d=2).sample(120, seed=0)
    plain = make_volume_estimator(cfg, "untruncated", 120)(sample)
    windowed = make_volume_estimator(cfg, "truncated", 120)(sample)
    assert math.isfinite(plain) and math.isfinite(windowed)


def test_truncated_variant_takes_sigma_from_the_density(monkeypatch):
    from laplace_knn.core import experiment

    seen = []
    real = experiment.choose_truncation

    def recording(*args, **kwargs):
        seen.append((kwargs["sigma"], kwargs["tau"]))
        return real(*args, **kwargs)

    monkeypatch.setattr(experiment, "choose_truncation", recording)
    renyi = parse_functional("renyi-entropy:3")
    cfg = _small(functional=renyi, density="tlaplace:3", k=4, variants=("truncated",))
    assert cfg.smoothness() == (1.0, None)
    sample = parse_density("tlaplace:3", 2).sample(240, seed=1)
    got = make_volume_estimator(cfg, "truncated", 240)(sample)
    env = tail_envelope(renyi, 4)
    assert got == estimate_single(sample, renyi, 4, truncation_points_single(240, 1.0, env.a, 4, 2))
    assert seen and all(s == (1.0, None) for s in seen)
    assert _small(functional=renyi, density="tlaplace:3", k=4, sigma=2.0).smoothness() == (2.0, None)
    two = _small(functional=KL, density="tgauss:3", density2="tlaplace:3", l=3)
    assert two.smoothness() == (2.0, 1.0)


def test_sweep_rows_are_ordered_and_labelled():
    cfg = _small(variants=("untruncated", "truncated"))
    table = run_mse_sweep(cfg)
    assert [(r.m, r.variant) for r in table] == [
        (60, "untruncated"), (60, "truncated"),
        (120, "untruncated"), (120, "truncated"),
        (240, "untruncated"), (240, "truncated"),
    ]
    for r in table:
        assert math.isclose(r.mse, r.bias2 + r.var, rel_tol=1e-9, abs_tol=1e-15)


def test_single_variant_rows_are_unlabelled():
    table = run_mse_sweep(_small())
    assert all(r.variant is None for r in table)
    assert [r.m for r in table] == [60, 120, 240]


def test_sweep_is_reproducible():
    a = run_mse_sweep(_small(seed=11))
    b = run_mse_sweep(_small(seed=11))
    c = run_mse_sweep(_small(seed=12))
    assert a == b
    assert a != c


def test_shared_seed_mode_has_zero_variance():
    for r in run_mse_sweep(_small(seed_mode="shared")):
        assert r.var == 0.0
        assert r.mse == r.bias2


def test_workers_do_not_change_results():
    assert run_mse_sweep(_small(workers=2)) == run_mse_sweep(_small(workers=1))


def test_truth_override_and_store():
    table = run_mse_sweep(_small(), truth=0.0)
    assert table == run_mse_sweep(_small(), store=GoldenStore.packaged())


def test_two_density_sweep_on_identical_densities():
    cfg = ExperimentConfig(KL, "uniform:1", "uniform:1", d=1, k=3, l=3, sizes=(40, 80, 160), runs=3)
    table = run_mse_sweep(cfg)
    assert len(table) == 3
    assert all(r.mse >= 0 for r in table)


def test_fit_recovers_exact_power_law():
    sizes = (200, 400, 800, 1600, 3200)
    fit = fit_rate_exponent(_rows([3.0 * m ** -0.8 for m in sizes], sizes))
    assert abs(fit.slope - 0.8) < 1e-12
    assert abs(fit.intercept - math.log(3.0)) < 1e-10
    assert abs(fit.r_squared - 1.0) < 1e-12
    assert fit.n_points == 5


def test_fit_of_constant_mse_is_flat():
    fit = fit_rate_exponent(_rows([0.5, 0.5, 0.5]))
    assert abs(fit.slope) < 1e-12
    assert fit.r_squared == 1.0


def test_fit_on_noisy_power_law():
    rng = np.random.default_rng(0)
    sizes = tuple(int(s) for s in np.geomspace(100, 10000, 12))
    mses = [4.0 * m ** -0.5 * math.exp(0.05 * rng.standard_normal()) for m in sizes]
    fit = fit_rate_exponent(_rows(mses, sizes))
    assert abs(fit.slope - 0.5) < 0.05
    assert fit.r_squared > 0.9


def test_fit_errors():
    with pytest.raises(DegenerateFitError, match="at least 3"):
        fit_rate_exponent(_rows([1.0, 0.5]))
    with pytest.raises(DegenerateFitError, match="positive"):
        fit_rate_exponent(_rows([1.0, 0.0, 0.5]))
    mixed = _rows([1.0, 0.5, 0.25], variant="truncated") + _rows([1.0, 0.5, 0.25], variant="untruncated")
    with pytest.raises(ConfigurationError, match="one variant"):
        fit_rate_exponent(mixed)


def test_fit_by_variant_splits_the_table():
    rows = _rows([1.0, 0.5, 0.25], variant="truncated") + _rows([1.0, 0.25, 0.0625], variant="untruncated")
    fits = fit_by_variant(rows)
    assert set(fits) == {"truncated", "untruncated"}
    assert isinstance(fits["truncated"], RateFit)
    assert fits["untruncated"].slope == pytest.approx(2.0)
    assert fits["truncated"].slope == pytest.approx(1.0)
    assert fit_rate_exponent(rows[:3]).to_json()["n_points"] == 3


def test_ks_statistic_on_exact_quantiles():
    v = stats.gamma(3, scale=0.5).ppf((np.arange(2000) + 0.5) / 2000)
    assert ks_gamma_statistic(v, 3, 2.0) <= 0.5 / 2000 + 1e-12
    assert ks_gamma_statistic(v, 3, 0.5) > 0.3


def test_gamma_limit_volume_inputs():
    box = UniformBox(d=2)
    with pytest.raises(DomainError, match="outside"):
        gamma_limit_volumes(box, [1.5, 0.5], 1, 100, 5)
    with pytest.raises(InsufficientPointsError):
        gamma_limit_volumes(box, [0.5, 0.5], 3, 3, 5)
    with pytest.raises(ConfigurationError):
        gamma_limit_volumes(box, [0.5, 0.5], 1, 100, 0)
    v = gamma_limit_volumes(box, [0.5, 0.5], 2, 50, 10, seed=4)
    assert v.shape == (10,) and np.all(v > 0)
    assert np.array_equal(v, gamma_limit_volumes(box, [0.5, 0.5], 2, 50, 10, seed=4))


def test_minimal_sample_size_still_returns_a_statistic():
    stat = run_ks_gamma_test(UniformBox(d=2), [0.5, 0.5], 1, 2, 50)
    assert 0.0 <= stat <= 1.0


def test_gamma_limit_is_close_at_moderate_size():
    assert run_ks_gamma_test(UniformBox(d=2), [0.5, 0.5], 1, 1000, 400, seed=2) < 0.1


# %%
# ---- desk-scale convergence checks ----

@pytest.mark.slow
@pytest.mark.parametrize("k", [1, 3, 5])
def test_gamma_limit_at_box_center(k):
    box = UniformBox(d=2)
    assert run_ks_gamma_test(box, [0.5, 0.5], k, 4000, 2000) <= 0.05


@pytest.mark.slow
@pytest.mark.parametrize("d", [2, 3, 4])
def test_entropy_rate_beats_the_bound(d):
    cfg = ExperimentConfig(ENTROPY, "tgauss:3", d=d, k=5, runs=100)
    fit = fit_rate_exponent(run_mse_sweep(cfg))
    env = tail_envelope(ENTROPY, 5)
    bound = theoretical_exponent_single(2, env.a, 5, d).mse_exponent
    assert fit.slope >= float(bound) - 0.15
    assert fit.r_squared >= 0.9


@pytest.mark.slow
@pytest.mark.parametrize("k", [5, 15])
def test_generalized_beta_divergence_rate_beats_the_bound(k):
    spec = parse_functional("gen-beta:3")
    scale = repr(math.sqrt(2.0))
    cfg = ExperimentConfig(spec, "tgauss:3", f"tgauss:3,{scale}", d=3, k=k, l=k, runs=100)
    table = run_mse_sweep(cfg)
    fit = fit_rate_exponent(table)
    env = tail_envelope(spec, k, k)
    bound = theoretical_exponent_two(2, env.a, k, 2, env.a_tilde, k, 3).mse_exponent
    assert len({r.mse for r in table}) == len(table)
    assert fit.slope >= float(bound) - 0.15


def _within_three_stderr(config):
    for row in run_mse_sweep(config):
        # mean error against the standard error of a single estimate
        assert math.sqrt(row.bias2) <= 3 * math.sqrt(row.var) + 1e-12


@pytest.mark.slow
@pytest.mark.parametrize(
    "d",
    [
        1,
        2,
        # boundary bias of the untruncated estimate (about 0.09) exceeds three
        # standard errors (about 0.03) at m = 5000
        pytest.param(3, marks=pytest.mark.xfail(reason="box boundary bias in d=3", strict=False)),
    ],
)
def test_uniform_entropy_is_zero(d):
    _within_three_stderr(ExperimentConfig(ENTROPY, "uniform:1", d=d, k=5, sizes=(5000,), runs=20))


@pytest.mark.slow
@pytest.mark.parametrize("name", ["tgauss:3", "texp:4", "tlaplace:3", "tcauchy:3", "uniform:1"])
def test_self_divergence_is_zero(name):
    _within_three_stderr(ExperimentConfig(KL, name, name, d=2, k=5, l=5, sizes=(5000,), runs=20))

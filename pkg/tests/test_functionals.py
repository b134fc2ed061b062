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
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from laplace_knn.core.errors import DomainError, InvalidOrderError, UnknownNameError
from laplace_knn.core.functionals import (
    FunctionalKind,
    FunctionalSpec,
    f_value,
    jsd_coefficient_c,
    parse_functional,
    phi_single,
    phi_two,
    plugin_bias_correction,
    tail_envelope,
)
from laplace_knn.core.special import EULER_GAMMA, harmonic
from laplace_knn.core.validation import ORACLE_CATALOG


# %%
# ---- tests for core/functionals.py ----

def test_parse_round_trips_names():
    for name in ["entropy", "renyi-entropy:2", "gen-entropy:2,1", "kl", "gen-beta:3",
                 "reverse-kl", "jsd", "l2sq", "renyi-div:0.5", "hellinger", "chi2", "nn-class"]:
        assert parse_functional(name).name == name


def test_parse_rejects_unknown_and_malformed():
    with pytest.raises(UnknownNameError, match="Unknown functional 'tsallis'"):
        parse_functional("tsallis")
    with pytest.raises(UnknownNameError):
        parse_functional("renyi-entropy")
    with pytest.raises(UnknownNameError):
        parse_functional("kl:2")
    with pytest.raises(UnknownNameError):
        parse_functional("renyi-div:x")


def test_alpha_one_is_rejected():
    with pytest.raises(DomainError):
        parse_functional("renyi-entropy:1")
    with pytest.raises(DomainError):
        FunctionalSpec(FunctionalKind.KL, alpha=2.0)


def test_arity():
    assert parse_functional("gen-entropy:2,1").arity == 1
    assert parse_functional("nn-class").arity == 2


def test_f_value_examples():
    assert f_value(parse_functional("kl"), 2.0, 2.0) == 0.0
    assert f_value(parse_functional("nn-class"), 1.0, 1.0) == 0.5
    assert abs(f_value(parse_functional("entropy"), math.e) + 1.0) < 1e-15
    with pytest.raises(DomainError):
        f_value(parse_functional("kl"), 1.0)
    with pytest.raises(DomainError):
        f_value(parse_functional("entropy"), 0.0)


def test_phi_single_examples():
    assert abs(phi_single(parse_functional("entropy"), 2, 1.0) - (EULER_GAMMA - 1)) < 1e-12
    assert abs(phi_single(parse_functional("renyi-entropy:2"), 3, 2.0) - 1.0) < 1e-12
    assert phi_single(parse_functional("gen-entropy:2,1"), 3, 0.5) == 0.0


def test_phi_single_order_and_domain_errors():
    with pytest.raises(InvalidOrderError):
        phi_single(parse_functional("renyi-entropy:3"), 2, 1.0)
    with pytest.raises(DomainError):
        phi_single(parse_functional("entropy"), 2, 0.0)
    assert phi_single(parse_functional("entropy"), 2, 0.0, strict=False) == -math.inf
    with pytest.raises(DomainError):
        phi_single(parse_functional("entropy"), 2, -1.0, strict=False)


def test_phi_single_is_vectorized():
    u = np.array([0.5, 1.0, 2.0])
    out = phi_single(parse_functional("entropy"), 3, u)
    assert out.shape == (3,)
    assert np.allclose(out, np.log(u) - harmonic(2) + EULER_GAMMA)


def test_phi_two_examples():
    kl = parse_functional("kl")
    assert phi_two(kl, 4, 4, 1.5, 1.5) == 0.0
    assert abs(phi_two(kl, 2, 3, 1.0, 2.0) - (math.log(2) + 1 - 1.5)) < 1e-12
    assert phi_two(parse_functional("chi2"), 1, 3, 1.0, 2.0) == -0.75
    hell = phi_two(parse_functional("hellinger"), 2, 2, 1.0, 1.0)
    assert abs(hell - (2 - 16 / (3 * math.pi))) < 1e-12


def test_phi_two_side_conditions():
    with pytest.raises(InvalidOrderError):
        phi_two(parse_functional("reverse-kl"), 2, 1, 1.0, 1.0)
    with pytest.raises(InvalidOrderError):
        phi_two(parse_functional("chi2"), 2, 2, 1.0, 1.0)
    with pytest.raises(InvalidOrderError):
        phi_two(parse_functional("l2sq"), 1, 3, 1.0, 1.0)
    with pytest.raises(InvalidOrderError):
        phi_two(parse_functional("renyi-div:3"), 2, 4, 1.0, 1.0)
    with pytest.raises(DomainError):
        phi_two(parse_functional("entropy"), 2, 2, 1.0, 1.0)


def test_gen_beta_at_one_is_kl():
    gb = parse_functional("gen-beta:1")
    kl = parse_functional("kl")
    for k, l, u, v in [(2, 3, 1.0, 2.0), (5, 5, 0.3, 1.7), (1, 4, 2.5, 0.4)]:
        assert abs(phi_two(gb, k, l, u, v) - phi_two(kl, k, l, u, v)) < 1e-12


def test_nn_class_kernel_is_complementary():
    # swapping the roles of the two samples turns p/(p+q) into q/(p+q)
    nn = parse_functional("nn-class")
    for k, l, u, v in [(2, 3, 1.0, 2.0), (3, 3, 0.7, 0.7), (4, 2, 5.0, 0.5)]:
        total = phi_two(nn, k, l, u, v) + phi_two(nn, l, k, v, u)
        assert abs(total - 1.0) < 1e-12


def _c_by_fractions(k, l):
    n = k + l - 2
    return sum(
        Fraction(comb(n, j) * (-1) ** j, l - 1 - j) for j in range(n + 1) if j != l - 1
    )


def test_jsd_coefficient_examples():
    assert jsd_coefficient_c(1, 2) == 1.0
    assert jsd_coefficient_c(2, 2) == 0.0
    assert abs(jsd_coefficient_c(1, 3) - float(_c_by_fractions(1, 3))) < 1e-12
    with pytest.raises(InvalidOrderError):
        jsd_coefficient_c(2, 1)


@settings(max_examples=30, deadline=None)
@given(k=st.integers(min_value=1, max_value=8), l=st.integers(min_value=2, max_value=8))
def test_jsd_coefficient_matches_exact_sum(k, l):
    assert abs(jsd_coefficient_c(k, l) - float(_c_by_fractions(k, l))) < 1e-9


def test_tail_envelopes():
    eps = 0.01
    assert tail_envelope(parse_functional("entropy"), 5).as_tuple() == (-eps, eps)
    assert tail_envelope(parse_functional("renyi-div:3"), 4, 4).as_tuple() == (-2.0, -2.0, 2.0, 2.0)
    assert tail_envelope(parse_functional("hellinger"), 2, 2).as_tuple() == (0.5, 0.5, -0.5, -0.5)
    assert tail_envelope(parse_functional("jsd"), 2, 2).derived


def test_tail_envelope_warns_on_violations(caplog):
    with caplog.at_level(logging.WARNING, logger="laplace_knn.core.functionals"):
        tail_envelope(parse_functional("renyi-entropy:3"), 2)
    assert any("must exceed" in r.getMessage() for r in caplog.records)


def test_plugin_bias_correction():
    spec = parse_functional("entropy")
    for k in (1, 3, 7):
        assert abs(plugin_bias_correction(spec, k) - (phi_single(spec, k, float(k)) - 0.0)) < 1e-12
    with pytest.raises(DomainError):
        plugin_bias_correction(parse_functional("kl"), 2)


@settings(max_examples=50, deadline=None)
@given(
    k=st.integers(min_value=1, max_value=10),
    u=st.floats(min_value=1e-3, max_value=1e3),
    w=st.floats(min_value=1e-3, max_value=1e3),
)
def test_entropy_phi_is_increasing(k, u, w):
    spec = parse_functional("entropy")
    lo, hi = min(u, w), max(u, w)
    assert phi_single(spec, k, lo) <= phi_single(spec, k, hi)


@pytest.mark.parametrize("name", ORACLE_CATALOG)
def test_phi_stays_inside_its_tail_envelope(name):
    spec = parse_functional(name)
    k = l = 5
    rng = np.random.default_rng(17)
    u = np.exp(rng.uniform(math.log(1e-3), math.log(1e3), 10_000))
    v = np.exp(rng.uniform(math.log(1e-3), math.log(1e3), 10_000))
    if spec.arity == 1:
        env = tail_envelope(spec, k)
        phi = phi_single(spec, k, u)
        eta = env.bound(u)
    else:
        env = tail_envelope(spec, k, l)
        phi = phi_two(spec, k, l, u, v)
        eta = env.bound(u, v)
    assert np.all(np.isfinite(phi))
    # additive constants (the -1 of chi2, the 2 of hellinger) ride on the 1
    assert np.max(np.abs(phi) / (1.0 + eta)) <= 200.0


@settings(max_examples=50, deadline=None)
@given(
    k=st.integers(min_value=1, max_value=8),
    l=st.integers(min_value=1, max_value=8),
    u=st.floats(min_value=1e-4, max_value=1e4),
    v=st.floats(min_value=1e-4, max_value=1e4),
)
def test_kl_phi_is_antisymmetric_under_swapping_samples(k, l, u, v):
    spec = parse_functional("kl")
    assert abs(phi_two(spec, k, l, u, v) + phi_two(spec, l, k, v, u)) < 1e-9

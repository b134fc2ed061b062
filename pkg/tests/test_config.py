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
import pytest

from laplace_knn.core.config import DEFAULT_SETTINGS, EstimatorSettings
from laplace_knn.core.errors import ConfigurationError


# %%
# ---- tests for core/config.py ----

def test_default_settings():
    s = EstimatorSettings()
    assert s == DEFAULT_SETTINGS
    assert (s.epsilon, s.polylog_power, s.leaf_size) == (0.01, 1.1, 32)


def test_overrides_are_validated():
    assert DEFAULT_SETTINGS.with_overrides(epsilon=0.05).epsilon == 0.05
    assert DEFAULT_SETTINGS.epsilon == 0.01
    for bad in ({"epsilon": 0.0}, {"polylog_power": 1.0}, {"leaf_size": 0},
                {"alpha_constant": -1.0}, {"mc_draws": 1}):
        with pytest.raises(ConfigurationError):
            DEFAULT_SETTINGS.with_overrides(**bad)


def test_settings_are_frozen():
    with pytest.raises(AttributeError):
        DEFAULT_SETTINGS.epsilon = 0.5


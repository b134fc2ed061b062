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
# core/config.py

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
from dataclasses import dataclass, fields, replace
from typing import Any, Mapping

from laplace_knn.core.errors import ConfigurationError


# %%
@dataclass(frozen=True)
class EstimatorSettings:
    epsilon: float = 0.01          # exponent slack in log-type tail envelopes
    alpha_constant: float = 1.0    # C_alpha in the lower truncation schedule
    beta_constant: float = 1.0     # C_beta in the upper truncation schedule
    polylog_power: float = 1.1     # beta_m = C_beta (log m)^polylog_power
    leaf_size: int = 32            # brute force below this many points
    quad_abs_tol: float = 1e-9
    quad_limit: int = 200
    mc_draws: int = 10_000_000     # Monte Carlo ground truth for d >= 3
    mc_chunk: int = 1_000_000

    def validate(self) -> None:
        if not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")
        if not (self.alpha_constant > 0 and self.beta_constant > 0):
            raise ConfigurationError("schedule constants must be positive")
        if not self.polylog_power > 1:
            raise ConfigurationError(
                f"polylog_power must exceed 1, got {self.polylog_power}"
            )
        if self.leaf_size < 1:
            raise ConfigurationError(f"leaf_size must be >= 1, got {self.leaf_size}")
        if self.mc_draws < 2 or self.mc_chunk < 1:
            raise ConfigurationError("mc_draws must be >= 2 and mc_chunk >= 1")

    def __post_init__(self) -> None:
        self.validate()

    def with_overrides(self, **changes: Any) -> "EstimatorSettings":
        return replace(self, **changes)

    @classmethod
    def from_mapping(cls, obj: Mapping[str, Any]) -> "EstimatorSettings":
        """
        Build settings from a JSON-like mapping; unknown keys are rejected.

        Example:
            >>> EstimatorSettings.from_mapping({"epsilon": 0.05}).epsilon
            0.05
            >>> try:
            ...     EstimatorSettings.from_mapping({"eps": 0.05})
            ... except ConfigurationError as e:
            ...     print(e)
            Unknown settings key(s): ['eps']
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise ConfigurationError(f"Unknown settings key(s): {unknown}")
        return cls(**dict(obj))


DEFAULT_SETTINGS = EstimatorSettings()

# %%

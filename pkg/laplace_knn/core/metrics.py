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
# core/metrics.py

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np

from laplace_knn.core.errors import InsufficientPointsError


# %%
@dataclass(frozen=True)
class SizeSummary:
    """One row of a sweep table."""
    m: int
    mse: float
    bias2: float
    var: float
    stderr: float                  # jackknife standard error of mse
    variant: Optional[str] = None

    def to_json(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "m": self.m,
            "mse": self.mse,
            "bias2": self.bias2,
            "var": self.var,
            "stderr": self.stderr,
        }
        if self.variant is not None:
            out["variant"] = self.variant
        return out


def jackknife_stderr(values: Sequence[float], statistic) -> float:
    """
    Leave-one-out jackknife standard error of ``statistic``.

    Example:
        >>> se = jackknife_stderr([1.0, 2.0, 3.0, 4.0], np.mean)
        >>> abs(se - np.std([1, 2, 3, 4], ddof=1) / 2) < 1e-12
        True
    """
    x = np.asarray(values, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise InsufficientPointsError(f"jackknife needs at least 2 values, got {n}")
    keep = ~np.eye(n, dtype=bool)
    loo = np.array([statistic(x[keep[i]]) for i in range(n)])
    return math.sqrt((n - 1) / n * float(np.sum((loo - loo.mean()) ** 2)))


def summarize_runs(
    m: int,
    estimates: Sequence[float],
    truth: float,
    *,
    variant: Optional[str] = None,
) -> SizeSummary:
    """
    MSE against ``truth`` with its split mse = bias2 + var (population variance
    across runs) and a jackknife standard error.

    Example:
        >>> s = summarize_runs(100, [1.0, 1.0], 0.0)
        >>> (s.mse, s.bias2, s.var, s.stderr)
        (1.0, 1.0, 0.0, 0.0)
    """
    est = np.asarray(estimates, dtype=float)
    if est.shape[0] < 2:
        raise InsufficientPointsError(f"need at least 2 runs per size, got {est.shape[0]}")
    err = est - truth
    sq = err * err
    n = sq.shape[0]
    mse = math.fsum(sq.tolist()) / n
    mean_err = math.fsum(err.tolist()) / n
    bias2 = mean_err * mean_err
    var = math.fsum(((err - mean_err) ** 2).tolist()) / n
    return SizeSummary(
        m=int(m),
        mse=mse,
        bias2=bias2,
        var=var,
        stderr=jackknife_stderr(sq, lambda s: math.fsum(s.tolist()) / s.shape[0]),
        variant=variant,
    )


def summarize_sweep(rows: Sequence[SizeSummary]) -> Mapping[str, Any]:
    """
    Compact summary: sizes, variants and the MSE range per variant.
    """
    by_variant: Dict[str, List[SizeSummary]] = {}
    for r in rows:
        by_variant.setdefault(r.variant or "default", []).append(r)
    return {
        "num_rows": len(rows),
        "sizes": sorted({r.m for r in rows}),
        "variants": {
            v: {
                "mse_first": rs[0].mse,
                "mse_last": rs[-1].mse,
                "min_mse": min(r.mse for r in rs),
            }
            for v, rs in by_variant.items()
        },
    }

# %%

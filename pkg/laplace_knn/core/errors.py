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
# core/errors.py

# %%
from typing import Optional


# %%
class LaplaceKnnError(ValueError):
    """Base class for every error raised by laplace_knn."""


class InvalidDimensionError(LaplaceKnnError):
    pass


class DimensionMismatchError(LaplaceKnnError):
    pass


class InsufficientPointsError(LaplaceKnnError):
    pass


class InvalidOrderError(LaplaceKnnError):
    # k (or l) outside the side conditions of an estimator function
    pass


class DomainError(LaplaceKnnError):
    pass


class ScheduleUndefinedError(LaplaceKnnError):
    pass


class ConfigurationError(LaplaceKnnError):
    pass


class UnknownNameError(LaplaceKnnError):
    # unparseable functional or density string
    pass


class OracleUndefinedError(LaplaceKnnError):
    pass


class DegenerateFitError(LaplaceKnnError):
    pass


class QuadratureError(LaplaceKnnError):
    def __init__(self, message: str, *, abserr: Optional[float] = None):
        if abserr is not None:
            message = f"{message} (achieved error estimate {abserr:.3g})"
        super().__init__(message)
        self.abserr = abserr


class ResultsIOError(LaplaceKnnError, OSError):
    def __init__(self, path: str, cause: BaseException):
        super().__init__(f"I/O failure on {path!s}: {cause}")
        self.path = path
        self.cause = cause

# %%

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
# core/rates.py

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Tuple, Union

from laplace_knn.core.errors import DomainError, ScheduleUndefinedError

# Ints and Fractions stay exact; anything else is computed in floats.
Number = Union[int, float, Fraction]

ABOVE = "above"        # a >= -1
BETWEEN = "between"    # -sigma/d - 1 <= a < -1
BELOW = "below"        # a < -sigma/d - 1


# %%
@dataclass(frozen=True)
class RateExponents:
    """
    Theoretical exponents: bias = O~(m^-lam), MSE = O~(m^-mse_exponent).
    """
    lam: Number
    mse_exponent: Number
    variance_exponent: Number           # variance bound O~(m^-variance_exponent)
    cell: str                           # region of a (and a_tilde)
    guaranteed: bool = True             # positivity side condition holds
    suboptimal: bool = False
    notes: Tuple[str, ...] = field(default_factory=tuple)

    def to_json(self) -> Dict[str, Any]:
        return {
            "lambda": float(self.lam),
            "mse_exponent": float(self.mse_exponent),
            "variance_exponent": float(self.variance_exponent),
            "cell": self.cell,
            "guaranteed": self.guaranteed,
            "suboptimal": self.suboptimal,
            "notes": list(self.notes),
        }


def _exact(x: Number) -> Number:
    if isinstance(x, bool):
        raise DomainError("booleans are not exponents")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return float(x)


def _check_common(sigma: Number, k: int, d: int, name: str = "sigma") -> None:
    if not 0 < sigma <= 2:
        raise DomainError(f"{name} must lie in (0, 2], got {sigma}")
    if int(k) != k or k < 1:
        raise DomainError(f"order must be a positive integer, got {k}")
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d}")


def tail_region(sigma: Number, a: Number, d: int) -> str:
    if a >= -1:
        return ABOVE
    if a >= -sigma / d - 1:
        return BETWEEN
    return BELOW


def schedule_exponent(sigma: Number, a: Number, k: int, d: int) -> Number:
    """
    e such that the lower truncation point is alpha_m ~ m^e (0 when untruncated below).

    Example:
        >>> schedule_exponent(2, -2, 4, 3)
        Fraction(-1, 9)
    """
    sigma, a, d = _exact(sigma), _exact(a), _exact(d)
    region = tail_region(sigma, a, d)
    if region == ABOVE:
        return Fraction(0)
    if k == 1:
        raise ScheduleUndefinedError(f"no lower truncation rule for k=1 with a={a} < -1")
    if region == BETWEEN:
        return -1 / (d * (k - 1))
    return -min(sigma, 1) / (d * (k - 1))


def _variance_loss(sigma: Number, a: Number, k: int, d: int) -> Tuple[Number, Tuple[str, ...]]:
    # variance picks up alpha_m^{(2a + k) ^ 0}; returns the exponent lost from 1/m
    power = min(2 * a + k, 0)
    if power == 0:
        return Fraction(0), ()
    e = schedule_exponent(sigma, a, k, d)
    if e == 0:
        return Fraction(1), (f"2a+k={2 * a + k} < 0 without lower truncation; variance bound unavailable",)
    return e * power, ()


def _single_lambda(sigma: Number, a: Number, k: int, d: int) -> Number:
    region = tail_region(sigma, a, d)
    if region == ABOVE:
        return min(sigma, 1) / d
    if k == 1:
        raise ScheduleUndefinedError(f"rate undefined for k=1 with a={a} < -1")
    if region == BETWEEN:
        return min(sigma, (k + a) / (k - 1), 1) / d
    return min(sigma, 1) * (k + a) / (d * (k - 1))


# %%
def theoretical_exponent_single(sigma: Number, a: Number, k: int, d: int) -> RateExponents:
    """
    Bias exponent lambda(sigma, a, k) and the MSE exponent min(2 lam, variance).

    Example:
        >>> r = theoretical_exponent_single(2, -2, 4, 3)
        >>> (r.lam, r.mse_exponent)
        (Fraction(2, 9), Fraction(4, 9))
    """
    _check_common(sigma, k, d)
    sigma, a, d = _exact(sigma), _exact(a), _exact(d)
    lam = _single_lambda(sigma, a, k, d)
    loss, notes = _variance_loss(sigma, a, k, d)
    var_exp = 1 - loss
    return RateExponents(
        lam=lam,
        mse_exponent=min(2 * lam, var_exp),
        variance_exponent=var_exp,
        cell=tail_region(sigma, a, d),
        guaranteed=lam > 0 and var_exp > 0,
        notes=notes,
    )


def theoretical_exponent_two(
    sigma: Number,
    a: Number,
    k: int,
    tau: Number,
    a_tilde: Number,
    l: int,
    d: int,
) -> RateExponents:
    """
    Bias and MSE exponents for a two-density estimator with m ~ n.

    Example:
        >>> r = theoretical_exponent_two(2, -2, 4, 2, 2, 4, 3)
        >>> r.mse_exponent
        Fraction(4, 9)
    """
    _check_common(sigma, k, d)
    _check_common(tau, l, d, name="tau")
    sigma, a, tau, a_tilde, d = (_exact(x) for x in (sigma, a, tau, a_tilde, d))
    r1 = tail_region(sigma, a, d)
    r2 = tail_region(tau, a_tilde, d)

    guaranteed, suboptimal = True, False
    if r1 == ABOVE or r2 == ABOVE:
        lam = min(_single_lambda(sigma, a, k, d), _single_lambda(tau, a_tilde, l, d))
    else:
        if k == 1 or l == 1:
            raise ScheduleUndefinedError(
                f"rate undefined for k={k}, l={l} with a={a}, a_tilde={a_tilde} < -1"
            )
        guaranteed = (k + a) * (l + a_tilde) > (a + 1) * (a_tilde + 1)
        s1, t1 = min(sigma, 1), min(tau, 1)
        if r1 == BELOW and r2 == BELOW:
            lam = (min(sigma, tau, 1) + (a + 1) / (k - 1) * s1 + (a_tilde + 1) / (l - 1) * t1) / d
            suboptimal = True
        elif r1 == BETWEEN and r2 == BETWEEN:
            lam = min(sigma, tau, 1 + (a + 1) / (k - 1) + (a_tilde + 1) / (l - 1)) / d
        else:
            # one side below, the other between; the table is symmetric in the swap
            if r1 == BELOW:
                sb, ab, kb, tm, am, lm = sigma, a, k, tau, a_tilde, l
            else:
                sb, ab, kb, tm, am, lm = tau, a_tilde, l, sigma, a, k
            sb1 = min(sb, 1)
            lam = min(
                sb1 * (kb + ab) / (kb - 1),
                tm,
                (lm + am) / (lm - 1),
                1 + sb1 * (ab + 1) / (kb - 1) + (am + 1) / (lm - 1),
            ) / d
            suboptimal = True

    loss1, notes1 = _variance_loss(sigma, a, k, d)
    loss2, notes2 = _variance_loss(tau, a_tilde, l, d)
    var_exp = 1 - loss1 - loss2
    notes = notes1 + notes2
    if not guaranteed:
        notes += ("positivity condition (k+a)(l+a~) > (a+1)(a~+1) fails",)
    if suboptimal:
        notes += ("suboptimal bound",)
    return RateExponents(
        lam=lam,
        mse_exponent=min(2 * lam, var_exp),
        variance_exponent=var_exp,
        cell=f"{r1}/{r2}",
        guaranteed=guaranteed and lam > 0 and var_exp > 0,
        suboptimal=suboptimal,
        notes=notes,
    )

# %%

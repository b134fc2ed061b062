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
# core/validation.py

# %%
# Dev setup
# %load_ext autoreload
# %autoreload 2

# %%
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from laplace_knn.core.config import DEFAULT_SETTINGS, EstimatorSettings
from laplace_knn.core.distributions import UniformBox
from laplace_knn.core.errors import InvalidOrderError, LaplaceKnnError, UnknownNameError
from laplace_knn.core.experiment import run_ks_gamma_test
from laplace_knn.core.functionals import FunctionalSpec, f_value, parse_functional
from laplace_knn.core.knn import KnnIndex, PointSet
from laplace_knn.core.oracle import gamma_oracle_expectation
from laplace_knn.core.special import lower_incomplete_gamma, log_gamma, upper_incomplete_gamma

logger = logging.getLogger(__name__)

# every catalog kind, with representative parameters
ORACLE_CATALOG: Tuple[str, ...] = (
    "entropy",
    "renyi-entropy:2",
    "renyi-entropy:0.5",
    "gen-entropy:2,1",
    "kl",
    "gen-beta:2",
    "reverse-kl",
    "jsd",
    "l2sq",
    "renyi-div:3",
    "renyi-div:0.5",
    "hellinger",
    "chi2",
    "nn-class",
)
ORACLE_RATES = (0.25, 1.0, 4.0)


# %%
@dataclass(frozen=True)
class SuiteReport:
    name: str
    checked: int
    failures: Tuple[str, ...] = ()
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        head = f"{self.name}: {self.checked} checks, {len(self.failures)} failure(s)"
        return "\n".join([head] + [f"  FAIL {f}" for f in self.failures] + [f"  note {n}" for n in self.notes])


def _oracle_cases(spec: FunctionalSpec, orders: Sequence[int]):
    ls = orders if spec.arity == 2 else (None,)
    for k, l in itertools.product(orders, ls):
        try:
            spec.check_orders(k, l)
        except InvalidOrderError:
            continue
        rates_q = ORACLE_RATES if spec.arity == 2 else (None,)
        for p, q in itertools.product(ORACLE_RATES, rates_q):
            yield k, l, p, q


def check_gamma_oracle(
    functionals: Sequence[str] = ORACLE_CATALOG,
    orders: Sequence[int] = (1, 2, 3, 4, 5, 6),
    *,
    tolerance: float = 1e-6,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> SuiteReport:
    """
    |E[phi(U[, V])] - f(p[, q])| <= tolerance for U ~ Gamma(k, p),
    V ~ Gamma(l, q), over every admissible (k, l) and rate pair.

    Example:
        >>> check_gamma_oracle(["entropy"], orders=(1, 2)).ok
        True
    """
    failures: List[str] = []
    checked = 0
    for name in functionals:
        spec = parse_functional(name)
        for k, l, p, q in _oracle_cases(spec, orders):
            checked += 1
            tag = f"{spec.name} k={k} l={l} p={p} q={q}"
            try:
                value, _ = gamma_oracle_expectation(spec, k, l, p, q, settings=settings)
            except LaplaceKnnError as e:
                failures.append(f"{tag}: {e}")
                continue
            target = f_value(spec, p, q)
            if not abs(value - target) <= tolerance:
                failures.append(
                    f"{tag}: E[phi]={value:.12g}, f={target:.12g}, residual {value - target:.3g}"
                )
    return SuiteReport("gamma-oracle", checked, tuple(failures))


def check_incomplete_gamma_bounds(
    s_grid: Sequence[float] = tuple(np.linspace(0.05, 10.0, 60)),
    x_grid: Sequence[float] = tuple(np.linspace(0.05, 20.0, 80)),
) -> SuiteReport:
    """
    Gamma(s, x) <= Gamma(s) x^{s-1} e^{1-x} for s >= 1, x >= 1, and
    gamma(s, x) <= x^s / s for s, x > 0.

    Example:
        >>> check_incomplete_gamma_bounds((1.0, 2.5), (0.5, 1.0, 7.0)).failures
        ()
    """
    failures: List[str] = []
    checked = 0
    slack = 1.0 + 1e-10
    for s, x in itertools.product(s_grid, x_grid):
        s, x = float(s), float(x)
        checked += 1
        lower = lower_incomplete_gamma(s, x)
        if not lower <= slack * math.exp(s * math.log(x) - math.log(s)):
            failures.append(f"lower bound fails at s={s:g}, x={x:g}")
        if s >= 1 and x >= 1:
            checked += 1
            upper = upper_incomplete_gamma(s, x)
            bound = math.exp(log_gamma(s) + (s - 1) * math.log(x) + 1 - x)
            if not upper <= slack * bound:
                failures.append(f"upper bound fails at s={s:g}, x={x:g}")
    return SuiteReport("inc-gamma", checked, tuple(failures))


def check_knn_equivalence(
    instances: int = 200,
    *,
    max_m: int = 500,
    max_d: int = 6,
    max_k: int = 10,
    seed: int = 0,
) -> SuiteReport:
    """
    Tree and brute-force k-th neighbor distances agree bit for bit, for self
    queries (one point left out) and external queries.

    Example:
        >>> check_knn_equivalence(5, max_m=60).ok
        True
    """
    rng = np.random.default_rng(seed)
    failures: List[str] = []
    for i in range(instances):
        d = int(rng.integers(1, max_d + 1))
        k = int(rng.integers(1, max_k + 1))
        m = int(rng.integers(k + 2, max_m + 1))
        pts = PointSet(rng.standard_normal((m, d)))
        index = KnnIndex(pts)
        ex = np.arange(m)
        self_tree = index.query(pts.points, k, exclude=ex, method="tree")
        self_brute = index.query(pts.points, k, exclude=ex, method="brute")
        queries = rng.standard_normal((25, d))
        ext_tree = index.query(queries, k, method="tree")
        ext_brute = index.query(queries, k, method="brute")
        if not (np.array_equal(self_tree, self_brute) and np.array_equal(ext_tree, ext_brute)):
            failures.append(f"instance {i}: m={m} d={d} k={k}")
    return SuiteReport("knn-equiv", instances, tuple(failures))


def check_gamma_limit(
    ks: Sequence[int] = (1, 3, 5),
    *,
    m: int = 4000,
    small_m: int = 250,
    reps: int = 2000,
    threshold: float = 0.05,
    seed: int = 0,
    settings: EstimatorSettings = DEFAULT_SETTINGS,
) -> SuiteReport:
    """
    Normalized k-NN volumes at the center of the unit square against Gamma(k, 1).
    The comparison with ``small_m`` is reported as a note.
    """
    box = UniformBox(d=2)
    center = [0.5, 0.5]
    failures: List[str] = []
    notes: List[str] = []
    for k in ks:
        big = run_ks_gamma_test(box, center, k, m, reps, seed, settings=settings)
        small = run_ks_gamma_test(box, center, k, small_m, reps, seed, settings=settings)
        if not big <= threshold:
            failures.append(f"k={k}: KS={big:.4f} at m={m} exceeds {threshold}")
        notes.append(f"k={k}: KS={small:.4f} at m={small_m}, {big:.4f} at m={m}")
    return SuiteReport("ks", len(ks), tuple(failures), tuple(notes))


SUITES: Dict[str, Callable[[], SuiteReport]] = {
    "gamma-oracle": check_gamma_oracle,
    "ks": check_gamma_limit,
    "inc-gamma": check_incomplete_gamma_bounds,
    "knn-equiv": check_knn_equivalence,
}


def run_suite(name: str) -> SuiteReport:
    if name not in SUITES:
        raise UnknownNameError(f"Unknown validation suite {name!r}; choose from {sorted(SUITES)}")
    report = SUITES[name]()
    log = logger.info if report.ok else logger.warning
    log("%s", report.summary().splitlines()[0])
    return report

# %%

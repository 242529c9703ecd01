"""Reusable Monte Carlo statistics.

Estimates with confidence intervals, a two-sample Kolmogorov-Smirnov
test, a rank-correlation independence test with permutation p-values,
and ordinary least squares for exponent recovery.  All randomness runs
through seeded substreams, so every result is reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.stats

from .errors import (
    DegenerateDesignError,
    LengthMismatchError,
    TooFewSamplesError,
    ValidationError,
)
from .rng import substream

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True)
class EstimateReport:
    """Monte Carlo point estimate with normal-theory 95% interval."""

    mean: float
    std_error: float
    ci_low: float
    ci_high: float
    replicas: int
    seed: int
    trimmed_mean: float | None = None  # tail-sensitivity diagnostic, when requested


@dataclass(frozen=True)
class TestReport:
    """Outcome of one hypothesis test at level ``level``."""

    statistic: float
    p_value: float
    level: float
    reject: bool
    n_a: int
    n_b: int


def report_from_samples(samples: np.ndarray, seed: int,
                        trimmed_mean: float | None = None) -> EstimateReport:
    """Estimate report from an array of per-replica values."""
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    if n < 2:
        raise ValidationError("at least 2 replicas required")
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / np.sqrt(n))
    return EstimateReport(mean=mean, std_error=se, ci_low=mean - _Z95 * se,
                          ci_high=mean + _Z95 * se, replicas=n, seed=seed,
                          trimmed_mean=trimmed_mean)


def mc_estimate(sampler: Callable[[np.random.Generator], float],
                replicas: int, seed: int) -> EstimateReport:
    """Mean and standard error of ``sampler`` over independent substreams.

    ``sampler`` is called once per replica with that replica's generator.
    The reduction is a fixed-order pairwise sum, so the report does not
    depend on any parallel schedule.
    """
    if replicas < 2:
        raise ValidationError("at least 2 replicas required")
    values = np.empty(replicas)
    for r in range(replicas):
        values[r] = sampler(substream(seed, r))
    return report_from_samples(values, seed=seed)


def ks_two_sample(a, b, level: float = 0.01) -> TestReport:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 50 or len(b) < 50:
        raise TooFewSamplesError(f"need >= 50 samples per side, got {len(a)}, {len(b)}")
    res = scipy.stats.ks_2samp(a, b, method="asymp")
    p = float(min(max(res.pvalue, 0.0), 1.0))
    return TestReport(statistic=float(res.statistic), p_value=p, level=level,
                      reject=p < level, n_a=len(a), n_b=len(b))


def independence_test(x, y, permutations: int, seed: int, level: float = 0.01) -> TestReport:
    """Spearman rank correlation with a permutation p-value.

    Rank correlation keeps the test meaningful for the heavy-tailed
    masses this library produces.  Pairs are canonicalized by sorting on
    (x, y) before permuting, so relabeling the replicas cannot change the
    p-value for a fixed permutation seed.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise LengthMismatchError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 100:
        raise TooFewSamplesError(f"need >= 100 pairs, got {n}")
    order = np.lexsort((y, x))
    rx = scipy.stats.rankdata(x[order])
    ry = scipy.stats.rankdata(y[order])
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = np.sqrt(np.sum(rx * rx) * np.sum(ry * ry))
    if denom == 0.0:
        raise DegenerateDesignError("constant sample; rank correlation undefined")
    observed = float(np.dot(rx, ry) / denom)
    rng = substream(seed)
    hits = 0
    for _ in range(permutations):
        perm = rng.permutation(n)
        stat = float(np.dot(rx, ry[perm]) / denom)
        if abs(stat) >= abs(observed) - 1e-15:
            hits += 1
    p = (hits + 1) / (permutations + 1)
    return TestReport(statistic=observed, p_value=p, level=level,
                      reject=p < level, n_a=n, n_b=n)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    slope_se: float


def slope_fit(log_t, log_moment) -> SlopeFit:
    """Ordinary least squares line through (log_t, log_moment)."""
    x = np.asarray(log_t, dtype=float)
    y = np.asarray(log_moment, dtype=float)
    if len(x) != len(y):
        raise LengthMismatchError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise ValidationError("need at least 3 points for a slope fit")
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx == 0.0:
        raise DegenerateDesignError("all abscissae equal")
    slope = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    dof = len(x) - 2
    sigma2 = float(np.sum(resid**2) / dof)
    return SlopeFit(slope=slope, intercept=intercept, slope_se=float(np.sqrt(sigma2 / sxx)))

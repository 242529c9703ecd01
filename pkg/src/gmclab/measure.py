"""Multiplicative chaos measures built from field realizations.

A measure is represented by its cumulative mass at the grid points and
interpolated piecewise-linearly in between.  The density on the cell to
the right of grid point ``x_i`` is the normalized exponential
``exp(gamma*U(x_i) - (gamma^2/2)*K(0))`` of the field value there, so
every cell increment has expectation equal to its width.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomainError, ValidationError
from .fields import FieldSample, FieldSpec, Grid, FieldSampler, eval_kernel, grid_for, kernel_for
from .stats import EstimateReport, report_from_samples


def zeta(q: float, gamma: float) -> float:
    """Moment scaling exponent q - (gamma^2/2) * (q^2 - q)."""
    return q - 0.5 * gamma * gamma * (q * q - q)


def zeta_sup(gamma: float) -> float:
    """Supremum of ``zeta`` over q in (0, 2/gamma^2): (1 + gamma^2/2)^2 / (2 gamma^2)."""
    if gamma == 0.0:
        return math.inf
    return (1.0 + 0.5 * gamma * gamma) ** 2 / (2.0 * gamma * gamma)


@dataclass(frozen=True)
class ZetaExponent:
    """Multifractal moment exponent of the measure at coupling ``gamma``."""

    gamma: float

    def __call__(self, q):
        return zeta(np.asarray(q, dtype=float), self.gamma) if np.ndim(q) else zeta(q, self.gamma)

    @property
    def sup(self) -> float:
        return zeta_sup(self.gamma)


@dataclass(frozen=True)
class GmcMeasure:
    """Cumulative mass of the chaos measure at the grid points.

    ``cumulative[0] == 0`` and the sequence is strictly increasing; mass
    between grid points is linear interpolation.
    """

    grid: Grid
    cumulative: np.ndarray
    spec: FieldSpec

    def __post_init__(self):
        if len(self.cumulative) != self.grid.count:
            raise ValidationError("cumulative must have one entry per grid point")
        self.cumulative.setflags(write=False)

    @property
    def total_mass(self) -> float:
        return float(self.cumulative[-1])

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.cumulative)

    def mass(self, a: float, b: float) -> float:
        return mass(self, a, b)

    def cumulative_at(self, t) -> np.ndarray | float:
        """Mass of [origin, t], linear between knots."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self.grid.origin - 1e-12) or np.any(t_arr > self.grid.end + 1e-12):
            raise OutOfDomainError(f"time {t} outside grid domain [{self.grid.origin}, {self.grid.end}]")
        out = np.interp(t_arr, self.grid.points(), self.cumulative)
        return float(out) if t_arr.ndim == 0 else out


def _increments_from_values(values: np.ndarray, grid: Grid, spec: FieldSpec) -> np.ndarray:
    k0 = eval_kernel(kernel_for(spec), 0.0)
    exponent = spec.gamma * values[:-1, ...] - spec.beta * k0
    return grid.spacing * np.exp(exponent)


def build_measure(sample: FieldSample) -> GmcMeasure:
    """Measure of one realization; density from the left grid point of each cell."""
    inc = _increments_from_values(np.asarray(sample.values), sample.grid, sample.spec)
    if not np.all(inc > 0.0):
        raise ValidationError("measure density underflowed to zero; grid or gamma out of range")
    cumulative = np.concatenate(([0.0], np.cumsum(inc)))
    return GmcMeasure(grid=sample.grid, cumulative=cumulative, spec=sample.spec)


def build_measures_batch(values: np.ndarray, grid: Grid, spec: FieldSpec) -> list[GmcMeasure]:
    """Measures for a (count x replicas) matrix of field draws."""
    inc = _increments_from_values(values, grid, spec)
    cum = np.zeros((grid.count, values.shape[1]))
    np.cumsum(inc, axis=0, out=cum[1:, :])
    return [GmcMeasure(grid=grid, cumulative=np.ascontiguousarray(cum[:, j]), spec=spec)
            for j in range(values.shape[1])]


def mass(measure: GmcMeasure, a: float, b: float) -> float:
    """Mass of the interval [a, b]; additive and nonnegative."""
    g = measure.grid
    if not (g.origin - 1e-12 <= a <= b <= g.end + 1e-12):
        raise OutOfDomainError(
            f"interval [{a}, {b}] outside grid domain [{g.origin}, {g.end}]"
        )
    pts = measure.grid.points()
    ca, cb = np.interp([a, b], pts, measure.cumulative)
    return float(cb - ca)


@dataclass(frozen=True)
class TiltedMeasure:
    """Measure reweighted by ``exp(gamma^2 * K(|x - anchor|))``.

    The tilt factor is >= 1 within covariance range of the anchor and
    exactly 1 beyond it, so the tilted measure dominates the base measure
    on every interval.
    """

    base: GmcMeasure
    anchor: float
    tilted: GmcMeasure

    def mass(self, a: float, b: float) -> float:
        return mass(self.tilted, a, b)


def build_tilted(measure: GmcMeasure, a: float) -> TiltedMeasure:
    g = measure.grid
    if not g.origin - 1e-12 <= a <= g.end + 1e-12:
        raise OutOfDomainError(f"anchor {a} outside grid domain")
    kern = kernel_for(measure.spec)
    left_points = g.points()[:-1]
    factors = np.exp(measure.spec.gamma**2 * eval_kernel(kern, np.abs(left_points - a)))
    inc = measure.increments * factors
    cumulative = np.concatenate(([0.0], np.cumsum(inc)))
    tilted = GmcMeasure(grid=g, cumulative=cumulative, spec=measure.spec)
    return TiltedMeasure(base=measure, anchor=a, tilted=tilted)


def estimate_moment(
    spec: FieldSpec,
    t: float,
    q: float,
    replicas: int,
    seed: int,
    grid: Grid | None = None,
) -> EstimateReport:
    """Monte Carlo estimate of ``E[mass(0, t)^q]``.

    Valid for q below 2/gamma^2 (and any q < 0); near the upper end the
    replica variance blows up, so for q above 80% of 1/beta the report
    carries a tail-sensitivity diagnostic (mean with the top 1% of
    replicas removed).
    """
    if q != 0.0 and spec.gamma > 0.0 and not (q < 0.0 or q < 2.0 / spec.gamma**2):
        raise ValidationError(
            f"moment order q={q} outside the finite window (-inf,0) u (0, {2.0 / spec.gamma ** 2})"
        )
    if q == 0.0:
        return EstimateReport(mean=1.0, std_error=0.0, ci_low=1.0, ci_high=1.0,
                              replicas=replicas, seed=seed)
    if grid is None:
        grid = grid_for(spec, t)
    if not grid.origin <= t <= grid.end + 1e-12:
        raise OutOfDomainError(f"t={t} outside grid domain")
    sampler = FieldSampler(spec, grid)
    values = sampler.sample_values(seed, replicas)
    inc = _increments_from_values(values, grid, spec)
    pts = grid.points()
    j = min(max(int(np.searchsorted(pts, t, side="right")) - 1, 0), grid.count - 2)
    frac = (t - pts[j]) / grid.spacing
    masses = inc[:j, :].sum(axis=0) + frac * inc[j, :]
    powered = masses**q
    trimmed = None
    if spec.beta > 0.0 and q > 0.8 / spec.beta:
        keep = max(1, int(math.floor(replicas * 0.99)))
        trimmed = float(np.mean(np.sort(powered)[:keep]))
    return report_from_samples(powered, seed=seed, trimmed_mean=trimmed)

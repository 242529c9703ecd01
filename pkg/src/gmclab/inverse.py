"""The inverse homeomorphism of a chaos measure.

The inverse is never tabulated: every query interpolates the piecewise
linear cumulative of the measure, so the inverse-pair identities hold at
representation precision for free.  Flat spots cannot occur because the
density is strictly positive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateTailError,
    InsufficientMassError,
    OutOfDomainError,
    ScaleMismatchError,
)
from .measure import GmcMeasure


def _invert_array(measure: GmcMeasure, x: np.ndarray) -> np.ndarray:
    c = measure.cumulative
    pts = measure.grid.points()
    j = np.clip(np.searchsorted(c, x, side="right") - 1, 0, len(c) - 2)
    return pts[j] + (x - c[j]) / (c[j + 1] - c[j]) * measure.grid.spacing


def invert(measure: GmcMeasure, x):
    """First time the cumulative mass reaches level ``x``.

    Accepts a scalar or an array of levels in ``[0, total_mass]``.
    Strictly increasing in ``x``; exact at the knots.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > measure.total_mass):
        raise OutOfDomainError(
            f"mass level outside [0, {measure.total_mass}]"
        )
    out = _invert_array(measure, np.atleast_1d(arr))
    return float(out[0]) if arr.ndim == 0 else out


def increment(measure: GmcMeasure, a: float, b: float) -> float:
    """Inverse increment over the mass interval (a, b); nonnegative, additive."""
    if not 0.0 <= a <= b <= measure.total_mass:
        raise OutOfDomainError(f"need 0 <= a <= b <= total mass, got ({a}, {b})")
    qa, qb = _invert_array(measure, np.array([a, b]))
    return float(qb - qa)


def semigroup_shift(measure: GmcMeasure, x: float, T: float) -> float:
    """First ``t`` with ``mass(T, T + t) >= x``: the shifted hitting time.

    With ``T = Q(y)`` on the same realization this reproduces the inverse
    increment ``Q(x + y) - Q(y)`` exactly; note it is not the plain
    composition of inverses.
    """
    if x < 0.0:
        raise OutOfDomainError(f"mass level must be nonnegative, got {x}")
    if x == 0.0:
        return 0.0
    g = measure.grid
    if not g.origin <= T <= g.end:
        raise OutOfDomainError(f"shift T={T} outside grid domain")
    c_at_T = measure.cumulative_at(T)
    available = measure.total_mass - c_at_T
    if x > available:
        raise InsufficientMassError(
            f"requested mass {x} beyond remaining mass {available} after T={T}"
        )
    return float(_invert_array(measure, np.array([c_at_T + x]))[0] - T)


@dataclass(frozen=True)
class QuantilePath:
    """Read-only inverse view over an immutable measure."""

    measure: GmcMeasure

    @property
    def domain(self) -> tuple[float, float]:
        return (0.0, self.measure.total_mass)

    def value(self, x):
        return invert(self.measure, x)

    def increment(self, a: float, b: float) -> float:
        return increment(self.measure, a, b)

    def normalized(self, x: float) -> float:
        return normalized_inverse(self, x)


@dataclass(frozen=True)
class DyadicApprox:
    """Upper dyadic approximation of an inverse value at one level."""

    level: int
    value: float

    @property
    def cell_width(self) -> float:
        return 2.0 ** (-self.level)


def dyadic_approx(path: QuantilePath, a: float, n: int) -> DyadicApprox:
    """Smallest dyadic (m+1)/2^n strictly above the inverse at ``a``.

    Nonincreasing in ``n`` and sandwiches the inverse within one cell:
    ``value - 2^-n <= Q(a) < value``.
    """
    if n < 0:
        raise OutOfDomainError(f"level must be >= 0, got {n}")
    q = path.value(a)
    m = math.floor(q * 2.0**n)
    return DyadicApprox(level=n, value=(m + 1) / 2.0**n)


def normalized_inverse(path: QuantilePath, x: float) -> float:
    """Inverse at the fraction ``x`` of the total mass, for x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise OutOfDomainError(f"normalized argument must lie in [0,1], got {x}")
    return path.value(x * path.measure.total_mass)


@dataclass(frozen=True)
class ScaleComparison:
    """Per-interval ratio constants between a measure and its taller-scale version.

    ``g_start`` rescales mass up to ``c`` and ``g_interval`` the mass of
    ``(c, c+y)``; both are realized density-ratio averages, so they lie
    between the min and max of the density ratio over the inverse image.
    """

    c: float
    y: float
    g_start: float
    g_interval: float
    ratio_min: float
    ratio_max: float
    identity_residual: float


def scale_comparison(measure_full: GmcMeasure, measure_truncated: GmcMeasure,
                     c: float, y: float) -> ScaleComparison:
    """Compare the inverse of ``measure_full`` with the coarser inverse.

    Both measures must live on the same grid and come from the same
    underlying noise at nested upper scales (the full field is the
    truncated field plus an independent band of intermediate scales).
    Verifies the realized identity
    ``Q(c + y) - Q(c) = Qn(c/g_start + y/g_interval) - Qn(c/g_start)``.
    """
    gf, gt = measure_full.grid, measure_truncated.grid
    if (gf.origin, gf.spacing, gf.count) != (gt.origin, gt.spacing, gt.count):
        raise ScaleMismatchError("measures must share one grid")
    if y <= 0.0 or c < 0.0:
        raise OutOfDomainError("need c >= 0 and y > 0")
    qc, qcy = _invert_array(measure_full, np.array([c, c + y]))
    mass_n_start = measure_truncated.cumulative_at(qc)
    mass_n_interval = measure_truncated.cumulative_at(qcy) - mass_n_start
    g_start = c / mass_n_start if c > 0.0 else 1.0
    g_interval = y / mass_n_interval
    # Density ratio over the cells covering [Q(c), Q(c+y)].
    dens_ratio = measure_full.increments / measure_truncated.increments
    h = gf.spacing
    lo = int(np.floor((qc - gf.origin) / h))
    hi = int(np.ceil((qcy - gf.origin) / h))
    window = dens_ratio[max(lo, 0): max(hi, lo + 1)]
    qn = _invert_array(
        measure_truncated,
        np.array([c / g_start if c > 0.0 else 0.0, c / g_start + y / g_interval]),
    )
    residual = abs((qn[1] - qn[0]) - (qcy - qc))
    return ScaleComparison(
        c=c, y=y, g_start=float(g_start), g_interval=float(g_interval),
        ratio_min=float(window.min()), ratio_max=float(window.max()),
        identity_residual=float(residual),
    )


def _density_integral_over_tail(lower: np.ndarray, t: float, gamma: float,
                                quad_points: int) -> np.ndarray:
    """Inner integral of the restricted-range density, vectorized over lower limits.

    Integrates, from each lower limit to the far Gaussian tail,
    ``c0 * exp(-(y + aL)^2 / (2 g^2 L)) * (a^2 L^2 + g^2 L - y^2)``
    with ``L = ln(1/t)`` and ``a = 1 + g^2/2``.  The polynomial prefactor
    is the one that makes the Leibniz form agree with the chain-rule
    derivative of the hitting CDF; its integral over the whole line
    cancels, so only the truncation at the lower limit contributes.
    Nodes are placed in units of the Gaussian scale so the bump is always
    resolved.
    """
    L = math.log(1.0 / t)
    a = 1.0 + 0.5 * gamma * gamma
    sigma = gamma * math.sqrt(L)
    mu = -a * L
    c0 = 1.0 / (math.sqrt(2.0 * math.pi) * 2.0 * gamma**3 * L**2.5 * t)
    # Truncate where the Gaussian factor is below 1e-14 of its peak.
    u_max = math.sqrt(2.0 * math.log(1e14))
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)

    u_lo = (lower - mu) / sigma
    u_lo = np.minimum(u_lo, u_max)
    half = 0.5 * (u_max - u_lo)
    mid = 0.5 * (u_max + u_lo)
    u = mid[:, None] + half[:, None] * nodes[None, :]
    y = mu + sigma * u
    integrand = np.exp(-0.5 * u * u) * (a * a * L * L + gamma * gamma * L - y * y)
    return c0 * sigma * half * np.sum(weights[None, :] * integrand, axis=1)


def density_integrand(y: float, t: float, gamma: float) -> float:
    """Pointwise integrand of the restricted-range density (diagnostics)."""
    if not 0.0 < t < 1.0:
        raise OutOfDomainError(f"t must lie in (0,1), got {t}")
    L = math.log(1.0 / t)
    a = 1.0 + 0.5 * gamma * gamma
    c0 = 1.0 / (math.sqrt(2.0 * math.pi) * 2.0 * gamma**3 * L**2.5 * t)
    quad = math.exp(-((y + a * L) ** 2) / (2.0 * gamma**2 * L))
    return c0 * quad * (a * a * L * L + gamma * gamma * L - y * y)


def restricted_inverse_density(x: float, t: float, eta1_samples, gamma: float,
                               quad_points: int = 64) -> float:
    """Density of the exact-cone inverse hitting time at ``t`` in (0, 1).

    Averages the tail integral over Monte Carlo draws of the unit-interval
    mass (``eta1_samples``); the lower integration limit per draw is
    ``ln(x / mass)``.  Raises ``DegenerateTailError`` if doubling the node
    count moves the answer materially.
    """
    if not 0.0 < t < 1.0:
        raise OutOfDomainError(f"t must lie in (0,1), got {t}")
    if gamma <= 0.0:
        raise OutOfDomainError("density formula requires gamma > 0")
    samples = np.asarray(eta1_samples, dtype=float)
    lower = np.log(x / samples)
    value = np.mean(_density_integral_over_tail(lower, t, gamma, quad_points))
    nodes = quad_points
    while nodes <= 16 * quad_points:
        nodes *= 2
        refined = np.mean(_density_integral_over_tail(lower, t, gamma, nodes))
        if abs(refined - value) <= 1e-5 * max(1.0, abs(refined)) + 1e-8:
            return float(refined)
        value = refined
    raise DegenerateTailError(
        f"quadrature not converged at {nodes} nodes near t={t}"
    )

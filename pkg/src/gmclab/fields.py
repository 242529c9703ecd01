"""Log-correlated Gaussian fields on uniform grids.

Closed-form covariance kernels for the four field families used by the
laboratory (upper/lower truncated line field, exact-scaling cone field,
trace field on the unit circle, lambda-rescaled line field) and exact
Gaussian sampling of realizations through Cholesky factorization.  The
factorization exploits the finite covariance range: away from the circle,
kernels vanish beyond their cutoff, so the grid covariance is a banded
Toeplitz matrix and the Cholesky factor is banded with the same width.

All types are immutable after construction and sampling is a pure
function of ``(spec, grid, seed, replica)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotPositiveDefiniteError, ValidationError
from .rng import substream

# Diagonal jitter ladder tried before declaring a covariance unusable.
_JITTERS = (0.0, 1e-12, 1e-10, 1e-8)

# Column block size for batched draws, keeps peak memory modest.
_BATCH_ELEMENTS = 2**25


class FieldKind(enum.Enum):
    LINE_TRUNCATED = "line_truncated"
    EXACT_CONE = "exact_cone"
    CIRCLE_TRACE = "circle_trace"
    SCALED_LAMBDA = "scaled_lambda"


@dataclass(frozen=True)
class FieldSpec:
    """Which log-correlated field, with its intermittency and scale cutoffs.

    ``gamma`` is the multiplicative-chaos coupling (``gamma**2 < 2`` keeps
    the measure subcritical; ``gamma = 0`` is the degenerate Lebesgue
    case), ``delta`` the upper scale, ``epsilon`` the lower truncation and
    ``lam`` the rescaling ratio, used only by ``SCALED_LAMBDA``.
    """

    kind: FieldKind
    gamma: float
    delta: float
    epsilon: float
    lam: float | None = None

    def __post_init__(self):
        if not self.gamma * self.gamma < 2.0 or self.gamma < 0.0:
            raise ValidationError(
                f"gamma^2 < 2 required (subcritical regime), got gamma={self.gamma}"
            )
        if not self.delta > 0.0:
            raise ValidationError(f"delta > 0 required, got {self.delta}")
        if not 0.0 < self.epsilon <= self.delta:
            raise ValidationError(
                f"epsilon in (0, delta] required, got epsilon={self.epsilon}, delta={self.delta}"
            )
        if self.kind is FieldKind.SCALED_LAMBDA:
            if self.lam is None or not 0.0 < self.lam < 1.0:
                raise ValidationError(
                    f"lambda in (0, 1) required for the rescaled field, got {self.lam}"
                )
        elif self.lam is not None:
            raise ValidationError(f"lambda is only meaningful for SCALED_LAMBDA, got {self.lam}")

    @property
    def beta(self) -> float:
        """Multifractal exponent parameter gamma^2 / 2."""
        return 0.5 * self.gamma * self.gamma


@dataclass(frozen=True)
class CovarianceKernel:
    """Stationary covariance of a field spec, as a function of distance."""

    spec: FieldSpec
    periodic: bool = False

    @property
    def cutoff(self) -> float | None:
        """Distance beyond which the kernel is exactly zero (None: never)."""
        s = self.spec
        if s.kind is FieldKind.CIRCLE_TRACE:
            return None
        if s.kind is FieldKind.SCALED_LAMBDA:
            return s.delta / s.lam
        return s.delta


def kernel_for(spec: FieldSpec) -> CovarianceKernel:
    return CovarianceKernel(spec=spec, periodic=spec.kind is FieldKind.CIRCLE_TRACE)


def _line_truncated(d: np.ndarray, delta: float, eps: float) -> np.ndarray:
    out = np.zeros_like(d)
    near = d <= eps
    mid = (d > eps) & (d < delta)
    out[near] = math.log(delta / eps) - (1.0 / eps - 1.0 / delta) * d[near]
    dm = d[mid]
    out[mid] = np.log(delta / dm) + dm / delta - 1.0
    return out


def _exact_cone(d: np.ndarray, delta: float, eps: float) -> np.ndarray:
    out = np.zeros_like(d)
    near = d <= eps
    mid = (d > eps) & (d < delta)
    out[near] = math.log(delta / eps) + 1.0 - d[near] / eps
    out[mid] = np.log(delta / d[mid])
    return out


def _scaled_lambda(d: np.ndarray, delta: float, eps: float, lam: float) -> np.ndarray:
    out = np.zeros_like(d)
    near = d <= eps
    mid = (d > eps) & (d < delta / lam)
    out[near] = (
        math.log(delta / eps)
        - (1.0 / eps - 1.0 / delta) * d[near]
        + (1.0 - lam) * (1.0 - d[near] / delta)
    )
    dm = d[mid]
    out[mid] = np.log(delta / dm) - 1.0 + dm / delta + (1.0 - lam) * (1.0 - dm / delta)
    return out


def _circle_trace(d: np.ndarray, eps: float) -> np.ndarray:
    # Distance on the circle of unit circumference, folded to [0, 1/2].
    y = np.mod(d, 1.0)
    y = np.minimum(y, 1.0 - y)
    threshold = (2.0 / math.pi) * math.atan(math.pi * eps / 2.0)
    # Value at zero distance; the short-range branch subtracts a linear
    # plus log-cosine correction from it and joins the long-range branch
    # continuously at the arctan threshold.
    at_zero = (
        math.log(1.0 / eps)
        + 0.5 * math.log(math.pi * math.pi * eps * eps + 4.0)
        + (2.0 / math.pi) * math.atan(math.pi * eps / 2.0) / eps
    )
    out = np.empty_like(y)
    far = y > threshold
    out[far] = 2.0 * math.log(2.0) + np.log(1.0 / (2.0 * np.sin(math.pi * y[far])))
    yn = y[~far]
    out[~far] = at_zero - math.log(math.pi) - yn / eps - np.log(np.cos(math.pi * yn / 2.0))
    return out


def eval_kernel(kernel: CovarianceKernel, d):
    """Covariance at distance(s) ``d >= 0``.

    Exactly zero at and beyond the cutoff.  Circle distances are taken
    modulo 1 and folded to [0, 1/2].
    """
    arr = np.asarray(d, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    s = kernel.spec
    if s.kind is FieldKind.LINE_TRUNCATED:
        out = _line_truncated(arr, s.delta, s.epsilon)
    elif s.kind is FieldKind.EXACT_CONE:
        out = _exact_cone(arr, s.delta, s.epsilon)
    elif s.kind is FieldKind.SCALED_LAMBDA:
        out = _scaled_lambda(arr, s.delta, s.epsilon, s.lam)
    else:
        out = _circle_trace(arr, s.epsilon)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class Grid:
    """Uniform evaluation grid: ``count`` points starting at ``origin``."""

    origin: float
    spacing: float
    count: int

    def __post_init__(self):
        if self.spacing <= 0.0:
            raise ValidationError(f"grid spacing must be positive, got {self.spacing}")
        if self.count < 2:
            raise ValidationError(f"grid needs at least 2 points, got {self.count}")

    @property
    def span(self) -> float:
        return self.spacing * (self.count - 1)

    @property
    def end(self) -> float:
        return self.origin + self.span

    def points(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.count)


def grid_for(spec: FieldSpec, length: float, origin: float = 0.0) -> Grid:
    """Grid covering ``[origin, origin+length]`` at the resolution rule h = eps/4."""
    h = spec.epsilon / 4.0
    count = int(math.ceil(length / h - 1e-9)) + 1
    return Grid(origin=origin, spacing=h, count=count)


def _check_grid(spec: FieldSpec, grid: Grid) -> None:
    # Resolution rule: the epsilon-scale kink must be resolved.
    if grid.spacing > spec.epsilon / 4.0 * (1.0 + 1e-12):
        raise ValidationError(
            f"grid spacing {grid.spacing} exceeds epsilon/4 = {spec.epsilon / 4.0}"
        )
    if spec.kind is FieldKind.SCALED_LAMBDA and grid.span > spec.delta * (1.0 + 1e-12):
        # Beyond delta the rescaled covariance turns negative and the
        # measure is undefined; refuse the window outright.
        raise ValidationError(
            f"rescaled field only defined over windows of length <= delta: "
            f"span {grid.span} > delta {spec.delta}"
        )


def covariance_matrix(kernel: CovarianceKernel, grid: Grid) -> np.ndarray:
    """Dense covariance matrix of the field restricted to the grid.

    Entries are ``eval_kernel(|x_i - x_j|)`` exactly; the jitter needed to
    make Cholesky succeed (if any) is added to the diagonal.  Raises
    ``NotPositiveDefiniteError`` when no jitter in the ladder works.
    """
    _check_grid(kernel.spec, grid)
    x = grid.points()
    dist = np.abs(x[:, None] - x[None, :])
    mat = eval_kernel(kernel, dist.ravel()).reshape(dist.shape)
    jitter = _working_jitter(mat)
    if jitter > 0.0:
        mat = mat + jitter * np.eye(grid.count)
    return mat


def _working_jitter(mat: np.ndarray) -> float:
    for jitter in _JITTERS:
        try:
            np.linalg.cholesky(mat + jitter * np.eye(mat.shape[0]) if jitter else mat)
            return jitter
        except np.linalg.LinAlgError:
            continue
    raise NotPositiveDefiniteError(
        f"covariance not positive definite at maximum jitter {_JITTERS[-1]}"
    )


@dataclass(frozen=True)
class FieldSample:
    """One realization of a field on a grid.  Values are read-only."""

    grid: Grid
    values: np.ndarray
    spec: FieldSpec
    seed: int

    def __post_init__(self):
        if len(self.values) != self.grid.count:
            raise ValidationError("one value per grid point required")
        self.values.setflags(write=False)


class _KernelFn:
    """Distance -> covariance callable; supports closed-form differences."""

    def __init__(self, base: CovarianceKernel, subtract: CovarianceKernel | None = None):
        self.base = base
        self.subtract = subtract

    def __call__(self, d):
        out = eval_kernel(self.base, d)
        if self.subtract is not None:
            out = out - eval_kernel(self.subtract, d)
        return out

    @property
    def cutoff(self) -> float | None:
        cuts = [self.base.cutoff]
        if self.subtract is not None:
            cuts.append(self.subtract.cutoff)
        if any(c is None for c in cuts):
            return None
        return max(cuts)


class FieldSampler:
    """Exact Gaussian sampler for one ``(spec, grid)`` pair.

    The covariance is factored once; each draw is ``L @ z`` with ``z``
    standard normal from the per-replica substream, so a sample is fully
    determined by ``(spec, grid, seed, replica)``.  Banded Toeplitz
    structure (kernel cutoff shorter than the grid) is exploited without
    approximation: the Cholesky factor of a banded SPD matrix is banded.
    """

    def __init__(self, spec: FieldSpec, grid: Grid, _kernel_fn: _KernelFn | None = None):
        _check_grid(spec, grid)
        self.spec = spec
        self.grid = grid
        self._fn = _kernel_fn if _kernel_fn is not None else _KernelFn(kernel_for(spec))
        self._factor()

    def _bandwidth(self) -> int | None:
        cutoff = self._fn.cutoff
        if cutoff is None:
            return None
        w = int(math.ceil(cutoff / self.grid.spacing - 1e-9)) - 1
        if w >= self.grid.count - 1:
            return None
        # Small grids: dense factor is cheap and one BLAS call wins.
        if self.grid.count <= 2048:
            return None
        return w

    def _factor(self) -> None:
        n = self.grid.count
        h = self.grid.spacing
        w = self._bandwidth()
        if w is not None:
            row = np.asarray(self._fn(h * np.arange(w + 1)), dtype=float)
            ab = np.repeat(row[:, None], n, axis=1)
            err = None
            for jitter in _JITTERS:
                try:
                    band = ab.copy()
                    band[0, :] += jitter
                    self._band = scipy.linalg.cholesky_banded(band, lower=True)
                    self.jitter = jitter
                    self.bandwidth = w
                    self._dense = None
                    return
                except scipy.linalg.LinAlgError as exc:
                    err = exc
            raise NotPositiveDefiniteError(
                f"banded covariance not positive definite at maximum jitter: {err}"
            )
        x = self.grid.points()
        dist = np.abs(x[:, None] - x[None, :])
        mat = np.asarray(self._fn(dist.ravel()), dtype=float).reshape(dist.shape)
        self.jitter = _working_jitter(mat)
        if self.jitter > 0.0:
            mat = mat + self.jitter * np.eye(n)
        self._dense = np.linalg.cholesky(mat)
        self._band = None
        self.bandwidth = None

    def _apply_factor(self, z: np.ndarray) -> np.ndarray:
        if self._dense is not None:
            return self._dense @ z
        # Blocked multiply by the banded lower factor: densify row blocks
        # of the band and hand them to BLAS.
        band, n = self._band, self.grid.count
        w = band.shape[0] - 1
        out = np.empty_like(z)
        block = max(2048, 2 * w)
        for s in range(0, n, block):
            e = min(s + block, n)
            j0 = max(0, s - w)
            rows = np.arange(s, e)[:, None]
            cols = np.arange(j0, e)[None, :]
            k = rows - cols
            valid = (k >= 0) & (k <= w)
            slab = np.where(valid, band[np.clip(k, 0, w), cols], 0.0)
            out[s:e, :] = slab @ z[j0:e, :]
        return out

    def sample_values(self, seed: int, replicas: int, first_replica: int = 0,
                      component: int = 0) -> np.ndarray:
        """Matrix of draws, one column per replica substream."""
        n = self.grid.count
        out = np.empty((n, replicas))
        block = max(1, _BATCH_ELEMENTS // n)
        for start in range(0, replicas, block):
            stop = min(start + block, replicas)
            z = np.empty((n, stop - start))
            for j in range(start, stop):
                z[:, j - start] = substream(seed, component, first_replica + j).standard_normal(n)
            out[:, start:stop] = self._apply_factor(z)
        return out

    def sample(self, seed: int, replica: int = 0, component: int = 0) -> FieldSample:
        values = self.sample_values(seed, 1, first_replica=replica, component=component)[:, 0]
        return FieldSample(grid=self.grid, values=values, spec=self.spec, seed=seed)


def sample_field(spec: FieldSpec, grid: Grid, seed: int) -> FieldSample:
    """One field realization; deterministic in ``(spec, grid, seed)``."""
    return FieldSampler(spec, grid).sample(seed)


def sample_coupled_heights(
    spec: FieldSpec, delta_big: float, grid: Grid, seed: int, replicas: int
) -> tuple[np.ndarray, np.ndarray]:
    """Joint draws of the field at two nested upper scales.

    Returns ``(values_small, values_big)`` where the ``delta_big`` field is
    the ``spec.delta`` field plus an independent band holding the scales in
    between, so both realizations share the fine-scale noise exactly.
    """
    if delta_big < spec.delta:
        raise ValidationError(f"delta_big {delta_big} must be >= spec.delta {spec.delta}")
    small = FieldSampler(spec, grid)
    vals_small = small.sample_values(seed, replicas, component=0)
    if delta_big == spec.delta:
        return vals_small, vals_small.copy()
    big_spec = FieldSpec(kind=spec.kind, gamma=spec.gamma, delta=delta_big,
                         epsilon=spec.epsilon, lam=spec.lam)
    band_fn = _KernelFn(kernel_for(big_spec), subtract=kernel_for(spec))
    band = FieldSampler(big_spec, grid, _kernel_fn=band_fn)
    vals_band = band.sample_values(seed, replicas, component=1)
    return vals_small, vals_small + vals_band


def sample_truncation_ladder(
    spec: FieldSpec, epsilons: list[float], grid: Grid, seed: int, replicas: int
) -> list[np.ndarray]:
    """Joint draws of the field at a decreasing ladder of lower truncations.

    ``epsilons`` must decrease; level k+1 adds an independent band of
    scales between consecutive truncations, so all levels share their
    coarse noise.  The grid must resolve the finest level.
    """
    eps = list(epsilons)
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValidationError("truncation ladder must strictly decrease")
    values = []
    spec0 = FieldSpec(kind=spec.kind, gamma=spec.gamma, delta=spec.delta,
                      epsilon=eps[0], lam=spec.lam)
    finest = FieldSpec(kind=spec.kind, gamma=spec.gamma, delta=spec.delta,
                       epsilon=eps[-1], lam=spec.lam)
    _check_grid(finest, grid)
    current = FieldSampler(spec0, grid).sample_values(seed, replicas, component=0)
    values.append(current)
    for level, (eps_hi, eps_lo) in enumerate(zip(eps, eps[1:]), start=1):
        hi = FieldSpec(kind=spec.kind, gamma=spec.gamma, delta=spec.delta,
                       epsilon=eps_hi, lam=spec.lam)
        lo = FieldSpec(kind=spec.kind, gamma=spec.gamma, delta=spec.delta,
                       epsilon=eps_lo, lam=spec.lam)
        band_fn = _KernelFn(kernel_for(lo), subtract=kernel_for(hi))
        band = FieldSampler(lo, grid, _kernel_fn=band_fn)
        current = current + band.sample_values(seed, replicas, component=level)
        values.append(current)
    return values


def tile_periodic(sample: FieldSample, periods: int) -> FieldSample:
    """Extend a circle-field realization periodically over several periods.

    The input grid must tile the unit circle exactly (count * spacing == 1).
    """
    if sample.spec.kind is not FieldKind.CIRCLE_TRACE:
        raise ValidationError("periodic tiling is only defined for the circle field")
    n = sample.grid.count
    if abs(n * sample.grid.spacing - 1.0) > 1e-12:
        raise ValidationError("grid must cover exactly one period (count * spacing == 1)")
    count = n * periods + 1
    values = np.empty(count)
    values[:-1] = np.tile(np.asarray(sample.values), periods)
    values[-1] = sample.values[0]
    grid = Grid(origin=sample.grid.origin, spacing=sample.grid.spacing, count=count)
    return FieldSample(grid=grid, values=values, spec=sample.spec, seed=sample.seed)


class LognormalVariant(enum.Enum):
    OMEGA = "omega"  # variance ln(1/lambda): exact-cone rescaling factor
    Z = "z"          # variance ln(1/lambda) - 1 + lambda: line-field factor


@dataclass(frozen=True)
class Lognormal:
    """Centered lognormal exponent appearing in the rescaling laws.

    A draw is ``gamma*N(0, sigma2) - (gamma^2/2)*sigma2`` so that the
    exponential has unit mean; ``exp(p * draw)`` has mean
    ``exp(p*(p-1)*(gamma^2/2)*sigma2)``.
    """

    lam: float
    gamma: float
    variant: LognormalVariant

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValidationError(f"lambda in (0,1) required, got {self.lam}")

    @property
    def sigma2(self) -> float:
        if self.variant is LognormalVariant.OMEGA:
            return math.log(1.0 / self.lam)
        return math.log(1.0 / self.lam) - 1.0 + self.lam


def draw_lognormal(ln: Lognormal, seed: int) -> float:
    """One normalized exponent draw (see ``Lognormal``)."""
    return float(draw_lognormals(ln, seed, 1)[0])


def draw_lognormals(ln: Lognormal, seed: int, n: int) -> np.ndarray:
    z = substream(seed).standard_normal(n)
    return ln.gamma * math.sqrt(ln.sigma2) * z - 0.5 * ln.gamma**2 * ln.sigma2

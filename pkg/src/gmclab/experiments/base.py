"""Shared plumbing for the experiment suite.

Each experiment is a pure function from an ``ExperimentConfig`` to a
``Verdict``; all randomness flows through substreams of the config seed,
so verdicts are reproducible bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from ..errors import ConfigError, ValidationError
from ..fields import FieldKind, FieldSampler, FieldSpec, Grid
from ..measure import _increments_from_values
from ..stats import EstimateReport, TestReport


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters for one experiment run.

    ``epsilon``/``spacing`` default to ``delta * 2**-7`` and ``epsilon/4``.
    Tuple-valued fields hold ladders (times, scales, moment orders).
    """

    gamma: float = 0.5
    delta: float = 1.0
    epsilon: float | None = None
    spacing: float | None = None
    replicas: int = 2000
    seed: int = 0
    span_factor: float = 5.0

    # hitting levels / interval parameters
    a: float = 0.5
    b: float = 0.75
    x: float = 0.5
    t: float = 0.1
    lam: float = 0.5

    # gap distances for the buffered Markov check, in units of delta
    r_multiples: tuple[float, ...] = (1.0, 2.0)
    permutations: int = 2000

    # ladders
    T_grid: tuple[float, ...] = (8.0, 16.0, 32.0)
    t_grid: tuple[float, ...] = (0.015625, 0.03125, 0.0625, 0.125)
    q_grid: tuple[float, ...] = (0.5, 1.5, 2.0)
    delta_n_grid: tuple[float, ...] = (0.0625, 0.015625)
    level_grid: tuple[int, ...] = (3, 4, 5, 6, 7)
    p_grid: tuple[float, ...] | None = None
    x_ladder: tuple[float, ...] = (0.015625, 0.03125, 0.0625, 0.125)

    # thresholds
    threshold: float = 0.05
    ell: float = 1.5
    alpha: float = 0.01

    # anchor of the numerator interval and separation multiple for ratios
    ratio_anchor: float = 0.25
    ratio_separation: float = 2.0
    whitney_levels: int = 5
    whitney_replicas: int = 120

    # gap-graph geometry
    n_grid: tuple[int, ...] = (6, 9, 12)
    c_gap: float = 0.5
    rho_star: float = 0.5
    r_a: float = 0.25
    r_b: float = 0.75
    m_grid: tuple[int, ...] = (1, 2, 3)
    scales: tuple[int, ...] = (1, 2, 3)

    def __post_init__(self):
        if self.replicas < 100:
            raise ValidationError(f"replicas >= 100 required, got {self.replicas}")
        # Field-spec invariants surface early, before any sampling.
        self.field_spec()
        if not 0.0 < self.rho_star < 1.0:
            raise ValidationError(f"rho_star in (0,1) required, got {self.rho_star}")
        if not 0.0 < self.c_gap < 1.0:
            raise ValidationError(f"c_gap in (0,1) required, got {self.c_gap}")

    @property
    def eps(self) -> float:
        return self.epsilon if self.epsilon is not None else self.delta * 2.0**-7

    @property
    def h(self) -> float:
        return self.spacing if self.spacing is not None else self.eps / 4.0

    def field_spec(self, kind: FieldKind = FieldKind.LINE_TRUNCATED,
                   delta: float | None = None, epsilon: float | None = None,
                   lam: float | None = None) -> FieldSpec:
        d = delta if delta is not None else self.delta
        e = epsilon if epsilon is not None else (self.eps if delta is None else d * 2.0**-7)
        return FieldSpec(kind=kind, gamma=self.gamma, delta=d, epsilon=e, lam=lam)

    def summary(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


@dataclass(frozen=True)
class Check:
    """One named sub-assertion inside a verdict.

    ``passed`` is None for purely informational rows, which do not affect
    the experiment outcome.
    """

    label: str
    passed: bool | None
    value: float | None = None
    detail: str = ""


@dataclass(frozen=True)
class Verdict:
    experiment: str
    passed: bool
    target: str
    checks: tuple[Check, ...]
    seed: int
    columns: tuple[str, ...] = ()
    rows: tuple[tuple, ...] = ()

    @staticmethod
    def from_checks(experiment: str, target: str, checks: list[Check], seed: int,
                    columns=(), rows=()) -> "Verdict":
        passed = all(c.passed for c in checks if c.passed is not None)
        return Verdict(experiment=experiment, passed=passed, target=target,
                       checks=tuple(checks), seed=seed,
                       columns=tuple(columns), rows=tuple(t for t in map(tuple, rows)))


def grid_over(config: ExperimentConfig, length: float, delta: float | None = None,
              epsilon: float | None = None) -> Grid:
    """Grid covering [0, length] at the configured resolution rule."""
    if epsilon is not None:
        h = epsilon / 4.0
    elif delta is not None:
        h = delta * 2.0**-7 / 4.0
    else:
        h = config.h
    count = int(math.ceil(length / h - 1e-9)) + 1
    return Grid(origin=0.0, spacing=h, count=count)


def cumulative_batch(spec: FieldSpec, grid: Grid, seed: int, replicas: int,
                     component: int = 0) -> np.ndarray:
    """(count x replicas) matrix of cumulative masses, one column per replica."""
    values = FieldSampler(spec, grid).sample_values(seed, replicas, component=component)
    return cumulative_from_values(values, grid, spec)


def cumulative_from_values(values: np.ndarray, grid: Grid, spec: FieldSpec) -> np.ndarray:
    inc = _increments_from_values(values, grid, spec)
    cum = np.zeros((grid.count, values.shape[1]))
    np.cumsum(inc, axis=0, out=cum[1:, :])
    return cum


def batch_invert(cum: np.ndarray, grid: Grid, x) -> np.ndarray:
    """Per-column hitting time of mass level(s) ``x``.

    Columns whose total mass falls short of the level get ``inf``; callers
    decide whether that is an error, an excluded replica, or a decidable
    indicator.
    """
    levels = np.broadcast_to(np.asarray(x, dtype=float), (cum.shape[1],))
    short = levels > cum[-1, :]
    j = np.sum(cum < levels[None, :], axis=0) - 1
    j = np.clip(j, 0, cum.shape[0] - 2)
    cols = np.arange(cum.shape[1])
    c0, c1 = cum[j, cols], cum[j + 1, cols]
    out = grid.origin + grid.spacing * (j + (levels - c0) / (c1 - c0))
    out[short] = np.inf
    return out


def batch_mass_at(cum: np.ndarray, grid: Grid, times) -> np.ndarray:
    """Per-column cumulative mass at time(s), linear between knots."""
    t = np.broadcast_to(np.asarray(times, dtype=float), (cum.shape[1],))
    pos = (t - grid.origin) / grid.spacing
    j = np.clip(pos.astype(int), 0, grid.count - 2)
    cols = np.arange(cum.shape[1])
    frac = pos - j
    return cum[j, cols] + frac * (cum[j + 1, cols] - cum[j, cols])


def degenerate_verdict(name: str, target: str, config: ExperimentConfig,
                       detail: str, extra: list[Check] | None = None) -> Verdict:
    checks = [Check(label="degenerate gamma=0 case", passed=True, detail=detail)]
    if extra:
        checks.extend(extra)
    return Verdict.from_checks(name, target, checks, seed=config.seed)


def report_rows(label: str, report: EstimateReport) -> tuple:
    return (label, report.mean, report.std_error, report.ci_low, report.ci_high,
            report.replicas)


def check_from_test(label: str, tr: TestReport, want_reject: bool) -> Check:
    ok = tr.reject if want_reject else not tr.reject
    return Check(label=label, passed=ok, value=tr.p_value,
                 detail=f"stat={tr.statistic:.4g} p={tr.p_value:.4g} level={tr.level}")

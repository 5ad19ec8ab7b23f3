"""Scale-dependent t statistics and shuffle-based critical curves.

Critical values come from the empirical distribution of a statistic over
replicas in which every input series is independently permuted.  Replica
``r`` draws its permutations from a generator seeded by ``(seed, r)``, so
results do not depend on batch size or evaluation order.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coefficients import MAX_CONDITION, correlation_from_covariance, partial_from_correlation
from .errors import DegenerateError
from .fluctuation import DEFAULT_ORDER, fluctuation_matrix, profiles_of
from .regression import DfaRegressionFit, dfa_regression_arrays
from .series import ArrayLike, ScaleGrid, TimeSeries, as_array, as_series

logger = logging.getLogger(__name__)

FAILURE_BUDGET = 0.01


@dataclass(frozen=True)
class ScaleTStat:
    """Per-scale ``t_j(n) = (b_j(n) - b_j0) / sqrt(var b_j(n))``.

    Scales where a variance is not positive are dropped and listed in
    ``skipped``.
    """

    grid: ScaleGrid
    t1: np.ndarray
    t2: np.ndarray
    beta_null: tuple = (0.0, 0.0)
    skipped: tuple = ()

    @property
    def values(self) -> np.ndarray:
        return np.column_stack([self.t1, self.t2])


def t_statistics(fit: DfaRegressionFit, beta_null=(0.0, 0.0)) -> ScaleTStat:
    ok = (fit.var_beta1 > 0) & (fit.var_beta2 > 0)
    skipped = tuple(int(n) for n in fit.grid.scales[~ok])
    if skipped:
        warnings.warn(f"zero coefficient variance at scales {list(skipped)}", RuntimeWarning, stacklevel=2)
    if not ok.any():
        raise DegenerateError("coefficient variance is zero at every scale")
    t1 = (fit.beta1[ok] - beta_null[0]) / np.sqrt(fit.var_beta1[ok])
    t2 = (fit.beta2[ok] - beta_null[1]) / np.sqrt(fit.var_beta2[ok])
    return ScaleTStat(fit.grid.subset(ok), t1, t2, tuple(beta_null), skipped)


def replica_rng(seed: int, rep: int) -> np.random.Generator:
    """Independent generator for replica ``rep`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep,)))


def shuffle_series(series: ArrayLike, rng) -> TimeSeries:
    """Uniform random permutation of the values.

    ``rng`` is a numpy Generator or anything ``numpy.random.default_rng`` accepts.
    """
    ts = as_series(series)
    return TimeSeries(np.random.default_rng(rng).permutation(ts.values), ts.label)


@dataclass(frozen=True)
class McCriticalCurve:
    """Critical value per scale from shuffled replicas.

    ``samples`` (optional) holds the signed null statistics, one row per
    pooled draw and one column per scale.
    """

    grid: ScaleGrid
    critical: np.ndarray
    alpha: float
    reps: int
    seed: int
    statistic_kind: str
    n_failed: int = 0
    samples: np.ndarray | None = field(default=None, repr=False)

    def restrict(self, grid: ScaleGrid) -> "McCriticalCurve":
        """Curve on a sub-grid (e.g. after a fit dropped degenerate scales)."""
        mask = np.isin(self.grid.scales, grid.scales)
        if mask.sum() != len(grid):
            raise ValueError("grid is not a subset of the curve's grid")
        samples = None if self.samples is None else self.samples[:, mask]
        return McCriticalCurve(
            grid, self.critical[mask], self.alpha, self.reps, self.seed,
            self.statistic_kind, self.n_failed, samples,
        )

    def histogram(self, bins: int = 50) -> list[tuple[int, np.ndarray, np.ndarray]]:
        """Per-scale ``(n, bin_centres, density)`` of the signed null samples."""
        if self.samples is None:
            raise ValueError("curve was computed without keep_samples=True")
        out = []
        for s, n in enumerate(self.grid):
            density, edges = np.histogram(self.samples[:, s], bins=bins, density=True)
            out.append((n, 0.5 * (edges[:-1] + edges[1:]), density))
        return out


def _check_mc_args(alpha: float, reps: int) -> None:
    if not 0 < alpha <= 0.5:
        raise ValueError(f"alpha must be in (0, 0.5], got {alpha}")
    if reps < 100:
        raise ValueError(f"reps must be >= 100, got {reps}")


def _shuffled_batch(data: np.ndarray, seed: int, reps: range) -> np.ndarray:
    """``(len(reps), k, N)`` stack of independently permuted copies of ``data``."""
    out = np.empty((len(reps),) + data.shape)
    for i, rep in enumerate(reps):
        rng = replica_rng(seed, rep)
        for j in range(data.shape[0]):
            out[i, j] = rng.permutation(data[j])
    return out


def _batches(reps: int, length: int, k: int, batch_size: int | None):
    if batch_size is None:
        batch_size = max(1, 2**19 // (k * length))
    for start in range(0, reps, batch_size):
        yield range(start, min(reps, start + batch_size))


def _finish(
    stats: np.ndarray, grid: ScaleGrid, alpha: float, reps: int, seed: int,
    kind: str, keep_samples: bool,
) -> McCriticalCurve:
    """Turn ``(reps, m, S)`` signed statistics into a critical curve.

    Scales that fail in more than 1% of replicas are dropped; then replicas
    with any remaining failure are discarded, which must stay within budget.
    """
    finite = np.isfinite(stats).all(axis=1)  # (reps, S)
    scale_ok = finite.mean(axis=0) >= 1.0 - FAILURE_BUDGET
    if not scale_ok.any():
        raise DegenerateError("statistic undefined at every scale in most replicas")
    if not scale_ok.all():
        dropped = [int(n) for n in grid.scales[~scale_ok]]
        warnings.warn(f"dropping degenerate scales {dropped}", RuntimeWarning, stacklevel=3)
    rep_ok = finite[:, scale_ok].all(axis=1)
    n_failed = int((~rep_ok).sum())
    if n_failed > FAILURE_BUDGET * reps:
        raise DegenerateError(f"{n_failed} of {reps} replicas failed (budget 1%)")
    if n_failed:
        logger.warning("discarded %d of %d replicas with undefined statistics", n_failed, reps)
    kept = stats[rep_ok][:, :, scale_ok]
    pooled = kept.reshape(-1, kept.shape[-1])
    critical = np.quantile(np.abs(pooled), 1.0 - alpha, axis=0)
    return McCriticalCurve(
        grid=grid.subset(scale_ok),
        critical=critical,
        alpha=alpha,
        reps=reps,
        seed=seed,
        statistic_kind=kind,
        n_failed=n_failed,
        samples=pooled if keep_samples else None,
    )


def mc_critical_t(
    y: ArrayLike,
    x1: ArrayLike,
    x2: ArrayLike,
    grid: ScaleGrid,
    order: int = DEFAULT_ORDER,
    alpha: float = 0.01,
    reps: int = 10_000,
    seed: int = 0,
    coefficient: int | None = None,
    keep_samples: bool = False,
    batch_size: int | None = None,
) -> McCriticalCurve:
    """Critical ``t^c(n)`` under independent shuffling of y, x1 and x2.

    By default ``|t1|`` and ``|t2|`` are pooled; pass ``coefficient=1`` or
    ``2`` to use one of them only.
    """
    _check_mc_args(alpha, reps)
    if coefficient not in (None, 1, 2):
        raise ValueError("coefficient must be None, 1 or 2")
    data = np.stack([as_array(y), as_array(x1), as_array(x2)])
    grid.validate_for(data.shape[1])
    cols = [0, 1] if coefficient is None else [coefficient - 1]
    chunks = []
    for batch in _batches(reps, data.shape[1], 3, batch_size):
        sh = _shuffled_batch(data, seed, batch)
        out = dfa_regression_arrays(sh[:, 0], sh[:, 1], sh[:, 2], grid.scales, order)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.stack(
                [out["beta1"] / np.sqrt(out["var_beta1"]), out["beta2"] / np.sqrt(out["var_beta2"])],
                axis=1,
            )
        t[~np.isfinite(t)] = np.nan
        chunks.append(t[:, cols])
    return _finish(np.concatenate(chunks), grid, alpha, reps, seed, "t", keep_samples)


def pdcca_arrays(fm: np.ndarray, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Partial DCCA coefficients from ``(..., k, k)`` covariance stacks.

    Ill-conditioned or degenerate matrices yield NaN.  Output ``(..., P)``.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        var = np.diagonal(fm, axis1=-2, axis2=-1)
        good = (var > 0).all(axis=-1)
        rho = correlation_from_covariance(np.where(good[..., None, None], fm, np.eye(fm.shape[-1])))
        cond = np.linalg.cond(rho)
        good &= cond <= MAX_CONDITION
        safe = np.where(good[..., None, None], rho, np.eye(fm.shape[-1]))
        vals = np.stack([partial_from_correlation(safe, a, b) for a, b in pairs], axis=-1)
    vals[~good] = np.nan
    return vals


def mc_critical_pdcca(
    series_list: Sequence[ArrayLike],
    grid: ScaleGrid,
    order: int = DEFAULT_ORDER,
    alpha: float = 0.01,
    reps: int = 10_000,
    seed: int = 0,
    pairs: Sequence[tuple[int, int]] | None = None,
    keep_samples: bool = False,
    batch_size: int | None = None,
) -> McCriticalCurve:
    """Critical partial-DCCA curve under independent shuffling of every series.

    ``pairs`` are index pairs into ``series_list``; the default pools all pairs.
    """
    _check_mc_args(alpha, reps)
    if len(series_list) < 3:
        raise ValueError("need at least three series")
    data = np.stack([as_array(s) for s in series_list])
    k, length = data.shape
    grid.validate_for(length)
    if pairs is None:
        pairs = [(a, b) for a in range(k) for b in range(a + 1, k)]
    chunks = []
    for batch in _batches(reps, length, k, batch_size):
        sh = _shuffled_batch(data, seed, batch)
        fm = fluctuation_matrix(profiles_of(sh), grid.scales, order)  # (B, S, k, k)
        vals = pdcca_arrays(fm, pairs)  # (B, S, P)
        chunks.append(np.swapaxes(vals, 1, 2))
    return _finish(np.concatenate(chunks), grid, alpha, reps, seed, "pdcca", keep_samples)


def decide(curve: McCriticalCurve, observed, grid: ScaleGrid | None = None) -> np.ndarray:
    """Per-scale flags ``|observed(n)| > critical(n)`` (strict)."""
    if grid is not None and grid != curve.grid:
        raise ValueError("observed statistic is on a different scale grid")
    obs = np.asarray(observed, dtype=float)
    if obs.shape[0] != len(curve.grid):
        raise ValueError(
            f"grid mismatch: {obs.shape[0]} observed values for {len(curve.grid)} scales"
        )
    crit = curve.critical.reshape((-1,) + (1,) * (obs.ndim - 1))
    return np.abs(obs) > crit

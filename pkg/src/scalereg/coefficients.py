"""Detrended cross-correlation coefficients and classical partial correlation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CollinearityError, DegenerateError
from .fluctuation import FluctuationSet
from .series import ArrayLike, ScaleGrid, as_array

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class DccaMatrix:
    """Per-scale matrix of DCCA coefficients, shape ``(S, k, k)``."""

    grid: ScaleGrid
    labels: tuple
    values: np.ndarray

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown variable {label!r}; have {list(self.labels)}") from None


@dataclass(frozen=True)
class PartialCoefficientCurve:
    grid: ScaleGrid
    pair: tuple
    conditioning: tuple
    values: np.ndarray


def _check_variances(grid: ScaleGrid, labels, variances: np.ndarray) -> None:
    # variances: (S, k)
    bad = np.argwhere(~(variances > 0))
    if bad.size:
        s, i = bad[0]
        raise DegenerateError(
            f"degenerate series {labels[i]!r} at scale n={int(grid.scales[s])}"
        )


def rho_dcca(fluct: FluctuationSet, a: str, b: str) -> np.ndarray:
    """``F^2_ab(n) / sqrt(F^2_a(n) F^2_b(n))`` at every scale."""
    va, vb = fluct.variance(a), fluct.variance(b)
    _check_variances(fluct.grid, (a, b), np.column_stack([va, vb]))
    rho = fluct.covariance(a, b) / np.sqrt(va * vb)
    return np.clip(rho, -1.0, 1.0)


def correlation_from_covariance(cov: np.ndarray) -> np.ndarray:
    """Normalise a stack of covariance matrices ``(..., k, k)`` to unit diagonal.

    Off-diagonals are clipped to [-1, 1] and the diagonal is set to exactly 1.
    """
    sd = np.sqrt(np.diagonal(cov, axis1=-2, axis2=-1))
    rho = cov / (sd[..., :, None] * sd[..., None, :])
    rho = np.clip(rho, -1.0, 1.0)
    k = cov.shape[-1]
    idx = np.arange(k)
    rho[..., idx, idx] = 1.0
    # enforce exact symmetry
    return 0.5 * (rho + np.swapaxes(rho, -1, -2))


def dcca_matrix(fluct: FluctuationSet) -> DccaMatrix:
    if len(fluct.labels) < 2:
        raise ValueError("need at least two variables")
    variances = np.diagonal(fluct.matrix, axis1=-2, axis2=-1)
    _check_variances(fluct.grid, fluct.labels, variances)
    values = correlation_from_covariance(np.array(fluct.matrix))
    values.setflags(write=False)
    return DccaMatrix(grid=fluct.grid, labels=fluct.labels, values=values)


def partial_from_correlation(rho: np.ndarray, ia: int, ib: int) -> np.ndarray:
    """``-C_ab / sqrt(C_aa C_bb)`` with ``C`` the inverse of each ``(k, k)`` matrix.

    Works on any stack ``(..., k, k)``; no conditioning check.
    """
    c = np.linalg.inv(rho)
    return -c[..., ia, ib] / np.sqrt(c[..., ia, ia] * c[..., ib, ib])


def rho_pdcca(matrix: DccaMatrix, a: str, b: str) -> PartialCoefficientCurve:
    """Partial DCCA coefficient of ``a`` and ``b`` given all other variables."""
    ia, ib = matrix.index(a), matrix.index(b)
    if ia == ib:
        raise ValueError("need two distinct variables")
    cond = np.linalg.cond(matrix.values)
    bad = np.flatnonzero(~(cond <= MAX_CONDITION))
    if bad.size:
        n = int(matrix.grid.scales[bad[0]])
        raise DegenerateError(
            f"DCCA matrix singular or ill-conditioned at scale n={n} (cond={cond[bad[0]]:.3g})"
        )
    values = partial_from_correlation(matrix.values, ia, ib)
    others = tuple(lbl for lbl in matrix.labels if lbl not in (a, b))
    return PartialCoefficientCurve(matrix.grid, (a, b), others, values)


def pearson(x: ArrayLike, y: ArrayLike) -> float:
    xv, yv = as_array(x), as_array(y)
    dx, dy = xv - xv.mean(), yv - yv.mean()
    sxx, syy = np.dot(dx, dx), np.dot(dy, dy)
    if sxx == 0 or syy == 0:
        raise DegenerateError("zero variance input")
    return float(np.dot(dx, dy) / np.sqrt(sxx * syy))


def partial_t_statistic(r: float, n_obs: int) -> float:
    """``r * sqrt((N - 3) / (1 - r^2))`` for a first-order partial correlation."""
    if abs(r) >= 1.0:
        raise CollinearityError("collinear inputs: |r| = 1")
    return float(r * np.sqrt((n_obs - 3) / (1.0 - r * r)))


def partial_corr_classic(x: ArrayLike, y: ArrayLike, control: ArrayLike) -> tuple[float, float]:
    """Partial correlation of ``x`` and ``y`` controlling for ``control``, and its t.

    Raises CollinearityError if any pairwise correlation is +-1.
    """
    xs, ys, zs = as_array(x), as_array(y), as_array(control)
    n_obs = xs.size
    if not (ys.size == n_obs and zs.size == n_obs):
        raise ValueError("length mismatch")
    if n_obs < 4:
        raise ValueError("need at least 4 observations")
    r_xy, r_xz, r_yz = pearson(xs, ys), pearson(xs, zs), pearson(ys, zs)
    for r in (r_xy, r_xz, r_yz):
        if abs(r) >= 1.0 - 1e-12:
            raise CollinearityError("collinear inputs")
    r12_3 = (r_xy - r_xz * r_yz) / np.sqrt((1.0 - r_xz**2) * (1.0 - r_yz**2))
    return float(r12_3), partial_t_statistic(float(r12_3), n_obs)


def all_pairs(labels: Sequence[str]) -> list[tuple[str, str]]:
    return [(a, b) for i, a in enumerate(labels) for b in labels[i + 1 :]]

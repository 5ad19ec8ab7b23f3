"""Detrended fluctuation (DFA) and detrended cross-covariance (DCCA) functions.

The profile of length ``N`` is cut into ``floor(N / n)`` windows of ``n``
samples from the start and again from the end, giving ``2 * floor(N / n)``
windows that together cover every sample.  A polynomial trend is removed
from each window by projecting onto an orthonormal basis, and the
fluctuation at scale ``n`` is the mean squared (or cross) residual over all
windows.

The kernels accept arrays with arbitrary leading batch dimensions so the
Monte Carlo code can push many shuffled replicas through one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

from .series import (
    MIN_SCALE,
    ArrayLike,
    Profile,
    ScaleGrid,
    as_series,
    build_profile,
    stable_mean,
)

DEFAULT_ORDER = 2
MAX_ORDER = 4


def _check_order(order: int) -> None:
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"detrend order must be in [0, {MAX_ORDER}], got {order}")


@dataclass(frozen=True)
class SegmentLayout:
    """Window layout for a profile of ``length`` samples at scale ``n``.

    ``starts`` holds 0-based start offsets, forward windows first.
    """

    n: int
    length: int
    n_forward: int
    starts: np.ndarray

    @property
    def total_segments(self) -> int:
        return 2 * self.n_forward

    def index(self, j: int, k: int) -> int:
        """1-based profile index of offset ``k`` (1..n) in window ``j`` (1..2N_n)."""
        if not 1 <= j <= self.total_segments or not 1 <= k <= self.n:
            raise IndexError(f"window {j}, offset {k} out of range")
        if j <= self.n_forward:
            return (j - 1) * self.n + k
        return self.length - (j - self.n_forward) * self.n + k


def segment_layout(length: int, n: int, min_scale: int = MIN_SCALE) -> SegmentLayout:
    """Forward and backward windows of ``n`` samples over ``length`` samples.

    ``min_scale`` only relaxes the lower bound for inspecting the geometry;
    detrending still needs more points than the polynomial order.
    """
    if n < max(1, min_scale):
        raise ValueError(f"scale must be >= {min_scale}, got {n}")
    if n > length // 2:
        raise ValueError(f"scale too large: {n} > N/2 = {length // 2}")
    m = length // n
    fwd = np.arange(m) * n
    bwd = length - (np.arange(m) + 1) * n
    return SegmentLayout(n=n, length=length, n_forward=m, starts=np.concatenate([fwd, bwd]))


@lru_cache(maxsize=512)
def trend_basis(n: int, order: int) -> np.ndarray:
    """Orthonormal ``(n, order + 1)`` basis of polynomials on ``n`` points.

    Offsets are mapped onto [-1, 1] before the QR factorisation; the
    monomial Vandermonde on 1..n is badly conditioned for n ~ 1000.
    """
    _check_order(order)
    if n <= order + 1:
        raise ValueError(f"degenerate fit: {n} points for order {order}")
    u = np.linspace(-1.0, 1.0, n)
    q, _ = np.linalg.qr(np.vander(u, order + 1, increasing=True))
    q.setflags(write=False)
    return q


def detrend_segment(segment_values, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Residuals after removing the least-squares polynomial of ``order``."""
    seg = np.asarray(segment_values, dtype=float)
    q = trend_basis(seg.shape[-1], order)
    return seg - (seg @ q) @ q.T


def segments(profiles: np.ndarray, n: int) -> np.ndarray:
    """Stack forward and backward windows: ``(..., N)`` -> ``(..., 2N_n, n)``."""
    length = profiles.shape[-1]
    m = length // n
    lead = profiles.shape[:-1]
    fwd = profiles[..., : m * n].reshape(*lead, m, n)
    bwd = profiles[..., length - m * n :].reshape(*lead, m, n)
    return np.concatenate([fwd, bwd], axis=-2)


def segment_residuals(profiles: np.ndarray, n: int, order: int) -> np.ndarray:
    segs = segments(profiles, n)
    q = trend_basis(n, order)
    return segs - (segs @ q) @ q.T


def residual_product_mean(res_a: np.ndarray, res_b: np.ndarray) -> np.ndarray:
    """Average of ``res_a * res_b`` over all windows and offsets."""
    return np.mean(res_a * res_b, axis=(-2, -1))


def profiles_of(values: np.ndarray) -> np.ndarray:
    """Row-wise profiles of a ``(..., N)`` array."""
    return np.cumsum(values - stable_mean(values, keepdims=True), axis=-1)


def fluctuation_matrix(profiles: np.ndarray, scales: Sequence[int], order: int) -> np.ndarray:
    """Per-scale detrended covariance matrices.

    ``profiles`` has shape ``(..., k, N)``; the result has shape
    ``(..., S, k, k)``.  Each window's residuals are computed once per
    variable and reused for every pair; the matrix is filled from the upper
    triangle so it is exactly symmetric.
    """
    _check_order(order)
    k = profiles.shape[-2]
    out = np.empty(profiles.shape[:-2] + (len(scales), k, k))
    for s, n in enumerate(scales):
        res = segment_residuals(profiles, int(n), order)
        for a in range(k):
            ra = res[..., a, :, :]
            out[..., s, a, a] = residual_product_mean(ra, ra)
            for b in range(a + 1, k):
                cov = residual_product_mean(ra, res[..., b, :, :])
                out[..., s, a, b] = cov
                out[..., s, b, a] = cov
    return out


def _profile_values(profile) -> np.ndarray:
    if isinstance(profile, Profile):
        return profile.values
    return np.asarray(profile, dtype=float)


def dfa_variance(profile: Profile, grid: ScaleGrid, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Scale-dependent DFA variance ``F^2(n)`` of a profile."""
    return dcca_covariance(profile, profile, grid, order)


def dcca_covariance(
    profile_a: Profile, profile_b: Profile, grid: ScaleGrid, order: int = DEFAULT_ORDER
) -> np.ndarray:
    """Scale-dependent DCCA covariance ``F^2_ab(n)``; may be negative."""
    _check_order(order)
    za = _profile_values(profile_a)
    zb = _profile_values(profile_b)
    if za.shape != zb.shape:
        raise ValueError(f"length mismatch: {za.size} vs {zb.size}")
    length = za.size
    out = np.empty(len(grid))
    for s, n in enumerate(grid):
        segment_layout(length, n)
        ra = segment_residuals(za, n, order)
        rb = ra if zb is za else segment_residuals(zb, n, order)
        out[s] = residual_product_mean(ra, rb)
    return out


@dataclass(frozen=True)
class FluctuationSet:
    """DFA variances and DCCA covariances of several variables on one grid.

    ``matrix[s, a, b]`` is the detrended covariance of variables ``a`` and
    ``b`` at ``grid.scales[s]``; the diagonal holds the variances.
    """

    grid: ScaleGrid
    labels: tuple
    matrix: np.ndarray
    detrend_order: int = DEFAULT_ORDER

    def _index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown variable {label!r}; have {list(self.labels)}") from None

    def variance(self, label: str) -> np.ndarray:
        i = self._index(label)
        return self.matrix[:, i, i]

    def covariance(self, a: str, b: str) -> np.ndarray:
        return self.matrix[:, self._index(a), self._index(b)]

    @property
    def covariances(self) -> dict:
        """Unordered pairs (in label order) mapped to their covariance curves."""
        return {
            (a, b): self.covariance(a, b) for a, b in combinations(self.labels, 2)
        }


def fluctuation_set(
    series_list: Sequence[ArrayLike],
    grid: ScaleGrid,
    order: int = DEFAULT_ORDER,
    labels: Sequence[str] | None = None,
) -> FluctuationSet:
    if len(series_list) == 0:
        raise ValueError("need at least one series")
    ts = [as_series(s, f"z{i + 1}") for i, s in enumerate(series_list)]
    if labels is None:
        labels = [s.label for s in ts]
        if len(set(labels)) != len(labels):
            labels = [f"z{i + 1}" for i in range(len(ts))]
    if len(labels) != len(ts) or len(set(labels)) != len(labels):
        raise ValueError("labels must be unique, one per series")
    length = len(ts[0])
    if any(len(s) != length for s in ts):
        raise ValueError("length mismatch between series")
    grid.validate_for(length)
    profiles = np.stack([build_profile(s).values for s in ts])
    matrix = fluctuation_matrix(profiles, grid.scales, order)
    matrix.setflags(write=False)
    return FluctuationSet(grid=grid, labels=tuple(labels), matrix=matrix, detrend_order=order)


def hurst_slope(grid: ScaleGrid, variance: np.ndarray) -> float | None:
    """Least-squares slope of ``log sqrt(F^2)`` against ``log n``.

    Returns None when any variance is non-positive (slope undefined).
    """
    variance = np.asarray(variance, dtype=float)
    if variance.size < 2 or np.any(variance <= 0):
        return None
    slope, _ = np.polyfit(np.log(grid.scales), 0.5 * np.log(variance), 1)
    return float(slope)


__all__ = [
    "DEFAULT_ORDER",
    "FluctuationSet",
    "SegmentLayout",
    "dcca_covariance",
    "detrend_segment",
    "dfa_variance",
    "fluctuation_matrix",
    "fluctuation_set",
    "hurst_slope",
    "segment_layout",
]

"""Series containers, profiles and scale grids.

Everything downstream works on plain float64 numpy arrays; the small
dataclasses here only carry validation and a label.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

ArrayLike = Union["TimeSeries", np.ndarray, list, tuple]

MIN_SCALE = 4


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """A uniformly sampled, finite, non-empty scalar series."""

    values: np.ndarray
    label: str = "z"

    def __post_init__(self):
        arr = _frozen(self.values)
        if arr.ndim != 1:
            raise ValueError(f"series {self.label!r} must be one-dimensional")
        if arr.size == 0:
            raise ValueError("empty input")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"series {self.label!r} contains non-finite values")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class Profile:
    """Cumulative sum of a mean-centred series."""

    values: np.ndarray
    source_length: int = field(default=-1)

    def __post_init__(self):
        arr = _frozen(self.values)
        object.__setattr__(self, "values", arr)
        if self.source_length < 0:
            object.__setattr__(self, "source_length", arr.size)
        if arr.size != self.source_length:
            raise ValueError("profile length differs from source length")

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ScaleGrid:
    """Strictly increasing window sizes (in samples)."""

    scales: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.scales)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("scale grid must be a non-empty 1-d sequence")
        if not np.all(arr == np.round(arr)):
            raise ValueError("scales must be integers")
        arr = arr.astype(np.int64)
        if np.any(np.diff(arr) <= 0):
            raise ValueError("scales must be strictly increasing")
        if arr[0] < MIN_SCALE:
            raise ValueError(f"scales must be >= {MIN_SCALE}, got {arr[0]}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "scales", arr)

    def __len__(self) -> int:
        return self.scales.size

    def __iter__(self):
        return iter(int(s) for s in self.scales)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScaleGrid):
            return NotImplemented
        return np.array_equal(self.scales, other.scales)

    def __hash__(self) -> int:
        return hash(tuple(self.scales.tolist()))

    def validate_for(self, length: int) -> None:
        """Raise if any scale falls outside ``[4, length // 2]``."""
        if self.scales[-1] > length // 2:
            raise ValueError(
                f"scale too large: {int(self.scales[-1])} > N/2 = {length // 2}"
            )

    def subset(self, mask) -> "ScaleGrid":
        return ScaleGrid(self.scales[np.asarray(mask, dtype=bool)])


def stable_mean(values: np.ndarray, axis: int = -1, keepdims: bool = False) -> np.ndarray:
    """Arithmetic mean with one correction pass; exact for constant input."""
    m = np.mean(values, axis=axis, keepdims=True)
    m = m + np.mean(values - m, axis=axis, keepdims=True)
    return m if keepdims else np.squeeze(m, axis=axis)


def as_array(series: ArrayLike) -> np.ndarray:
    """Return the float values of a series or array-like (no copy if possible)."""
    if isinstance(series, TimeSeries):
        return series.values
    if isinstance(series, Profile):
        return series.values
    return np.asarray(series, dtype=float)


def as_series(series: ArrayLike, label: str = "z") -> TimeSeries:
    if isinstance(series, TimeSeries):
        return series
    return TimeSeries(series, label)


def mean(series: ArrayLike) -> float:
    arr = as_array(series)
    if arr.size == 0:
        raise ValueError("empty input")
    return float(stable_mean(arr))


def centered(series: ArrayLike) -> TimeSeries:
    """Subtract the arithmetic mean."""
    ts = as_series(series)
    return TimeSeries(ts.values - stable_mean(ts.values), ts.label)


def build_profile(series: ArrayLike) -> Profile:
    """Cumulative sum of the mean-centred series.

    >>> build_profile([1.0, 2.0, 3.0]).values
    array([-1., -1.,  0.])
    """
    arr = as_array(series)
    if arr.size == 0:
        raise ValueError("empty input")
    if not np.all(np.isfinite(arr)):
        raise ValueError("series contains non-finite values")
    return Profile(np.cumsum(arr - stable_mean(arr)), arr.size)


def log_scale_grid(n_min: int, n_max: int, count: int) -> ScaleGrid:
    """Integer scales with logarithmically even spacing between the endpoints.

    Targets are rounded to the nearest integer and duplicates dropped, so
    the result can hold fewer than ``count`` scales.
    """
    if n_min < MIN_SCALE:
        raise ValueError(f"n_min must be >= {MIN_SCALE}, got {n_min}")
    if n_max <= n_min:
        raise ValueError(f"n_max ({n_max}) must exceed n_min ({n_min})")
    if count < 2:
        raise ValueError("count must be >= 2")
    targets = np.geomspace(n_min, n_max, count)
    scales = np.unique(np.rint(targets).astype(np.int64))
    scales[0], scales[-1] = n_min, n_max
    return ScaleGrid(scales)


def default_scale_grid(length: int, count: int = 30) -> ScaleGrid:
    """Grid from 10 to ``min(1000, length // 4)`` with ``count`` log-spaced points."""
    n_max = min(1000, length // 4)
    if n_max <= 10:
        raise ValueError(f"series of length {length} is too short for the default grid")
    return log_scale_grid(10, n_max, count)

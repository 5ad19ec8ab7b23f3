"""Synthetic test series: ARFIMA(0, d, 0), binomial multifractal cascades,
noise contamination and regression datasets built from them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .series import ArrayLike, TimeSeries, as_array

DEFAULT_TRUNCATION = 1000
MAX_BMFS_DEPTH = 26


@dataclass(frozen=True)
class ArfimaSpec:
    d: float
    length: int
    truncation: int = DEFAULT_TRUNCATION
    seed: int | None = None

    def __post_init__(self):
        if not -0.5 < self.d < 0.5:
            raise ValueError(f"d must lie in (-0.5, 0.5), got {self.d}")
        if self.truncation < 1:
            raise ValueError("truncation must be >= 1")
        if self.length < 1:
            raise ValueError("length must be >= 1")


@dataclass(frozen=True)
class BmfsSpec:
    p: float
    depth: int

    def __post_init__(self):
        if not 0 < self.p < 0.5:
            raise ValueError(f"p must lie in (0, 0.5), got {self.p}")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.depth > MAX_BMFS_DEPTH:
            raise ValueError(f"depth {self.depth} exceeds the cap of {MAX_BMFS_DEPTH}")


def arfima_weights(d: float, truncation: int) -> np.ndarray:
    """``a_m(d) = Gamma(m - d) / (Gamma(-d) Gamma(m + 1))`` for m = 0..truncation.

    These are the coefficients of ``(1 - L)^d``; computed with the recurrence
    ``a_m = a_{m-1} (m - 1 - d) / m`` to stay clear of Gamma overflow.
    """
    if not -0.5 < d < 0.5:
        raise ValueError(f"d must lie in (-0.5, 0.5), got {d}")
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    m = np.arange(1, truncation + 1, dtype=float)
    return np.concatenate([[1.0], np.cumprod((m - 1.0 - d) / m)])


def arfima_generate(spec: ArfimaSpec, rng: np.random.Generator | None = None) -> TimeSeries:
    """Fractionally integrated Gaussian noise with memory parameter ``d``.

    Filters i.i.d. N(0, 1) innovations with the truncated expansion of
    ``(1 - L)^(-d)``, whose weights are ``arfima_weights(-d)``; the output
    has Hurst exponent ``d + 0.5``.  The first ``truncation`` filtered
    values are discarded so every output sample sees the full window.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    psi = arfima_weights(-spec.d, spec.truncation)
    noise = rng.standard_normal(spec.length + spec.truncation)
    if spec.d == 0:
        return TimeSeries(noise[spec.truncation :], f"arfima(d={spec.d})")
    x = fftconvolve(noise, psi, mode="valid")
    return TimeSeries(x[: spec.length], f"arfima(d={spec.d})")


def bmfs_generate(spec: BmfsSpec) -> TimeSeries:
    """Binomial multifractal series of length ``2**depth``.

    Entry ``k`` (1-based) is ``p**(depth - b) * (1 - p)**b`` with ``b`` the
    number of one bits in ``k - 1``.
    """
    k = np.arange(2**spec.depth, dtype=np.uint64)
    bits = np.bitwise_count(k).astype(float)
    values = spec.p ** (spec.depth - bits) * (1.0 - spec.p) ** bits
    return TimeSeries(values, f"bmfs(p={spec.p})")


def embed_in_noise(
    series: ArrayLike,
    threshold: float,
    noise_sd: float,
    seed=None,
) -> tuple[TimeSeries, int]:
    """Replace every value below ``threshold`` with a fresh N(0, noise_sd^2) draw.

    Returns the contaminated series and the number of replaced values.
    """
    if threshold <= 0 or noise_sd <= 0:
        raise ValueError("threshold and noise_sd must be positive")
    values = np.array(as_array(series), dtype=float)
    mask = values < threshold
    count = int(mask.sum())
    rng = np.random.default_rng(seed)
    values[mask] = rng.normal(0.0, noise_sd, size=count)
    label = series.label if isinstance(series, TimeSeries) else "embedded"
    return TimeSeries(values, label), count


def make_regression_dataset(
    x1: ArrayLike, x2: ArrayLike, betas: tuple[float, float, float], error: ArrayLike
) -> TimeSeries:
    """``y = b0 + b1 x1 + b2 x2 + error`` elementwise."""
    a1, a2, e = as_array(x1), as_array(x2), as_array(error)
    if not (a1.shape == a2.shape == e.shape):
        raise ValueError("length mismatch")
    b0, b1, b2 = betas
    return TimeSeries(b0 + b1 * a1 + b2 * a2 + e, "y")


@dataclass(frozen=True)
class RegressionSample:
    y: TimeSeries
    x1: TimeSeries
    x2: TimeSeries
    meta: dict


def arfima_regression_sample(
    d: float,
    length: int,
    betas=(1.0, 1.0, 2.0),
    d_error: float | None = None,
    truncation: int = DEFAULT_TRUNCATION,
    seed=None,
) -> RegressionSample:
    """Two independent ARFIMA(0, d, 0) regressors and ``y`` built from them.

    The error term is standard Gaussian noise, or ARFIMA(0, d_error, 0)
    when ``d_error`` is given.
    """
    rng = np.random.default_rng(seed)
    x1 = arfima_generate(ArfimaSpec(d, length, truncation), rng)
    x2 = arfima_generate(ArfimaSpec(d, length, truncation), rng)
    if d_error is None:
        err = rng.standard_normal(length)
    else:
        err = arfima_generate(ArfimaSpec(d_error, length, truncation), rng).values
    y = make_regression_dataset(x1, x2, betas, err)
    meta = {"d": d, "d_error": d_error, "betas": list(betas), "truncation": truncation}
    return RegressionSample(y, TimeSeries(x1.values, "x1"), TimeSeries(x2.values, "x2"), meta)


def bmfs_regression_sample(
    p: float = 0.3,
    depth: int = 15,
    threshold: float = 1e-5,
    noise_sd: float = 1e-4,
    betas=(1.0, 1.0, 2.0),
    seed=None,
) -> RegressionSample:
    """Cascade regressor hidden in noise at small scales.

    ``y`` is built from the clean cascade; the regressor ``x1`` returned is
    the cascade after ``embed_in_noise``.  ``x2`` and the error term are
    N(0, noise_sd^2).
    """
    rng = np.random.default_rng(seed)
    clean = bmfs_generate(BmfsSpec(p, depth))
    x1, replaced = embed_in_noise(clean, threshold, noise_sd, rng)
    length = len(clean)
    x2 = rng.normal(0.0, noise_sd, length)
    err = rng.normal(0.0, noise_sd, length)
    y = make_regression_dataset(clean, x2, betas, err)
    meta = {
        "p": p, "depth": depth, "threshold": threshold, "noise_sd": noise_sd,
        "betas": list(betas), "replaced": replaced,
    }
    return RegressionSample(y, TimeSeries(x1.values, "x1"), TimeSeries(x2, "x2"), meta)

"""Bivariate linear regression, classical and scale-dependent.

The model is ``Y = b0 + b1 X1 + b2 X2 + e``.  The classical fit uses the
centred-sum form of the normal equations.  The scale-dependent fit replaces
every variance and covariance in those formulas by its DFA/DCCA
counterpart at window size ``n``, so each scale gets its own ``b1(n)``,
``b2(n)`` and evaluation indices.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import CollinearityError, DegenerateError
from .fluctuation import (
    DEFAULT_ORDER,
    FluctuationSet,
    fluctuation_matrix,
    profiles_of,
    residual_product_mean,
    segment_residuals,
)
from .series import ArrayLike, ScaleGrid, TimeSeries, as_array

Z_95 = 1.96
DENOMINATOR_FLOOR = 1e-12
LABELS = ("y", "x1", "x2")


class DegenerateScaleWarning(RuntimeWarning):
    """A scale was dropped because its regression denominator vanished."""


def _inputs(y: ArrayLike, x1: ArrayLike, x2: ArrayLike) -> tuple[np.ndarray, ...]:
    arrs = tuple(as_array(v) for v in (y, x1, x2))
    if not (arrs[0].shape == arrs[1].shape == arrs[2].shape) or arrs[0].ndim != 1:
        raise ValueError("y, x1 and x2 must be 1-d and of equal length")
    if not all(np.all(np.isfinite(a)) for a in arrs):
        raise ValueError("inputs contain non-finite values")
    return arrs


def _elasticity(betas, mean_x, mean_y):
    """``beta_j <X_j> / <Y>``; None when the response mean is zero."""
    if mean_y == 0.0:
        return None
    return tuple(b * mx / mean_y for b, mx in zip(betas, mean_x))


def _response_mean_is_zero(yv: np.ndarray) -> bool:
    return abs(yv.mean()) <= 1e-14 * max(np.max(np.abs(yv)), np.finfo(float).tiny)


@dataclass(frozen=True)
class OlsFit:
    beta0: float
    beta1: float
    beta2: float
    var_beta1: float
    var_beta2: float
    residuals: TimeSeries
    r_squared: float
    beta_star: tuple
    elasticity: tuple | None
    n_obs: int

    @property
    def betas(self) -> tuple:
        return (self.beta1, self.beta2)


def ols_fit(y: ArrayLike, x1: ArrayLike, x2: ArrayLike) -> OlsFit:
    yv, x1v, x2v = _inputs(y, x1, x2)
    n_obs = yv.size
    if n_obs < 4:
        raise ValueError(f"need at least 4 observations, got {n_obs}")
    yc, c1, c2 = yv - yv.mean(), x1v - x1v.mean(), x2v - x2v.mean()
    s11, s22, s12 = c1 @ c1, c2 @ c2, c1 @ c2
    s1y, s2y, syy = c1 @ yc, c2 @ yc, yc @ yc
    den = s11 * s22 - s12 * s12
    if not den > DENOMINATOR_FLOOR * s11 * s22 or s11 * s22 == 0:
        raise CollinearityError("regressors are collinear")
    if syy == 0:
        raise DegenerateError("response has zero variance")
    b1 = (s1y * s22 - s2y * s12) / den
    b2 = (s2y * s11 - s1y * s12) / den
    b0 = yv.mean() - b1 * x1v.mean() - b2 * x2v.mean()
    resid = yv - b1 * x1v - b2 * x2v
    resid = resid - resid.mean()
    sigma2 = (resid @ resid) / (n_obs - 3)
    mean_y = 0.0 if _response_mean_is_zero(yv) else yv.mean()
    return OlsFit(
        beta0=float(b0),
        beta1=float(b1),
        beta2=float(b2),
        var_beta1=float(s22 * sigma2 / den),
        var_beta2=float(s11 * sigma2 / den),
        residuals=TimeSeries(resid, "residual"),
        r_squared=float(1.0 - (resid @ resid) / syy),
        beta_star=(float(b1 * np.sqrt(s11 / syy)), float(b2 * np.sqrt(s22 / syy))),
        elasticity=_elasticity((float(b1), float(b2)), (x1v.mean(), x2v.mean()), mean_y),
        n_obs=n_obs,
    )


def residual_series(
    y: ArrayLike, x1: ArrayLike, x2: ArrayLike, beta1: float, beta2: float
) -> TimeSeries:
    """``y - beta1 x1 - beta2 x2`` shifted to zero mean."""
    yv, x1v, x2v = _inputs(y, x1, x2)
    e = yv - beta1 * x1v - beta2 * x2v
    return TimeSeries(e - e.mean(), "residual")


def dfa_regression_arrays(
    y: np.ndarray, x1: np.ndarray, x2: np.ndarray, scales, order: int = DEFAULT_ORDER
) -> dict:
    """Vectorised scale-dependent regression on ``(..., N)`` arrays.

    Returns a dict of ``(..., S)`` arrays.  Degenerate scales hold NaN and
    are marked False in ``"ok"``.  No validation beyond shapes; callers
    check the grid against the length.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        return _dfa_regression_arrays(y, x1, x2, scales, order)


def _dfa_regression_arrays(y, x1, x2, scales, order):
    n_obs = y.shape[-1]
    data = np.stack([y, x1, x2], axis=-2)
    fm = fluctuation_matrix(profiles_of(data), scales, order)
    fy, f1, f2 = fm[..., 0, 0], fm[..., 1, 1], fm[..., 2, 2]
    f1y, f2y, f12 = fm[..., 1, 0], fm[..., 2, 0], fm[..., 1, 2]
    den = f1 * f2 - f12 * f12
    # a fluctuation at rounding level relative to the raw variance counts as zero
    power = np.var(data, axis=-1)[..., None, :] * np.asarray(scales, dtype=float)[:, None]
    alive = np.all(np.diagonal(fm, axis1=-2, axis2=-1) > DENOMINATOR_FLOOR * power, axis=-1)
    ok = (np.abs(den) > DENOMINATOR_FLOOR * f1 * f2) & alive
    den = np.where(ok, den, np.nan)
    b1 = (f1y * f2 - f2y * f12) / den
    b2 = (f2y * f1 - f1y * f12) / den

    fe = np.empty_like(b1)
    for s, n in enumerate(scales):
        e = y - b1[..., s, None] * x1 - b2[..., s, None] * x2
        res = segment_residuals(profiles_of(e), int(n), order)
        fe[..., s] = residual_product_mean(res, res)

    scale = 1.0 / (n_obs - 3)
    return {
        "ok": ok,
        "beta1": b1,
        "beta2": b2,
        "var_beta1": scale * f2 * fe / den,
        "var_beta2": scale * f1 * fe / den,
        "residual_fluct": fe,
        "r_squared": 1.0 - fe / fy,
        "fluct": fm,
    }


@dataclass(frozen=True)
class DfaRegressionFit:
    """Scale-dependent regression results on the non-degenerate scales.

    ``beta_star_dfa`` and ``elasticity_dfa`` have shape ``(S, 2)``, one
    column per regressor.  ``implied_intercept`` is derived from the
    global means, not estimated; profiling removes constants.
    """

    grid: ScaleGrid
    beta1: np.ndarray
    beta2: np.ndarray
    var_beta1: np.ndarray
    var_beta2: np.ndarray
    residual_fluct: np.ndarray
    r_squared_dfa: np.ndarray
    beta_star_dfa: np.ndarray
    elasticity_dfa: np.ndarray | None
    implied_intercept: np.ndarray
    fluctuations: FluctuationSet
    means: tuple
    n_obs: int
    degenerate_scales: tuple = field(default=())

    @property
    def betas(self) -> np.ndarray:
        return np.column_stack([self.beta1, self.beta2])

    @property
    def variances(self) -> np.ndarray:
        return np.column_stack([self.var_beta1, self.var_beta2])

    @property
    def ci95(self) -> np.ndarray:
        """``(S, 2, 2)``: ``ci95[s, j] = (lower, upper)`` for coefficient ``j + 1``."""
        half = Z_95 * np.sqrt(self.variances)
        return np.stack([self.betas - half, self.betas + half], axis=-1)


def dfa_regression(
    y: ArrayLike,
    x1: ArrayLike,
    x2: ArrayLike,
    grid: ScaleGrid,
    order: int = DEFAULT_ORDER,
) -> DfaRegressionFit:
    yv, x1v, x2v = _inputs(y, x1, x2)
    n_obs = yv.size
    if n_obs < 4:
        raise ValueError(f"need at least 4 observations, got {n_obs}")
    grid.validate_for(n_obs)
    out = dfa_regression_arrays(yv, x1v, x2v, grid.scales, order)
    ok = out["ok"]
    degenerate = tuple(int(n) for n in grid.scales[~ok])
    if not ok.any():
        raise DegenerateError("every scale is degenerate (collinear or constant inputs)")
    if degenerate:
        names = ", ".join(f"n={n}" for n in degenerate)
        warnings.warn(f"dropped degenerate scales {names}", DegenerateScaleWarning, stacklevel=2)

    fm = out["fluct"]
    fluct = FluctuationSet(grid=grid, labels=LABELS, matrix=fm, detrend_order=order)
    sub = grid.subset(ok)
    b1, b2 = out["beta1"][ok], out["beta2"][ok]
    fy, f1, f2 = fm[ok, 0, 0], fm[ok, 1, 1], fm[ok, 2, 2]
    mean_y, mean_1, mean_2 = yv.mean(), x1v.mean(), x2v.mean()
    beta_star = np.column_stack([b1 * np.sqrt(f1 / fy), b2 * np.sqrt(f2 / fy)])
    if _response_mean_is_zero(yv):
        elasticity = None
    else:
        elasticity = np.column_stack([b1 * mean_1 / mean_y, b2 * mean_2 / mean_y])
    return DfaRegressionFit(
        grid=sub,
        beta1=b1,
        beta2=b2,
        var_beta1=out["var_beta1"][ok],
        var_beta2=out["var_beta2"][ok],
        residual_fluct=out["residual_fluct"][ok],
        r_squared_dfa=out["r_squared"][ok],
        beta_star_dfa=beta_star,
        elasticity_dfa=elasticity,
        implied_intercept=mean_y - b1 * mean_1 - b2 * mean_2,
        fluctuations=fluct,
        means=(float(mean_y), float(mean_1), float(mean_2)),
        n_obs=n_obs,
        degenerate_scales=degenerate,
    )

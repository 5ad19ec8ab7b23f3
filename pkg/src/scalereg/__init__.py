"""Multi-scale bivariate regression built on detrended fluctuation analysis."""

from .coefficients import (
    DccaMatrix,
    PartialCoefficientCurve,
    dcca_matrix,
    partial_corr_classic,
    rho_dcca,
    rho_pdcca,
)
from .errors import CollinearityError, DegenerateError
from .fluctuation import (
    FluctuationSet,
    SegmentLayout,
    dcca_covariance,
    detrend_segment,
    dfa_variance,
    fluctuation_set,
    segment_layout,
)
from .regression import DfaRegressionFit, OlsFit, dfa_regression, ols_fit, residual_series
from .series import (
    Profile,
    ScaleGrid,
    TimeSeries,
    build_profile,
    centered,
    default_scale_grid,
    log_scale_grid,
    mean,
)
from .significance import (
    McCriticalCurve,
    ScaleTStat,
    decide,
    mc_critical_pdcca,
    mc_critical_t,
    shuffle_series,
    t_statistics,
)
from .synthgen import (
    ArfimaSpec,
    BmfsSpec,
    arfima_generate,
    arfima_regression_sample,
    arfima_weights,
    bmfs_generate,
    bmfs_regression_sample,
    embed_in_noise,
    make_regression_dataset,
)
from .ingestion import Dataset, clean, load_csv, split_seasons, write_csv

__all__ = [
    "ArfimaSpec",
    "BmfsSpec",
    "CollinearityError",
    "Dataset",
    "DccaMatrix",
    "DegenerateError",
    "DfaRegressionFit",
    "FluctuationSet",
    "McCriticalCurve",
    "OlsFit",
    "PartialCoefficientCurve",
    "Profile",
    "ScaleGrid",
    "ScaleTStat",
    "SegmentLayout",
    "TimeSeries",
    "arfima_generate",
    "arfima_regression_sample",
    "arfima_weights",
    "bmfs_generate",
    "bmfs_regression_sample",
    "build_profile",
    "centered",
    "clean",
    "dcca_covariance",
    "dcca_matrix",
    "decide",
    "default_scale_grid",
    "detrend_segment",
    "dfa_regression",
    "dfa_variance",
    "embed_in_noise",
    "fluctuation_set",
    "load_csv",
    "log_scale_grid",
    "make_regression_dataset",
    "mc_critical_pdcca",
    "mc_critical_t",
    "mean",
    "ols_fit",
    "partial_corr_classic",
    "residual_series",
    "rho_dcca",
    "rho_pdcca",
    "segment_layout",
    "shuffle_series",
    "split_seasons",
    "t_statistics",
    "write_csv",
]

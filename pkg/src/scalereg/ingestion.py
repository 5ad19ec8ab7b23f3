"""Loading, gap cleaning and seasonal splitting of delimited series files.

Seasons are meteorological: winter is December through February, so the
December of one year joins the January and February that follow it.
Slices concatenate all years of a season in time order.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .series import TimeSeries

logger = logging.getLogger(__name__)

SEASON_MONTHS = {
    "winter": (12, 1, 2),
    "spring": (3, 4, 5),
    "summer": (6, 7, 8),
    "fall": (9, 10, 11),
}
SEASONS = tuple(SEASON_MONTHS)
DEFAULT_MAX_GAP = 6
MAX_DROP_FRACTION = 0.2


class MissingColumnError(KeyError):
    def __str__(self) -> str:
        return str(self.args[0])


@dataclass(frozen=True)
class Dataset:
    """Equal-length named columns plus optional timestamps.

    Columns may hold NaN until ``clean`` has run; ``series`` refuses those.
    """

    columns: dict
    timestamps: pd.DatetimeIndex | None = None
    source: str = ""
    log: tuple = field(default=())

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError("columns differ in length")
        if self.timestamps is not None:
            if len(self.timestamps) != len(self):
                raise ValueError("timestamps differ in length from columns")
            if len(self.timestamps) > 1 and not (np.diff(self.timestamps.asi8) > 0).all():
                raise ValueError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def series(self, name: str) -> TimeSeries:
        if name not in self.columns:
            raise MissingColumnError(f"column {name!r} not in dataset; have {self.names}")
        return TimeSeries(self.columns[name], name)

    def take(self, rows: np.ndarray, note: str | None = None) -> "Dataset":
        """Dataset restricted to ``rows`` (boolean mask or integer index)."""
        cols = {k: np.asarray(v)[rows] for k, v in self.columns.items()}
        ts = None if self.timestamps is None else self.timestamps[rows]
        log = self.log + ((note,) if note else ())
        return Dataset(cols, ts, self.source, log)

    def has_missing(self) -> bool:
        return any(np.isnan(v).any() for v in self.columns.values())


def load_csv(
    path,
    columns: Sequence[str] | None = None,
    timestamp_col: str | None = None,
    delimiter: str = ",",
) -> Dataset:
    """Read a headed, UTF-8 delimited file.

    ``columns`` selects numeric columns (default: every column except the
    timestamp).  Unparseable or blank numeric cells become NaN and are
    logged for ``clean``; rows with an unparseable timestamp are dropped.
    """
    path = Path(path)
    frame = pd.read_csv(path, sep=delimiter, dtype=str, keep_default_na=False, encoding="utf-8")
    frame.columns = [c.strip() for c in frame.columns]
    wanted = list(columns) if columns is not None else [c for c in frame.columns if c != timestamp_col]
    for name in wanted + ([timestamp_col] if timestamp_col else []):
        if name not in frame.columns:
            raise MissingColumnError(f"column {name!r} not found in {path}")
    if len(set(wanted)) != len(wanted):
        raise ValueError("duplicate column selection")

    log: list[str] = []
    timestamps = None
    if timestamp_col:
        stamps = pd.to_datetime(frame[timestamp_col].str.strip(), errors="coerce", format="ISO8601")
        bad = stamps.isna().to_numpy()
        if bad.any():
            log.append(f"dropped {int(bad.sum())} rows with unparseable timestamps")
            frame, stamps = frame[~bad], stamps[~bad]
        order = np.argsort(stamps.to_numpy(), kind="stable")
        frame, stamps = frame.iloc[order], stamps.iloc[order]
        dup = stamps.duplicated(keep="first").to_numpy()
        if dup.any():
            log.append(f"dropped {int(dup.sum())} rows with duplicate timestamps")
            frame, stamps = frame[~dup], stamps[~dup]
        timestamps = pd.DatetimeIndex(stamps)

    cols = {}
    for name in wanted:
        raw = frame[name].str.strip()
        values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
        values[~np.isfinite(values)] = np.nan
        missing = np.flatnonzero(np.isnan(values))
        if missing.size:
            log.append(f"column {name!r}: {missing.size} missing or unparseable cells at rows {missing[:10].tolist()}")
        cols[name] = values
    if len(frame) == 0:
        raise ValueError(f"no valid rows in {path}")
    if all(np.isnan(v).all() for v in cols.values()):
        raise ValueError(f"no valid numeric values in {path}")
    for line in log:
        logger.info("%s: %s", path.name, line)
    return Dataset(cols, timestamps, str(path), tuple(log))


def write_csv(dataset: Dataset, path, timestamp_col: str = "timestamp", delimiter: str = ",") -> None:
    """Write with full float precision so ``load_csv`` reproduces values exactly."""
    frame = pd.DataFrame(dataset.columns)
    if dataset.timestamps is not None:
        frame.insert(0, timestamp_col, dataset.timestamps.strftime("%Y-%m-%dT%H:%M:%S"))
    frame.to_csv(path, sep=delimiter, index=False, float_format="%.17g", na_rep="")


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open ``[start, stop)`` index runs where ``mask`` is True."""
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return list(zip(edges[::2], edges[1::2]))


def clean(dataset: Dataset, max_gap: int = DEFAULT_MAX_GAP) -> Dataset:
    """Fill short gaps by linear interpolation and drop rows inside long ones.

    A run of at most ``max_gap`` missing values with valid neighbours on
    both sides is interpolated (in row-index space).  Longer runs, and runs
    touching either end, drop the affected rows from every column.  Fails
    if more than 20% of rows would be dropped.
    """
    if max_gap < 0:
        raise ValueError("max_gap must be >= 0")
    if not dataset.has_missing():
        return dataset
    n_rows = len(dataset)
    cols = {k: np.array(v, dtype=float) for k, v in dataset.columns.items()}
    drop = np.zeros(n_rows, dtype=bool)
    log = list(dataset.log)
    for name, values in cols.items():
        for start, stop in _runs(np.isnan(values)):
            length = stop - start
            if length <= max_gap and start > 0 and stop < n_rows:
                lo, hi = values[start - 1], values[stop]
                frac = np.arange(1, length + 1) / (length + 1)
                values[start:stop] = lo + frac * (hi - lo)
                log.append(f"interpolated {name!r} rows {start}..{stop - 1}")
            else:
                drop[start:stop] = True
                log.append(f"dropping rows {start}..{stop - 1} (gap of {length} in {name!r})")
    n_drop = int(drop.sum())
    if n_drop > MAX_DROP_FRACTION * n_rows:
        raise ValueError(f"data too sparse: {n_drop} of {n_rows} rows would be dropped")
    out = Dataset(cols, dataset.timestamps, dataset.source, tuple(log))
    if n_drop:
        out = out.take(~drop, f"dropped {n_drop} rows in long gaps")
    if len(out) == 0:
        raise ValueError("no rows left after cleaning")
    return out


@dataclass(frozen=True)
class SeasonalSlice:
    season: str
    dataset: Dataset


class SeasonSplit(Mapping):
    """Read-only mapping season -> SeasonalSlice; empty seasons raise on access."""

    def __init__(self, slices: dict, masks: dict):
        self._slices = slices
        self.masks = masks

    def __getitem__(self, season: str) -> SeasonalSlice:
        if season not in SEASON_MONTHS:
            raise KeyError(f"unknown season {season!r}")
        if season not in self._slices:
            raise ValueError(f"season {season!r} has no rows")
        return self._slices[season]

    def __iter__(self):
        return iter(s for s in SEASONS if s in self._slices)

    def __len__(self) -> int:
        return len(self._slices)


def season_of_months(months: np.ndarray) -> np.ndarray:
    out = np.empty(months.shape, dtype=object)
    for season, ms in SEASON_MONTHS.items():
        out[np.isin(months, ms)] = season
    return out


def split_seasons(dataset: Dataset) -> SeasonSplit:
    if dataset.timestamps is None:
        raise ValueError("seasonal split needs timestamps")
    labels = season_of_months(dataset.timestamps.month.to_numpy())
    slices, masks = {}, {}
    for season in SEASONS:
        mask = labels == season
        masks[season] = mask
        if mask.any():
            slices[season] = SeasonalSlice(season, dataset.take(mask, f"season {season}"))
    return SeasonSplit(slices, masks)


def season_slice(dataset: Dataset, season: str) -> Dataset:
    """The rows of one season, or the whole dataset for ``"all"``."""
    if season == "all":
        return dataset
    return split_seasons(dataset)[season].dataset

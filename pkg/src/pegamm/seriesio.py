"""Raw price-series ingestion: CSV parsing, forward-fill resampling, cross rates.

Input CSV schema is `timestamp,price` with epoch-second timestamps and
positive decimal prices.  Resampling places a uniform grid from the first to
the last timestamp and forward-fills the last observation at or before each
grid point (no interpolation, no lookahead).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

SECONDS_PER_DAY = 86_400.0


class SeriesFormatError(ValueError):
    """Malformed series CSV; message names file, line and field."""


@dataclass
class RawSeries:
    """Price observations at epoch-second timestamps."""

    timestamps: np.ndarray
    prices: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.prices = np.asarray(self.prices, dtype=float)
        if self.timestamps.shape != self.prices.shape or self.timestamps.ndim != 1:
            raise ValueError("timestamps and prices must be equal-length 1-d arrays")
        if self.timestamps.size == 0:
            raise ValueError("series is empty")
        if np.any(np.diff(self.timestamps) < 0):
            raise ValueError("timestamps must be non-decreasing")
        if np.any(~(self.prices > 0)):
            bad = int(np.flatnonzero(~(self.prices > 0))[0])
            raise ValueError(f"prices must be positive; offending index {bad}")

    def times_days(self) -> np.ndarray:
        """Times in days since the first observation."""
        return (self.timestamps - self.timestamps[0]) / SECONDS_PER_DAY


def read_series_csv(path, label: str = "") -> RawSeries:
    timestamps: list[float] = []
    prices: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (lineno == 1 and row[0].strip().lower() == "timestamp"):
                continue
            if len(row) < 2:
                raise SeriesFormatError(f"{path}:{lineno}: expected 'timestamp,price'")
            try:
                ts = float(row[0])
            except ValueError:
                raise SeriesFormatError(
                    f"{path}:{lineno}: field 'timestamp' not numeric: {row[0]!r}") from None
            try:
                px = float(row[1])
            except ValueError:
                raise SeriesFormatError(
                    f"{path}:{lineno}: field 'price' not numeric: {row[1]!r}") from None
            timestamps.append(ts)
            prices.append(px)
    if not timestamps:
        raise SeriesFormatError(f"{path}: no data rows")
    try:
        return RawSeries(timestamps=np.array(timestamps), prices=np.array(prices),
                         label=label or str(path))
    except ValueError as exc:
        raise SeriesFormatError(f"{path}: {exc}") from exc


def write_series_csv(series: RawSeries, path) -> None:
    data = np.column_stack([series.timestamps, series.prices])
    np.savetxt(path, data, delimiter=",", header="timestamp,price",
               comments="", fmt="%.17g")


def resample_ffill(series: RawSeries, step: float) -> RawSeries:
    """Uniform grid from first to last timestamp; last observation carried
    forward at each grid point."""
    if step <= 0:
        raise ValueError("step must be positive")
    t0, t1 = series.timestamps[0], series.timestamps[-1]
    n = int(np.floor((t1 - t0) / step + 1e-9))
    grid = t0 + step * np.arange(n + 1)
    idx = np.searchsorted(series.timestamps, grid, side="right") - 1
    return RawSeries(timestamps=grid, prices=series.prices[idx], label=series.label)


def cross_rate(numerator: RawSeries, denominator: RawSeries) -> RawSeries:
    """Pointwise ratio on the common grid of two same-step resampled series."""
    lo = max(numerator.timestamps[0], denominator.timestamps[0])
    hi = min(numerator.timestamps[-1], denominator.timestamps[-1])
    if hi < lo:
        raise ValueError("series do not overlap in time")
    masks = []
    for s in (numerator, denominator):
        m = (s.timestamps >= lo - 1e-9) & (s.timestamps <= hi + 1e-9)
        masks.append(m)
    t_num = numerator.timestamps[masks[0]]
    t_den = denominator.timestamps[masks[1]]
    if t_num.shape != t_den.shape or not np.allclose(t_num, t_den, rtol=0, atol=1e-6):
        raise ValueError("series must be resampled to the same grid before crossing")
    den = denominator.prices[masks[1]]
    if np.any(den == 0.0):
        raise ValueError("zero denominator price")
    label = f"{numerator.label}/{denominator.label}" if numerator.label else ""
    return RawSeries(timestamps=t_num, prices=numerator.prices[masks[0]] / den,
                     label=label)

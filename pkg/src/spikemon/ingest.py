"""Turn panel or sensor data into a matrix stream.

Two recipes are supported:

* panel data (one reading per location and day): remove a smoothed
  calendar-day profile, then form the outer product ``V_t V_t^T`` of each
  day's residual vector;
* an already-aggregated stream of symmetric matrices: subtract the
  entrywise mean of an initial baseline window.

Panel CSV files have header ``date,location,value`` with ISO dates; an empty
``value`` marks a missing reading.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ParseError, SymMatrix, open_output

__all__ = [
    "PanelSeries",
    "SeasonalModel",
    "read_panel",
    "write_panel",
    "fill_missing",
    "fit_seasonal",
    "deseasonalize",
    "outer_product_stream",
    "center_by_baseline",
]

PANEL_HEADER = ("date", "location", "value")


@dataclass(frozen=True)
class PanelSeries:
    """Readings ``values[d, k]`` for day ``dates[d]`` at ``locations[k]``; NaN is missing."""

    locations: tuple
    dates: tuple
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "locations", tuple(str(s) for s in self.locations))
        object.__setattr__(self, "dates", tuple(self.dates))
        vals = np.array(self.values, dtype=np.float64)
        if vals.ndim != 2 or vals.shape != (len(self.dates), len(self.locations)):
            raise ValueError(
                f"values must have shape ({len(self.dates)}, {len(self.locations)}), "
                f"got {vals.shape}")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("dates must be strictly increasing")
        if np.isinf(vals).any():
            raise ValueError("readings must be finite or missing")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def missing_cells(self) -> list:
        return [(self.dates[d], self.locations[k])
                for d, k in zip(*np.nonzero(np.isnan(self.values)))]


@dataclass(frozen=True)
class SeasonalModel:
    period: int
    window: int
    profile: np.ndarray  # (period, locations)
    locations: tuple

    def __post_init__(self):
        prof = np.asarray(self.profile, dtype=np.float64)
        if prof.shape != (self.period, len(self.locations)):
            raise ValueError("profile must have one row per day of the period")


def _is_leap_day(d: dt.date) -> bool:
    return d.month == 2 and d.day == 29


def _noleap_ordinal(d: dt.date) -> int:
    """Day count in a 365-day calendar (Feb 29 never occurs)."""
    doy = d.timetuple().tm_yday
    if d.month > 2 and _is_leap(d.year):
        doy -= 1
    return d.year * 365 + doy - 1


def _is_leap(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def _drop_leap_days(series: PanelSeries) -> PanelSeries:
    keep = [i for i, d in enumerate(series.dates) if not _is_leap_day(d)]
    if len(keep) == len(series.dates):
        return series
    return PanelSeries(series.locations, [series.dates[i] for i in keep],
                       series.values[keep])


def read_panel(path) -> PanelSeries:
    """Read a long-format panel CSV; absent (date, location) pairs are missing."""
    cells = {}
    locs: dict[str, None] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != PANEL_HEADER:
            raise ParseError(f"expected header {','.join(PANEL_HEADER)}", 1)
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", reader.line_num)
            try:
                day = dt.date.fromisoformat(row[0].strip())
                text = row[2].strip()
                v = float(text) if text else np.nan
            except ValueError as exc:
                raise ParseError(f"bad field ({exc})", reader.line_num) from None
            loc = row[1].strip()
            if (day, loc) in cells:
                raise ParseError(f"duplicate reading for {day} at {loc}", reader.line_num)
            locs.setdefault(loc)
            cells[day, loc] = v
    dates = sorted({d for d, _ in cells})
    locations = list(locs)
    values = np.full((len(dates), len(locations)), np.nan)
    d_idx = {d: i for i, d in enumerate(dates)}
    l_idx = {s: k for k, s in enumerate(locations)}
    for (d, s), v in cells.items():
        values[d_idx[d], l_idx[s]] = v
    return PanelSeries(locations, dates, values)


def write_panel(series: PanelSeries, path) -> None:
    with open_output(path) as fh:
        w = csv.writer(fh)
        w.writerow(PANEL_HEADER)
        for d, row in zip(series.dates, series.values):
            for loc, v in zip(series.locations, row.tolist()):
                w.writerow([d.isoformat(), loc, "" if np.isnan(v) else repr(v)])


def fill_missing(series: PanelSeries) -> PanelSeries:
    """Linear interpolation in time per location; ends take the nearest reading."""
    vals = series.values.copy()
    x = np.array([d.toordinal() for d in series.dates], dtype=np.float64)
    for k in range(vals.shape[1]):
        col = vals[:, k]
        bad = np.isnan(col)
        if bad.all():
            raise ValueError(f"location {series.locations[k]} has no readings")
        if bad.any():
            col[bad] = np.interp(x[bad], x[~bad], col[~bad])
    return PanelSeries(series.locations, series.dates, vals)


def _require_complete(series: PanelSeries, what: str) -> None:
    missing = series.missing_cells()
    if missing:
        d, loc = missing[0]
        raise ValueError(f"{what}: missing reading on {d.isoformat()} at {loc} "
                         f"({len(missing)} missing in total)")


def _calendar_index(dates: Sequence[dt.date], period: int) -> np.ndarray:
    return np.array([_noleap_ordinal(d) % period for d in dates])


def fit_seasonal(history: PanelSeries, period: int = 365, window: int = 30,
                 interpolate: bool = False) -> SeasonalModel:
    """Calendar-day profile averaged across years, then circularly smoothed.

    The moving average of an even ``window`` spans offsets
    ``-window//2 .. window//2 - 1``.  February 29 is dropped.
    """
    if period < 1 or window < 1:
        raise ValueError("period and window must be positive")
    if window > period:
        raise ValueError("window cannot exceed period")
    history = _drop_leap_days(history)
    if interpolate:
        history = fill_missing(history)
    _require_complete(history, "history")
    idx = _calendar_index(history.dates, period)
    counts = np.bincount(idx, minlength=period)
    if (counts == 0).any():
        raise ValueError(
            f"history does not cover a full period: {int((counts == 0).sum())} "
            f"of {period} calendar days have no data")
    n_loc = len(history.locations)
    raw = np.zeros((period, n_loc))
    np.add.at(raw, idx, history.values)
    raw /= counts[:, None]

    offsets = np.arange(-(window // 2), window - window // 2)
    smooth = np.zeros_like(raw)
    for o in offsets:
        smooth += np.roll(raw, -o, axis=0)
    smooth /= window
    return SeasonalModel(period, window, smooth, history.locations)


def deseasonalize(series: PanelSeries, model: SeasonalModel,
                  interpolate: bool = False) -> PanelSeries:
    """Subtract the calendar-day profile; February 29 readings are dropped."""
    if tuple(series.locations) != tuple(model.locations):
        raise ValueError("series and seasonal model have different locations")
    series = _drop_leap_days(series)
    if interpolate:
        series = fill_missing(series)
    idx = _calendar_index(series.dates, model.period)
    return PanelSeries(series.locations, series.dates,
                       series.values - np.asarray(model.profile)[idx])


def outer_product_stream(series: PanelSeries) -> list:
    """``V_t V_t^T`` for every day ``t``."""
    _require_complete(series, "outer products")
    n = len(series.locations)
    iu0, iu1 = np.triu_indices(n)
    return [SymMatrix(n, v[iu0] * v[iu1]) for v in series.values]


def center_by_baseline(stream: Sequence[SymMatrix], baseline_len: int) -> list:
    """Subtract the mean of the first ``baseline_len`` matrices from the rest."""
    stream = list(stream)
    if baseline_len < 1:
        raise ValueError("baseline_len must be positive")
    if baseline_len >= len(stream):
        raise ValueError(
            f"baseline of {baseline_len} leaves nothing of a stream of {len(stream)}")
    n = stream[0].n
    if any(s.n != n for s in stream):
        raise ValueError("all matrices must share one dimension")
    packed = np.stack([s.packed for s in stream])
    base = packed[:baseline_len].mean(axis=0)
    return [SymMatrix(n, row - base) for row in packed[baseline_len:]]

"""Grid geometry, latitude weights, field containers and climatology."""
from __future__ import annotations

import dataclasses
import datetime as dt
from collections.abc import Iterable, Sequence
from typing import Optional, Union

import numpy as np
from scipy.special import cosdg

from .errors import ArgumentError, CoverageError, DegeneracyError, ShapeError

N_SLOTS = 366
LEAP_SLOT = 366
FEB28_SLOT = 59


@dataclasses.dataclass(frozen=True, eq=False)
class GridSpec:
    """Regular lat-lon grid. ``lats`` and ``lons`` are in degrees."""

    lats: np.ndarray
    lons: np.ndarray

    def __post_init__(self):
        lats = np.asarray(self.lats, dtype=np.float64).copy()
        lons = np.asarray(self.lons, dtype=np.float64).copy()
        if lats.ndim != 1 or lons.ndim != 1:
            raise ArgumentError("lats and lons must be 1-D")
        if lats.size < 2 or lons.size < 2:
            raise ArgumentError(f"grid must be at least 2x2, got {lats.size}x{lons.size}")
        if np.any(np.abs(lats) > 90.0):
            raise ArgumentError("latitudes must lie in [-90, 90]")
        d = np.diff(lats)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ArgumentError("latitudes must be strictly monotonic")
        step = np.mod(np.diff(lons), 360.0)
        if np.any(step == 0) or not np.allclose(step, step[0], rtol=0, atol=1e-6):
            raise ArgumentError("longitudes must be uniformly spaced")
        lats.flags.writeable = False
        lons.flags.writeable = False
        object.__setattr__(self, "lats", lats)
        object.__setattr__(self, "lons", lons)

    @classmethod
    def regular(cls, n_lat: int = 121, n_lon: int = 240) -> "GridSpec":
        """Equiangular grid from +90 to -90 inclusive, longitudes from 0."""
        return cls(np.linspace(90.0, -90.0, n_lat), np.arange(n_lon) * (360.0 / n_lon))

    @property
    def n_lat(self) -> int:
        return self.lats.size

    @property
    def n_lon(self) -> int:
        return self.lons.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_lat, self.n_lon)

    @property
    def north_to_south(self) -> bool:
        return bool(self.lats[0] > self.lats[-1])

    def flipped(self) -> "GridSpec":
        return GridSpec(self.lats[::-1], self.lons)

    def __eq__(self, other):
        if not isinstance(other, GridSpec):
            return NotImplemented
        return np.array_equal(self.lats, other.lats) and np.array_equal(self.lons, other.lons)

    def __hash__(self):
        return hash((self.lats.tobytes(), self.lons.tobytes()))


@dataclasses.dataclass(frozen=True, eq=False)
class GridField:
    """One 2-D scalar field. NaN marks missing cells.

    Latitude order is normalised to north-to-south on construction.
    """

    spec: GridSpec
    values: np.ndarray
    variable: str = "x"
    level: str = ""
    valid_time: dt.date = dt.date(2000, 1, 1)
    lead_days: int = 0
    member: Optional[int] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != self.spec.shape:
            raise ShapeError(f"values shape {values.shape} does not match grid {self.spec.shape}")
        if self.lead_days < 0:
            raise ArgumentError("lead_days must be >= 0")
        spec = self.spec
        if not spec.north_to_south:
            spec = spec.flipped()
            values = values[::-1].copy()
        values.flags.writeable = False
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "values", values)
        if isinstance(self.valid_time, dt.datetime):
            object.__setattr__(self, "valid_time", self.valid_time.date())

    @property
    def name(self) -> str:
        return f"{self.variable}-{self.level}" if self.level else self.variable

    @property
    def init_date(self) -> dt.date:
        return self.valid_time - dt.timedelta(days=self.lead_days)

    @property
    def mask(self) -> np.ndarray:
        """True where data is missing."""
        return np.isnan(self.values)

    def replace(self, **changes) -> "GridField":
        return dataclasses.replace(self, **changes)


ArrayOrField = Union[GridField, np.ndarray]


def as_array(x: ArrayOrField) -> np.ndarray:
    if isinstance(x, GridField):
        return x.values
    return np.asarray(x, dtype=np.float64)


def check_pair(a: ArrayOrField, b: ArrayOrField) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(a, GridField) and isinstance(b, GridField) and a.spec != b.spec:
        raise ShapeError("fields are on different grids")
    x, y = as_array(a), as_array(b)
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {y.shape}")
    return x, y


def build_lat_weights(grid: Union[GridSpec, Sequence[float], np.ndarray]) -> np.ndarray:
    """Per-latitude weights ``cos(lat) / mean(cos(lat))``.

    Accepts a GridSpec or a bare sequence of latitudes in degrees. Rows at
    exactly +-90 degrees get weight 0.
    """
    lats = grid.lats if isinstance(grid, GridSpec) else np.atleast_1d(np.asarray(grid, dtype=np.float64))
    # cosdg is exact at special angles (cos 60 = 0.5, cos 90 = 0)
    c = np.clip(cosdg(lats), 0.0, None) + 0.0
    m = c.mean()
    if m <= 0:
        raise DegeneracyError("degenerate grid: every latitude is polar")
    w = c / m
    w.flags.writeable = False
    return w


def weighted_mean(x: np.ndarray, w: np.ndarray) -> float:
    """Latitude-weighted grid mean of a 2-D array.

    NaN cells are dropped and the weights renormalised over the remaining
    cells; with no NaNs this equals ``sum(w*x) / (n_lat*n_lon)`` because the
    weights average to one.
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if x.ndim != 2 or w.shape != (x.shape[0],):
        raise ShapeError(f"weights of shape {w.shape} do not match field {x.shape}")
    ww = np.broadcast_to(w[:, None], x.shape)
    valid = ~np.isnan(x)
    if not valid.all():
        ww = np.where(valid, ww, 0.0)
        x = np.where(valid, x, 0.0)
    den = ww.sum()
    if den <= 0:
        raise DegeneracyError("no valid weighted cells")
    return float((ww * x).sum() / den)


def day_slot(date: dt.date) -> int:
    """Day-of-year slot in 1..366.

    Slots 1..365 follow the non-leap calendar (Mar 1 is always slot 60) and
    Feb 29 has its own slot 366, so each slot is one calendar day.
    """
    if date.month == 2 and date.day == 29:
        return LEAP_SLOT
    return dt.date(2001, date.month, date.day).timetuple().tm_yday


def slot_label(slot: int) -> str:
    if slot == LEAP_SLOT:
        return "Feb-29"
    return (dt.date(2001, 1, 1) + dt.timedelta(days=slot - 1)).strftime("%b-%d")


@dataclasses.dataclass(frozen=True, eq=False)
class Climatology:
    """Per-pixel day-of-year mean and (population) standard deviation.

    ``mean`` and ``std`` have shape ``(366, n_lat, n_lon)``; index ``slot-1``.
    """

    spec: GridSpec
    mean: np.ndarray
    std: np.ndarray
    variable: str = "x"
    level: str = ""
    source_years: tuple = ()

    def __post_init__(self):
        shape = (N_SLOTS,) + self.spec.shape
        if self.mean.shape != shape or self.std.shape != shape:
            raise ShapeError(f"climatology arrays must have shape {shape}")
        if np.any(self.std < 0):
            raise ArgumentError("climatology std must be non-negative")

    @property
    def name(self) -> str:
        return f"{self.variable}-{self.level}" if self.level else self.variable

    def mean_for(self, date: dt.date) -> np.ndarray:
        return self.mean[day_slot(date) - 1]

    def std_for(self, date: dt.date) -> np.ndarray:
        return self.std[day_slot(date) - 1]


def _circular_smooth(arr: np.ndarray, window: int) -> np.ndarray:
    # arr: (365, ...) in calendar order
    half = window // 2
    padded = np.concatenate([arr[-half:], arr, arr[:half]], axis=0)
    csum = np.cumsum(padded, axis=0, dtype=np.float64)
    csum = np.concatenate([np.zeros((1,) + arr.shape[1:]), csum], axis=0)
    return (csum[window:] - csum[:-window]) / window


def build_climatology(fields: Iterable[GridField], window: int = 1) -> Climatology:
    """Day-of-year climatology from daily truth fields spanning several years.

    Every calendar day needs at least two samples. The Feb-29 slot uses real
    leap-day samples when there are two or more and otherwise copies Feb-28.
    ``window`` (odd) applies a circular running mean over the 365 regular
    slots; the default of 1 keeps raw means.
    """
    if window < 1 or window % 2 == 0:
        raise ArgumentError("window must be a positive odd integer")
    spec = variable = level = None
    count = mean = m2 = None
    n_per_slot = np.zeros(N_SLOTS, dtype=np.int64)
    years = set()
    for f in fields:
        if spec is None:
            spec, variable, level = f.spec, f.variable, f.level
            shape = (N_SLOTS,) + spec.shape
            count = np.zeros(shape)
            mean = np.zeros(shape)
            m2 = np.zeros(shape)
        elif f.spec != spec or f.variable != variable or f.level != level:
            raise ShapeError(f"field {f.name}@{f.valid_time} does not match {variable}-{level} grid")
        i = day_slot(f.valid_time) - 1
        n_per_slot[i] += 1
        years.add(f.valid_time.year)
        x = f.values
        ok = ~np.isnan(x)
        # Welford update, per pixel
        count[i][ok] += 1
        delta = np.where(ok, x - mean[i], 0.0)
        mean[i] += np.where(ok, delta / np.maximum(count[i], 1), 0.0)
        m2[i] += np.where(ok, delta * (np.where(ok, x, 0.0) - mean[i]), 0.0)
    if spec is None:
        raise CoverageError("no fields supplied")
    for slot in range(1, N_SLOTS):
        if n_per_slot[slot - 1] < 2:
            raise CoverageError(
                f"day-of-year {slot} ({slot_label(slot)}) has {n_per_slot[slot - 1]} sample(s); need >= 2"
            )
    with np.errstate(invalid="ignore", divide="ignore"):
        std = np.sqrt(np.where(count > 0, m2 / count, np.nan))
    mean = np.where(count > 0, mean, np.nan)
    if window > 1:
        mean[: N_SLOTS - 1] = _circular_smooth(mean[: N_SLOTS - 1], window)
    if n_per_slot[LEAP_SLOT - 1] < 2:
        mean[LEAP_SLOT - 1] = mean[FEB28_SLOT - 1]
        std[LEAP_SLOT - 1] = std[FEB28_SLOT - 1]
    return Climatology(spec, mean, np.maximum(std, 0.0), variable, level, tuple(sorted(years)))


def anomaly(field: GridField, clim: Climatology) -> GridField:
    """Subtract the day-of-year climatological mean; metadata is kept."""
    if field.spec != clim.spec:
        raise ShapeError("field and climatology are on different grids")
    if (field.variable, field.level) != (clim.variable, clim.level):
        raise ShapeError(f"climatology is for {clim.name}, field is {field.name}")
    return field.replace(values=field.values - clim.mean_for(field.valid_time))

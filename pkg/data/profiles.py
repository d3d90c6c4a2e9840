"""
Event time-series model: grids, power and shedding series, CSV ingestion,
resampling, shedding computation and energy integration.

All power values are megawatts and all energies megawatt-hours. Series are
piecewise constant: sample i holds over [start + i*step, start + (i+1)*step).
"""

import io
import logging
import math
import os
from dataclasses import dataclass
from datetime import timedelta
from typing import Iterable, List, Optional, Tuple, TypeVar, Union

import numpy as np
import pandas as pd

from core.errors import ProfileError

logger = logging.getLogger(__name__)

MW_PER_GW = 1000.0
SECONDS_PER_HOUR = 3600.0
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"

# Unserved energy at or below this counts as fully served.
ZERO_ENS_MWH = 1e-3

StepLike = Union[int, float, timedelta, pd.Timedelta, str]


def _step_seconds(step: StepLike) -> float:
    if isinstance(step, (int, float, np.integer, np.floating)):
        return float(step)
    return pd.Timedelta(step).total_seconds()


@dataclass(frozen=True)
class TimeGrid:
    """Uniform UTC time grid. `step` is in seconds."""
    start: pd.Timestamp
    step: float
    count: int

    def __post_init__(self):
        start = pd.Timestamp(self.start)
        start = start.tz_localize("UTC") if start.tzinfo is None else start.tz_convert("UTC")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "step", float(self.step))
        if not self.step > 0:
            raise ProfileError(f"grid step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 1:
            raise ProfileError(f"grid count must be a positive integer, got {self.count}")
        object.__setattr__(self, "count", int(self.count))

    @property
    def step_hours(self) -> float:
        return self.step / SECONDS_PER_HOUR

    @property
    def span_seconds(self) -> float:
        return self.step * self.count

    @property
    def span_hours(self) -> float:
        return self.span_seconds / SECONDS_PER_HOUR

    def index(self) -> pd.DatetimeIndex:
        return pd.date_range(self.start, periods=self.count, freq=pd.Timedelta(seconds=self.step))

    def hours(self) -> np.ndarray:
        """Offsets of every sample from `start`, in hours."""
        return np.arange(self.count, dtype=float) * self.step_hours

    def rescaled(self, new_step: float) -> "TimeGrid":
        return TimeGrid(self.start, new_step, round(self.span_seconds / new_step))


@dataclass(frozen=True, eq=False)
class _GridSeries:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or len(values) != self.grid.count:
            raise ProfileError(
                f"{type(self).__name__} has {values.size} samples, grid expects {self.grid.count}"
            )
        if not np.all(np.isfinite(values)):
            raise ProfileError(f"{type(self).__name__} contains non-finite values")
        if np.any(values < 0):
            raise ProfileError(f"{type(self).__name__} contains negative values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def peak(self) -> float:
        return float(self.values.max())

    def to_series(self, name: str = None) -> pd.Series:
        return pd.Series(self.values, index=self.grid.index(), name=name)


@dataclass(frozen=True, eq=False)
class PowerSeries(_GridSeries):
    """Power samples in MW (available capacity, demand, served load or discharge)."""


@dataclass(frozen=True, eq=False)
class SheddingSeries(_GridSeries):
    """Unserved power in MW."""


SeriesT = TypeVar("SeriesT", bound=_GridSeries)


@dataclass(frozen=True, eq=False)
class EventProfile:
    capacity: PowerSeries
    demand: PowerSeries

    def __post_init__(self):
        if self.capacity.grid != self.demand.grid:
            raise ProfileError("capacity and demand series are on different grids")

    @property
    def grid(self) -> TimeGrid:
        return self.demand.grid

    @classmethod
    def from_arrays(cls, start, step: StepLike, capacity_mw, demand_mw) -> "EventProfile":
        capacity_mw = np.asarray(capacity_mw, dtype=float)
        demand_mw = np.asarray(demand_mw, dtype=float)
        if capacity_mw.shape != demand_mw.shape:
            raise ProfileError(
                f"capacity has {capacity_mw.size} samples but demand has {demand_mw.size}"
            )
        grid = TimeGrid(start, _step_seconds(step), len(demand_mw))
        return cls(PowerSeries(grid, capacity_mw), PowerSeries(grid, demand_mw))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"capacity_mw": self.capacity.values, "demand_mw": self.demand.values},
            index=self.grid.index().rename("timestamp"),
        )


@dataclass(frozen=True)
class EnergyQuantity:
    value_mwh: float

    def __post_init__(self):
        if not math.isfinite(self.value_mwh) or self.value_mwh < 0:
            raise ProfileError(f"energy must be finite and non-negative, got {self.value_mwh}")

    @property
    def gwh(self) -> float:
        return self.value_mwh / MW_PER_GW

    @property
    def kwh(self) -> float:
        return self.value_mwh * 1000.0

    @classmethod
    def from_gwh(cls, gwh: float) -> "EnergyQuantity":
        return cls(gwh * MW_PER_GW)


@dataclass(frozen=True)
class ProfileSchema:
    """Column mapping for profile CSVs."""
    timestamp: str = "timestamp"
    capacity: str = "capacity_mw"
    demand: str = "demand_mw"
    unit: str = "MW"

    def __post_init__(self):
        if self.unit not in ("MW", "GW"):
            raise ProfileError(f"unit must be 'MW' or 'GW', got '{self.unit}'")

    @classmethod
    def gigawatts(cls) -> "ProfileSchema":
        return cls(capacity="capacity_gw", demand="demand_gw", unit="GW")

    @property
    def scale_to_mw(self) -> float:
        return MW_PER_GW if self.unit == "GW" else 1.0


@dataclass(frozen=True)
class SheddingStatistics:
    peak_mw: float
    mean_mw: float
    shedding_hours: float
    peak_to_mean: float


# --- Ingestion ---

def _read_text(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as f:
            return f.read()
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8")
    data = source.read()
    return data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data


def _data_lines(text: str) -> List[Tuple[int, str]]:
    return [
        (number, line)
        for number, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]


def _parse_numeric(frame: pd.DataFrame, column: str, line_numbers: np.ndarray) -> np.ndarray:
    raw = frame[column].str.strip()
    missing = raw == ""
    if missing.any():
        row = int(np.argmax(missing.to_numpy()))
        raise ProfileError(f"missing {column} value", line=int(line_numbers[row]))
    parsed = pd.to_numeric(raw, errors="coerce")
    bad = parsed.isna() | ~np.isfinite(parsed.fillna(0.0))
    if bad.any():
        row = int(np.argmax(bad.to_numpy()))
        raise ProfileError(f"{column} value '{raw.iloc[row]}' is not a finite number", line=int(line_numbers[row]))
    negative = parsed < 0
    if negative.any():
        row = int(np.argmax(negative.to_numpy()))
        raise ProfileError(f"negative {column} value {parsed.iloc[row]}", line=int(line_numbers[row]))
    return parsed.to_numpy(dtype=float)


def load_profile(source, schema: ProfileSchema = None) -> EventProfile:
    """
    Parse a profile CSV (path, bytes or file object) into a validated EventProfile.

    Lines starting with '#' are provenance comments and are skipped. Error
    messages carry the 1-based line number of the offending row in the file.
    """
    schema = schema or ProfileSchema()
    lines = _data_lines(_read_text(source))
    if not lines:
        raise ProfileError("profile is empty")

    header_line, header = lines[0]
    columns = [c.strip() for c in header.split(",")]
    required = [schema.timestamp, schema.capacity, schema.demand]
    missing = [c for c in required if c not in columns]
    if missing:
        raise ProfileError(f"missing column(s) {', '.join(missing)}", line=header_line)

    for number, line in lines[1:]:
        fields = line.count(",") + 1
        if fields != len(columns):
            raise ProfileError(f"expected {len(columns)} fields, found {fields}", line=number)

    rows = lines[1:]
    if len(rows) < 2:
        raise ProfileError(f"profile needs at least 2 rows to define a time step, found {len(rows)}")
    line_numbers = np.array([number for number, _ in rows])

    frame = pd.read_csv(
        io.StringIO("\n".join(line for _, line in lines)),
        dtype=str,
        keep_default_na=False,
        skipinitialspace=True,
    )
    frame.columns = columns

    timestamps = pd.to_datetime(frame[schema.timestamp].str.strip(), utc=True, errors="coerce", format="ISO8601")
    if timestamps.isna().any():
        row = int(np.argmax(timestamps.isna().to_numpy()))
        raise ProfileError(
            f"unparseable timestamp '{frame[schema.timestamp].iloc[row]}'", line=int(line_numbers[row])
        )
    steps = timestamps.diff().dt.total_seconds().to_numpy()[1:]
    if np.any(steps <= 0):
        row = int(np.argmax(steps <= 0)) + 1
        raise ProfileError("timestamps must be strictly increasing", line=int(line_numbers[row]))
    step = steps[0]
    irregular = steps != step
    if irregular.any():
        row = int(np.argmax(irregular)) + 1
        raise ProfileError(
            f"non-uniform timestamp spacing: expected {step:g} s, found {steps[row - 1]:g} s",
            line=int(line_numbers[row]),
        )

    capacity = _parse_numeric(frame, schema.capacity, line_numbers) * schema.scale_to_mw
    demand = _parse_numeric(frame, schema.demand, line_numbers) * schema.scale_to_mw

    profile = EventProfile.from_arrays(timestamps.iloc[0], step, capacity, demand)
    logger.info(
        f"Loaded profile: {profile.grid.count} samples at {step:g} s, "
        f"peak demand {demand.max():,.0f} MW"
    )
    return profile


def write_profile(profile: EventProfile, path, header_lines: Iterable[str] = ()) -> None:
    """Write `profile` in the standard CSV layout with optional '#' provenance lines."""
    frame = profile.to_frame().reset_index()
    frame["timestamp"] = frame["timestamp"].dt.strftime(TIMESTAMP_FORMAT)
    buffer = io.StringIO()
    for line in header_lines:
        buffer.write(f"# {line}\n")
    frame.to_csv(buffer, index=False, float_format="%.12g", lineterminator="\n")
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(buffer.getvalue())


# --- Operations ---

def resample(series: SeriesT, new_step: StepLike) -> SeriesT:
    """
    Change the step of a piecewise-constant series. Downsampling averages each
    block of k samples; upsampling repeats each sample k times. The integral is
    preserved in both directions.
    """
    new_step = _step_seconds(new_step)
    step = series.grid.step
    if new_step <= 0:
        raise ProfileError(f"new step must be positive, got {new_step}")
    if new_step == step:
        return series

    if new_step > step:
        ratio = new_step / step
        k = round(ratio)
        if not math.isclose(ratio, k, rel_tol=1e-12) or series.grid.count % k:
            raise ProfileError(
                f"cannot downsample {series.grid.count} samples of {step:g} s to {new_step:g} s"
            )
        values = series.values.reshape(-1, k).mean(axis=1)
    else:
        ratio = step / new_step
        k = round(ratio)
        if not math.isclose(ratio, k, rel_tol=1e-12):
            raise ProfileError(f"step {new_step:g} s does not divide {step:g} s evenly")
        values = np.repeat(series.values, k)

    return type(series)(series.grid.rescaled(new_step), values)


def compute_shedding(profile: EventProfile, served_demand: Optional[PowerSeries] = None) -> SheddingSeries:
    """
    Load shedding s(t) = max(0, served(t) - capacity(t)). Without a post-shed
    load the predicted demand is used, which is the plain adequacy gap.
    """
    if served_demand is None:
        served = profile.demand.values
    else:
        if served_demand.grid != profile.grid:
            raise ProfileError("served demand is on a different grid than the profile")
        served = served_demand.values
        excess = served - profile.demand.values
        if np.any(excess > 1e-9 * max(1.0, profile.demand.peak)):
            row = int(np.argmax(excess))
            raise ProfileError(f"served demand exceeds predicted demand at sample {row}")
        served = np.minimum(served, profile.demand.values)
    return SheddingSeries(profile.grid, np.maximum(served - profile.capacity.values, 0.0))


def integrate_energy(series: _GridSeries) -> EnergyQuantity:
    """Left-rectangle integral of a power series, in MWh."""
    return EnergyQuantity(math.fsum(series.values) * series.grid.step_hours)


def compute_ens(shedding: SheddingSeries) -> EnergyQuantity:
    """Energy-Not-Served: the integral of load shedding over the event."""
    return integrate_energy(shedding)


def shedding_statistics(shedding: SheddingSeries) -> SheddingStatistics:
    active = shedding.values > 0
    hours = float(active.sum()) * shedding.grid.step_hours
    if not active.any():
        return SheddingStatistics(0.0, 0.0, 0.0, 0.0)
    mean = float(shedding.values[active].mean())
    peak = shedding.peak
    return SheddingStatistics(peak, mean, hours, peak / mean)

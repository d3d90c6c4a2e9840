import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import pandas as pd

import config
from core.errors import StorageError
from data.profiles import EnergyQuantity, PowerSeries, SheddingSeries

logger = logging.getLogger(__name__)

KWH_PER_MWH = 1000.0
ENERGY_REL_TOL = 1e-6


@dataclass(frozen=True)
class StorageSpec:
    """
    Discharge-only energy store.

    energy_capacity_mwh: E. power_limit_mw: P, math.inf when unbounded.
    initial_charge_fraction: state of charge when the event starts.
    efficiency: share of stored energy delivered to load.
    """
    energy_capacity_mwh: float
    power_limit_mw: float = math.inf
    initial_charge_fraction: float = 1.0
    efficiency: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.energy_capacity_mwh) or self.energy_capacity_mwh < 0:
            raise StorageError(f"energy capacity must be finite and non-negative, got {self.energy_capacity_mwh}")
        if self.power_limit_mw is None:
            object.__setattr__(self, "power_limit_mw", math.inf)
        if not self.power_limit_mw > 0:
            raise StorageError(f"power limit must be positive or unbounded, got {self.power_limit_mw}")
        if not 0 <= self.initial_charge_fraction <= 1:
            raise StorageError(f"initial charge fraction must lie in [0, 1], got {self.initial_charge_fraction}")
        if not 0 < self.efficiency <= 1:
            raise StorageError(f"efficiency must lie in (0, 1], got {self.efficiency}")

    @classmethod
    def from_gwh(cls, energy_gwh: float, power_gw: Optional[float] = None, **kwargs) -> "StorageSpec":
        power = math.inf if power_gw is None else power_gw * 1000.0
        return cls(energy_gwh * 1000.0, power, **kwargs)

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.power_limit_mw)

    @property
    def available_energy_mwh(self) -> float:
        return self.energy_capacity_mwh * self.initial_charge_fraction * self.efficiency


@dataclass(frozen=True, eq=False)
class DispatchResult:
    discharge: PowerSeries
    residual: SheddingSeries
    threshold: Optional[float]
    energy_used: EnergyQuantity
    shedding_peak_mw: float

    @property
    def residual_peak_mw(self) -> float:
        return self.residual.peak

    @property
    def peak_shave_mw(self) -> float:
        return self.shedding_peak_mw - self.residual.peak

    @property
    def ens_reduction(self) -> EnergyQuantity:
        return self.energy_used

    def check_feasibility(self, shedding: SheddingSeries, spec: StorageSpec) -> None:
        """Raise StorageError when the schedule breaks a dispatch invariant."""
        d = self.discharge.values
        s = shedding.values
        if self.discharge.grid != shedding.grid or self.residual.grid != shedding.grid:
            raise StorageError("dispatch result is on a different grid than the shedding series")
        if np.any(d > np.minimum(s, spec.power_limit_mw)):
            raise StorageError("discharge exceeds shedding or power limit")
        if not np.array_equal(self.residual.values, s - d):
            raise StorageError("residual is not shedding minus discharge")
        budget = spec.available_energy_mwh
        if self.energy_used.value_mwh > budget + ENERGY_REL_TOL * max(budget, 1.0):
            raise StorageError(
                f"dispatch uses {self.energy_used.value_mwh:.6g} MWh of {budget:.6g} MWh available"
            )


@dataclass(frozen=True)
class SizingResult:
    """Smallest store that leaves no residual shedding."""
    energy_mwh: float
    power_mw: float

    @property
    def duration_hours(self) -> float:
        return self.energy_mwh / self.power_mw if self.power_mw > 0 else 0.0

    def is_long_duration(self, boundary_hours: float = None) -> bool:
        boundary = config.LONG_DURATION_HOURS if boundary_hours is None else boundary_hours
        return self.duration_hours > boundary

    def as_spec(self) -> StorageSpec:
        return StorageSpec(self.energy_mwh, self.power_mw if self.power_mw > 0 else math.inf)

    def __iter__(self):
        return iter((self.energy_mwh, self.power_mw))


@dataclass(frozen=True)
class EVFleetSegment:
    name: str
    count: int
    per_vehicle_kwh: float
    availability: float = 1.0
    per_vehicle_kw: Optional[float] = None

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 0:
            raise StorageError(f"{self.name}: vehicle count must be a non-negative integer")
        if self.per_vehicle_kwh < 0:
            raise StorageError(f"{self.name}: per-vehicle energy must be non-negative")
        if not 0 <= self.availability <= 1:
            raise StorageError(f"{self.name}: availability must lie in [0, 1]")
        if self.per_vehicle_kw is not None and self.per_vehicle_kw < 0:
            raise StorageError(f"{self.name}: per-vehicle power must be non-negative")

    @property
    def energy_mwh(self) -> float:
        return self.count * self.per_vehicle_kwh * self.availability / KWH_PER_MWH


# Projected Texas EV fleet for 2033.
TEXAS_2033_FLEET = (
    EVFleetSegment("Cars", 3_000_000, 20),
    EVFleetSegment("Short Haul/Buses", 80_000, 350),
    EVFleetSegment("Long Haul Trucks", 200_000, 600),
)


@dataclass(frozen=True)
class CostModel:
    unit_cost: float = config.STORAGE_UNIT_COST                      # $/kWh
    reference_unit_cost: float = config.STORAGE_REFERENCE_UNIT_COST  # $/kWh before the price decline

    def __post_init__(self):
        if self.unit_cost < 0 or self.reference_unit_cost < 0:
            raise StorageError("unit costs must be non-negative")

    @property
    def price_decline(self) -> float:
        if self.reference_unit_cost == 0:
            return 0.0
        return 1.0 - self.unit_cost / self.reference_unit_cost


def aggregate_ev_fleet(segments: Iterable[EVFleetSegment], power_limit_mw: Optional[float] = None) -> StorageSpec:
    """
    Treat a vehicle fleet as one store. Energy is the availability-weighted sum
    of battery capacities; power is `power_limit_mw` if given, the summed
    per-vehicle power if every segment declares one, and unbounded otherwise.
    """
    segments = list(segments)
    energy = math.fsum(seg.energy_mwh for seg in segments)
    if power_limit_mw is None:
        if segments and all(seg.per_vehicle_kw is not None for seg in segments):
            power_limit_mw = math.fsum(
                seg.count * seg.per_vehicle_kw * seg.availability for seg in segments
            ) / KWH_PER_MWH
            if power_limit_mw == 0:
                power_limit_mw = None
    logger.info(f"EV fleet of {len(segments)} segment(s): {energy / 1000.0:,.1f} GWh")
    return StorageSpec(energy, math.inf if power_limit_mw is None else power_limit_mw)


def load_fleet(source) -> list:
    """Read fleet segments from a CSV with `name, count, per_vehicle_kwh[, availability][, per_vehicle_kw]`."""
    frame = pd.read_csv(source, skipinitialspace=True, comment="#")
    missing = {"name", "count", "per_vehicle_kwh"} - set(frame.columns)
    if missing:
        raise StorageError(f"fleet CSV is missing column(s) {', '.join(sorted(missing))}")
    segments = []
    for row in frame.to_dict("records"):
        availability = row.get("availability", 1.0)
        power = row.get("per_vehicle_kw")
        segments.append(EVFleetSegment(
            name=str(row["name"]),
            count=int(row["count"]),
            per_vehicle_kwh=float(row["per_vehicle_kwh"]),
            availability=1.0 if pd.isna(availability) else float(availability),
            per_vehicle_kw=None if power is None or pd.isna(power) else float(power),
        ))
    return segments


def fleet_coverage(fleet: StorageSpec, required: EnergyQuantity) -> float:
    """Share of a required energy reserve the fleet could supply, capped at 1."""
    if required.value_mwh == 0:
        return 1.0
    return min(1.0, fleet.available_energy_mwh / required.value_mwh)


def storage_cost(energy: EnergyQuantity, model: CostModel = None) -> float:
    """Installed cost in dollars: energy (kWh) x unit cost ($/kWh)."""
    model = model or CostModel()
    return energy.kwh * model.unit_cost

"""
Scenario engine: one rationing + storage scenario evaluated end to end, and
grids of scenarios swept over rationing depth and storage size.

The pipeline order is fixed: ration demand, compute shedding, dispatch
storage, report. Rationing and storage are never optimised jointly; the grids
expose the trade-off surface instead.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize

import config
from core.errors import SweepError
from core.registry import DispatcherRegistry
from data.profiles import (
    ZERO_ENS_MWH,
    EnergyQuantity,
    EventProfile,
    SheddingSeries,
    compute_ens,
    compute_shedding,
)
from rationing.policy import FractionLike, RationingPolicy, apply_rationing, system_fraction
from storage.models import CostModel, SizingResult, StorageSpec, storage_cost

logger = logging.getLogger(__name__)

REFINE_TOL_RHO = 1e-6


def default_rho_axis(stop: float = 0.40, step: float = 0.01) -> List[float]:
    """System reduction fractions 0, step, ..., stop."""
    n = int(round(stop / step))
    return [round(i * step, 10) for i in range(n + 1)]


@dataclass(frozen=True, eq=False)
class Scenario:
    profile: EventProfile
    policy: Union[RationingPolicy, FractionLike] = 0
    storage: StorageSpec = field(default_factory=lambda: StorageSpec(0.0))
    objective: str = "ens_offset"

    def __post_init__(self):
        if self.objective not in DispatcherRegistry.list():
            raise SweepError(
                f"unknown objective '{self.objective}', expected one of {DispatcherRegistry.list()}"
            )

    @property
    def rho(self) -> Fraction:
        return system_fraction(self.policy)


@dataclass(frozen=True)
class ScenarioReport:
    rho: float
    energy_mwh: float
    power_limit_mw: float
    objective: str
    ens: EnergyQuantity
    peak_shedding_mw: float
    peak_shave_mw: float
    residual_ens: EnergyQuantity
    residual_peak_mw: float
    energy_used: EnergyQuantity
    zero_residual_size: SizingResult
    cost: float                     # $ for the zero-residual store
    deployed_storage_cost: float    # $ for the store in the scenario

    def __post_init__(self):
        slack = 1e-9 * max(1.0, self.ens.value_mwh)
        if self.residual_ens.value_mwh > self.ens.value_mwh + slack:
            raise SweepError("residual ENS exceeds ENS")
        if self.peak_shave_mw > self.peak_shedding_mw + 1e-9 * max(1.0, self.peak_shedding_mw):
            raise SweepError("peak shave exceeds peak shedding")

    def to_record(self) -> Dict[str, object]:
        """Flat row with unit-suffixed keys, the layout used by the CSV and JSON writers."""
        return {
            "rho": self.rho,
            "energy_mwh": self.energy_mwh,
            "power_limit_mw": None if math.isinf(self.power_limit_mw) else self.power_limit_mw,
            "objective": self.objective,
            "ens_mwh": self.ens.value_mwh,
            "peak_shedding_mw": self.peak_shedding_mw,
            "peak_shave_mw": self.peak_shave_mw,
            "residual_ens_mwh": self.residual_ens.value_mwh,
            "residual_peak_mw": self.residual_peak_mw,
            "energy_used_mwh": self.energy_used.value_mwh,
            "zero_residual_energy_mwh": self.zero_residual_size.energy_mwh,
            "zero_residual_power_mw": self.zero_residual_size.power_mw,
            "cost_usd": self.cost,
            "deployed_storage_cost_usd": self.deployed_storage_cost,
        }


def rationed_shedding(profile: EventProfile, policy: Union[RationingPolicy, FractionLike]) -> SheddingSeries:
    """Shedding left after demand is rationed by `policy`."""
    return compute_shedding(profile, apply_rationing(profile.demand, policy))


def _report(
    rho: Fraction,
    shedding: SheddingSeries,
    storage: StorageSpec,
    objective: str,
    cost_model: CostModel = None,
) -> ScenarioReport:
    result = DispatcherRegistry.create(objective).run(shedding, storage)
    sizing = SizingResult(compute_ens(shedding).value_mwh, shedding.peak)
    return ScenarioReport(
        rho=float(rho),
        energy_mwh=storage.energy_capacity_mwh,
        power_limit_mw=storage.power_limit_mw,
        objective=objective,
        ens=EnergyQuantity(sizing.energy_mwh),
        peak_shedding_mw=sizing.power_mw,
        peak_shave_mw=result.peak_shave_mw,
        residual_ens=compute_ens(result.residual),
        residual_peak_mw=result.residual_peak_mw,
        energy_used=result.energy_used,
        zero_residual_size=sizing,
        cost=storage_cost(EnergyQuantity(sizing.energy_mwh), cost_model),
        deployed_storage_cost=storage_cost(EnergyQuantity(storage.energy_capacity_mwh), cost_model),
    )


def evaluate(scenario: Scenario, cost_model: CostModel = None) -> ScenarioReport:
    """Ration, shed, dispatch and report one scenario."""
    shedding = rationed_shedding(scenario.profile, scenario.policy)
    report = _report(scenario.rho, shedding, scenario.storage, scenario.objective, cost_model)
    logger.info(
        f"Scenario rho={report.rho:.4f} E={report.energy_mwh / 1000.0:,.1f} GWh [{report.objective}]: "
        f"ENS {report.ens.gwh:,.1f} GWh, residual {report.residual_ens.gwh:,.1f} GWh, "
        f"shave {report.peak_shave_mw:,.0f} MW"
    )
    return report


@dataclass(frozen=True, eq=False)
class SweepGrid:
    """
    Reports over a (rho x storage) grid, keyed by axis indices (i, j).

    zero_crossings[j] is the smallest rho on the grid whose residual ENS is
    zero for storage option j, or None; refined_crossings[j] holds the
    bisection estimate when refinement was requested.
    """
    rho_values: Tuple[float, ...]
    storage: Tuple[StorageSpec, ...]
    objective: str
    reports: Dict[Tuple[int, int], ScenarioReport]
    zero_crossings: Dict[int, Optional[float]] = field(default_factory=dict)
    refined_crossings: Dict[int, Optional[float]] = field(default_factory=dict)

    def __post_init__(self):
        _check_axis(self.rho_values, "rho")
        _check_axis(self.energy_values, "storage energy")
        expected = {(i, j) for i in range(len(self.rho_values)) for j in range(len(self.storage))}
        if set(self.reports) != expected:
            raise SweepError(
                f"report matrix does not match axes {len(self.rho_values)} x {len(self.storage)}"
            )

    @property
    def energy_values(self) -> Tuple[float, ...]:
        return tuple(spec.energy_capacity_mwh for spec in self.storage)

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.rho_values), len(self.storage)

    def report(self, i: int, j: int) -> ScenarioReport:
        return self.reports[(i, j)]

    def column(self, j: int) -> List[ScenarioReport]:
        return [self.reports[(i, j)] for i in range(len(self.rho_values))]

    def row(self, i: int) -> List[ScenarioReport]:
        return [self.reports[(i, j)] for j in range(len(self.storage))]

    def matrix(self, key: Callable[[ScenarioReport], float]) -> np.ndarray:
        """Array of shape (len(rho_values), len(storage)) holding key(report) per cell."""
        out = np.empty(self.shape)
        for (i, j), report in self.reports.items():
            out[i, j] = key(report)
        return out

    def records(self) -> List[Dict[str, object]]:
        return [self.reports[key].to_record() for key in sorted(self.reports)]


def _check_axis(values: Sequence[float], name: str, lower: float = 0.0, upper: float = math.inf) -> None:
    values = list(values)
    if not values:
        raise SweepError(f"{name} axis is empty")
    if any(not math.isfinite(v) for v in values):
        raise SweepError(f"{name} axis contains non-finite values")
    if min(values) < lower or max(values) > upper:
        raise SweepError(f"{name} axis must lie in [{lower:g}, {upper:g}]")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise SweepError(f"{name} axis must be strictly increasing")


def _run_cells(cells: Dict[Tuple[int, int], Callable[[], ScenarioReport]], workers: int = None):
    workers = config.SWEEP_WORKERS if workers is None else workers
    keys = list(cells)
    if workers <= 1 or len(keys) < 2:
        return {key: cells[key]() for key in keys}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda key: cells[key](), keys))
    return dict(zip(keys, results))


def _sweep(
    profile: EventProfile,
    rho_values: Sequence[float],
    storage: Sequence[StorageSpec],
    objective: str,
    cost_model: CostModel = None,
    workers: int = None,
) -> Dict[Tuple[int, int], ScenarioReport]:
    rhos = [system_fraction(rho) for rho in rho_values]
    trajectories = [rationed_shedding(profile, rho) for rho in rhos]
    cells = {
        (i, j): (lambda i=i, j=j: _report(rhos[i], trajectories[i], storage[j], objective, cost_model))
        for i in range(len(rhos))
        for j in range(len(storage))
    }
    return _run_cells(cells, workers)


def sweep_ens_vs_rationing(
    profile: EventProfile,
    rho_values: Sequence[float],
    storage_options: Sequence[StorageSpec],
    refine: bool = False,
    cost_model: CostModel = None,
    workers: int = None,
) -> SweepGrid:
    """
    One residual-ENS curve per storage option under the ens_offset objective,
    with the smallest zero-ENS rho on each curve.
    """
    _check_axis(rho_values, "rho", upper=1.0)
    storage_options = tuple(storage_options)
    _check_axis([spec.energy_capacity_mwh for spec in storage_options], "storage energy")

    reports = _sweep(profile, rho_values, storage_options, "ens_offset", cost_model, workers)
    rho_axis = tuple(float(system_fraction(rho)) for rho in rho_values)

    crossings, refined = {}, {}
    for j, spec in enumerate(storage_options):
        hit = next(
            (i for i in range(len(rho_axis)) if reports[(i, j)].residual_ens.value_mwh <= ZERO_ENS_MWH),
            None,
        )
        crossings[j] = None if hit is None else rho_axis[hit]
        if refine:
            if hit is None:
                refined[j] = None
            elif hit == 0:
                refined[j] = rho_axis[0]
            else:
                refined[j] = refine_zero_crossing(profile, spec, rho_axis[hit - 1], rho_axis[hit])
        label = "none" if crossings[j] is None else f"{crossings[j]:.2f}"
        logger.info(f"ENS sweep E={spec.energy_capacity_mwh / 1000.0:,.1f} GWh: zero ENS at rho={label}")

    return SweepGrid(rho_axis, storage_options, "ens_offset", reports, crossings, refined)


def sweep_peak_shave_vs_storage(
    profile: EventProfile,
    rho_values: Sequence[float],
    energy_values: Sequence[float],
    power_limit_mw: float = math.inf,
    cost_model: CostModel = None,
    workers: int = None,
) -> SweepGrid:
    """One peak-shave curve per rho over storage energies (MWh) under the peak_shave objective."""
    _check_axis(rho_values, "rho", upper=1.0)
    _check_axis(energy_values, "storage energy")
    storage = tuple(StorageSpec(float(e), power_limit_mw) for e in energy_values)
    reports = _sweep(profile, rho_values, storage, "peak_shave", cost_model, workers)
    rho_axis = tuple(float(system_fraction(rho)) for rho in rho_values)
    logger.info(f"Peak-shave sweep: {len(rho_axis)} x {len(storage)} cells")
    return SweepGrid(rho_axis, storage, "peak_shave", reports)


def shedding_trajectories(profile: EventProfile, rho_values: Sequence[float]) -> List[SheddingSeries]:
    """Shedding series per rho, in axis order."""
    _check_axis(rho_values, "rho", upper=1.0)
    return [rationed_shedding(profile, rho) for rho in rho_values]


def marginal_shave(grid: SweepGrid, rho_index: int) -> np.ndarray:
    """Extra MW of peak shave per additional GWh of storage between successive grid energies."""
    if grid.objective != "peak_shave":
        raise SweepError("marginal shave needs a peak_shave grid")
    if len(grid.storage) < 2:
        raise SweepError("marginal shave needs at least two storage sizes")
    shave = np.array([r.peak_shave_mw for r in grid.row(rho_index)])
    energy_gwh = np.array(grid.energy_values) / 1000.0
    return np.diff(shave) / np.diff(energy_gwh)


def refine_zero_crossing(
    profile: EventProfile,
    storage: StorageSpec,
    rho_lo: float,
    rho_hi: float,
    tol: float = REFINE_TOL_RHO,
) -> float:
    """
    Bisect for the smallest rho in [rho_lo, rho_hi] at which the ens_offset
    residual is zero, with zero meaning at most ZERO_ENS_MWH as on the grid.
    rho_lo must leave residual shedding and rho_hi must not.
    """
    demand = profile.demand.values
    capacity = profile.capacity.values
    dt = profile.grid.step_hours
    budget = storage.available_energy_mwh
    power = storage.power_limit_mw

    def shortfall(rho: float) -> float:
        # ens_offset residual minus the zero tolerance
        shed = np.maximum((1.0 - rho) * demand - capacity, 0.0)
        ens = math.fsum(shed) * dt
        over_power = math.fsum(np.maximum(shed - power, 0.0)) * dt
        return max(ens - budget, over_power) - ZERO_ENS_MWH

    lo, hi = shortfall(rho_lo), shortfall(rho_hi)
    if lo <= 0 or hi > 0:
        raise SweepError(f"rho interval [{rho_lo:g}, {rho_hi:g}] does not bracket the zero-ENS crossing")
    root = optimize.bisect(shortfall, rho_lo, rho_hi, xtol=tol)
    return min(root + tol, rho_hi)

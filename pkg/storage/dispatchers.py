"""
Storage dispatch objectives.

Both dispatchers are discharge-only: the store starts at its initial charge and
can only serve shedding, never recharge during the event.
"""

import logging
import math

import numpy as np
from scipy import optimize

import config
from core.base import DispatcherBase
from core.registry import DispatcherRegistry
from data.profiles import EnergyQuantity, PowerSeries, SheddingSeries, compute_ens
from storage.models import DispatchResult, SizingResult, StorageSpec

logger = logging.getLogger(__name__)


def _energy(values: np.ndarray, step_hours: float) -> float:
    return math.fsum(values) * step_hours


def _result(shedding: SheddingSeries, discharge: np.ndarray, threshold) -> DispatchResult:
    s = shedding.values
    return DispatchResult(
        discharge=PowerSeries(shedding.grid, discharge),
        residual=SheddingSeries(shedding.grid, s - discharge),
        threshold=threshold,
        energy_used=EnergyQuantity(_energy(discharge, shedding.grid.step_hours)),
        shedding_peak_mw=shedding.peak,
    )


@DispatcherRegistry.register("peak_shave")
class PeakShaveDispatcher(DispatcherBase):
    """
    Minimise the peak of the residual shedding.

    The optimal schedule is a threshold rule d(t) = clamp(s(t) - T, 0, P).
    T is the larger of the power-bound floor max(s) - P and the lowest level
    the energy budget can hold, which is found by bisection on
    f(T) = sum(clamp(s - T, 0, P)) * dt - E.
    """

    def __init__(self, params=None):
        super().__init__(params)
        self.tolerance_mw = float(self.params.get("tolerance_mw", config.BISECTION_TOL_MW))

    def energy_threshold(self, s: np.ndarray, step_hours: float, spec: StorageSpec) -> float:
        budget = spec.available_energy_mwh
        power = spec.power_limit_mw
        smax = float(s.max())

        if _energy(np.minimum(s, power), step_hours) <= budget:
            return 0.0

        def excess_energy(threshold: float) -> float:
            return float(np.clip(s - threshold, 0.0, power).sum()) * step_hours - budget

        root = optimize.bisect(excess_energy, 0.0, smax, xtol=self.tolerance_mw)
        # bisect only brackets the root to xtol; step to the side that fits the budget
        return min(root + self.tolerance_mw, smax)

    def dispatch(self, shedding: SheddingSeries, spec: StorageSpec) -> DispatchResult:
        s = shedding.values
        smax = shedding.peak
        if spec.available_energy_mwh <= 0 or smax <= 0:
            return _result(shedding, np.zeros_like(s), smax)

        threshold = self.energy_threshold(s, shedding.grid.step_hours, spec)
        if not spec.unbounded:
            threshold = max(threshold, smax - spec.power_limit_mw)

        discharge = np.clip(s - threshold, 0.0, spec.power_limit_mw)
        return _result(shedding, discharge, threshold)


@DispatcherRegistry.register("ens_offset")
class EnsOffsetDispatcher(DispatcherBase):
    """
    Absorb as much unserved energy as the budget allows.

    Steps are served at min(s, P) in descending order of shedding, earlier
    timestamps first on ties, until the budget runs out; the marginal step is
    partially served.
    """

    def dispatch(self, shedding: SheddingSeries, spec: StorageSpec) -> DispatchResult:
        s = shedding.values
        dt = shedding.grid.step_hours
        budget = spec.available_energy_mwh
        limit = np.minimum(s, spec.power_limit_mw)

        if budget >= _energy(limit, dt):
            return _result(shedding, limit.copy(), None)

        order = np.argsort(-s, kind="stable")
        step_energy = limit[order] * dt
        before = np.cumsum(step_energy) - step_energy
        taken = np.clip(budget - before, 0.0, step_energy)

        discharge = np.zeros_like(s)
        discharge[order] = np.minimum(taken / dt, limit[order])
        return _result(shedding, discharge, None)


def dispatch_peak_shave(shedding: SheddingSeries, spec: StorageSpec) -> DispatchResult:
    return DispatcherRegistry.create("peak_shave").run(shedding, spec)


def dispatch_ens_offset(shedding: SheddingSeries, spec: StorageSpec) -> DispatchResult:
    return DispatcherRegistry.create("ens_offset").run(shedding, spec)


def size_for_zero_residual(shedding: SheddingSeries) -> SizingResult:
    """Smallest (energy, power) that serves every step in full: (ENS, peak shedding)."""
    sizing = SizingResult(compute_ens(shedding).value_mwh, shedding.peak)
    logger.info(
        f"Zero-residual sizing: {sizing.energy_mwh / 1000.0:,.1f} GWh, "
        f"{sizing.power_mw / 1000.0:,.2f} GW ({sizing.duration_hours:.1f} h)"
    )
    return sizing

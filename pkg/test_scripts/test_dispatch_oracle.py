#!/usr/bin/env python3
"""
Peak-shave dispatch checked against two independent oracles on seeded random
shedding series:

  * a dense threshold grid, refined by bisection to 1e-6 MW
  * an exact piecewise-linear solve over the breakpoints s(t) and s(t) - P
"""

import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from helpers import create_random_shedding, run_tests
from storage import StorageSpec, dispatch_ens_offset, dispatch_peak_shave

N_CASES = 150
GRID_POINTS = 2001
REFINE_TOL_MW = 1e-6


def _required_energy(s, threshold, power, dt):
    return float(np.clip(s - threshold, 0.0, power).sum()) * dt


def _grid_oracle(s, energy, power, dt):
    """Lowest feasible residual peak from a dense threshold grid plus bisection."""
    smax = float(s.max())
    floor = max(0.0, smax - power)
    candidates = np.linspace(floor, smax, GRID_POINTS)
    feasible = [t for t in candidates if _required_energy(s, t, power, dt) <= energy]
    best = feasible[0]
    if best == floor:
        return floor
    lo = candidates[np.searchsorted(candidates, best) - 1]
    hi = best
    while hi - lo > REFINE_TOL_MW:
        mid = 0.5 * (lo + hi)
        if _required_energy(s, mid, power, dt) <= energy:
            hi = mid
        else:
            lo = mid
    return hi


def _breakpoint_oracle(s, energy, power, dt):
    """Exact minimum threshold: the required energy is linear between breakpoints."""
    smax = float(s.max())
    floor = max(0.0, smax - power)
    points = {floor, smax}
    points.update(v for v in s if floor < v < smax)
    if math.isfinite(power):
        points.update(v - power for v in s if floor < v - power < smax)
    points = sorted(points)
    if _required_energy(s, floor, power, dt) <= energy:
        return floor
    for lo, hi in zip(points, points[1:]):
        e_lo = _required_energy(s, lo, power, dt)
        e_hi = _required_energy(s, hi, power, dt)
        if e_hi <= energy < e_lo:
            return lo + (e_lo - energy) * (hi - lo) / (e_lo - e_hi)
    return smax


def _random_case(rng):
    shedding = create_random_shedding(rng)
    s = shedding.values
    total = float(s.sum()) * shedding.grid.step_hours
    energy = float(rng.uniform(0.0, 1.2 * total)) if total > 0 else float(rng.uniform(0, 1000))
    if rng.random() < 0.5 or s.max() == 0:
        power = math.inf
    else:
        power = float(rng.uniform(0.2, 1.2) * s.max())
    return shedding, StorageSpec(energy, power)


def test_peak_shave_matches_oracles():
    rng = np.random.default_rng(20210215)
    for case in range(N_CASES):
        shedding, spec = _random_case(rng)
        s = shedding.values
        dt = shedding.grid.step_hours
        result = dispatch_peak_shave(shedding, spec)

        if s.max() == 0:
            assert result.residual_peak_mw == 0.0
            continue
        scale = max(float(s.max()), 1.0)
        grid = _grid_oracle(s, spec.energy_capacity_mwh, spec.power_limit_mw, dt)
        exact = _breakpoint_oracle(s, spec.energy_capacity_mwh, spec.power_limit_mw, dt)
        assert grid == pytest.approx(exact, abs=1e-6 * scale + REFINE_TOL_MW), case
        # the dispatcher steps one bisection tolerance past its bracketed root
        assert result.residual_peak_mw == pytest.approx(exact, abs=1e-6 * scale + 2 * REFINE_TOL_MW), case


def test_every_schedule_is_feasible():
    rng = np.random.default_rng(7)
    for _ in range(N_CASES):
        shedding, spec = _random_case(rng)
        for dispatch in (dispatch_peak_shave, dispatch_ens_offset):
            result = dispatch(shedding, spec)
            s = shedding.values
            d = result.discharge.values
            assert np.all(d >= 0.0)
            assert np.all(d <= np.minimum(s, spec.power_limit_mw))
            np.testing.assert_array_equal(result.residual.values, s - d)
            budget = spec.available_energy_mwh
            assert result.energy_used.value_mwh <= budget + 1e-6 * max(budget, 1.0)


def test_peak_shave_never_beats_ens_offset_on_energy():
    rng = np.random.default_rng(11)
    for _ in range(N_CASES):
        shedding, spec = _random_case(rng)
        shave = dispatch_peak_shave(shedding, spec)
        offset = dispatch_ens_offset(shedding, spec)
        assert shave.energy_used.value_mwh <= offset.energy_used.value_mwh + 1e-6 * max(spec.energy_capacity_mwh, 1.0)
        assert offset.residual_peak_mw >= shave.residual_peak_mw - 1e-6 * max(shedding.peak, 1.0) - 2 * REFINE_TOL_MW


def test_oracle_suite_runtime():
    rng = np.random.default_rng(3)
    cases = [_random_case(rng) for _ in range(N_CASES)]
    start = time.perf_counter()
    for shedding, spec in cases:
        dispatch_peak_shave(shedding, spec)
        dispatch_ens_offset(shedding, spec)
    assert time.perf_counter() - start < 5.0


if __name__ == "__main__":
    sys.exit(run_tests(globals(), "Dispatch oracle tests"))

#!/usr/bin/env python3
"""
Tests for scenario evaluation, the rationing and storage sweeps, and the
sweep writers.
"""

import filecmp
import json
import math
import os
import sys
import tempfile
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from helpers import FIXTURE_PATH, create_sample_profile, fixture_profile, run_tests
from core.errors import SweepError
from data.profiles import ZERO_ENS_MWH, EnergyQuantity, load_profile
from rationing import RationingPolicy
from storage import SizingResult, StorageSpec
from sweep import (
    Scenario,
    ScenarioReport,
    default_rho_axis,
    evaluate,
    marginal_shave,
    refine_zero_crossing,
    shedding_trajectories,
    sweep_ens_vs_rationing,
    sweep_peak_shave_vs_storage,
)
from sweep.export import grid_document, grid_frame, write_grid, write_records, write_trajectories

CURVE_TOL_MWH = 1e-6
SHAVE_TOL_MW = 1e-4
SHAVE_ENERGIES_MWH = [0.0, 2_000.0, 5_000.0, 10_000.0, 20_000.0, 50_000.0]


def _ens_grid(refine=False, workers=1):
    storage = [StorageSpec(0.0), StorageSpec.from_gwh(50), StorageSpec.from_gwh(135)]
    return sweep_ens_vs_rationing(fixture_profile(), default_rho_axis(), storage, refine=refine, workers=workers)


def _shave_grid(workers=1):
    return sweep_peak_shave_vs_storage(fixture_profile(), [0.0, 0.1, 0.2], SHAVE_ENERGIES_MWH, workers=workers)


# --- Single scenarios ---

def test_evaluate_baseline_event():
    report = evaluate(Scenario(fixture_profile()))
    assert report.rho == 0.0
    assert report.ens.value_mwh == pytest.approx(920_000, rel=0.01)
    assert report.residual_ens == report.ens
    assert report.energy_used.value_mwh == 0.0
    assert report.zero_residual_size.energy_mwh == report.ens.value_mwh
    assert report.cost == report.ens.kwh * 137


def test_evaluate_rationing_removes_shedding():
    assert evaluate(Scenario(fixture_profile(), 0.30)).ens.value_mwh == 0.0
    assert evaluate(Scenario(fixture_profile(), 1.0)).ens.value_mwh == 0.0
    report = evaluate(Scenario(fixture_profile(), RationingPolicy(residential_fraction=0.6)))
    assert report.rho == pytest.approx(0.2)
    assert report.ens.value_mwh == pytest.approx(135_000, rel=0.05)


def test_evaluate_with_storage():
    scenario = Scenario(fixture_profile(), 0.2, StorageSpec.from_gwh(135), "ens_offset")
    report = evaluate(scenario)
    assert report.residual_ens.value_mwh == 0.0
    assert report.deployed_storage_cost == pytest.approx(135e6 * 137)
    shave = evaluate(Scenario(fixture_profile(), 0, StorageSpec.from_gwh(10), "peak_shave"))
    assert shave.peak_shave_mw >= 2_000.0
    assert shave.residual_peak_mw == pytest.approx(shave.peak_shedding_mw - shave.peak_shave_mw)


def test_evaluate_is_deterministic():
    scenario = Scenario(fixture_profile(), 0.15, StorageSpec.from_gwh(20, 2.5), "peak_shave")
    assert evaluate(scenario).to_record() == evaluate(scenario).to_record()


def test_scenario_validation():
    with pytest.raises(SweepError, match="unknown objective"):
        Scenario(fixture_profile(), objective="arbitrage")
    sizing = SizingResult(10.0, 5.0)
    with pytest.raises(SweepError, match="residual ENS"):
        ScenarioReport(
            rho=0.0, energy_mwh=0.0, power_limit_mw=math.inf, objective="ens_offset",
            ens=EnergyQuantity(10.0), peak_shedding_mw=5.0, peak_shave_mw=0.0,
            residual_ens=EnergyQuantity(20.0), residual_peak_mw=5.0,
            energy_used=EnergyQuantity(0.0), zero_residual_size=sizing, cost=0.0,
            deployed_storage_cost=0.0,
        )


def test_record_marks_unbounded_power():
    record = evaluate(Scenario(fixture_profile(), 0.3)).to_record()
    assert record["power_limit_mw"] is None
    assert set(record) >= {"rho", "ens_mwh", "residual_ens_mwh", "peak_shave_mw", "cost_usd"}


# --- ENS vs rationing ---

def test_default_rho_axis():
    axis = default_rho_axis()
    assert len(axis) == 41
    assert axis[0] == 0.0 and axis[-1] == 0.4
    assert axis[20] == 0.2


def test_zero_crossings():
    grid = _ens_grid()
    assert grid.zero_crossings[0] == pytest.approx(0.30)
    assert grid.zero_crossings[2] == pytest.approx(0.20)
    assert grid.zero_crossings[1] is not None
    assert 0.20 < grid.zero_crossings[1] < 0.30


def test_residual_curves_shape():
    grid = _ens_grid()
    residual = grid.matrix(lambda r: r.residual_ens.value_mwh)
    for j in range(grid.shape[1]):
        curve = residual[:, j]
        steps = np.diff(curve)
        assert np.all(steps <= CURVE_TOL_MWH)
        assert np.all(np.diff(steps) >= -CURVE_TOL_MWH * 10)
    # storage curves sit on or below the no-storage curve
    assert np.all(residual[:, 1] <= residual[:, 0] + CURVE_TOL_MWH)
    assert np.all(residual[:, 2] <= residual[:, 1] + CURVE_TOL_MWH)
    np.testing.assert_array_equal(residual[:, 0], grid.matrix(lambda r: r.ens.value_mwh)[:, 0])


def test_refined_crossings_lie_in_bracket():
    grid = _ens_grid(refine=True)
    assert grid.refined_crossings[0] == pytest.approx(0.30, abs=0.01)
    assert 0.29 < grid.refined_crossings[0] <= 0.30
    assert 0.19 < grid.refined_crossings[2] <= 0.20


def test_refine_requires_bracket():
    with pytest.raises(SweepError, match="bracket"):
        refine_zero_crossing(fixture_profile(), StorageSpec(0.0), 0.30, 0.35)
    root = refine_zero_crossing(fixture_profile(), StorageSpec.from_gwh(135), 0.19, 0.20)
    assert 0.19 < root <= 0.20
    below = evaluate(Scenario(fixture_profile(), root - 1e-4, StorageSpec.from_gwh(135)))
    assert below.residual_ens.value_mwh > 0


def test_refine_uses_grid_zero_tolerance():
    # 0.5 kWh left at rho=0.05 counts as zero on the grid
    profile = create_sample_profile([94.9995, 200.0], [100.0, 100.0])
    grid = sweep_ens_vs_rationing(profile, [0.0, 0.05, 0.1], [StorageSpec(0.0)], refine=True, workers=1)
    assert 0.0 < grid.report(1, 0).residual_ens.value_mwh <= ZERO_ENS_MWH
    assert grid.zero_crossings[0] == 0.05
    assert 0.0 < grid.refined_crossings[0] <= 0.05
    assert grid.refined_crossings[0] == pytest.approx(0.049995, abs=1e-5)


def test_parallel_sweep_matches_serial():
    serial = _ens_grid(workers=1)
    parallel = _ens_grid(workers=4)
    assert serial.records() == parallel.records()


def test_axis_validation():
    profile = fixture_profile()
    with pytest.raises(SweepError, match="increasing"):
        sweep_ens_vs_rationing(profile, [0.1, 0.1], [StorageSpec(0.0)])
    with pytest.raises(SweepError):
        sweep_ens_vs_rationing(profile, [0.5, 1.5], [StorageSpec(0.0)])
    with pytest.raises(SweepError, match="empty"):
        sweep_peak_shave_vs_storage(profile, [0.0], [])
    with pytest.raises(SweepError):
        sweep_peak_shave_vs_storage(profile, [0.0], [5_000.0, 1_000.0])


# --- Peak shave vs storage ---

def test_shave_grid_ordering():
    grid = _shave_grid()
    shave = grid.matrix(lambda r: r.peak_shave_mw)
    assert np.all(shave[:, 0] == 0.0)
    for j in range(1, shave.shape[1]):
        assert shave[0, j] >= shave[1, j] >= shave[2, j]
    assert np.all(np.diff(shave, axis=1) >= -SHAVE_TOL_MW)
    assert shave[0, 3] >= 2_000.0


def test_marginal_shave_diminishes():
    grid = _shave_grid()
    for i in range(3):
        marginal = marginal_shave(grid, i)
        assert len(marginal) == len(SHAVE_ENERGIES_MWH) - 1
        assert np.all(marginal >= -SHAVE_TOL_MW)
        assert np.all(np.diff(marginal) <= SHAVE_TOL_MW)
    with pytest.raises(SweepError):
        marginal_shave(_ens_grid(), 0)


def test_power_limited_shave_grid():
    grid = sweep_peak_shave_vs_storage(fixture_profile(), [0.0], [10_000.0, 50_000.0], power_limit_mw=2_500.0)
    shave = grid.matrix(lambda r: r.peak_shave_mw)
    assert np.all(shave <= 2_500.0 + SHAVE_TOL_MW)
    assert shave[0, 0] >= 2_000.0


def test_trajectories_are_pointwise_ordered():
    rhos = [0.0, 0.1, 0.2, 0.3]
    trajectories = shedding_trajectories(fixture_profile(), rhos)
    for higher, lower in zip(trajectories, trajectories[1:]):
        assert np.all(lower.values <= higher.values)
    assert trajectories[0].peak == pytest.approx(20_300.0)
    assert trajectories[-1].peak == 0.0


def test_anchor_regression_runtime():
    start = time.perf_counter()
    profile = load_profile(FIXTURE_PATH)
    baseline = evaluate(Scenario(profile, 0))
    anchor = evaluate(Scenario(profile, 0.2))
    zero = evaluate(Scenario(profile, 0.3))
    elapsed = time.perf_counter() - start
    assert baseline.ens.gwh == pytest.approx(920.0, rel=0.01)
    assert anchor.ens.gwh == pytest.approx(135.0, rel=0.05)
    assert zero.ens.gwh <= 1e-6
    assert baseline.peak_shedding_mw > 20_000.0
    assert elapsed < 1.0


def test_large_grid_runtime():
    rhos = [round(0.01 * i, 2) for i in range(50)]
    energies = list(np.linspace(0.0, 50_000.0, 50))
    profile = fixture_profile()
    sweep_peak_shave_vs_storage(profile, rhos[:2], energies[:2])

    start = time.perf_counter()
    grid = sweep_peak_shave_vs_storage(profile, rhos, energies)
    assert grid.shape == (50, 50)
    assert time.perf_counter() - start < 1.0

    start = time.perf_counter()
    grid = sweep_ens_vs_rationing(profile, rhos, [StorageSpec(e) for e in energies])
    assert grid.shape == (50, 50)
    assert time.perf_counter() - start < 1.0


# --- Export ---

def test_grid_writers_are_byte_deterministic():
    with tempfile.TemporaryDirectory() as tmp:
        for fmt in ("csv", "json"):
            first = os.path.join(tmp, f"first.{fmt}")
            second = os.path.join(tmp, f"second.{fmt}")
            write_grid(_ens_grid(workers=1), first, fmt)
            write_grid(_ens_grid(workers=4), second, fmt)
            assert filecmp.cmp(first, second, shallow=False)


def test_grid_exports_content():
    grid = _shave_grid()
    frame = grid_frame(grid)
    assert list(frame.columns[:3]) == ["i", "j", "rho"]
    assert len(frame) == 3 * len(SHAVE_ENERGIES_MWH)
    document = grid_document(grid)
    assert document["objective"] == "peak_shave"
    assert document["zero_crossings"] is None
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "grid.json")
        write_grid(grid, path, "json")
        with open(path) as f:
            loaded = json.load(f)
        assert loaded["power_limits_mw"] == [None] * len(SHAVE_ENERGIES_MWH)
        assert loaded["cells"][0]["i"] == 0


def test_trajectory_and_record_writers():
    rhos = [0.0, 0.2]
    trajectories = shedding_trajectories(fixture_profile(), rhos)
    with tempfile.TemporaryDirectory() as tmp:
        csv_path = os.path.join(tmp, "traj.csv")
        write_trajectories(trajectories, rhos, csv_path)
        with open(csv_path) as f:
            lines = f.read().splitlines()
        assert lines[0] == "timestamp,rho,shedding_mw"
        assert len(lines) == 1 + 2 * 96
        assert lines[1].startswith("2021-02-15T06:00:00Z,0,")
        json_path = os.path.join(tmp, "traj.json")
        write_trajectories(trajectories, rhos, json_path, "json")
        with open(json_path) as f:
            document = json.load(f)
        assert len(document["shedding_mw"]) == 2 and len(document["timestamps"]) == 96
        with pytest.raises(ValueError, match="unknown format"):
            write_records([{"a": 1}], os.path.join(tmp, "x.parquet"), "parquet")


def test_small_profile_sweep():
    profile = create_sample_profile([100.0, 100.0, 100.0], [100.0, 150.0, 120.0])
    grid = sweep_ens_vs_rationing(profile, [0.0, 0.1, 0.2, 0.4], [StorageSpec(0.0), StorageSpec(20.0)])
    residual = grid.matrix(lambda r: r.residual_ens.value_mwh)
    np.testing.assert_allclose(residual[:, 0], [70.0, 43.0, 20.0, 0.0])
    np.testing.assert_allclose(residual[:, 1], [50.0, 23.0, 0.0, 0.0])
    assert grid.zero_crossings == {0: 0.4, 1: 0.2}


if __name__ == "__main__":
    sys.exit(run_tests(globals(), "Sweep tests"))

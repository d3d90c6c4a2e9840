#!/usr/bin/env python3
"""
Tests for the event time-series model: CSV ingestion, resampling, shedding
and ENS integration.
"""

import io
import os
import sys
import tempfile

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from helpers import create_sample_profile, create_sample_shedding, fixture_profile, run_tests, FIXTURE_PATH
from core.errors import ProfileError
from data.profiles import (
    EnergyQuantity,
    EventProfile,
    PowerSeries,
    ProfileSchema,
    TimeGrid,
    compute_ens,
    compute_shedding,
    integrate_energy,
    load_profile,
    resample,
    shedding_statistics,
    write_profile,
)

HEADER = "timestamp,capacity_mw,demand_mw\n"


def _csv(*rows, header=HEADER) -> io.StringIO:
    return io.StringIO(header + "".join(row + "\n" for row in rows))


# --- Ingestion ---

def test_load_bundled_fixture():
    profile = load_profile(FIXTURE_PATH)
    assert profile.grid.count == 96
    assert profile.grid.step == 3600.0
    assert profile.grid.start == pd.Timestamp("2021-02-15T06:00:00Z")
    assert profile.demand.peak == 69_000.0


def test_load_hourly_csv():
    hours = pd.date_range("2021-02-15T06:00:00Z", periods=96, freq="1h")
    rows = [f"{t.strftime('%Y-%m-%dT%H:%M:%SZ')},{50000 + i},{60000 + i}" for i, t in enumerate(hours)]
    profile = load_profile(_csv(*rows))
    assert profile.grid.count == 96
    assert profile.grid.step == 3600.0
    assert profile.capacity.values[5] == 50005.0
    assert profile.demand.values[-1] == 60095.0


def test_load_from_bytes_with_comments():
    text = "# provenance line\n" + HEADER + "2021-02-15T06:00:00Z,1,2\n2021-02-15T07:00:00Z,3,4\n"
    profile = load_profile(text.encode("utf-8"))
    np.testing.assert_array_equal(profile.demand.values, [2.0, 4.0])


def test_negative_value_names_the_line():
    source = _csv(
        "2021-02-15T06:00:00Z,100,200",
        "2021-02-15T07:00:00Z,100,-5",
        "2021-02-15T08:00:00Z,100,200",
    )
    with pytest.raises(ProfileError) as exc:
        load_profile(source)
    assert exc.value.line == 3
    assert "line 3" in str(exc.value)
    assert "negative" in str(exc.value)


def test_line_numbers_count_comment_lines():
    text = "# one\n# two\n" + HEADER + "2021-02-15T06:00:00Z,1,2\n2021-02-15T07:00:00Z,x,2\n"
    with pytest.raises(ProfileError) as exc:
        load_profile(io.StringIO(text))
    assert exc.value.line == 5


def test_non_uniform_timestamps_rejected():
    source = _csv(
        "2021-02-15T06:00:00Z,1,1",
        "2021-02-15T07:00:00Z,1,1",
        "2021-02-15T09:00:00Z,1,1",
    )
    with pytest.raises(ProfileError, match="non-uniform") as exc:
        load_profile(source)
    assert exc.value.line == 4


def test_unsorted_timestamps_rejected():
    source = _csv("2021-02-15T07:00:00Z,1,1", "2021-02-15T06:00:00Z,1,1")
    with pytest.raises(ProfileError, match="strictly increasing"):
        load_profile(source)


def test_malformed_rows_rejected():
    with pytest.raises(ProfileError) as exc:
        load_profile(_csv("2021-02-15T06:00:00Z,1,1", "2021-02-15T07:00:00Z,1"))
    assert exc.value.line == 3
    with pytest.raises(ProfileError, match="missing column"):
        load_profile(_csv("2021-02-15T06:00:00Z,1", header="timestamp,capacity_mw\n"))
    with pytest.raises(ProfileError, match="timestamp"):
        load_profile(_csv("not-a-date,1,1", "2021-02-15T07:00:00Z,1,1"))
    with pytest.raises(ProfileError, match="missing demand_mw"):
        load_profile(_csv("2021-02-15T06:00:00Z,1,", "2021-02-15T07:00:00Z,1,1"))
    with pytest.raises(ProfileError, match="at least 2 rows"):
        load_profile(_csv("2021-02-15T06:00:00Z,1,1"))


def test_gigawatt_schema_converts_to_megawatts():
    source = _csv(
        "2021-02-15T06:00:00Z,50,69",
        "2021-02-15T07:00:00Z,48.5,68",
        header="timestamp,capacity_gw,demand_gw\n",
    )
    profile = load_profile(source, ProfileSchema.gigawatts())
    np.testing.assert_array_equal(profile.capacity.values, [50_000.0, 48_500.0])
    np.testing.assert_array_equal(profile.demand.values, [69_000.0, 68_000.0])


def test_write_profile_reloads_identically():
    profile = fixture_profile()
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "profile.csv")
        write_profile(profile, path, ["synthetic"])
        with open(path, encoding="utf-8") as f:
            assert f.readline() == "# synthetic\n"
        again = load_profile(path)
    np.testing.assert_array_equal(again.capacity.values, profile.capacity.values)
    np.testing.assert_array_equal(again.demand.values, profile.demand.values)
    assert again.grid == profile.grid


# --- Types ---

def test_time_grid_invariants():
    grid = TimeGrid("2021-02-15 00:00", 900, 8)
    assert str(grid.start.tz) == "UTC"
    assert grid.span_hours == 2.0
    with pytest.raises(ProfileError):
        TimeGrid("2021-02-15", 0, 4)
    with pytest.raises(ProfileError):
        TimeGrid("2021-02-15", 3600, 0)


def test_series_invariants():
    grid = TimeGrid("2021-02-15", 3600, 2)
    with pytest.raises(ProfileError, match="negative"):
        PowerSeries(grid, [1.0, -1.0])
    with pytest.raises(ProfileError, match="non-finite"):
        PowerSeries(grid, [1.0, np.nan])
    with pytest.raises(ProfileError, match="samples"):
        PowerSeries(grid, [1.0, 2.0, 3.0])
    series = PowerSeries(grid, [1.0, 2.0])
    assert not series.values.flags.writeable


def test_event_profile_grids_must_match():
    a = PowerSeries(TimeGrid("2021-02-15", 3600, 2), [1.0, 2.0])
    b = PowerSeries(TimeGrid("2021-02-15", 1800, 2), [1.0, 2.0])
    with pytest.raises(ProfileError, match="different grids"):
        EventProfile(a, b)
    with pytest.raises(ProfileError, match="samples"):
        EventProfile.from_arrays("2021-02-15", "1h", [1, 2], [1, 2, 3])


def test_energy_quantity_units():
    energy = EnergyQuantity.from_gwh(920)
    assert energy.value_mwh == 920_000.0
    assert energy.kwh == 920_000_000.0
    with pytest.raises(ProfileError):
        EnergyQuantity(-1.0)


# --- Resampling ---

def test_upsample_constant_series():
    series = PowerSeries(TimeGrid("2021-02-15", 3600, 3), [10.0, 10.0, 10.0])
    fine = resample(series, "15min")
    assert fine.grid.count == 12
    assert fine.grid.step == 900.0
    assert np.all(fine.values == 10.0)


def test_downsample_averages():
    series = PowerSeries(TimeGrid("2021-02-15", 3600, 2), [10.0, 30.0])
    coarse = resample(series, 7200)
    np.testing.assert_array_equal(coarse.values, [20.0])
    assert integrate_energy(series).value_mwh == 40.0
    assert integrate_energy(coarse).value_mwh == 40.0


def test_resample_round_trip_preserves_energy():
    rng = np.random.default_rng(7)
    for k in (2, 3, 4, 6):
        values = rng.uniform(0, 25_000, size=12 * k)
        shedding = create_sample_shedding(values, step_seconds=900)
        down = resample(shedding, 900 * k)
        up = resample(down, 900)
        for series in (down, up):
            assert compute_ens(series).value_mwh == pytest.approx(compute_ens(shedding).value_mwh, rel=1e-9)


def test_resample_rejects_incompatible_steps():
    series = PowerSeries(TimeGrid("2021-02-15", 3600, 3), [1.0, 2.0, 3.0])
    with pytest.raises(ProfileError):
        resample(series, 7200)            # 3 samples do not split into pairs
    with pytest.raises(ProfileError):
        resample(series, 1700)


# --- Shedding and ENS ---

def test_compute_shedding_gap():
    profile = create_sample_profile([20_000, 15_000], [10_000, 30_000])
    np.testing.assert_array_equal(compute_shedding(profile).values, [0.0, 15_000.0])


def test_adequate_system_sheds_nothing():
    profile = create_sample_profile([70_000, 70_000, 70_000], [60_000, 65_000, 69_000])
    shedding = compute_shedding(profile)
    assert np.all(shedding.values == 0.0)
    assert compute_ens(shedding).value_mwh == 0.0


def test_served_demand_validation():
    profile = create_sample_profile([20_000, 15_000], [10_000, 30_000])
    served = PowerSeries(profile.grid, [10_000, 25_000])
    np.testing.assert_array_equal(compute_shedding(profile, served).values, [0.0, 10_000.0])
    with pytest.raises(ProfileError, match="exceeds"):
        compute_shedding(profile, PowerSeries(profile.grid, [10_000, 31_000]))
    other = PowerSeries(TimeGrid("2021-02-16", 3600, 2), [1.0, 1.0])
    with pytest.raises(ProfileError, match="different grid"):
        compute_shedding(profile, other)


def test_shedding_bounded_by_demand():
    rng = np.random.default_rng(11)
    capacity = rng.uniform(0, 60_000, 48)
    demand = rng.uniform(0, 70_000, 48)
    shedding = compute_shedding(create_sample_profile(capacity, demand))
    assert np.all(shedding.values >= 0)
    assert np.all(shedding.values <= demand)


def test_compute_ens_rectangles():
    assert compute_ens(create_sample_shedding([0.0, 0.0, 0.0])).value_mwh == 0.0
    assert compute_ens(create_sample_shedding([15_000.0, 15_000.0])).value_mwh == 30_000.0
    assert compute_ens(create_sample_shedding([15_000.0, 15_000.0], step_seconds=900)).value_mwh == 7_500.0


def test_compute_ens_is_linear():
    rng = np.random.default_rng(3)
    s1, s2 = rng.uniform(0, 1000, 24), rng.uniform(0, 1000, 24)
    a, b = 0.7, 2.5
    combined = compute_ens(create_sample_shedding(a * s1 + b * s2)).value_mwh
    expected = a * compute_ens(create_sample_shedding(s1)).value_mwh + b * compute_ens(create_sample_shedding(s2)).value_mwh
    assert combined == pytest.approx(expected, rel=1e-12)


def test_ens_monotone_in_capacity_and_demand():
    rng = np.random.default_rng(5)
    capacity = rng.uniform(40_000, 60_000, 24)
    demand = rng.uniform(45_000, 70_000, 24)
    base = compute_ens(compute_shedding(create_sample_profile(capacity, demand))).value_mwh
    for t in range(24):
        more_capacity = capacity.copy()
        more_capacity[t] += 5_000
        more_demand = demand.copy()
        more_demand[t] += 5_000
        assert compute_ens(compute_shedding(create_sample_profile(more_capacity, demand))).value_mwh <= base
        assert compute_ens(compute_shedding(create_sample_profile(capacity, more_demand))).value_mwh >= base


def test_fixture_anchor_quantities():
    profile = fixture_profile()
    shedding = compute_shedding(profile)
    assert shedding.peak > 20_000
    assert compute_ens(shedding).value_mwh == pytest.approx(920_000, rel=0.01)


def test_shedding_statistics():
    stats = shedding_statistics(compute_shedding(fixture_profile()))
    assert stats.peak_mw == 20_300.0
    assert stats.shedding_hours == 85.0        # more than three days of shedding
    assert stats.peak_to_mean == pytest.approx(stats.peak_mw / stats.mean_mw)
    quiet = shedding_statistics(create_sample_shedding([0.0, 0.0]))
    assert quiet.shedding_hours == 0.0 and quiet.peak_mw == 0.0


if __name__ == "__main__":
    sys.exit(run_tests(globals(), "Profile model tests"))

#!/usr/bin/env python3
"""
View saved sweep grids in the results database
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import config
from data.scenario_database import ScenarioDatabase


def view_database_overview(db: ScenarioDatabase):
    """Show record counts"""
    print("📊 DATABASE OVERVIEW")
    print("=" * 50)
    for table, count in db.get_database_stats().items():
        print(f"   {table:20} : {count:5} records")
    print()


def view_configuration():
    """Show the settings the CLI runs with"""
    print("⚙️  CONFIGURATION")
    print("=" * 50)
    for key, value in config.get_config().items():
        print(f"   {key:28} : {value}")
    print()


def view_sweep_runs(db: ScenarioDatabase, kind=None):
    """Show all saved sweeps, newest first"""
    print("🏃 SWEEP RUNS")
    print("=" * 80)

    runs = db.list_runs(kind)
    if not runs:
        print("   No sweep runs found")
        return

    print(f"{'Run ID':<34} {'Kind':<14} {'Objective':<11} {'Grid':<8} {'Created'}")
    print("-" * 80)
    for run in runs:
        grid = f"{run['n_rho']}x{run['n_storage']}"
        print(f"{run['run_id']:<34} {run['kind']:<14} {run['objective']:<11} {grid:<8} {run['created_at'][:16]}")


def view_run_cells(db: ScenarioDatabase, run_id: str):
    """Show the residual ENS and peak shave matrices of one sweep"""
    print(f"🔍 SWEEP {run_id}")
    print("=" * 80)

    cells = db.load_cells(run_id)
    if cells.empty:
        print(f"   Run ID {run_id} not found")
        return

    cells["energy_gwh"] = cells["energy_mwh"] / 1000.0
    for column, label in (("residual_ens_mwh", "Residual ENS (GWh)"), ("peak_shave_mw", "Peak shave (GW)")):
        matrix = cells.pivot(index="rho", columns="energy_gwh", values=column) / 1000.0
        print(f"\n   📋 {label}, rows rho, columns storage GWh:")
        print(matrix.round(2).to_string())


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.strip())
    parser.add_argument("--db", help="results database URL (default RESULTS_DB_URL)")
    parser.add_argument("--kind", choices=["ens", "shave"], help="only list sweeps of this kind")
    parser.add_argument("--run", help="show the cells of one sweep")
    args = parser.parse_args()
    try:
        db = ScenarioDatabase(args.db)
        print(f"✅ Connected to: {db.engine.url}")
        view_configuration()
        view_database_overview(db)
        if args.run:
            view_run_cells(db, args.run)
        else:
            view_sweep_runs(db, args.kind)
    except Exception as e:
        print(f"❌ Connection failed: {e}")
        sys.exit(1)

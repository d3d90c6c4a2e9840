import os
from fractions import Fraction
from typing import Dict, Any

from dotenv import load_dotenv

load_dotenv()

PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))

# Fixture Configuration
FIXTURE_DIR = os.getenv("SHORTFALL_FIXTURE_DIR", os.path.join(PROJECT_ROOT, "data", "fixtures"))
DEFAULT_FIXTURE = os.getenv("SHORTFALL_FIXTURE", "ercot_feb2021_synthetic.csv")

# Results Database Configuration
RESULTS_DB_URL = os.getenv("RESULTS_DB_URL", f"sqlite:///{os.path.join(PROJECT_ROOT, 'data', 'scenario_results.db')}")

# Sweep Configuration
SWEEP_WORKERS = int(os.getenv("SWEEP_WORKERS", "4"))

# Dispatch Configuration
BISECTION_TOL_MW = float(os.getenv("BISECTION_TOL_MW", "1e-6"))
LONG_DURATION_HOURS = float(os.getenv("LONG_DURATION_HOURS", "10"))

# Cost Configuration ($/kWh)
STORAGE_UNIT_COST = float(os.getenv("STORAGE_UNIT_COST", "137"))
STORAGE_REFERENCE_UNIT_COST = float(os.getenv("STORAGE_REFERENCE_UNIT_COST", "1100"))

# Rationing Configuration
RESIDENTIAL_SHARE = Fraction(os.getenv("RESIDENTIAL_SHARE", "1/3"))
SURVIVABILITY_FRACTION = float(os.getenv("SURVIVABILITY_FRACTION", "0.5"))

# Calibration Configuration
CALIBRATION_SEED = int(os.getenv("CALIBRATION_SEED", "20210215"))

# Logging Configuration
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE = os.getenv("LOG_FILE", "")


def default_fixture_path() -> str:
    """Path of the bundled calibrated event profile."""
    return os.path.join(FIXTURE_DIR, DEFAULT_FIXTURE)


def get_config() -> Dict[str, Any]:
    """Get all configuration as a dictionary."""
    return {
        "fixture_dir": FIXTURE_DIR,
        "default_fixture": DEFAULT_FIXTURE,
        "results_db_url": RESULTS_DB_URL,
        "sweep_workers": SWEEP_WORKERS,
        "bisection_tol_mw": BISECTION_TOL_MW,
        "long_duration_hours": LONG_DURATION_HOURS,
        "storage_unit_cost": STORAGE_UNIT_COST,
        "storage_reference_unit_cost": STORAGE_REFERENCE_UNIT_COST,
        "residential_share": str(RESIDENTIAL_SHARE),
        "survivability_fraction": SURVIVABILITY_FRACTION,
        "calibration_seed": CALIBRATION_SEED,
        "log_level": LOG_LEVEL,
        "log_file": LOG_FILE
    }

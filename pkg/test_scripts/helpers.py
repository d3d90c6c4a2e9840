"""
Shared sample data and a small runner for the test scripts.

Every test module can be run with pytest or directly:

    python test_scripts/test_storage.py
"""

import functools
import os
import sys
import time
import traceback

import numpy as np

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from data.profiles import EventProfile, SheddingSeries, TimeGrid, load_profile  # noqa: E402

FIXTURE_PATH = os.path.join(PROJECT_ROOT, "data", "fixtures", "ercot_feb2021_synthetic.csv")
EVENT_START = "2021-02-15T06:00:00Z"


def create_sample_profile(capacity_mw, demand_mw, step="1h", start=EVENT_START) -> EventProfile:
    """Profile from plain lists of MW values."""
    return EventProfile.from_arrays(start, step, capacity_mw, demand_mw)


def create_sample_shedding(values_mw, step_seconds: float = 3600.0, start=EVENT_START) -> SheddingSeries:
    values = np.asarray(values_mw, dtype=float)
    return SheddingSeries(TimeGrid(start, step_seconds, len(values)), values)


def create_random_shedding(rng: np.random.Generator, max_steps: int = 12, scale: float = 5000.0) -> SheddingSeries:
    """Random hourly shedding with a few exact zeros and repeated values mixed in."""
    n = int(rng.integers(1, max_steps + 1))
    values = rng.uniform(0.0, scale, size=n)
    values[rng.random(n) < 0.2] = 0.0
    if n > 2 and rng.random() < 0.3:
        values[rng.integers(0, n)] = values.max()
    return create_sample_shedding(np.round(values, 3))


@functools.lru_cache(maxsize=1)
def fixture_profile() -> EventProfile:
    return load_profile(FIXTURE_PATH)


def run_tests(namespace: dict, title: str) -> int:
    """Run every `test_*` callable in `namespace` and print a summary. Returns an exit code."""
    tests = [(name, fn) for name, fn in namespace.items() if name.startswith("test_") and callable(fn)]
    print(f"\n{'=' * 70}\n🧪 {title}\n{'=' * 70}")
    failed = []
    start = time.perf_counter()
    for name, fn in tests:
        try:
            fn()
            print(f"  ✅ {name}")
        except Exception as e:
            failed.append(name)
            print(f"  ❌ {name}: {type(e).__name__}: {e}")
            traceback.print_exc()
    elapsed = time.perf_counter() - start
    print(f"\n📊 {len(tests) - len(failed)}/{len(tests)} passed in {elapsed:.2f}s")
    return 1 if failed else 0

#!/usr/bin/env python3
"""
Regenerate the bundled synthetic event profile and its JSON sidecar
"""

import argparse
import os
import sys
import traceback

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import config
from calibrate import CalibrationTargets, ProfileTemplate, fit_template, validate_fixture, write_fixture


def regenerate_fixture(path: str, seed: int) -> bool:
    """Fit the default template, validate it and write the fixture pair"""
    print("🔄 Regenerating synthetic event profile...")
    targets = CalibrationTargets()

    print("   Fitting template...")
    template = fit_template(targets, ProfileTemplate.default(), seed)
    profile = template.evaluate()
    print(f"   ✓ {profile.grid.count} hourly samples from {profile.grid.start:%Y-%m-%d %H:%M} UTC")

    print("\n   Validating targets...")
    report = validate_fixture(profile, targets)
    for check in report.checks:
        mark = "✓" if check.passed else "⚠️ "
        print(f"   {mark} {check.name:<18} {check.value:>14,.6g}  ({check.target})")
    if not report.passed:
        print(f"\n❌ Targets failed: {', '.join(sorted(report.failed))}; fixture not written")
        return False

    sidecar = write_fixture(profile, path, targets, template, seed)
    print(f"\n✅ Wrote {path}")
    print(f"   Provenance in {sidecar}")
    return True


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.strip())
    parser.add_argument("--out", default=config.default_fixture_path(), help="fixture CSV path")
    parser.add_argument("--seed", type=int, default=config.CALIBRATION_SEED)
    args = parser.parse_args()
    try:
        sys.exit(0 if regenerate_fixture(args.out, args.seed) else 1)
    except Exception as e:
        print(f"\n❌ Fixture regeneration failed: {e}")
        traceback.print_exc()
        sys.exit(1)

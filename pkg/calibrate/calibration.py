"""
Synthetic event profile calibrated to published outage anchors.

The measured 2021 grid data is not available, so the bundled fixture is a
piecewise-linear stand-in whose derived quantities (ENS with and without
rationing, peak shedding, peak demand, generation outage, window length) are
fitted to the anchors in CalibrationTargets. It is never presented as
measured data; the provenance goes into the fixture header and sidecar.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import optimize

import config
from core.errors import CalibrationError
from data.profiles import ZERO_ENS_MWH, EventProfile, compute_ens, compute_shedding, write_profile
from rationing.policy import apply_rationing

logger = logging.getLogger(__name__)

MIN_KNOTS = 6

# Inner bands the fit aims for, tighter than the validation tolerances.
FIT_BASELINE_BAND = 0.005
FIT_ANCHOR_BAND = (0.96, 1.0)
FIT_RATIO_MARGIN = 0.005
FIT_PEAK_SHEDDING_MARGIN = 1.01
FIT_OUTAGE_BAND = 0.05


@dataclass(frozen=True)
class CalibrationTargets:
    """Published anchors for the February 15-18 event. Energies in MWh, powers in MW."""
    baseline_ens: float = 920_000.0
    baseline_ens_tol: float = 0.01
    ens_at_rho20: float = 135_000.0
    ens_at_rho20_tol: float = 0.05
    anchor_rho: Fraction = Fraction(1, 5)
    zero_ens_rho: Fraction = Fraction(3, 10)
    peak_shedding_min: float = 20_000.0
    peak_demand: float = 69_000.0
    peak_demand_tol: float = 0.001
    capacity_outage_scale: float = 30_000.0
    capacity_outage_tol: float = 0.10
    installed_capacity: float = 77_000.0
    window_hours: float = 96.0
    window_tol_hours: float = 6.0
    rationing_knee: float = 0.85

    def __post_init__(self):
        positive = {
            "baseline_ens": self.baseline_ens,
            "ens_at_rho20": self.ens_at_rho20,
            "zero_ens_rho": self.zero_ens_rho,
            "peak_shedding_min": self.peak_shedding_min,
            "peak_demand": self.peak_demand,
            "capacity_outage_scale": self.capacity_outage_scale,
            "installed_capacity": self.installed_capacity,
            "window_hours": self.window_hours,
        }
        bad = {name for name, value in positive.items() if not value > 0}
        if bad:
            raise CalibrationError("calibration targets must be positive", violated=bad)
        if self.ens_at_rho20 >= self.baseline_ens:
            raise CalibrationError(
                "rationed ENS anchor must be below the baseline ENS", violated={"ens_at_rho20"}
            )
        object.__setattr__(self, "anchor_rho", Fraction(self.anchor_rho))
        object.__setattr__(self, "zero_ens_rho", Fraction(self.zero_ens_rho))

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        data["anchor_rho"] = float(self.anchor_rho)
        data["zero_ens_rho"] = float(self.zero_ens_rho)
        return data


# Default knot table: hours from 2021-02-15 00:00 UTC-6, demand MW, capacity MW.
_DEFAULT_KNOTS = (
    (0, 56_000, 56_000),
    (3, 60_500, 50_000),
    (7, 68_000, 49_000),
    (8, 69_000, 48_700),
    (9, 68_000, 49_000),
    (13, 64_000, 48_000),
    (21, 62_000, 47_200),
    (27, 65_000, 48_400),
    (33, 63_200, 47_200),
    (45, 60_800, 46_960),
    (57, 59_600, 51_280),
    (69, 58_400, 54_040),
    (81, 56_000, 55_120),
    (95, 54_600, 56_660),
)


@dataclass(frozen=True)
class ProfileTemplate:
    """
    Piecewise-linear demand and capacity curves sampled on an hourly grid.

    Knot hours are offsets from `start`; levels are MW. When
    `pinned_demand_peak` is set the demand levels are fixed during fitting.
    """
    knot_hours: Tuple[float, ...]
    demand_knots: Tuple[float, ...]
    capacity_knots: Tuple[float, ...]
    start: str = "2021-02-15T06:00:00Z"
    step_seconds: float = 3600.0
    count: int = 96
    pinned_demand_peak: Optional[float] = None

    def __post_init__(self):
        for name in ("knot_hours", "demand_knots", "capacity_knots"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if not len(self.knot_hours) == len(self.demand_knots) == len(self.capacity_knots):
            raise CalibrationError("knot hours and levels differ in length", violated={"template"})
        if any(b <= a for a, b in zip(self.knot_hours, self.knot_hours[1:])):
            raise CalibrationError("knot hours must be strictly increasing", violated={"template"})
        if min(self.demand_knots + self.capacity_knots, default=0.0) < 0:
            raise CalibrationError("template levels must be non-negative", violated={"template"})

    @classmethod
    def default(cls) -> "ProfileTemplate":
        hours, demand, capacity = zip(*_DEFAULT_KNOTS)
        return cls(hours, demand, capacity)

    def pin_demand_peak(self, peak_mw: float) -> "ProfileTemplate":
        """Scale demand so its peak is `peak_mw` and keep it fixed while fitting."""
        scale = peak_mw / max(self.demand_knots)
        return replace(
            self,
            demand_knots=tuple(level * scale for level in self.demand_knots),
            pinned_demand_peak=float(peak_mw),
        )

    def with_levels(self, demand, capacity) -> "ProfileTemplate":
        return replace(self, demand_knots=tuple(demand), capacity_knots=tuple(capacity))

    def evaluate(self) -> EventProfile:
        hours = np.arange(self.count, dtype=float) * self.step_seconds / 3600.0
        demand = np.interp(hours, self.knot_hours, self.demand_knots)
        capacity = np.interp(hours, self.knot_hours, self.capacity_knots)
        return EventProfile.from_arrays(self.start, self.step_seconds, capacity, demand)

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass(frozen=True)
class TargetCheck:
    name: str
    value: float
    target: str
    passed: bool


@dataclass(frozen=True)
class ValidationReport:
    checks: Tuple[TargetCheck, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failed(self) -> frozenset:
        return frozenset(check.name for check in self.checks if not check.passed)

    def __getitem__(self, name: str) -> TargetCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def lines(self):
        for check in self.checks:
            mark = "PASS" if check.passed else "FAIL"
            yield f"{mark}  {check.name:<18} {check.value:>14,.6g}  ({check.target})"


@dataclass(frozen=True)
class _Measures:
    ens_baseline: float
    ens_anchor: float
    ens_zero_rho: float
    max_shed_ratio: float
    peak_shedding: float
    peak_demand: float
    capacity_outage: float
    window_hours: float


def _measure(profile: EventProfile, targets: CalibrationTargets) -> _Measures:
    shedding = compute_shedding(profile)
    demand = profile.demand.values
    positive = demand > 0
    ratio = np.zeros_like(demand)
    ratio[positive] = shedding.values[positive] / demand[positive]

    def ens_at(rho) -> float:
        return compute_ens(compute_shedding(profile, apply_rationing(profile.demand, rho))).value_mwh

    return _Measures(
        ens_baseline=compute_ens(shedding).value_mwh,
        ens_anchor=ens_at(targets.anchor_rho),
        ens_zero_rho=ens_at(targets.zero_ens_rho),
        max_shed_ratio=float(ratio.max()),
        peak_shedding=shedding.peak,
        peak_demand=profile.demand.peak,
        capacity_outage=targets.installed_capacity - float(profile.capacity.values.min()),
        window_hours=profile.grid.span_hours,
    )


def validate_fixture(profile: EventProfile, targets: CalibrationTargets = None) -> ValidationReport:
    """Re-check every calibration target against `profile` with the stated tolerances."""
    t = targets or CalibrationTargets()
    m = _measure(profile, t)
    knee = 1.0 - m.ens_anchor / m.ens_baseline if m.ens_baseline > 0 else 0.0
    rho_zero = float(t.zero_ens_rho)
    checks = (
        TargetCheck(
            "baseline_ens", m.ens_baseline, f"{t.baseline_ens:,.0f} MWh +/- {t.baseline_ens_tol:.0%}",
            abs(m.ens_baseline - t.baseline_ens) <= t.baseline_ens_tol * t.baseline_ens,
        ),
        TargetCheck(
            "ens_at_rho20", m.ens_anchor, f"{t.ens_at_rho20:,.0f} MWh +/- {t.ens_at_rho20_tol:.0%}",
            abs(m.ens_anchor - t.ens_at_rho20) <= t.ens_at_rho20_tol * t.ens_at_rho20,
        ),
        TargetCheck(
            "rationing_knee", knee, f">= {t.rationing_knee:.0%} ENS reduction at rho={float(t.anchor_rho):g}",
            knee >= t.rationing_knee,
        ),
        TargetCheck(
            "zero_ens_rho", m.ens_zero_rho, f"ENS <= {ZERO_ENS_MWH:g} MWh at rho={rho_zero:g}",
            m.ens_zero_rho <= ZERO_ENS_MWH,
        ),
        TargetCheck(
            "shedding_ratio", m.max_shed_ratio, f"max s/L <= {rho_zero:g}",
            m.max_shed_ratio <= rho_zero,
        ),
        TargetCheck(
            "peak_shedding", m.peak_shedding, f"> {t.peak_shedding_min:,.0f} MW",
            m.peak_shedding > t.peak_shedding_min,
        ),
        TargetCheck(
            "peak_demand", m.peak_demand, f"{t.peak_demand:,.0f} MW +/- {t.peak_demand_tol:.1%}",
            abs(m.peak_demand - t.peak_demand) <= t.peak_demand_tol * t.peak_demand,
        ),
        TargetCheck(
            "capacity_outage", m.capacity_outage,
            f"{t.capacity_outage_scale:,.0f} MW +/- {t.capacity_outage_tol:.0%} below {t.installed_capacity:,.0f} MW",
            abs(m.capacity_outage - t.capacity_outage_scale) <= t.capacity_outage_tol * t.capacity_outage_scale,
        ),
        TargetCheck(
            "window", m.window_hours, f"{t.window_hours:g} h +/- {t.window_tol_hours:g} h",
            abs(m.window_hours - t.window_hours) <= t.window_tol_hours,
        ),
    )
    report = ValidationReport(checks)
    if report.passed:
        logger.info("Fixture validation: all targets pass")
    else:
        logger.warning(f"Fixture validation failed: {', '.join(sorted(report.failed))}")
    return report


def _hinge(x: float) -> float:
    return max(0.0, x)


def _penalties(profile: EventProfile, t: CalibrationTargets) -> np.ndarray:
    m = _measure(profile, t)
    anchor = m.ens_anchor / t.ens_at_rho20
    return np.array([
        _hinge(abs(m.ens_baseline - t.baseline_ens) / t.baseline_ens - FIT_BASELINE_BAND),
        _hinge(anchor - FIT_ANCHOR_BAND[1]) + _hinge(FIT_ANCHOR_BAND[0] - anchor),
        10.0 * _hinge(m.max_shed_ratio - (float(t.zero_ens_rho) - FIT_RATIO_MARGIN)),
        _hinge(FIT_PEAK_SHEDDING_MARGIN - m.peak_shedding / t.peak_shedding_min),
        _hinge(abs(m.capacity_outage - t.capacity_outage_scale) / t.capacity_outage_scale - FIT_OUTAGE_BAND),
    ])


def _precheck(targets: CalibrationTargets, template: ProfileTemplate) -> None:
    if len(template.knot_hours) < MIN_KNOTS:
        raise CalibrationError(
            f"template has {len(template.knot_hours)} knots per curve, needs at least {MIN_KNOTS}",
            violated={"template"},
        )
    if template.pinned_demand_peak is not None:
        if abs(template.pinned_demand_peak - targets.peak_demand) > targets.peak_demand_tol * targets.peak_demand:
            raise CalibrationError(
                f"demand peak is pinned at {template.pinned_demand_peak:,.0f} MW",
                violated={"peak_demand"},
            )
    span = template.count * template.step_seconds / 3600.0
    if abs(span - targets.window_hours) > targets.window_tol_hours:
        raise CalibrationError(f"template window is {span:g} h", violated={"window"})


def fit_template(
    targets: CalibrationTargets = None,
    template: ProfileTemplate = None,
    seed: int = None,
    restarts: int = 8,
) -> ProfileTemplate:
    """
    Fit the template levels to the targets.

    A template that already satisfies every target inside the fit bands is
    returned unchanged. Otherwise demand shape and capacity levels are fitted
    by bounded least squares on hinge penalties, with the demand peak held at
    the target, restarting from seeded perturbations until the result validates.
    """
    targets = targets or CalibrationTargets()
    template = template or ProfileTemplate.default()
    seed = config.CALIBRATION_SEED if seed is None else seed
    _precheck(targets, template)

    if not np.any(_penalties(template.evaluate(), targets)):
        logger.info("Calibration: template already meets every target")
        if validate_fixture(template.evaluate(), targets).passed:
            return template

    n = len(template.knot_hours)
    pinned = template.pinned_demand_peak is not None

    def build(x: np.ndarray) -> ProfileTemplate:
        if pinned:
            return template.with_levels(template.demand_knots, x)
        demand = x[:n]
        peak = demand.max()
        demand = demand * (targets.peak_demand / peak) if peak > 0 else demand
        return template.with_levels(demand, x[n:])

    def residuals(x: np.ndarray) -> np.ndarray:
        return _penalties(build(x).evaluate(), targets)

    x0 = np.array(template.capacity_knots if pinned else template.demand_knots + template.capacity_knots)
    rng = np.random.default_rng(seed)
    best, best_cost = None, np.inf
    for attempt in range(restarts + 1):
        start = x0 if attempt == 0 else x0 * (1.0 + 0.02 * rng.standard_normal(x0.size))
        fit = optimize.least_squares(residuals, np.maximum(start, 0.0), bounds=(0.0, np.inf), method="trf")
        candidate = build(fit.x)
        logger.debug(f"Calibration attempt {attempt}: cost {fit.cost:.3e}")
        if fit.cost < best_cost:
            best, best_cost = candidate, fit.cost
        if validate_fixture(candidate.evaluate(), targets).passed:
            logger.info(f"Calibration converged on attempt {attempt}")
            return candidate

    report = validate_fixture(best.evaluate(), targets)
    raise CalibrationError("calibration targets are unreachable with this template", violated=report.failed)


def calibrate_profile(
    targets: CalibrationTargets = None,
    template: ProfileTemplate = None,
    seed: int = None,
) -> EventProfile:
    """Fitted event profile satisfying every calibration target."""
    return fit_template(targets, template, seed).evaluate()


def write_fixture(
    profile: EventProfile,
    path,
    targets: CalibrationTargets = None,
    template: ProfileTemplate = None,
    seed: int = None,
) -> str:
    """
    Write the profile CSV with provenance header lines plus a JSON sidecar
    (same stem, .json) recording targets, tolerances, seed, template and the
    validation outcome. Returns the sidecar path.
    """
    targets = targets or CalibrationTargets()
    seed = config.CALIBRATION_SEED if seed is None else seed
    sidecar = os.path.splitext(path)[0] + ".json"
    header = (
        "Synthetic stand-in for the 15-18 February 2021 Texas capacity shortfall. Not measured grid data.",
        "Shape: piecewise-linear template fitted to published anchors; see the JSON sidecar.",
        f"Anchors: ENS {targets.baseline_ens:,.0f} MWh; ENS at rho={float(targets.anchor_rho):g} "
        f"{targets.ens_at_rho20:,.0f} MWh; zero ENS at rho={float(targets.zero_ens_rho):g}; "
        f"peak demand {targets.peak_demand:,.0f} MW",
        f"Calibration seed: {seed}",
    )
    write_profile(profile, path, header)

    report = validate_fixture(profile, targets)
    document = {
        "description": header[0],
        "seed": seed,
        "targets": targets.to_dict(),
        "template": template.to_dict() if template is not None else None,
        "validation": {check.name: {"value": check.value, "passed": check.passed} for check in report.checks},
    }
    with open(sidecar, "w", encoding="utf-8", newline="\n") as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Wrote fixture {path} and sidecar {sidecar}")
    return sidecar

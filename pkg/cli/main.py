"""
Command-line frontend.

    python -m cli ens --profile data/fixtures/ercot_feb2021_synthetic.csv
    python -m cli cost --energy-gwh 920
    python -m cli sweep --kind ens --energy-gwh-values 0,135 --out ens_vs_rho.csv

Summaries go to stdout in GW/GWh; files are written in MW/MWh. Logs go to
stderr (and LOG_FILE when set). Exit codes: 0 success, 1 validation or file
error, 2 usage error.
"""

import argparse
import logging
import math
import sys
from logging.handlers import RotatingFileHandler
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

import config
from calibrate.calibration import CalibrationTargets, ProfileTemplate, fit_template, validate_fixture, write_fixture
from cli.scenario_config import ScenarioConfig, load_scenario_config
from data.profiles import EnergyQuantity, EventProfile, load_profile, shedding_statistics
from data.scenario_database import ScenarioDatabase
from rationing.enforcement import HouseholdState, load_population, sample_population, simulate_household_enforcement
from rationing.policy import RationingPolicy, SurvivabilityThreshold, household_cap, system_fraction
from storage.dispatchers import size_for_zero_residual
from storage.models import (
    TEXAS_2033_FLEET,
    CostModel,
    EVFleetSegment,
    StorageSpec,
    aggregate_ev_fleet,
    fleet_coverage,
    load_fleet,
    storage_cost,
)
from sweep.engine import (
    Scenario,
    default_rho_axis,
    evaluate,
    rationed_shedding,
    shedding_trajectories,
    sweep_ens_vs_rationing,
    sweep_peak_shave_vs_storage,
)
from sweep.export import write_grid, write_records, write_trajectories

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DEFAULT_ENS_SWEEP_GWH = (0.0, 135.0)
DEFAULT_SHAVE_SWEEP_GWH = tuple(float(e) for e in range(0, 51))
DEFAULT_SHAVE_SWEEP_RHO = (0.0, 0.1, 0.2)


def configure_logging(level: str = None) -> None:
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if config.LOG_FILE:
        file_handler = RotatingFileHandler(config.LOG_FILE, maxBytes=10 * 1024 * 1024, backupCount=5)
        handlers.append(file_handler)
    logging.basicConfig(
        level=getattr(logging, (level or config.LOG_LEVEL).upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


# --- Formatting helpers ---

def gwh(mwh: float) -> str:
    return f"{mwh / 1000.0:,.1f} GWh"


def gw(mw: float) -> str:
    return "unbounded" if math.isinf(mw) else f"{mw / 1000.0:,.2f} GW"


def billions(dollars: float) -> str:
    return f"${dollars / 1e9:,.2f}B"


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


def _power(text: str):
    if text.strip().lower() == "unbounded":
        return "unbounded"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number of GW or 'unbounded', got '{text}'") from None


# --- Commands ---

def _load(cfg: ScenarioConfig) -> EventProfile:
    return load_profile(cfg.profile_path, cfg.schema)


def _emit(cfg: ScenarioConfig, records: List[Dict[str, object]]) -> None:
    if cfg.out:
        write_records(records, cfg.out, cfg.format)
        print(f"Wrote {cfg.out}")


def cmd_ens(cfg: ScenarioConfig, args) -> int:
    profile = _load(cfg)
    rho = system_fraction(cfg.rationing())
    shedding = rationed_shedding(profile, rho)
    stats = shedding_statistics(shedding)
    ens = size_for_zero_residual(shedding).energy_mwh
    print(f"ENS = {gwh(ens)}")
    print(f"Peak shedding = {gw(stats.peak_mw)} over {stats.shedding_hours:g} h (rho = {float(rho):g})")
    _emit(cfg, [{
        "rho": float(rho),
        "ens_mwh": ens,
        "peak_shedding_mw": stats.peak_mw,
        "mean_shedding_mw": stats.mean_mw,
        "shedding_hours": stats.shedding_hours,
        "peak_to_mean": stats.peak_to_mean,
    }])
    return 0


def _enforcement_summary(policy: RationingPolicy, threshold: SurvivabilityThreshold, args) -> Dict[str, object]:
    """Drive a household population through the warn/cut-off rule and compare with the macro formula."""
    if args.households:
        population = load_population(args.households, policy)
    else:
        population = sample_population(args.sample_households, policy, seed=args.seed)
    caps = np.array([h.cap_kw for h in population])
    baselines = np.array([h.baseline_kw for h in population])
    rng = np.random.default_rng(args.seed)
    violators = rng.random(len(population)) < args.violators
    draws = []
    for _ in range(args.steps):
        row = caps * rng.uniform(0.3, 1.0, len(population))
        row[violators] = baselines[violators]
        draws.append(row)

    outcome = simulate_household_enforcement(population, policy, draws, threshold)
    cut_off = sum(state is HouseholdState.CUT_OFF for state in outcome.states)
    macro = float(policy.keep_fraction) * float(baselines.sum())
    print(
        f"Enforcement: {len(population):,} households, {args.steps} step(s), "
        f"{len(outcome.notifications)} notifications, {cut_off:,} cut off"
    )
    print(f"Served {outcome.final_aggregate_kw:,.1f} kW at the last step (cap total {macro:,.1f} kW)")
    return {
        "households": len(population),
        "cut_off": cut_off,
        "notifications": len(outcome.notifications),
        "served_kw": outcome.final_aggregate_kw,
        "cap_total_kw": macro,
    }


def cmd_ration(cfg: ScenarioConfig, args) -> int:
    rationing = cfg.rationing()
    policy = rationing if isinstance(rationing, RationingPolicy) else RationingPolicy.direct(rationing)
    rho = system_fraction(policy)
    threshold = SurvivabilityThreshold()
    cap = household_cap(policy, args.baseline_kw, threshold)
    print(
        f"System reduction rho = {float(rho):g} "
        f"(residential share {float(policy.residential_share):.4g} x rationing {float(policy.residential_fraction):.0%})"
    )
    print(f"Household cap = {cap.cap_kw:.3g} kW of {args.baseline_kw:g} kW ({float(policy.keep_fraction):.0%} of normal usage)")
    if cap.survivability_warning:
        print(f"WARNING: cap is below the {threshold.minimum_fraction:.0%} survivability minimum")

    profile = _load(cfg)
    before = size_for_zero_residual(rationed_shedding(profile, 0)).energy_mwh
    after = size_for_zero_residual(rationed_shedding(profile, rho)).energy_mwh
    reduction = 1.0 - after / before if before > 0 else 0.0
    print(f"ENS {gwh(before)} -> {gwh(after)} ({reduction:.1%} reduction)")
    record = {
        "rho": float(rho),
        "residential_share": float(policy.residential_share),
        "residential_fraction": float(policy.residential_fraction),
        "household_cap_kw": cap.cap_kw,
        "survivability_warning": cap.survivability_warning,
        "baseline_ens_mwh": before,
        "ens_mwh": after,
    }
    if args.households or args.sample_households:
        record.update(_enforcement_summary(policy, threshold, args))
    _emit(cfg, [record])
    return 0


def cmd_dispatch(cfg: ScenarioConfig, args) -> int:
    profile = _load(cfg)
    scenario = Scenario(profile, cfg.rationing(), cfg.storage_spec(), cfg.objective)
    report = evaluate(scenario, CostModel(cfg.unit_cost))
    print(f"ENS = {gwh(report.ens.value_mwh)}, peak shedding = {gw(report.peak_shedding_mw)} (rho = {report.rho:g})")
    print(f"Storage E = {gwh(report.energy_mwh)}, P = {gw(report.power_limit_mw)} [{report.objective}]")
    print(
        f"Peak shave = {gw(report.peak_shave_mw)}, residual ENS = {gwh(report.residual_ens.value_mwh)}, "
        f"energy used = {gwh(report.energy_used.value_mwh)}"
    )
    _emit(cfg, [report.to_record()])
    return 0


def cmd_size(cfg: ScenarioConfig, args) -> int:
    profile = _load(cfg)
    rho = system_fraction(cfg.rationing())
    sizing = size_for_zero_residual(rationed_shedding(profile, rho))
    cost = storage_cost(EnergyQuantity(sizing.energy_mwh), CostModel(cfg.unit_cost))
    kind = "long-duration" if sizing.is_long_duration() else "short-duration"
    print(f"Zero-residual storage at rho = {float(rho):g}: E* = {gwh(sizing.energy_mwh)}, P* = {gw(sizing.power_mw)}")
    print(f"Duration {sizing.duration_hours:.1f} h ({kind}), cost {billions(cost)} at ${cfg.unit_cost:g}/kWh")
    _emit(cfg, [{
        "rho": float(rho),
        "energy_mwh": sizing.energy_mwh,
        "power_mw": sizing.power_mw,
        "duration_hours": sizing.duration_hours,
        "long_duration": sizing.is_long_duration(),
        "cost_usd": cost,
    }])
    return 0


def cmd_evfleet(cfg: ScenarioConfig, args) -> int:
    segments = load_fleet(args.fleet) if args.fleet else list(TEXAS_2033_FLEET)
    if args.availability is not None:
        segments = [
            EVFleetSegment(seg.name, seg.count, seg.per_vehicle_kwh, args.availability, seg.per_vehicle_kw)
            for seg in segments
        ]
    power_mw = None if cfg.power_limit_gw == "unbounded" else float(cfg.power_limit_gw) * 1000.0
    fleet = aggregate_ev_fleet(segments, power_mw)
    for seg in segments:
        print(f"  {seg.name:<20} {seg.count:>10,} x {seg.per_vehicle_kwh:g} kWh -> {gwh(seg.energy_mwh)}")
    print(f"EV fleet energy = {gwh(fleet.energy_capacity_mwh)}, power {gw(fleet.power_limit_mw)}")
    record = {"energy_mwh": fleet.energy_capacity_mwh, "power_limit_mw": None if fleet.unbounded else fleet.power_limit_mw}
    if args.coverage:
        rho = system_fraction(cfg.rationing())
        required = size_for_zero_residual(rationed_shedding(_load(cfg), rho)).energy_mwh
        coverage = fleet_coverage(fleet, EnergyQuantity(required))
        print(f"Covers {coverage:.0%} of the {gwh(required)} zero-residual requirement at rho = {float(rho):g}")
        record.update(rho=float(rho), required_mwh=required, coverage=coverage)
    _emit(cfg, [record])
    return 0


def cmd_cost(cfg: ScenarioConfig, args) -> int:
    model = CostModel(cfg.unit_cost)
    energy = EnergyQuantity.from_gwh(cfg.energy_gwh)
    cost = storage_cost(energy, model)
    reference = storage_cost(energy, CostModel(model.reference_unit_cost, model.reference_unit_cost))
    print(f"{billions(cost)}")
    print(
        f"{gwh(energy.value_mwh)} at ${model.unit_cost:g}/kWh "
        f"({billions(reference)} at the ${model.reference_unit_cost:,.0f}/kWh reference price)"
    )
    _emit(cfg, [{
        "energy_mwh": energy.value_mwh,
        "unit_cost_usd_per_kwh": model.unit_cost,
        "cost_usd": cost,
        "reference_cost_usd": reference,
    }])
    return 0


def cmd_sweep(cfg: ScenarioConfig, args) -> int:
    profile = _load(cfg)
    power_mw = math.inf if cfg.power_limit_gw == "unbounded" else float(cfg.power_limit_gw) * 1000.0
    cost_model = CostModel(cfg.unit_cost)

    if args.kind == "trajectories":
        rhos = cfg.rho_values or [0.0, 0.1, 0.2, 0.3]
        trajectories = shedding_trajectories(profile, rhos)
        for rho, series in zip(rhos, trajectories):
            print(f"rho = {rho:g}: peak {gw(series.peak)}, ENS {gwh(size_for_zero_residual(series).energy_mwh)}")
        if cfg.out:
            write_trajectories(trajectories, rhos, cfg.out, cfg.format)
            print(f"Wrote {cfg.out}")
        return 0

    if args.kind == "ens":
        rhos = cfg.rho_values or default_rho_axis()
        energies = cfg.energy_values_gwh or list(DEFAULT_ENS_SWEEP_GWH)
        options = [StorageSpec.from_gwh(e, None if math.isinf(power_mw) else power_mw / 1000.0) for e in energies]
        grid = sweep_ens_vs_rationing(profile, rhos, options, refine=args.refine, cost_model=cost_model, workers=args.workers)
        for j, spec in enumerate(grid.storage):
            crossing = grid.zero_crossings[j]
            line = f"E = {gwh(spec.energy_capacity_mwh)}: zero ENS at rho = " + ("none" if crossing is None else f"{crossing:g}")
            if args.refine and grid.refined_crossings.get(j) is not None:
                line += f" (refined {grid.refined_crossings[j]:.6f})"
            print(line)
    else:
        rhos = cfg.rho_values or list(DEFAULT_SHAVE_SWEEP_RHO)
        energies = cfg.energy_values_gwh or list(DEFAULT_SHAVE_SWEEP_GWH)
        grid = sweep_peak_shave_vs_storage(
            profile, rhos, [e * 1000.0 for e in energies], power_mw, cost_model=cost_model, workers=args.workers
        )
        for i, rho in enumerate(grid.rho_values):
            shaves = ", ".join(f"{r.peak_shave_mw / 1000.0:.2f}" for r in grid.row(i))
            print(f"rho = {rho:g}: shave GW [{shaves}]")

    if cfg.out:
        write_grid(grid, cfg.out, cfg.format)
        print(f"Wrote {cfg.out}")
    if args.db:
        url = None if args.db == "default" else args.db
        run_id = ScenarioDatabase(url).save_sweep(
            grid, args.kind, profile=cfg.profile_path,
            parameters={"rho_values": list(grid.rho_values), "energy_values_mwh": list(grid.energy_values)},
        )
        print(f"Saved sweep {run_id}")
    return 0


def cmd_calibrate(cfg: ScenarioConfig, args) -> int:
    targets = CalibrationTargets()
    template = fit_template(targets, ProfileTemplate.default(), args.seed)
    profile = template.evaluate()
    report = validate_fixture(profile, targets)
    for line in report.lines():
        print(line)
    if cfg.out:
        sidecar = write_fixture(profile, cfg.out, targets, template, args.seed)
        print(f"Wrote {cfg.out} and {sidecar}")
    return 0 if report.passed else 1


def cmd_validate(cfg: ScenarioConfig, args) -> int:
    report = validate_fixture(_load(cfg), CalibrationTargets())
    for line in report.lines():
        print(line)
    print("All targets pass" if report.passed else f"Failed: {', '.join(sorted(report.failed))}")
    if cfg.out:
        write_records(
            [{"target": c.name, "value": c.value, "expected": c.target, "passed": c.passed} for c in report.checks],
            cfg.out, cfg.format,
        )
        print(f"Wrote {cfg.out}")
    return 0 if report.passed else 1


COMMANDS: Dict[str, Callable[[ScenarioConfig, argparse.Namespace], int]] = {
    "ens": cmd_ens,
    "ration": cmd_ration,
    "dispatch": cmd_dispatch,
    "size": cmd_size,
    "evfleet": cmd_evfleet,
    "cost": cmd_cost,
    "sweep": cmd_sweep,
    "calibrate": cmd_calibrate,
    "validate": cmd_validate,
}


# --- Parser ---

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scenario document")
    common.add_argument("--profile", help="profile CSV (default: bundled fixture)")
    common.add_argument("--unit", choices=["MW", "GW"], help="unit of the profile power columns")
    common.add_argument("--rho", type=float, help="direct system-level reduction fraction")
    common.add_argument("--residential-share", type=float, help="residential share of demand (default 1/3)")
    common.add_argument("--residential-fraction", type=float, help="share of residential usage removed")
    common.add_argument("--energy-gwh", type=float, help="storage energy capacity")
    common.add_argument("--power-gw", type=_power, help="storage power limit or 'unbounded'")
    common.add_argument("--efficiency", type=float)
    common.add_argument("--initial-charge", type=float)
    common.add_argument("--objective", choices=["peak_shave", "ens_offset"])
    common.add_argument("--unit-cost", type=float, help="storage cost in $/kWh")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", help="output file")
    common.add_argument("--log-level", help="override LOG_LEVEL")

    parser = argparse.ArgumentParser(
        prog="shortfall",
        description="Load shedding, rationing and storage analysis for capacity shortfall events",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    sub.add_parser("ens", parents=[common], help="energy not served for a profile")
    ration = sub.add_parser("ration", parents=[common], help="rationing policy and its effect on ENS")
    ration.add_argument("--baseline-kw", type=float, default=1.0, help="household baseline usage for the cap report")
    ration.add_argument("--households", help="household CSV (id, baseline_kw) for an enforcement run")
    ration.add_argument("--sample-households", type=int, help="enforcement run on N sampled households")
    ration.add_argument("--violators", type=float, default=0.1, help="share of households drawing their full baseline")
    ration.add_argument("--steps", type=int, default=4, help="enforcement steps")
    ration.add_argument("--seed", type=int, default=0)
    sub.add_parser("dispatch", parents=[common], help="run one storage dispatch scenario")
    sub.add_parser("size", parents=[common], help="zero-residual storage sizing")
    ev = sub.add_parser("evfleet", parents=[common], help="EV fleet as an energy reserve")
    ev.add_argument("--fleet", help="fleet CSV (default: projected 2033 Texas fleet)")
    ev.add_argument("--availability", type=float, help="override availability for every segment")
    ev.add_argument("--coverage", action="store_true", help="compare against the zero-residual requirement")
    sub.add_parser("cost", parents=[common], help="installed storage cost")
    sweep = sub.add_parser("sweep", parents=[common], help="scenario grids")
    sweep.add_argument("--kind", choices=["ens", "shave", "trajectories"], default="ens")
    sweep.add_argument("--rho-values", type=_float_list, help="comma-separated rho axis")
    sweep.add_argument("--energy-gwh-values", type=_float_list, help="comma-separated storage energy axis")
    sweep.add_argument("--refine", action="store_true", help="bisect zero-ENS crossings between grid points")
    sweep.add_argument("--workers", type=int, help="worker threads (default SWEEP_WORKERS)")
    sweep.add_argument("--db", nargs="?", const="default", help="save the grid to a results database URL")
    cal = sub.add_parser("calibrate", parents=[common], help="fit the synthetic event profile")
    cal.add_argument("--seed", type=int, default=None)
    sub.add_parser("validate", parents=[common], help="check a profile against the calibration targets")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, object]:
    return {
        "profile": args.profile,
        "unit": args.unit,
        "rho": args.rho,
        "residential_share": args.residential_share,
        "residential_fraction": args.residential_fraction,
        "energy_gwh": args.energy_gwh,
        "power_limit_gw": args.power_gw,
        "efficiency": args.efficiency,
        "initial_charge": args.initial_charge,
        "objective": args.objective,
        "unit_cost": args.unit_cost,
        "rho_values": getattr(args, "rho_values", None),
        "energy_values_gwh": getattr(args, "energy_gwh_values", None),
        "format": args.format,
        "out": args.out,
    }


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2

    configure_logging(args.log_level)
    logger.debug(f"Configuration: {config.get_config()}")
    try:
        cfg = load_scenario_config(args.config, _overrides(args))
        return COMMANDS[args.command](cfg, args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        # ProfileError, RationingError, StorageError, SweepError, CalibrationError, ScenarioConfigError
        message = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"error: {message}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

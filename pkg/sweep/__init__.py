from sweep.engine import (
    Scenario,
    ScenarioReport,
    SweepGrid,
    default_rho_axis,
    evaluate,
    marginal_shave,
    rationed_shedding,
    refine_zero_crossing,
    shedding_trajectories,
    sweep_ens_vs_rationing,
    sweep_peak_shave_vs_storage,
)

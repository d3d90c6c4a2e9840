from rationing.policy import (
    RationingPolicy,
    SurvivabilityThreshold,
    HouseholdCap,
    apply_rationing,
    household_cap,
    system_fraction,
    system_reduction,
)
from rationing.enforcement import (
    Household,
    HouseholdState,
    EnforcementSimulator,
    build_population,
    load_population,
    sample_population,
    simulate_household_enforcement,
)

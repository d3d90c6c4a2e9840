from storage.models import (
    StorageSpec,
    DispatchResult,
    SizingResult,
    EVFleetSegment,
    CostModel,
    TEXAS_2033_FLEET,
    aggregate_ev_fleet,
    fleet_coverage,
    load_fleet,
    storage_cost,
)
from storage.dispatchers import (
    PeakShaveDispatcher,
    EnsOffsetDispatcher,
    dispatch_ens_offset,
    dispatch_peak_shave,
    size_for_zero_residual,
)

import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, TYPE_CHECKING

if TYPE_CHECKING:
    from data.profiles import SheddingSeries
    from storage.models import DispatchResult, StorageSpec

logger = logging.getLogger(__name__)


class DispatcherBase(ABC):
    """
    Abstract base class for all storage dispatch objectives.
    This class defines the interface that both the scenario engine
    and the command-line frontend use to run a dispatcher.
    """
    objective: str = ""

    def __init__(self, params: Dict[str, Any] = None):
        self.params = params or {}

    @abstractmethod
    def dispatch(self, shedding: 'SheddingSeries', spec: 'StorageSpec') -> 'DispatchResult':
        """
        Compute a discharge schedule for `shedding` from the store described by `spec`.
        Implementations must return a result that satisfies the feasibility invariants.
        """
        pass

    def run(self, shedding: 'SheddingSeries', spec: 'StorageSpec') -> 'DispatchResult':
        """
        Dispatch and verify the result. A violated invariant raises StorageError,
        so a broken objective never reaches a report.
        """
        result = self.dispatch(shedding, spec)
        result.check_feasibility(shedding, spec)
        logger.debug(
            f"[{self.objective}] E={spec.energy_capacity_mwh:.6g} MWh: "
            f"used {result.energy_used.value_mwh:.6g} MWh, shave {result.peak_shave_mw:.6g} MW"
        )
        return result

"""
Household-level enforcement of a rationing policy.

Every household is capped at a share of its baseline usage. A household that
draws above its cap is warned on the first violating step and cut off on the
next consecutive one; a cut-off household is served nothing for the rest of
the run. A warned household that complies returns to normal.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.errors import RationingError
from rationing.policy import RationingPolicy, SurvivabilityThreshold, household_cap

logger = logging.getLogger(__name__)


class HouseholdState(str, Enum):
    NORMAL = "normal"
    WARNED = "warned"
    CUT_OFF = "cut_off"


@dataclass
class Household:
    """Represents one metered household. Powers are in kW."""
    id: str
    baseline_kw: float
    cap_kw: float
    state: HouseholdState = HouseholdState.NORMAL

    def __post_init__(self):
        if self.baseline_kw < 0 or self.cap_kw < 0:
            raise RationingError(f"household {self.id}: baseline and cap must be non-negative")


@dataclass(frozen=True)
class Notification:
    """Message sent to a household when its enforcement state changes."""
    step: int
    household_id: str
    state: HouseholdState
    requested_kw: float
    cap_kw: float


@dataclass(frozen=True, eq=False)
class EnforcementOutcome:
    aggregate_kw: np.ndarray                 # per step
    served_kw: np.ndarray                    # steps x households
    states: Tuple[HouseholdState, ...]       # after the last step
    notifications: Tuple[Notification, ...] = field(default_factory=tuple)

    @property
    def final_aggregate_kw(self) -> float:
        return float(self.aggregate_kw[-1])


class EnforcementSimulator:
    """
    Steps a population through successive usage requests. The simulator mutates
    the Household objects it is given; drive one instance from a single thread.
    """

    _CODES = (HouseholdState.NORMAL, HouseholdState.WARNED, HouseholdState.CUT_OFF)

    def __init__(
        self,
        population: Sequence[Household],
        policy: RationingPolicy,
        threshold: SurvivabilityThreshold = None,
    ):
        self.population = list(population)
        self.policy = policy
        self.threshold = threshold or SurvivabilityThreshold()
        self.caps = np.array([h.cap_kw for h in self.population], dtype=float)
        self.codes = np.array([self._CODES.index(h.state) for h in self.population], dtype=np.int8)
        self.step_index = 0
        self.notifications: List[Notification] = []

        for household in self.population:
            expected = household_cap(policy, household.baseline_kw, self.threshold).cap_kw
            if not math.isclose(household.cap_kw, expected, rel_tol=1e-9, abs_tol=1e-12):
                raise RationingError(
                    f"household {household.id}: cap {household.cap_kw} kW does not match the policy cap {expected} kW"
                )

    def step(self, requested_kw) -> np.ndarray:
        """Serve one step of requests and return the per-household served power (kW)."""
        requested = np.asarray(requested_kw, dtype=float)
        if requested.shape != self.caps.shape:
            raise RationingError(f"expected {self.caps.size} requests, got {requested.size}")
        if not np.all(np.isfinite(requested)) or np.any(requested < 0):
            raise RationingError("requested power must be finite and non-negative")

        violating = requested > self.caps
        normal, warned, cut_off = 0, 1, 2
        new_codes = self.codes.copy()
        new_codes[violating & (self.codes == normal)] = warned
        new_codes[violating & (self.codes == warned)] = cut_off
        new_codes[~violating & (self.codes == warned)] = normal

        served = np.where(new_codes == cut_off, 0.0, np.minimum(requested, self.caps))

        for i in np.flatnonzero(new_codes != self.codes):
            household = self.population[i]
            household.state = self._CODES[new_codes[i]]
            if household.state is not HouseholdState.NORMAL:
                self.notifications.append(
                    Notification(self.step_index, household.id, household.state, float(requested[i]), float(self.caps[i]))
                )
        self.codes = new_codes
        self.step_index += 1
        return served

    def run(self, usage_draws) -> EnforcementOutcome:
        draws = np.asarray(usage_draws, dtype=float)
        if draws.ndim == 1:
            draws = draws[np.newaxis, :]
        served = np.vstack([self.step(row) for row in draws])
        aggregate = np.array([math.fsum(row) for row in served])
        cut = int((self.codes == 2).sum())
        logger.info(
            f"Enforcement over {len(draws)} step(s): {len(self.notifications)} notifications, "
            f"{cut} of {len(self.population)} households cut off"
        )
        return EnforcementOutcome(
            aggregate_kw=aggregate,
            served_kw=served,
            states=tuple(h.state for h in self.population),
            notifications=tuple(self.notifications),
        )


def simulate_household_enforcement(
    population: Sequence[Household],
    policy: RationingPolicy,
    usage_draws,
    threshold: SurvivabilityThreshold = None,
) -> EnforcementOutcome:
    """
    Run `usage_draws` (one row of per-household requests per step, or a single
    row) through a fresh simulator and return aggregate and per-household results.
    """
    return EnforcementSimulator(population, policy, threshold).run(usage_draws)


# --- Population builders ---

def build_population(
    baselines_kw: Sequence[float],
    policy: RationingPolicy,
    ids: Optional[Sequence[str]] = None,
    threshold: SurvivabilityThreshold = None,
) -> List[Household]:
    """Create households whose caps come from `household_cap`."""
    threshold = threshold or SurvivabilityThreshold()
    ids = list(ids) if ids is not None else [f"H{i:06d}" for i in range(len(baselines_kw))]
    if len(ids) != len(baselines_kw):
        raise RationingError("household ids and baselines differ in length")

    population = []
    warned = False
    for household_id, baseline in zip(ids, baselines_kw):
        cap = household_cap(policy, float(baseline), threshold)
        warned = warned or cap.survivability_warning
        population.append(Household(str(household_id), float(baseline), cap.cap_kw))
    if warned:
        logger.warning(
            f"Household cap at {float(policy.keep_fraction):.0%} of normal usage is below the "
            f"{threshold.minimum_fraction:.0%} survivability minimum"
        )
    return population


def sample_population(
    n: int,
    policy: RationingPolicy,
    seed: int = 0,
    median_kw: float = 1.2,
    sigma: float = 0.5,
) -> List[Household]:
    """Synthetic population with log-normal baselines from a seeded generator."""
    rng = np.random.default_rng(seed)
    baselines = rng.lognormal(mean=np.log(median_kw), sigma=sigma, size=n)
    return build_population(baselines, policy)


def load_population(source, policy: RationingPolicy) -> List[Household]:
    """Read households from a CSV with columns `id, baseline_kw`."""
    frame = pd.read_csv(source, skipinitialspace=True, comment="#", dtype={"id": str})
    missing = {"id", "baseline_kw"} - set(frame.columns)
    if missing:
        raise RationingError(f"household CSV is missing column(s) {', '.join(sorted(missing))}")
    baselines = pd.to_numeric(frame["baseline_kw"], errors="coerce")
    if baselines.isna().any() or (baselines < 0).any():
        row = int(np.argmax((baselines.isna() | (baselines < 0)).to_numpy()))
        raise RationingError(f"household {frame['id'].iloc[row]}: invalid baseline_kw")
    return build_population(baselines.to_numpy(dtype=float), policy, ids=frame["id"].tolist())

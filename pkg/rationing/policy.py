"""
Load-rationing policy: residential share and rationing depth mapped onto a
system-level demand reduction, per-household caps, and rationed demand.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

import config
from core.errors import RationingError
from data.profiles import PowerSeries

logger = logging.getLogger(__name__)

MAX_DENOMINATOR = 10**6

FractionLike = Union[Fraction, float, int, str]


def as_fraction(value: FractionLike, name: str = "fraction") -> Fraction:
    """Snap a fraction to the nearest rational with a bounded denominator, so 1/3 x 0.6 is exactly 0.2."""
    try:
        frac = value if isinstance(value, Fraction) else Fraction(value)
    except (ValueError, TypeError, ZeroDivisionError):
        raise RationingError(f"{name} must be a number in [0, 1], got {value!r}") from None
    frac = frac.limit_denominator(MAX_DENOMINATOR)
    if not 0 <= frac <= 1:
        raise RationingError(f"{name} must lie in [0, 1], got {float(frac)}")
    return frac


@dataclass(frozen=True)
class SurvivabilityThreshold:
    """Smallest fraction of normal usage a household can live on during an event."""
    minimum_fraction: float = config.SURVIVABILITY_FRACTION

    def __post_init__(self):
        if not 0 <= self.minimum_fraction <= 1:
            raise RationingError(f"minimum_fraction must lie in [0, 1], got {self.minimum_fraction}")


@dataclass(frozen=True)
class RationingPolicy:
    """
    Residential rationing policy.

    residential_share: share of system demand that is residential (f_res).
    residential_fraction: share of residential usage removed (r_res).
    """
    residential_share: Fraction = config.RESIDENTIAL_SHARE
    residential_fraction: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "residential_share", as_fraction(self.residential_share, "residential_share"))
        object.__setattr__(
            self, "residential_fraction", as_fraction(self.residential_fraction, "residential_fraction")
        )

    @classmethod
    def direct(cls, rho: FractionLike) -> "RationingPolicy":
        """A system-level reduction expressed directly, without the residential mapping."""
        return cls(residential_share=Fraction(1), residential_fraction=rho)

    @property
    def rho(self) -> Fraction:
        return self.residential_share * self.residential_fraction

    @property
    def keep_fraction(self) -> Fraction:
        """Share of normal household usage a household may still draw."""
        return 1 - self.residential_fraction


@dataclass(frozen=True)
class HouseholdCap:
    cap_kw: float
    survivability_warning: bool


def system_fraction(policy_or_rho: Union[RationingPolicy, FractionLike]) -> Fraction:
    if isinstance(policy_or_rho, RationingPolicy):
        return policy_or_rho.rho
    return as_fraction(policy_or_rho, "rho")


def system_reduction(policy: RationingPolicy) -> float:
    """rho = f_res * r_res, the share of total system demand removed."""
    return float(policy.rho)


def household_cap(
    policy: RationingPolicy,
    baseline_kw: float,
    threshold: SurvivabilityThreshold = None,
) -> HouseholdCap:
    """
    Cap a household at (1 - r_res) of its baseline usage. The warning flag is
    set when that share falls below the survivability threshold.
    """
    if baseline_kw < 0:
        raise RationingError(f"baseline usage must be non-negative, got {baseline_kw}")
    threshold = threshold or SurvivabilityThreshold()
    keep = float(policy.keep_fraction)
    return HouseholdCap(keep * baseline_kw, keep < threshold.minimum_fraction)


def apply_rationing(demand: PowerSeries, policy: Union[RationingPolicy, FractionLike]) -> PowerSeries:
    """Rationed demand L'(t) = (1 - rho) L(t) on the same grid."""
    rho = system_fraction(policy)
    if rho == 0:
        return demand
    logger.debug(f"Rationing demand by {float(rho):.4f} of system load")
    return PowerSeries(demand.grid, float(1 - rho) * np.asarray(demand.values))

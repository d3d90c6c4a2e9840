import json
import math
import os
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

import config
from core.errors import ScenarioConfigError
from data.profiles import ProfileSchema
from rationing.policy import RationingPolicy
from storage.models import StorageSpec


class ScenarioConfig(BaseModel):
    """Flat scenario document. Every key can also be set by a command-line flag."""
    model_config = ConfigDict(extra="forbid")

    profile: Optional[str] = Field(None, description="Profile CSV; defaults to the bundled fixture.")
    unit: Literal["MW", "GW"] = Field("MW", description="Unit of the profile's power columns.")

    rho: Optional[float] = Field(None, ge=0.0, le=1.0, description="Direct system-level reduction fraction.")
    residential_share: Optional[float] = Field(None, ge=0.0, le=1.0, description="Residential share of demand.")
    residential_fraction: Optional[float] = Field(None, ge=0.0, le=1.0, description="Share of residential usage removed.")

    energy_gwh: float = Field(0.0, ge=0.0, description="Storage energy capacity.")
    power_limit_gw: Union[float, Literal["unbounded"]] = Field("unbounded", description="Storage power limit.")
    efficiency: float = Field(1.0, gt=0.0, le=1.0)
    initial_charge: float = Field(1.0, ge=0.0, le=1.0)
    objective: Literal["peak_shave", "ens_offset"] = "ens_offset"
    unit_cost: float = Field(config.STORAGE_UNIT_COST, ge=0.0, description="Storage cost in $/kWh.")

    rho_values: Optional[List[float]] = Field(None, description="Sweep axis of system reduction fractions.")
    energy_values_gwh: Optional[List[float]] = Field(None, description="Sweep axis of storage energies.")

    out: Optional[str] = None
    format: Literal["csv", "json"] = "csv"

    @field_validator("power_limit_gw")
    @classmethod
    def _positive_power(cls, value):
        if value != "unbounded" and not value > 0:
            raise ValueError("power_limit_gw must be positive or 'unbounded'")
        return value

    @model_validator(mode="after")
    def _one_rationing_input(self):
        has_policy = self.residential_fraction is not None
        if has_policy and self.rho is not None:
            raise ValueError("give either rho or residential_fraction, not both")
        if self.residential_share is not None and not has_policy:
            raise ValueError("residential_share needs residential_fraction")
        return self

    @property
    def profile_path(self) -> str:
        return self.profile or config.default_fixture_path()

    @property
    def schema(self) -> ProfileSchema:
        return ProfileSchema.gigawatts() if self.unit == "GW" else ProfileSchema()

    def rationing(self) -> Union[RationingPolicy, Fraction]:
        """The rationing input: a residential policy, or rho (0 when neither is set)."""
        if self.residential_fraction is not None:
            share = config.RESIDENTIAL_SHARE if self.residential_share is None else self.residential_share
            return RationingPolicy(share, self.residential_fraction)
        return Fraction(0) if self.rho is None else self.rho

    def storage_spec(self) -> StorageSpec:
        power = None if self.power_limit_gw == "unbounded" else float(self.power_limit_gw)
        return StorageSpec.from_gwh(
            self.energy_gwh, power, initial_charge_fraction=self.initial_charge, efficiency=self.efficiency
        )


def _one_line(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(p) for p in error.get("loc", ())) or "config"
        parts.append(f"{location}: {error.get('msg')}")
    return "; ".join(parts)


def load_scenario_config(path: Optional[str] = None, overrides: Dict[str, Any] = None) -> ScenarioConfig:
    """Read a JSON scenario document (if any) and apply flag overrides on top."""
    data: Dict[str, Any] = {}
    if path:
        if not os.path.exists(path):
            raise ScenarioConfigError(f"config file not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as exc:
                raise ScenarioConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
        if not isinstance(data, dict):
            raise ScenarioConfigError(f"{path}: expected a JSON object of scenario keys")
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    if isinstance(data.get("power_limit_gw"), float) and math.isinf(data["power_limit_gw"]):
        data["power_limit_gw"] = "unbounded"
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ScenarioConfigError(f"invalid scenario config: {_one_line(exc)}") from None

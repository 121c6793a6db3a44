import logging
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

# Internal imports
from app.channel import ChannelParams, RangingModel, TsOokParams
from app.energy import EnergyParams
from app.geometry import MM_PER_CM, Region
from app.mac import BackoffConfig
from app.routing import RoutingParams
from app.utils import ConfigValidationError

MAX_SEED = 2**64 - 1


class ScenarioConfig(BaseModel):
    """
    Inputs of one localization experiment.

    Region and density are in cm to match the published figure; everything
    downstream works in mm.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    radius_cm: float = Field(default=30.0, gt=0)
    thickness_cm: float = Field(default=1.0, gt=0)
    density_per_cm3: float = Field(default=10.0, ge=0)
    comm_range_cm: float = Field(default=2.0, ge=0)
    sigma_mm: float = Field(default=1.0, ge=0)
    mode: Literal["approximate", "full"] = "approximate"
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    trials: int = Field(default=20, ge=1)
    max_iterations: int = Field(default=1000, ge=1)

    anchor_count: int = Field(default=64, ge=3)

    # Full mode only
    sigma_r_mm: float = 1.0
    neighbors_k: int = 3
    virtual_anchor_fraction: float = 1.0
    ranging_bandwidth_hz: float = Field(default=1e12, gt=0)

    channel: ChannelParams = ChannelParams()
    tsook: TsOokParams = TsOokParams()
    energy: EnergyParams = EnergyParams()
    backoff: BackoffConfig = BackoffConfig()
    routing: RoutingParams = RoutingParams()

    @property
    def region(self) -> Region:
        return Region(self.radius_cm * MM_PER_CM, self.thickness_cm * MM_PER_CM)

    @property
    def comm_range_mm(self) -> float:
        return self.comm_range_cm * MM_PER_CM

    @property
    def ranging(self) -> RangingModel:
        return RangingModel(sigma_r=self.sigma_r_mm, bandwidth=self.ranging_bandwidth_hz)

    def mode_errors(self) -> dict[str, str]:
        """
        Checks that only apply to full mode, keyed by field name.
        """
        if self.mode != "full":
            return {}
        errors: dict[str, str] = {}
        if self.neighbors_k < 3:
            errors["neighbors_k"] = "full mode needs at least 3 anchors per node"
        elif self.anchor_count < self.neighbors_k:
            errors["neighbors_k"] = "cannot exceed anchor_count"
        if self.sigma_r_mm < 0:
            errors["sigma_r_mm"] = "must be non-negative"
        if not (0.0 < self.virtual_anchor_fraction <= 1.0):
            errors["virtual_anchor_fraction"] = "must lie in (0, 1]"
        return errors

    def with_overrides(self, **overrides: Any) -> "ScenarioConfig":
        return build_config({**self.model_dump(), **overrides})


def build_config(values: dict[str, Any]) -> ScenarioConfig:
    """
    Validate raw values into a ScenarioConfig.

    Raises:
        ConfigValidationError: listing every offending field.
    """
    try:
        config = ScenarioConfig.model_validate(values)
    except ValidationError as e:
        fields = {".".join(str(part) for part in err["loc"]): err["msg"] for err in e.errors()}
        raise ConfigValidationError(fields) from e

    if errors := config.mode_errors():
        raise ConfigValidationError(errors)
    return config


def parse_config_text(text: str) -> dict[str, Any]:
    """
    Parse `key = value` lines into a nested dict.

    `#` starts a comment, blank lines are skipped and dotted keys address
    parameter blocks (`channel.link_budget_db = 106`). Values stay strings;
    pydantic does the typing.
    """
    values: dict[str, Any] = {}
    errors: dict[str, str] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors[f"line {lineno}"] = f"expected 'key = value', got {line!r}"
            continue

        key, value = (part.strip() for part in line.split("=", 1))
        *blocks, name = key.split(".")
        target = values
        for block in blocks:
            target = target.setdefault(block, {})
        target[name] = value

    if errors:
        raise ConfigValidationError(errors)
    return values


def load_config(path: str | Path, **overrides: Any) -> ScenarioConfig:
    """
    Read, parse and validate a config file. CLI overrides win over file values.

    Raises:
        OSError: file cannot be read.
        ConfigValidationError: contents are invalid.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    values = parse_config_text(text)
    values.update({k: v for k, v in overrides.items() if v is not None})

    logging.info(f"Loaded config from {path} with overrides {overrides}")
    return build_config(values)

"""Sweep configuration: TOML files validated into pydantic models.

A config may name a built-in ``preset`` as its base; top-level keys in the
file replace the preset's, and the ``application`` and ``users`` tables are
merged key by key.
"""

from __future__ import annotations

import logging
import math
import tomllib
from collections.abc import Mapping
from datetime import date
from pathlib import Path
from typing import Any, Self

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .domain import (
    AllocationPolicy,
    Application,
    NetworkMode,
    ResourceCalendar,
    ResourceCharacteristics,
    Strategy,
    uniform_resource,
)
from .exceptions import ConfigurationError
from .models import (
    DEFAULT_BASE_MI,
    DEFAULT_BAUD_RATE,
    DEFAULT_JOB_COUNT,
    DEFAULT_PEAK_HOURS,
    DEFAULT_VARIATION,
)

logger = logging.getLogger(__name__)

_MERGED_TABLES = ("application", "users")
_ALTERNATIVES = {
    "deadlines": "deadline_factors",
    "deadline_factors": "deadlines",
    "budgets": "budget_factors",
    "budget_factors": "budgets",
}


class _Strict(BaseModel):
    model_config = {"extra": "forbid"}


class CalendarSpec(_Strict):
    peak_load: float = Field(default=0.0, ge=0.0, lt=1.0)
    off_peak_load: float = Field(default=0.0, ge=0.0, lt=1.0)
    holiday_load: float = Field(default=0.0, ge=0.0, lt=1.0)
    weekends: list[int] = Field(default_factory=lambda: [5, 6])
    holidays: list[date] = Field(default_factory=list)
    peak_hours: tuple[int, int] = DEFAULT_PEAK_HOURS
    time_unit_seconds: float = Field(default=1.0, gt=0)

    def to_calendar(self) -> ResourceCalendar:
        return ResourceCalendar(
            weekends=frozenset(self.weekends),
            holidays=frozenset(self.holidays),
            peak_load=self.peak_load,
            off_peak_load=self.off_peak_load,
            holiday_load=self.holiday_load,
            peak_hours=self.peak_hours,
            time_unit_seconds=self.time_unit_seconds,
        )


class ResourceSpec(_Strict):
    """One resource: either ``pes`` on a single machine or ``machines``."""

    name: str = Field(min_length=1)
    arch: str = ""
    os: str = ""
    location: str = ""
    pes: int | None = Field(default=None, ge=1)
    machines: list[int] | None = Field(default=None, min_length=1)
    mips: float = Field(gt=0)
    policy: AllocationPolicy = AllocationPolicy.TIME_SHARED
    price: float = Field(ge=0.0, description="G$ per PE time unit")
    time_zone: float = Field(default=0.0, ge=-12.0, le=14.0)
    available_until: float | None = Field(default=None, ge=0.0)
    calendar: CalendarSpec = Field(default_factory=CalendarSpec)

    @field_validator("machines")
    @classmethod
    def _machines_have_pes(cls, value: list[int] | None) -> list[int] | None:
        if value is not None and any(count < 1 for count in value):
            raise ValueError("every machine needs at least one PE")
        return value

    @model_validator(mode="after")
    def _one_layout(self) -> Self:
        if (self.pes is None) == (self.machines is None):
            raise ValueError("give exactly one of pes or machines")
        return self

    def to_characteristics(self) -> ResourceCharacteristics:
        layout: int | list[int] = self.machines if self.machines else self.pes or 1
        return uniform_resource(
            self.name,
            pes=layout,
            mips=self.mips,
            price=self.price,
            policy=self.policy,
            arch=self.arch,
            os=self.os,
            location=self.location,
            time_zone=self.time_zone,
            calendar=self.calendar.to_calendar(),
            available_until=self.available_until,
        )


type OverrideValue = str | int | float


class ApplicationSpec(_Strict):
    jobs: int = Field(default=DEFAULT_JOB_COUNT, ge=1)
    base_mi: float = Field(default=DEFAULT_BASE_MI, gt=0)
    variation: float = Field(default=DEFAULT_VARIATION, ge=0.0, le=1.0)
    input_bytes: int = Field(default=0, ge=0)
    output_bytes: int = Field(default=0, ge=0)
    plan: Path | None = Field(default=None, description="Plan file; sets job count")
    overrides: dict[str, OverrideValue | list[OverrideValue]] = Field(
        default_factory=dict,
        description="Plan parameter values; numbers are read as their text form",
    )


class GridSpec(_Strict):
    """Inclusive arithmetic range ``start, start + step, ..., <= stop``."""

    start: float
    stop: float
    step: float = Field(gt=0)

    @model_validator(mode="after")
    def _ordered(self) -> Self:
        if self.stop < self.start:
            raise ValueError("stop must not be below start")
        return self

    def values(self) -> list[float]:
        count = math.floor((self.stop - self.start) / self.step + 1e-9) + 1
        return [self.start + k * self.step for k in range(count)]


type GridValues = list[float] | GridSpec


def _grid(values: GridValues | None) -> list[float]:
    if values is None:
        return []
    return values.values() if isinstance(values, GridSpec) else list(values)


class UserSpec(_Strict):
    """User counts, strategies and the deadline/budget grids.

    Deadlines and budgets are each given either as absolute values or as
    relaxation factors resolved against the schedule bounds.
    """

    counts: list[int] = Field(default_factory=lambda: [1], min_length=1)
    strategies: list[Strategy] = Field(
        default_factory=lambda: [Strategy.COST], min_length=1
    )
    deadlines: GridValues | None = None
    budgets: GridValues | None = None
    deadline_factors: list[float] | None = None
    budget_factors: list[float] | None = None

    @field_validator("counts")
    @classmethod
    def _positive_counts(cls, value: list[int]) -> list[int]:
        if any(count < 1 for count in value):
            raise ValueError("user counts must be at least 1")
        return value

    @field_validator("deadline_factors", "budget_factors")
    @classmethod
    def _non_negative_factors(cls, value: list[float] | None) -> list[float] | None:
        if value is not None and any(factor < 0 for factor in value):
            raise ValueError("factors must not be negative")
        return value

    @model_validator(mode="after")
    def _grids_present(self) -> Self:
        if (self.deadlines is None) == (self.deadline_factors is None):
            raise ValueError("give exactly one of deadlines or deadline_factors")
        if (self.budgets is None) == (self.budget_factors is None):
            raise ValueError("give exactly one of budgets or budget_factors")
        if not self.deadline_grid() or not self.budget_grid():
            raise ValueError("deadline and budget grids must not be empty")
        return self

    @property
    def deadline_is_factor(self) -> bool:
        return self.deadline_factors is not None

    @property
    def budget_is_factor(self) -> bool:
        return self.budget_factors is not None

    def deadline_grid(self) -> list[float]:
        return list(self.deadline_factors or []) or _grid(self.deadlines)

    def budget_grid(self) -> list[float]:
        return list(self.budget_factors or []) or _grid(self.budgets)


class SweepConfig(_Strict):
    """A complete sweep: resources, workload, user grids and seeds."""

    preset: str | None = None
    seeds: list[int] = Field(default_factory=lambda: [1], min_length=1)
    network_mode: NetworkMode = NetworkMode.NONE
    baud_rate: float = Field(default=DEFAULT_BAUD_RATE, gt=0)
    cancel_at_deadline: bool = False
    stagger: float = Field(default=0.0, ge=0.0)
    trace_events: bool = False
    resources: list[ResourceSpec] = Field(min_length=1)
    application: ApplicationSpec = Field(default_factory=ApplicationSpec)
    users: UserSpec
    base_dir: Path | None = Field(default=None, exclude=True)

    @field_validator("resources")
    @classmethod
    def _unique_names(cls, value: list[ResourceSpec]) -> list[ResourceSpec]:
        names = [spec.name for spec in value]
        if len(names) != len(set(names)):
            raise ValueError("resource names must be unique")
        return value

    def characteristics(self) -> list[ResourceCharacteristics]:
        return [spec.to_characteristics() for spec in self.resources]

    def plan_path(self) -> Path | None:
        plan = self.application.plan
        if plan is None or plan.is_absolute() or self.base_dir is None:
            return plan
        return self.base_dir / plan


def _format_errors(source: str, error: ValidationError) -> str:
    lines = [f"invalid configuration in {source}:"]
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"  {source}: {location}: {item['msg']}")
    return "\n".join(lines)


def merge_config(
    base: Mapping[str, Any], override: Mapping[str, Any]
) -> dict[str, Any]:
    """Overlay ``override`` on ``base``; nested tables merge one level deep.

    A grid given in one form (values or factors) replaces the base grid in
    the other form.
    """
    merged = dict(base)
    for key, value in override.items():
        if key in _MERGED_TABLES and isinstance(value, Mapping):
            table = dict(base.get(key, {}))
            for name in value:
                table.pop(_ALTERNATIVES.get(name, ""), None)
            merged[key] = {**table, **value}
        else:
            merged[key] = value
    return merged


def parse_config(
    data: Mapping[str, Any],
    *,
    source: str = "<config>",
    base_dir: Path | None = None,
) -> SweepConfig:
    """Validate raw config data, expanding a ``preset`` base first.

    Raises:
        ConfigurationError: On an unknown preset or any schema violation.
    """
    from .presets import preset_data

    preset = data.get("preset")
    if preset is not None:
        data = merge_config(preset_data(str(preset)), data)
    try:
        config = SweepConfig.model_validate(dict(data))
    except ValidationError as e:
        raise ConfigurationError(_format_errors(source, e)) from e
    if base_dir is not None:
        config = config.model_copy(update={"base_dir": base_dir})
    return config


def load_config(path: str | Path) -> SweepConfig:
    """Read and validate a TOML sweep configuration.

    Raises:
        ConfigurationError: If the file is missing, is not valid TOML or
            violates the schema.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"configuration file not found: {path}")
    try:
        with path.open("rb") as handle:
            data = tomllib.load(handle)
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"{path}: {e}") from e
    logger.info("Loaded configuration from %s", path)
    return parse_config(data, source=str(path), base_dir=path.parent)


def build_application(config: SweepConfig, seed: int) -> Application:
    """Synthesize the configured application for one seed.

    With a plan file the job count is the number of plan bindings and each
    gridlet id is its binding's job index.
    """
    from .plan import generate_jobs, parse_plan
    from .workload import application_from_bindings, synthesize_application

    spec = config.application
    plan_path = config.plan_path()
    if plan_path is None:
        return synthesize_application(
            spec.jobs,
            spec.base_mi,
            spec.variation,
            spec.input_bytes,
            spec.output_bytes,
            seed,
        )
    if not plan_path.is_file():
        raise ConfigurationError(f"plan file not found: {plan_path}")
    ast = parse_plan(plan_path.read_text(encoding="utf-8"))
    overrides = {
        name: [str(v) for v in (value if isinstance(value, list) else [value])]
        for name, value in spec.overrides.items()
    }
    bindings = generate_jobs(ast, overrides or None)
    return application_from_bindings(
        bindings,
        spec.base_mi,
        spec.variation,
        spec.input_bytes,
        spec.output_bytes,
        seed,
        label=plan_path.stem,
    )


def load_preset(name: str) -> SweepConfig:
    """Validate a built-in preset as a complete sweep configuration."""
    return parse_config({"preset": name}, source=f"preset {name}")

"""Domain models for resources, jobs, experiments and their results."""

from __future__ import annotations

from datetime import date
from enum import StrEnum
from typing import Any, Self

from pydantic import BaseModel, Field, field_validator, model_validator

from .models import DEFAULT_PEAK_HOURS, DEFAULT_WEEKENDS


class GridletStatus(StrEnum):
    """Lifecycle states of a gridlet."""

    CREATED = "CREATED"
    READY = "READY"
    QUEUED = "QUEUED"
    INEXEC = "INEXEC"
    SUCCESS = "SUCCESS"
    FAILED = "FAILED"
    CANCELED = "CANCELED"


class PeStatus(StrEnum):
    """Processing element occupancy."""

    FREE = "FREE"
    BUSY = "BUSY"


class AllocationPolicy(StrEnum):
    """Local resource manager policy."""

    TIME_SHARED = "time-shared"
    SPACE_SHARED = "space-shared"


class Strategy(StrEnum):
    """Deadline-and-budget constrained optimisation strategies."""

    COST = "cost"
    TIME = "time"
    COST_TIME = "cost-time"
    CONSERVATIVE_TIME = "conservative-time"


class NetworkMode(StrEnum):
    """How message transfer delays are modeled."""

    NONE = "none"
    BAUD = "baud"


class PeriodClass(StrEnum):
    """Calendar period classes with their own local load factor."""

    PEAK = "peak"
    OFF_PEAK = "off-peak"
    HOLIDAY = "holiday"


class ProcessingElement(BaseModel):
    """A single CPU rated in MIPS."""

    pe_id: int = Field(ge=0, description="PE index within its machine")
    mips: float = Field(gt=0, description="MI processed per time unit")
    status: PeStatus = Field(default=PeStatus.FREE, description="Occupancy")


class Machine(BaseModel):
    """A uniprocessor or shared-memory multiprocessor."""

    machine_id: int = Field(ge=0, description="Machine index within its resource")
    pes: list[ProcessingElement] = Field(min_length=1, description="Ordered PEs")

    @property
    def num_pes(self) -> int:
        return len(self.pes)

    @property
    def total_mips(self) -> float:
        return sum(pe.mips for pe in self.pes)


class ResourceCalendar(BaseModel):
    """Local (non-grid) load profile of a resource in its own time zone."""

    weekends: frozenset[int] = Field(
        default=DEFAULT_WEEKENDS, description="Weekday indices, Monday = 0"
    )
    holidays: frozenset[date] = Field(
        default_factory=frozenset, description="Calendar dates treated as holidays"
    )
    peak_load: float = Field(default=0.0, ge=0.0, lt=1.0)
    off_peak_load: float = Field(default=0.0, ge=0.0, lt=1.0)
    holiday_load: float = Field(default=0.0, ge=0.0, lt=1.0)
    peak_hours: tuple[int, int] = Field(
        default=DEFAULT_PEAK_HOURS, description="Local [start, end) hours of peak"
    )
    time_unit_seconds: float = Field(
        default=1.0, gt=0, description="Wall seconds per simulation time unit"
    )

    @field_validator("weekends")
    @classmethod
    def _check_weekdays(cls, value: frozenset[int]) -> frozenset[int]:
        if any(day < 0 or day > 6 for day in value):
            raise ValueError("weekend indices must be within 0..6")
        return value

    @field_validator("peak_hours")
    @classmethod
    def _check_peak_hours(cls, value: tuple[int, int]) -> tuple[int, int]:
        start, end = value
        if not 0 <= start <= end <= 24:
            raise ValueError("peak hours must satisfy 0 <= start <= end <= 24")
        return value

    def load_for(self, period: PeriodClass) -> float:
        """Return the local load fraction for a period class."""
        match period:
            case PeriodClass.PEAK:
                return self.peak_load
            case PeriodClass.OFF_PEAK:
                return self.off_peak_load
            case PeriodClass.HOLIDAY:
                return self.holiday_load


class ResourceCharacteristics(BaseModel):
    """Static properties of a grid resource."""

    name: str = Field(min_length=1, description="Unique resource entity name")
    arch: str = Field(default="", description="Vendor and architecture")
    os: str = Field(default="", description="Node operating system")
    location: str = Field(default="", description="Site description")
    machines: list[Machine] = Field(min_length=1)
    policy: AllocationPolicy = Field(default=AllocationPolicy.TIME_SHARED)
    cost_per_pe_time_unit: float = Field(ge=0.0, description="G$ per PE time unit")
    time_zone: float = Field(default=0.0, ge=-12.0, le=14.0, description="UTC offset")
    calendar: ResourceCalendar = Field(default_factory=ResourceCalendar)
    available_until: float | None = Field(
        default=None, ge=0.0, description="Time the resource leaves the grid"
    )

    @model_validator(mode="after")
    def _check_homogeneous(self) -> Self:
        ratings = {pe.mips for machine in self.machines for pe in machine.pes}
        if len(ratings) != 1:
            raise ValueError("all PEs of a resource must share one MIPS rating")
        return self

    @property
    def num_pes(self) -> int:
        return sum(machine.num_pes for machine in self.machines)

    @property
    def mips_per_pe(self) -> float:
        return self.machines[0].pes[0].mips

    @property
    def total_mips(self) -> float:
        return sum(machine.total_mips for machine in self.machines)

    @property
    def cost_per_mi(self) -> float:
        """G$ per MI: PE price divided by the PE rating."""
        return self.cost_per_pe_time_unit / self.mips_per_pe

    def pe_slots(self) -> list[tuple[int, int]]:
        """Return (machine_id, pe_id) pairs in allocation order."""
        return sorted(
            (machine.machine_id, pe.pe_id)
            for machine in self.machines
            for pe in machine.pes
        )


def uniform_resource(  # noqa: PLR0913
    name: str,
    *,
    pes: int | list[int],
    mips: float,
    price: float,
    policy: AllocationPolicy = AllocationPolicy.TIME_SHARED,
    arch: str = "",
    os: str = "",
    location: str = "",
    time_zone: float = 0.0,
    calendar: ResourceCalendar | None = None,
    available_until: float | None = None,
) -> ResourceCharacteristics:
    """Build a resource of identical PEs.

    Args:
        pes: PE count of a single machine, or one count per machine.
    """
    layout = [pes] if isinstance(pes, int) else list(pes)
    machines = [
        Machine(
            machine_id=machine_id,
            pes=[ProcessingElement(pe_id=pe_id, mips=mips) for pe_id in range(count)],
        )
        for machine_id, count in enumerate(layout)
    ]
    return ResourceCharacteristics(
        name=name,
        arch=arch,
        os=os,
        location=location,
        machines=machines,
        policy=policy,
        cost_per_pe_time_unit=price,
        time_zone=time_zone,
        calendar=calendar or ResourceCalendar(),
        available_until=available_until,
    )


class Gridlet(BaseModel):
    """One job packaged with its processing requirement and execution record."""

    id: int = Field(ge=0, description="Job identifier, unique in its application")
    length_mi: float = Field(gt=0, description="Processing requirement in MI")
    input_bytes: int = Field(default=0, ge=0)
    output_bytes: int = Field(default=0, ge=0)
    owner: int = Field(default=-1, description="Entity id results return to")
    status: GridletStatus = Field(default=GridletStatus.CREATED)
    submit_time: float | None = Field(default=None, description="Broker dispatch")
    start_time: float | None = Field(default=None, description="Resource start")
    finish_time: float | None = Field(default=None, description="Resource finish")
    wall_clock: float = Field(default=0.0, ge=0.0, description="Arrival to finish")
    cpu_time: float = Field(default=0.0, ge=0.0, description="Dedicated-PE time")
    consumed_mi: float = Field(default=0.0, ge=0.0)
    cost_incurred: float = Field(default=0.0, ge=0.0, description="G$ billed")
    resource_id: int | None = Field(default=None)
    resource_name: str | None = Field(default=None)

    @property
    def is_finished(self) -> bool:
        return self.status in {
            GridletStatus.SUCCESS,
            GridletStatus.FAILED,
            GridletStatus.CANCELED,
        }


class Application(BaseModel):
    """A task-farming application: an ordered set of independent gridlets."""

    label: str = Field(default="application")
    gridlets: list[Gridlet] = Field(default_factory=list)

    @field_validator("gridlets")
    @classmethod
    def _unique_ids(cls, value: list[Gridlet]) -> list[Gridlet]:
        ids = [gridlet.id for gridlet in value]
        if len(ids) != len(set(ids)):
            raise ValueError("gridlet ids must be unique")
        return value

    @property
    def total_mi(self) -> float:
        return sum(gridlet.length_mi for gridlet in self.gridlets)

    def __len__(self) -> int:
        return len(self.gridlets)


class Experiment(BaseModel):
    """A user's job set with QoS constraints and an optimisation strategy.

    Each constraint is given either as an absolute value or as a relaxation
    factor resolved against the schedule bounds. Deadlines are durations
    measured from the experiment start.
    """

    application: Application
    strategy: Strategy = Field(default=Strategy.COST)
    deadline: float | None = Field(default=None, gt=0)
    d_factor: float | None = Field(default=None)
    budget: float | None = Field(default=None, ge=0)
    b_factor: float | None = Field(default=None)
    start_time: float | None = Field(default=None)
    end_time: float | None = Field(default=None)

    @model_validator(mode="after")
    def _one_form_per_constraint(self) -> Self:
        if (self.deadline is None) == (self.d_factor is None):
            raise ValueError("give exactly one of deadline or d_factor")
        if (self.budget is None) == (self.b_factor is None):
            raise ValueError("give exactly one of budget or b_factor")
        return self


class ScheduleBounds(BaseModel):
    """Best- and worst-case time and cost of processing an application."""

    t_min: float = Field(ge=0)
    t_max: float = Field(ge=0)
    c_min: float = Field(ge=0)
    c_max: float = Field(ge=0)

    @model_validator(mode="after")
    def _ordered(self) -> Self:
        if self.t_min > self.t_max:
            raise ValueError("t_min must not exceed t_max")
        if self.c_min > self.c_max:
            raise ValueError("c_min must not exceed c_max")
        return self


class ResourceUsage(BaseModel):
    """Per-resource outcome of one experiment."""

    name: str
    cost_per_mi: float = Field(ge=0)
    dispatched: int = Field(default=0, ge=0)
    completed: int = Field(default=0, ge=0)
    failed: int = Field(default=0, ge=0)
    spend: float = Field(default=0.0, ge=0)


class ScheduleTraceRow(BaseModel):
    """Broker-side per-resource state after one scheduling event."""

    time: float
    resource: str
    committed: int = Field(description="Jobs assigned or in flight")
    processed: int = Field(description="Jobs completed so far")
    spend: float = Field(description="G$ spent so far")


class ExperimentResult(BaseModel):
    """Outcome of one user's experiment."""

    user: str
    strategy: Strategy
    start_time: float
    termination_time: float
    deadline: float = Field(description="Resolved deadline, relative to start")
    budget: float = Field(description="Resolved budget")
    bounds: ScheduleBounds | None = None
    total_jobs: int = Field(ge=0)
    completed_count: int = Field(ge=0)
    total_spend: float = Field(ge=0)
    resources: list[ResourceUsage] = Field(default_factory=list)
    trace: list[ScheduleTraceRow] = Field(default_factory=list)
    gridlets: list[Gridlet] = Field(default_factory=list)

    @property
    def makespan(self) -> float:
        return self.termination_time - self.start_time

    @property
    def completion_factor(self) -> float:
        return self.completed_count / self.total_jobs if self.total_jobs else 0.0

    def used_resources(self) -> list[str]:
        """Names of resources that completed at least one gridlet."""
        return [usage.name for usage in self.resources if usage.completed > 0]

    def summary_row(self, *, user: str, seed: int) -> dict[str, Any]:
        """Return the summary-table row for this result."""
        return {
            "user": user,
            "deadline": self.deadline,
            "budget": self.budget,
            "seed": seed,
            "strategy": self.strategy.value,
            "completed": self.completed_count,
            "spend": self.total_spend,
            "termination_time": self.termination_time,
        }

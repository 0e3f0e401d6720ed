"""Economic resource broker: one entity per user.

The broker discovers resources through the GIS, resolves the experiment's
deadline and budget, then repeats a scheduling event (plan, dispatch) each
time a gridlet returns or an idle hold expires, until no gridlet is in
flight.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .bounds import resolve_constraints
from .domain import (
    Experiment,
    ExperimentResult,
    Gridlet,
    GridletStatus,
    ResourceCharacteristics,
    ResourceUsage,
    ScheduleBounds,
    ScheduleTraceRow,
)
from .exceptions import SchedulingError
from .kernel import Event, SimEntity
from .models import (
    COLD_START_OPTIMISM,
    COMPLETION_TOLERANCE,
    DEFAULT_RATE_WINDOW,
    HOLD_FLOOR,
    HOLD_FRACTION,
    STAT_BUDGET_UTILIZATION,
    STAT_COMPLETION_FACTOR,
    STAT_EXPENSES,
    STAT_TIME_UTILIZATION,
    Tag,
)
from .network import Network
from .strategies import (
    ResourceView,
    SchedulingState,
    SlotForecast,
    StrategyFunction,
    get_strategy,
    within,
)
from .types import EntityId

logger = logging.getLogger(__name__)


@dataclass
class BrokerResource:
    """Broker-side ledger of one resource."""

    index: int
    resource_id: EntityId
    characteristics: ResourceCharacteristics
    assigned: list[Gridlet] = field(default_factory=list)
    in_flight: dict[int, Gridlet] = field(default_factory=dict)
    completed: list[Gridlet] = field(default_factory=list)
    rate_samples: list[float] = field(default_factory=list)
    dispatched_count: int = 0
    failed_count: int = 0
    spend: float = 0.0
    planned_rate: float | None = None
    excluded: bool = False

    @property
    def name(self) -> str:
        return self.characteristics.name

    @property
    def num_pes(self) -> int:
        return self.characteristics.num_pes

    @property
    def cost_per_mi(self) -> float:
        return self.characteristics.cost_per_mi

    @property
    def committed(self) -> int:
        return len(self.assigned) + len(self.in_flight)

    @property
    def measured_rate(self) -> float:
        return estimate_rate(self)

    def in_flight_cost(self) -> float:
        return sum(g.length_mi for g in self.in_flight.values()) * self.cost_per_mi

    def reserved_cost(self) -> float:
        return sum(g.length_mi for g in self.assigned) * self.cost_per_mi

    def usage(self) -> ResourceUsage:
        return ResourceUsage(
            name=self.name,
            cost_per_mi=self.cost_per_mi,
            dispatched=self.dispatched_count,
            completed=len(self.completed),
            failed=self.failed_count,
            spend=self.spend,
        )


def estimate_rate(
    resource: BrokerResource,
    history: Sequence[float] | None = None,
    *,
    window: int = DEFAULT_RATE_WINDOW,
) -> float:
    """Predict the MI per time unit ``resource`` delivers to this user.

    Without completions the rated capacity is assumed. Afterwards the
    estimate is the mean per-job rate over the last ``window`` completions,
    scaled by the PE count since up to that many jobs run at once.
    """
    samples = resource.rate_samples if history is None else history
    if not samples:
        return resource.characteristics.total_mips * COLD_START_OPTIMISM
    recent = np.asarray(samples[-window:], dtype=float)
    return float(recent.mean()) * resource.num_pes


def _rate_changed(old: float | None, new: float) -> bool:
    if old is None:
        return False
    return abs(new - old) > COMPLETION_TOLERANCE * max(abs(old), 1.0)


def _reset_for_retry(gridlet: Gridlet) -> None:
    gridlet.status = GridletStatus.CREATED
    gridlet.submit_time = None
    gridlet.start_time = None
    gridlet.finish_time = None
    gridlet.wall_clock = 0.0
    gridlet.cpu_time = 0.0
    gridlet.consumed_mi = 0.0
    gridlet.cost_incurred = 0.0
    gridlet.resource_id = None
    gridlet.resource_name = None


class Broker(SimEntity):
    """Schedules one user's experiment under its deadline and budget."""

    def __init__(  # noqa: PLR0913
        self,
        name: str,
        *,
        gis: EntityId,
        user_name: str,
        statistics: EntityId | None = None,
        network: Network | None = None,
        cancel_at_deadline: bool = False,
        rate_window: int = DEFAULT_RATE_WINDOW,
    ) -> None:
        super().__init__(name)
        self.gis = gis
        self.user_name = user_name
        self.statistics = statistics
        self.network = network
        self.cancel_at_deadline = cancel_at_deadline
        self.rate_window = rate_window

        self.experiment: Experiment | None = None
        self.strategy: StrategyFunction | None = None
        self.user: EntityId | None = None
        self.start_time = 0.0
        self.deadline = 0.0
        self.budget = 0.0
        self.bounds: ScheduleBounds | None = None
        self.resources: list[BrokerResource] = []
        self.pool: list[Gridlet] = []
        self.gridlets: list[Gridlet] = []
        self.trace: list[ScheduleTraceRow] = []
        self.result: ExperimentResult | None = None
        self.rounds = 0

        self._resource_ids: list[EntityId] = []
        self._characteristics: dict[EntityId, ResourceCharacteristics] = {}
        self._by_id: dict[EntityId, BrokerResource] = {}
        self._retried: set[int] = set()
        self._hold_seq: int | None = None
        self._arrival_at: dict[int, float] = {}
        self._last_trace: dict[str, tuple[int, int, float]] = {}

    @property
    def absolute_deadline(self) -> float:
        return self.start_time + self.deadline

    @property
    def finished(self) -> bool:
        return self.result is not None

    @property
    def total_spend(self) -> float:
        return sum(br.spend for br in self.resources)

    def in_flight_count(self) -> int:
        return sum(len(br.in_flight) for br in self.resources)

    def handle(self, event: Event) -> None:
        match event.tag:
            case Tag.EXPERIMENT:
                self.user = event.source
                self._begin(event.payload)
            case Tag.RESOURCE_LIST:
                self._discover(event.payload)
            case Tag.RESOURCE_CHARACTERISTICS:
                resource_id, characteristics = event.payload
                self._characterised(resource_id, characteristics)
            case Tag.GRIDLET_RETURN:
                self._receive(event.payload)
                self._schedule_event()
            case Tag.BROKER_HOLD:
                if self.kernel.cancel_stale(self.id, self._hold_seq, event):
                    return
                self._hold_seq = None
                self._schedule_event()
            case Tag.BROKER_DEADLINE:
                self._on_deadline()
            case Tag.END_OF_SIMULATION:
                pass
            case _:
                logger.warning("%s ignored event with tag %d", self.name, event.tag)

    # Discovery

    def _current_experiment(self) -> Experiment:
        if self.experiment is None:
            raise SchedulingError(f"{self.name} has no experiment")
        return self.experiment

    def _begin(self, experiment: Experiment) -> None:
        self.experiment = experiment
        self.strategy = get_strategy(experiment.strategy)
        self.start_time = self.now
        self.gridlets = [g.model_copy() for g in experiment.application.gridlets]
        for gridlet in self.gridlets:
            gridlet.owner = self.id
        self.pool = sorted(self.gridlets, key=lambda g: g.id)
        logger.debug("%s received %d gridlets", self.name, len(self.pool))
        self.send(self.gis, Tag.RESOURCE_LIST)

    def _discover(self, resource_ids: list[EntityId]) -> None:
        self._resource_ids = list(resource_ids)
        if not self._resource_ids:
            logger.warning("%s found no registered resources", self.name)
            self._finish()
            return
        for resource_id in self._resource_ids:
            self.send(resource_id, Tag.RESOURCE_CHARACTERISTICS)

    def _characterised(
        self, resource_id: EntityId, characteristics: ResourceCharacteristics
    ) -> None:
        self._characteristics[resource_id] = characteristics
        if len(self._characteristics) < len(self._resource_ids):
            return
        self.resources = [
            BrokerResource(
                index=index,
                resource_id=resource_id,
                characteristics=self._characteristics[resource_id],
            )
            for index, resource_id in enumerate(self._resource_ids)
        ]
        self._by_id = {br.resource_id: br for br in self.resources}
        experiment = self._current_experiment()
        if not self.gridlets:
            self._finish()
            return
        self.deadline, self.budget, self.bounds = resolve_constraints(
            experiment, [br.characteristics for br in self.resources]
        )
        logger.info(
            "%s: %s strategy, %d jobs, %d resources, deadline %.6g, budget %.6g",
            self.user_name,
            experiment.strategy.value,
            len(self.gridlets),
            len(self.resources),
            self.deadline,
            self.budget,
        )
        if self.cancel_at_deadline:
            self.schedule_self(self.deadline, Tag.BROKER_DEADLINE)
        self._schedule_event()

    # Scheduling events

    def _release(self, br: BrokerResource, jobs: Sequence[Gridlet]) -> None:
        if not jobs:
            return
        for gridlet in jobs:
            br.assigned.remove(gridlet)
        self.pool.extend(jobs)
        self.pool.sort(key=lambda g: g.id)
        logger.debug("%s released %d jobs from %s", self.name, len(jobs), br.name)

    def _forecast(self, br: BrokerResource, rate: float) -> SlotForecast:
        forecast = SlotForecast(br.num_pes, rate, self.now)
        for gridlet in br.in_flight.values():
            elapsed = self.now - (gridlet.submit_time or self.now)
            forecast.occupy(gridlet.length_mi, elapsed)
        return forecast

    def _view(self, br: BrokerResource) -> ResourceView:
        """Refresh ``br``'s queue against its new estimate and return its view."""
        rate = estimate_rate(br, window=self.rate_window)
        if _rate_changed(br.planned_rate, rate):
            self._release(br, list(br.assigned))
        br.planned_rate = rate
        forecast = self._forecast(br, rate)
        late = []
        for gridlet in br.assigned:
            if self._fits(forecast, gridlet):
                forecast.add(gridlet.length_mi)
            else:
                late.append(gridlet)
        self._release(br, late)
        return ResourceView(
            index=br.index,
            name=br.name,
            cost_per_mi=br.cost_per_mi,
            total_mips=br.characteristics.total_mips,
            num_pes=br.num_pes,
            rate=rate,
            forecast=forecast,
        )

    def _fits(self, forecast: SlotForecast, gridlet: Gridlet) -> bool:
        finish = forecast.finish_if_added(gridlet.length_mi)
        return within(finish, self.absolute_deadline)

    def _budget_left(self) -> float:
        committed = sum(
            br.spend + br.in_flight_cost() + br.reserved_cost() for br in self.resources
        )
        return self.budget - committed

    def _plan(self) -> None:
        for br in self.resources:
            if br.excluded:
                self._release(br, list(br.assigned))
        views = [self._view(br) for br in self.resources if not br.excluded]
        state = SchedulingState(
            now=self.now,
            deadline=self.absolute_deadline,
            budget_left=self._budget_left(),
            pool=list(self.pool),
            resources=views,
        )
        if self.strategy is None:
            raise SchedulingError(f"{self.name} planned before receiving an experiment")
        delta = self.strategy(state)
        placed: set[int] = set()
        for index, jobs in delta.items():
            self.resources[index].assigned.extend(jobs)
            placed.update(gridlet.id for gridlet in jobs)
        if placed:
            self.pool = [g for g in self.pool if g.id not in placed]
            logger.debug(
                "%s t=%s placed %d jobs, %d unassigned",
                self.name,
                self.now,
                len(placed),
                len(self.pool),
            )

    def dispatch(self) -> int:
        """Submit queued jobs while a resource has fewer in flight than PEs."""
        submitted = 0
        for br in self.resources:
            if br.excluded:
                continue
            while br.assigned and len(br.in_flight) < br.num_pes:
                self._submit(br, br.assigned.pop(0))
                submitted += 1
        return submitted

    def _submit(self, br: BrokerResource, gridlet: Gridlet) -> None:
        gridlet.submit_time = self.now
        gridlet.status = GridletStatus.READY
        delay = 0.0
        if self.network is not None:
            delay = self.network.delay(
                self.now, self.id, br.resource_id, gridlet.input_bytes
            )
        self._arrival_at[gridlet.id] = self.now + delay
        br.in_flight[gridlet.id] = gridlet
        br.dispatched_count += 1
        self.send(br.resource_id, Tag.GRIDLET_SUBMIT, gridlet, delay)

    def _schedule_event(self) -> None:
        if self.finished:
            return
        self.rounds += 1
        if self.now < self.absolute_deadline:
            self._plan()
            self.dispatch()
        else:
            for br in self.resources:
                self._release(br, list(br.assigned))
        self._record_trace()
        if self.in_flight_count() == 0:
            self._finish()
        elif self.pool and self._hold_seq is None and self.now < self.absolute_deadline:
            self._hold()

    def _hold(self) -> None:
        remaining = self.absolute_deadline - self.now
        delay = max(remaining * HOLD_FRACTION, HOLD_FLOOR)
        self._hold_seq = self.schedule_self(delay, Tag.BROKER_HOLD)

    def _on_deadline(self) -> None:
        if self.finished:
            return
        for br in self.resources:
            for gridlet_id in br.in_flight:
                # A cancel must not overtake its gridlet on the link.
                arrival = self._arrival_at.get(gridlet_id, self.now)
                delay = max(arrival - self.now, 0.0)
                self.send(br.resource_id, Tag.GRIDLET_CANCEL, gridlet_id, delay)
        logger.debug("%s deadline reached, canceling in-flight gridlets", self.name)

    # Results

    def _record(self, label: str, value: float) -> None:
        if self.statistics is not None:
            entry = (f"{self.user_name}.{label}", value)
            self.send(self.statistics, Tag.RECORD_STATISTICS, entry)

    def _receive(self, gridlet: Gridlet) -> None:
        br = None
        if gridlet.resource_id is not None:
            br = self._by_id.get(gridlet.resource_id)
        if br is None or gridlet.id not in br.in_flight:
            logger.warning("%s received unknown gridlet %d", self.name, gridlet.id)
            return
        del br.in_flight[gridlet.id]
        match gridlet.status:
            case GridletStatus.SUCCESS:
                br.spend += gridlet.cost_incurred
                br.completed.append(gridlet)
                finished = gridlet.finish_time or self.now
                elapsed = finished - (gridlet.submit_time or 0.0)
                if elapsed > 0:
                    br.rate_samples.append(gridlet.length_mi / elapsed)
                self._record(STAT_EXPENSES, gridlet.cost_incurred)
            case GridletStatus.CANCELED:
                br.spend += gridlet.cost_incurred
                self._record(STAT_EXPENSES, gridlet.cost_incurred)
            case GridletStatus.FAILED:
                self._on_failed(br, gridlet)
            case _:
                logger.warning(
                    "%s got gridlet %d back as %s",
                    self.name,
                    gridlet.id,
                    gridlet.status,
                )

    def _on_failed(self, br: BrokerResource, gridlet: Gridlet) -> None:
        br.failed_count += 1
        if not br.excluded:
            br.excluded = True
            self._release(br, list(br.assigned))
        if gridlet.id in self._retried:
            logger.warning("%s: gridlet %d failed twice", self.name, gridlet.id)
            return
        self._retried.add(gridlet.id)
        logger.warning(
            "%s: gridlet %d failed on %s, retrying elsewhere",
            self.name,
            gridlet.id,
            br.name,
        )
        _reset_for_retry(gridlet)
        self.pool.append(gridlet)
        self.pool.sort(key=lambda g: g.id)

    def _record_trace(self) -> None:
        for br in self.resources:
            key = (br.committed, len(br.completed), br.spend)
            if self._last_trace.get(br.name) == key:
                continue
            self._last_trace[br.name] = key
            self.trace.append(
                ScheduleTraceRow(
                    time=self.now,
                    resource=br.name,
                    committed=key[0],
                    processed=key[1],
                    spend=key[2],
                )
            )

    def _finish(self) -> None:
        experiment = self._current_experiment()
        completed = sum(len(br.completed) for br in self.resources)
        result = ExperimentResult(
            user=self.user_name,
            strategy=experiment.strategy,
            start_time=self.start_time,
            termination_time=self.now,
            deadline=self.deadline,
            budget=self.budget,
            bounds=self.bounds,
            total_jobs=len(self.gridlets),
            completed_count=completed,
            total_spend=self.total_spend,
            resources=[br.usage() for br in self.resources],
            trace=self.trace,
            gridlets=self.gridlets,
        )
        self.result = result
        if self.deadline > 0:
            self._record(STAT_TIME_UTILIZATION, result.makespan / self.deadline)
        self._record(STAT_COMPLETION_FACTOR, result.completion_factor)
        if self.budget > 0:
            self._record(STAT_BUDGET_UTILIZATION, result.total_spend / self.budget)
        logger.info(
            "%s finished at t=%.6g: %d/%d jobs, spend %.6g",
            self.user_name,
            self.now,
            completed,
            len(self.gridlets),
            result.total_spend,
        )
        if self.user is not None:
            self.send(self.user, Tag.EXPERIMENT, result)

"""Grid resource entities with time-shared and space-shared schedulers.

Both schedulers advance gridlets only at arrival, cancellation and
completion events. Each forecast completion is a self-scheduled internal
event; when a later event changes the forecast, the earlier internal event
is left in the calendar and discarded on delivery by comparing its seq with
the one the resource stored.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

from .calendar import effective_mips
from .domain import (
    AllocationPolicy,
    Gridlet,
    GridletStatus,
    ResourceCharacteristics,
)
from .exceptions import SchedulingError
from .kernel import Event, SimEntity
from .models import COMPLETION_TOLERANCE, STAT_RESOURCE_COMPLETED, Tag
from .network import Network
from .types import EntityId, SimTime

logger = logging.getLogger(__name__)

type GridletKey = tuple[EntityId, int]


@dataclass(frozen=True, slots=True)
class ShareAllocation:
    """MI each executing gridlet receives over one interval.

    The first ``max_share_count`` gridlets (in arrival order) receive
    ``max_share``; the rest receive ``min_share``.
    """

    max_share: float
    min_share: float
    max_share_count: int

    def share_for(self, position: int) -> float:
        return self.max_share if position < self.max_share_count else self.min_share


def pe_share_allocation(
    duration: float, n_exec: int, n_pes: int, mips_per_pe: float
) -> ShareAllocation:
    """Split PE capacity for ``duration`` among ``n_exec`` executing gridlets.

    With no more gridlets than PEs every gridlet owns a PE. Otherwise the
    gridlets are spread as evenly as possible: ``n_exec % n_pes`` PEs run
    one extra gridlet, and gridlets on those PEs get the smaller share.

    Raises:
        ValueError: If ``n_exec`` or ``n_pes`` is below 1 or duration is negative.
    """
    if n_exec < 1 or n_pes < 1:
        raise ValueError(f"need n_exec >= 1 and n_pes >= 1, got {n_exec}, {n_pes}")
    if duration < 0:
        raise ValueError(f"duration must be non-negative, got {duration!r}")
    total_mi_per_pe = mips_per_pe * duration
    if n_exec <= n_pes:
        return ShareAllocation(total_mi_per_pe, total_mi_per_pe, n_exec)
    min_per_pe, extra_pes = divmod(n_exec, n_pes)
    return ShareAllocation(
        max_share=total_mi_per_pe / min_per_pe,
        min_share=total_mi_per_pe / (min_per_pe + 1),
        max_share_count=(n_pes - extra_pes) * min_per_pe,
    )


@dataclass(slots=True)
class ResGridlet:
    """A gridlet resident on a resource, with its execution bookkeeping."""

    gridlet: Gridlet
    arrival_time: SimTime
    arrival_seq: int
    remaining_mi: float
    machine_id: int | None = None
    pe_id: int | None = None
    forecast_finish: SimTime | None = None
    expected_seq: int | None = None
    started_at: SimTime | None = None
    rate_mips: float = 0.0

    @property
    def key(self) -> GridletKey:
        return (self.gridlet.owner, self.gridlet.id)

    @property
    def consumed_mi(self) -> float:
        return self.gridlet.length_mi - self.remaining_mi

    def is_complete(self) -> bool:
        return self.remaining_mi <= COMPLETION_TOLERANCE * self.gridlet.length_mi


def _completion_order(res: ResGridlet) -> tuple[float, int]:
    return (res.remaining_mi, res.arrival_seq)


class ResourceLoad(NamedTuple):
    """Reply payload of a RESOURCE_DYNAMICS query."""

    resource_id: EntityId
    executing: int
    queued: int
    effective_mips: float


class GridletTransition(NamedTuple):
    time: SimTime
    resource: str
    gridlet_id: int
    old: GridletStatus
    new: GridletStatus


@dataclass
class ResourceCounters:
    completed: int = 0
    canceled: int = 0
    rejected: int = 0
    delivery_failures: int = 0
    stale_discarded: int = 0
    busy_mi: float = field(default=0.0)


class GridResource(SimEntity):
    """Protocol shared by both allocation policies.

    Handles GRIDLET_SUBMIT, GRIDLET_CANCEL, GRIDLET_STATUS,
    RESOURCE_CHARACTERISTICS and RESOURCE_DYNAMICS requests, registers with
    the GIS at start and leaves it when its availability window closes.
    """

    def __init__(
        self,
        characteristics: ResourceCharacteristics,
        *,
        gis: EntityId,
        network: Network | None = None,
        statistics: EntityId | None = None,
    ) -> None:
        super().__init__(characteristics.name)
        self.characteristics = characteristics
        self.gis = gis
        self.network = network
        self.statistics = statistics
        self.online = True
        self.counters = ResourceCounters()
        self.transitions: list[GridletTransition] = []
        self._arrivals = 0

    def start(self) -> None:
        self.send(self.gis, Tag.REGISTER_RESOURCE, self.name)
        until = self.characteristics.available_until
        if until is not None:
            self.schedule_self(until, Tag.RESOURCE_OFFLINE)

    @property
    def num_pes(self) -> int:
        return self.characteristics.num_pes

    def effective_mips(self, sim_time: SimTime | None = None) -> float:
        when = self.now if sim_time is None else sim_time
        return effective_mips(self.characteristics, when)

    def handle(self, event: Event) -> None:
        match event.tag:
            case Tag.GRIDLET_SUBMIT:
                self._receive_gridlet(event.payload)
            case Tag.RESOURCE_INTERNAL:
                self._on_internal(event)
            case Tag.GRIDLET_CANCEL:
                self._on_cancel((event.source, int(event.payload)))
            case Tag.GRIDLET_STATUS:
                self.send(event.source, Tag.GRIDLET_STATUS, self._status_of(event))
            case Tag.RESOURCE_CHARACTERISTICS:
                self.send(
                    event.source,
                    Tag.RESOURCE_CHARACTERISTICS,
                    (self.id, self.characteristics),
                )
            case Tag.RESOURCE_DYNAMICS:
                self.send(event.source, Tag.RESOURCE_DYNAMICS, self.load())
            case Tag.RESOURCE_OFFLINE:
                self._go_offline()
            case Tag.END_OF_SIMULATION:
                logger.debug(
                    "%s closed: %d completed, %d canceled",
                    self.name,
                    self.counters.completed,
                    self.counters.canceled,
                )
            case _:
                logger.warning("%s ignored event with tag %d", self.name, event.tag)

    def _receive_gridlet(self, gridlet: Gridlet) -> None:
        gridlet.resource_id = self.id
        gridlet.resource_name = self.name
        if not self.online:
            self.counters.rejected += 1
            self._set_status(gridlet, GridletStatus.FAILED)
            gridlet.finish_time = self.now
            self._return(gridlet)
            return
        res = ResGridlet(
            gridlet=gridlet,
            arrival_time=self.now,
            arrival_seq=self._arrivals,
            remaining_mi=gridlet.length_mi,
        )
        self._arrivals += 1
        self._on_arrival(res)

    def _go_offline(self) -> None:
        self.online = False
        self.send(self.gis, Tag.DEREGISTER_RESOURCE, self.name)
        logger.info("%s left the grid at t=%s", self.name, self.now)

    def _set_status(self, gridlet: Gridlet, status: GridletStatus) -> None:
        if gridlet.status == status:
            return
        transition = GridletTransition(
            self.now, self.name, gridlet.id, gridlet.status, status
        )
        self.transitions.append(transition)
        logger.debug(
            "t=%s %s gridlet %d: %s -> %s",
            self.now,
            self.name,
            gridlet.id,
            gridlet.status,
            status,
        )
        gridlet.status = status

    def _start(self, res: ResGridlet) -> None:
        if res.gridlet.start_time is None:
            res.gridlet.start_time = self.now
        self._set_status(res.gridlet, GridletStatus.INEXEC)

    def _finish(self, res: ResGridlet, status: GridletStatus) -> None:
        """Settle accounting on a gridlet leaving the resource and return it."""
        gridlet = res.gridlet
        if status is GridletStatus.SUCCESS:
            consumed = gridlet.length_mi
        else:
            consumed = max(res.consumed_mi, 0.0)
        gridlet.consumed_mi = consumed
        gridlet.cpu_time = consumed / self.characteristics.mips_per_pe
        gridlet.cost_incurred = consumed * self.characteristics.cost_per_mi
        gridlet.finish_time = self.now
        gridlet.wall_clock = self.now - res.arrival_time
        self.counters.busy_mi += consumed
        self._set_status(gridlet, status)
        if status is GridletStatus.SUCCESS:
            self.counters.completed += 1
            if self.statistics is not None:
                self.send(
                    self.statistics,
                    Tag.RECORD_STATISTICS,
                    (
                        f"{self.name}.{STAT_RESOURCE_COMPLETED}",
                        self.counters.completed,
                    ),
                )
        elif status is GridletStatus.CANCELED:
            self.counters.canceled += 1
        self._return(gridlet)

    def _return(self, gridlet: Gridlet) -> None:
        delay = 0.0
        if self.network is not None:
            delay = self.network.delay(
                self.now, self.id, gridlet.owner, gridlet.output_bytes
            )
        try:
            self.send(gridlet.owner, Tag.GRIDLET_RETURN, gridlet, delay)
        except SchedulingError:
            self.counters.delivery_failures += 1
            self._set_status(gridlet, GridletStatus.FAILED)
            logger.warning(
                "%s could not return gridlet %d to owner %d",
                self.name,
                gridlet.id,
                gridlet.owner,
            )

    def _status_of(self, event: Event) -> tuple[int, GridletStatus | None]:
        key: GridletKey = (event.source, int(event.payload))
        res = self._find(key)
        return key[1], res.gridlet.status if res is not None else None

    def _is_stale(self, event: Event, expected_seq: int | None) -> bool:
        stale = self.kernel.cancel_stale(self.id, expected_seq, event)
        if stale:
            self.counters.stale_discarded += 1
        return stale

    def load(self) -> ResourceLoad:
        raise NotImplementedError

    def _find(self, key: GridletKey) -> ResGridlet | None:
        raise NotImplementedError

    def _on_arrival(self, res: ResGridlet) -> None:
        raise NotImplementedError

    def _on_internal(self, event: Event) -> None:
        raise NotImplementedError

    def _on_cancel(self, key: GridletKey) -> None:
        raise NotImplementedError


class TimeSharedResource(GridResource):
    """Round-robin multitasking over all PEs of the resource."""

    def __init__(
        self,
        characteristics: ResourceCharacteristics,
        *,
        gis: EntityId,
        network: Network | None = None,
        statistics: EntityId | None = None,
    ) -> None:
        super().__init__(
            characteristics, gis=gis, network=network, statistics=statistics
        )
        self.executing: list[ResGridlet] = []
        self._last_update: SimTime = 0.0
        self._rate_mips = characteristics.mips_per_pe
        self._expected_seq: int | None = None

    def load(self) -> ResourceLoad:
        return ResourceLoad(self.id, len(self.executing), 0, self.effective_mips())

    def _find(self, key: GridletKey) -> ResGridlet | None:
        return next((res for res in self.executing if res.key == key), None)

    def update_progress(self) -> None:
        """Deliver MI to executing gridlets over the interval since last update."""
        duration = self.now - self._last_update
        if self.executing and duration > 0:
            allocation = pe_share_allocation(
                duration, len(self.executing), self.num_pes, self._rate_mips
            )
            for position, res in enumerate(self.executing):
                share = allocation.share_for(position)
                res.remaining_mi = max(res.remaining_mi - share, 0.0)
        self._last_update = self.now
        self._rate_mips = self.effective_mips()

    def _forecast(self) -> None:
        """Schedule one internal event at the earliest forecast completion."""
        if not self.executing:
            self._expected_seq = None
            return
        per_unit = pe_share_allocation(
            1.0, len(self.executing), self.num_pes, self._rate_mips
        )
        for position, res in enumerate(self.executing):
            res.forecast_finish = self.now + res.remaining_mi / per_unit.share_for(
                position
            )
        earliest = min(res.forecast_finish or self.now for res in self.executing)
        self._expected_seq = self.schedule_self(
            max(earliest - self.now, 0.0), Tag.RESOURCE_INTERNAL
        )

    def _on_arrival(self, res: ResGridlet) -> None:
        self.update_progress()
        self.executing.append(res)
        self._start(res)
        self._forecast()

    def _on_internal(self, event: Event) -> None:
        if self._is_stale(event, self._expected_seq):
            return
        forecast_mips = self._rate_mips
        self.update_progress()
        done = [res for res in self.executing if res.is_complete()]
        if not done and self.executing and forecast_mips == self._rate_mips:
            # Rounding can leave the forecast gridlet a hair short of zero.
            done = [min(self.executing, key=_completion_order)]
        done.sort(key=_completion_order)
        for res in done:
            self.executing.remove(res)
            res.remaining_mi = 0.0
            self._finish(res, GridletStatus.SUCCESS)
        self._forecast()

    def _on_cancel(self, key: GridletKey) -> None:
        res = self._find(key)
        if res is None:
            logger.debug("%s: cancel for unknown gridlet %s", self.name, key)
            return
        self.update_progress()
        self.executing.remove(res)
        self._finish(res, GridletStatus.CANCELED)
        self._forecast()


class SpaceSharedResource(GridResource):
    """Dedicated PE per gridlet with a first-come-first-served queue."""

    def __init__(
        self,
        characteristics: ResourceCharacteristics,
        *,
        gis: EntityId,
        network: Network | None = None,
        statistics: EntityId | None = None,
    ) -> None:
        super().__init__(
            characteristics, gis=gis, network=network, statistics=statistics
        )
        self.free_pes: list[tuple[int, int]] = characteristics.pe_slots()
        self.executing: dict[GridletKey, ResGridlet] = {}
        self.queue: list[ResGridlet] = []

    def load(self) -> ResourceLoad:
        return ResourceLoad(
            self.id, len(self.executing), len(self.queue), self.effective_mips()
        )

    def _find(self, key: GridletKey) -> ResGridlet | None:
        if key in self.executing:
            return self.executing[key]
        return next((res for res in self.queue if res.key == key), None)

    def _allocate(self, res: ResGridlet) -> None:
        """Give the lowest free (machine, PE) to ``res`` and forecast its finish."""
        self.free_pes.sort()
        res.machine_id, res.pe_id = self.free_pes.pop(0)
        self.executing[res.key] = res
        self._start(res)
        res.started_at = self.now
        res.rate_mips = self.effective_mips()
        delay = res.remaining_mi / res.rate_mips
        res.forecast_finish = self.now + delay
        res.expected_seq = self.schedule_self(delay, Tag.RESOURCE_INTERNAL, res.key)

    def _release(self, res: ResGridlet) -> None:
        del self.executing[res.key]
        if res.machine_id is not None and res.pe_id is not None:
            self.free_pes.append((res.machine_id, res.pe_id))
        res.expected_seq = None
        while self.queue and self.free_pes:
            self._allocate(self.queue.pop(0))

    def _on_arrival(self, res: ResGridlet) -> None:
        if self.free_pes:
            self._allocate(res)
        else:
            self.queue.append(res)
            self._set_status(res.gridlet, GridletStatus.QUEUED)

    def _on_internal(self, event: Event) -> None:
        res = self.executing.get(event.payload)
        expected = res.expected_seq if res is not None else None
        if self._is_stale(event, expected) or res is None:
            return
        res.remaining_mi = 0.0
        self._release(res)
        self._finish(res, GridletStatus.SUCCESS)

    def _on_cancel(self, key: GridletKey) -> None:
        res = self._find(key)
        if res is None:
            logger.debug("%s: cancel for unknown gridlet %s", self.name, key)
            return
        if key in self.executing:
            elapsed = self.now - (res.started_at or self.now)
            res.remaining_mi = max(res.remaining_mi - elapsed * res.rate_mips, 0.0)
            self._release(res)
        else:
            self.queue.remove(res)
        self._finish(res, GridletStatus.CANCELED)


def create_resource(
    characteristics: ResourceCharacteristics,
    *,
    gis: EntityId,
    network: Network | None = None,
    statistics: EntityId | None = None,
) -> GridResource:
    """Instantiate the resource entity matching the characteristics' policy."""
    cls = (
        SpaceSharedResource
        if characteristics.policy is AllocationPolicy.SPACE_SHARED
        else TimeSharedResource
    )
    return cls(characteristics, gis=gis, network=network, statistics=statistics)

"""Deterministic event-calendar kernel.

Entities register a handler and exchange timestamped events. The kernel
delivers events strictly in (fire_time, seq) order on a single loop, so
two runs with identical inputs produce identical traces.
"""

from __future__ import annotations

import hashlib
import heapq
import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .exceptions import (
    EntityRegistrationError,
    HandlerError,
    SchedulingError,
)
from .models import Tag
from .types import EntityId, EventHandler, Payload, SimTime

logger = logging.getLogger(__name__)

SYSTEM_SOURCE: EntityId = -1


@dataclass(frozen=True, slots=True, order=True)
class Event:
    """A timestamped message between two entities."""

    fire_time: SimTime
    seq: int
    source: EntityId = field(compare=False)
    dest: EntityId = field(compare=False)
    tag: int = field(compare=False)
    payload: Payload = field(default=None, compare=False)

    @property
    def is_internal(self) -> bool:
        return self.source == self.dest


@dataclass(frozen=True, slots=True)
class EntityHandle:
    """Registration record of one entity."""

    id: EntityId
    name: str


class Kernel:
    """Single-loop discrete-event engine."""

    def __init__(self, *, trace: bool = False) -> None:
        self._queue: list[Event] = []
        self._handles: list[EntityHandle] = []
        self._handlers: list[EventHandler] = []
        self._ids_by_name: dict[str, EntityId] = {}
        self._seq = 0
        self._now: SimTime = 0.0
        self._started = False
        self._pending_shutdown = 0
        self._trace: list[str] | None = [] if trace else None
        self.delivered = 0
        self.discarded = 0

    @property
    def now(self) -> SimTime:
        return self._now

    @property
    def started(self) -> bool:
        return self._started

    @property
    def pending(self) -> int:
        return len(self._queue)

    @property
    def entities(self) -> Sequence[EntityHandle]:
        return tuple(self._handles)

    def register_entity(self, name: str, behavior: EventHandler) -> EntityHandle:
        """Register an event handler under a unique name.

        Raises:
            EntityRegistrationError: If the name is taken or the run started.
        """
        if self._started:
            raise EntityRegistrationError(
                f"cannot register {name!r}: simulation already started"
            )
        if name in self._ids_by_name:
            raise EntityRegistrationError(f"duplicate entity name: {name!r}")
        handle = EntityHandle(id=len(self._handles), name=name)
        self._handles.append(handle)
        self._handlers.append(behavior)
        self._ids_by_name[name] = handle.id
        logger.debug("Registered entity %s as id %d", name, handle.id)
        return handle

    def entity_id(self, name: str) -> EntityId:
        try:
            return self._ids_by_name[name]
        except KeyError:
            raise SchedulingError(f"unknown entity name: {name!r}") from None

    def entity_name(self, entity: EntityId) -> str:
        self._check_destination(entity)
        return self._handles[entity].name

    def is_registered(self, entity: EntityId) -> bool:
        return 0 <= entity < len(self._handles)

    def _check_destination(self, dest: EntityId) -> None:
        if not self.is_registered(dest):
            raise SchedulingError(f"unknown destination entity: {dest}")

    def schedule(
        self,
        dest: EntityId,
        delay: float,
        tag: int,
        payload: Payload = None,
        *,
        source: EntityId = SYSTEM_SOURCE,
    ) -> int:
        """Enqueue an event for ``dest`` at ``now + delay``.

        Returns:
            The event's sequence number.

        Raises:
            SchedulingError: On a negative delay or an unknown destination.
        """
        if delay < 0:
            raise SchedulingError(f"negative delay {delay!r} for tag {tag}")
        self._check_destination(dest)
        seq = self._seq
        self._seq += 1
        event = Event(
            fire_time=self._now + delay,
            seq=seq,
            source=source,
            dest=dest,
            tag=int(tag),
            payload=payload,
        )
        heapq.heappush(self._queue, event)
        if event.tag == Tag.END_OF_SIMULATION:
            self._pending_shutdown += 1
        return seq

    def broadcast(
        self,
        tag: int,
        source: EntityId = SYSTEM_SOURCE,
        dests: Iterable[EntityId] | None = None,
    ) -> list[int]:
        """Send a zero-delay event to each destination, in the given order."""
        targets = range(len(self._handles)) if dests is None else dests
        return [self.schedule(dest, 0.0, tag, source=source) for dest in targets]

    def cancel_stale(
        self, entity: EntityId, expected_seq: int | None, observed: Event
    ) -> bool:
        """Decide whether an entity's internal event has been superseded.

        Returns:
            True when the event should be discarded: it is an internal event
            of ``entity`` and its seq differs from the one the entity expects.
        """
        if not observed.is_internal or observed.dest != entity:
            return False
        if observed.seq == expected_seq:
            return False
        self.discarded += 1
        logger.debug(
            "Entity %d discarded stale event seq=%d (expected %s)",
            entity,
            observed.seq,
            expected_seq,
        )
        return True

    def run(self) -> SimTime:
        """Deliver events until the calendar empties or shutdown completes.

        Returns:
            Final simulated time.

        Raises:
            SchedulingError: If no entity is registered.
            HandlerError: If a handler raises; carries the offending event.
        """
        if not self._handles:
            raise SchedulingError("no entities registered")
        self._started = True
        logger.debug("Kernel run started with %d queued events", len(self._queue))
        while self._queue:
            event = heapq.heappop(self._queue)
            self._now = event.fire_time
            self.delivered += 1
            if self._trace is not None:
                self._trace.append(self._format(event))
            try:
                self._handlers[event.dest](event)
            except Exception as exc:
                raise HandlerError(event, exc) from exc
            if event.tag == Tag.END_OF_SIMULATION:
                self._pending_shutdown -= 1
                if self._pending_shutdown == 0:
                    self.discarded += len(self._queue)
                    self._queue.clear()
                    break
        logger.debug(
            "Kernel stopped at t=%s after %d events (%d discarded)",
            self._now,
            self.delivered,
            self.discarded,
        )
        return self._now

    @staticmethod
    def _format(event: Event) -> str:
        return (
            f"{event.fire_time!r}\t{event.seq}\t{event.source}\t"
            f"{event.dest}\t{event.tag}"
        )

    @property
    def trace_lines(self) -> list[str]:
        return list(self._trace or [])

    def trace_hash(self) -> str:
        """SHA-256 over the recorded trace, one LF-terminated line per event."""
        digest = hashlib.sha256()
        for line in self._trace or []:
            digest.update(line.encode("utf-8"))
            digest.update(b"\n")
        return digest.hexdigest()


class SimEntity:
    """Base class for simulation entities bound to one kernel."""

    def __init__(self, name: str) -> None:
        self.name = name
        self._kernel: Kernel | None = None
        self._handle: EntityHandle | None = None

    def attach(self, kernel: Kernel) -> EntityHandle:
        """Register this entity's handler with ``kernel``."""
        self._handle = kernel.register_entity(self.name, self.handle)
        self._kernel = kernel
        return self._handle

    @property
    def kernel(self) -> Kernel:
        if self._kernel is None:
            raise SchedulingError(f"entity {self.name!r} is not attached")
        return self._kernel

    @property
    def id(self) -> EntityId:
        if self._handle is None:
            raise SchedulingError(f"entity {self.name!r} is not attached")
        return self._handle.id

    @property
    def now(self) -> SimTime:
        return self.kernel.now

    def send(
        self, dest: EntityId, tag: int, payload: Payload = None, delay: float = 0.0
    ) -> int:
        return self.kernel.schedule(dest, delay, tag, payload, source=self.id)

    def schedule_self(self, delay: float, tag: int, payload: Payload = None) -> int:
        return self.send(self.id, tag, payload, delay)

    def start(self) -> None:
        """Hook for setup-time events; called once before the run."""

    def handle(self, event: Event) -> None:
        raise NotImplementedError

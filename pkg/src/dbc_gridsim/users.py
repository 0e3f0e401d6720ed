"""User and shutdown entities.

A user hands its experiment to its broker, waits for the result and then
reports to the shutdown entity. Once every user has reported, the shutdown
entity broadcasts END_OF_SIMULATION: users first, then brokers, then the
core entities.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

from .domain import Experiment, ExperimentResult
from .kernel import Event, SimEntity
from .models import Tag
from .types import EntityId

logger = logging.getLogger(__name__)


class UserEntity(SimEntity):
    """Submits one experiment after ``start_delay`` and keeps its result."""

    def __init__(
        self,
        name: str,
        experiment: Experiment,
        *,
        broker: EntityId,
        shutdown: EntityId,
        start_delay: float = 0.0,
    ) -> None:
        super().__init__(name)
        self.experiment = experiment
        self.broker = broker
        self.shutdown = shutdown
        self.start_delay = start_delay
        self.result: ExperimentResult | None = None

    def start(self) -> None:
        self.send(self.broker, Tag.EXPERIMENT, self.experiment, self.start_delay)

    def handle(self, event: Event) -> None:
        match event.tag:
            case Tag.EXPERIMENT:
                self.result = event.payload
                self.send(self.shutdown, Tag.USER_FINISHED)
            case Tag.END_OF_SIMULATION:
                pass
            case _:
                logger.warning("%s ignored event with tag %d", self.name, event.tag)


class ShutdownEntity(SimEntity):
    def __init__(self, expected_users: int, name: str = "Shutdown") -> None:
        super().__init__(name)
        self.expected_users = expected_users
        self.finished_users = 0
        self.order: list[EntityId] = []

    def set_order(self, entities: Sequence[EntityId]) -> None:
        """Set the END_OF_SIMULATION delivery order."""
        self.order = list(entities)

    def start(self) -> None:
        if self.expected_users == 0:
            self._broadcast()

    def _broadcast(self) -> None:
        logger.debug("All %d users finished at t=%s", self.expected_users, self.now)
        self.kernel.broadcast(Tag.END_OF_SIMULATION, self.id, self.order)

    def handle(self, event: Event) -> None:
        match event.tag:
            case Tag.USER_FINISHED:
                self.finished_users += 1
                if self.finished_users == self.expected_users:
                    self._broadcast()
            case Tag.END_OF_SIMULATION:
                pass
            case _:
                logger.warning("%s ignored event with tag %d", self.name, event.tag)

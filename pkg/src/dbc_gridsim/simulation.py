"""Assemble the entities of one simulation and run it to completion."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

from .broker import Broker
from .domain import Experiment, ExperimentResult, NetworkMode, ResourceCharacteristics
from .exceptions import SimulationError
from .gis import GisEntity
from .kernel import Kernel
from .models import DEFAULT_BAUD_RATE, DEFAULT_RATE_WINDOW
from .network import Network
from .resources import GridResource, create_resource
from .stats import StatisticsEntity, StatisticsStore
from .users import ShutdownEntity, UserEntity

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimulationOptions:
    network_mode: NetworkMode = NetworkMode.NONE
    baud_rate: float = DEFAULT_BAUD_RATE
    cancel_at_deadline: bool = False
    rate_window: int = DEFAULT_RATE_WINDOW
    trace_events: bool = False


@dataclass(frozen=True)
class UserSetup:
    """One user: its entity name, experiment and submission offset."""

    name: str
    experiment: Experiment
    start_delay: float = 0.0


@dataclass
class SimulationOutcome:
    results: list[ExperimentResult]
    final_time: float
    statistics: StatisticsStore
    resources: list[GridResource] = field(default_factory=list)
    delivered: int = 0
    discarded: int = 0
    trace_hash: str | None = None


def run_simulation(
    resources: Sequence[ResourceCharacteristics],
    users: Sequence[UserSetup],
    options: SimulationOptions | None = None,
) -> SimulationOutcome:
    """Run users' experiments against a shared set of resources.

    Entity creation order is fixed (GIS, statistics, shutdown, resources,
    then a broker and a user per experiment), which fixes entity ids and
    therefore the event order.

    Raises:
        SimulationError: If a user never received its result, or on any
            kernel failure.
    """
    options = options or SimulationOptions()
    kernel = Kernel(trace=options.trace_events)
    network = Network(options.network_mode, options.baud_rate)

    gis = GisEntity()
    statistics = StatisticsEntity()
    shutdown = ShutdownEntity(len(users))
    for entity in (gis, statistics, shutdown):
        entity.attach(kernel)

    grid: list[GridResource] = []
    for characteristics in resources:
        resource = create_resource(
            characteristics, gis=gis.id, network=network, statistics=statistics.id
        )
        resource.attach(kernel)
        grid.append(resource)

    brokers: list[Broker] = []
    user_entities: list[UserEntity] = []
    for setup in users:
        broker = Broker(
            f"Broker_{setup.name}",
            gis=gis.id,
            user_name=setup.name,
            statistics=statistics.id,
            network=network,
            cancel_at_deadline=options.cancel_at_deadline,
            rate_window=options.rate_window,
        )
        broker.attach(kernel)
        user = UserEntity(
            setup.name,
            setup.experiment,
            broker=broker.id,
            shutdown=shutdown.id,
            start_delay=setup.start_delay,
        )
        user.attach(kernel)
        brokers.append(broker)
        user_entities.append(user)

    shutdown.set_order(
        [u.id for u in user_entities]
        + [b.id for b in brokers]
        + [r.id for r in grid]
        + [gis.id, statistics.id, shutdown.id]
    )
    for entity in (*grid, *user_entities, shutdown):
        entity.start()

    logger.debug(
        "Running %d users on %d resources (%d entities)",
        len(users),
        len(grid),
        len(kernel.entities),
    )
    final_time = kernel.run()

    results: list[ExperimentResult] = []
    for user in user_entities:
        if user.result is None:
            raise SimulationError(f"user {user.name} never received its result")
        results.append(user.result)
    return SimulationOutcome(
        results=results,
        final_time=final_time,
        statistics=statistics.store,
        resources=grid,
        delivered=kernel.delivered,
        discarded=kernel.discarded,
        trace_hash=kernel.trace_hash() if options.trace_events else None,
    )


def run_experiment(
    experiment: Experiment,
    resources: Sequence[ResourceCharacteristics],
    options: SimulationOptions | None = None,
    *,
    user: str = "U0",
) -> ExperimentResult:
    """Run a single user's experiment and return its result."""
    outcome = run_simulation(resources, [UserSetup(user, experiment)], options)
    return outcome.results[0]

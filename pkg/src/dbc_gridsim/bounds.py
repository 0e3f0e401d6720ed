"""Best/worst-case time and cost bounds and D/B-factor resolution.

Deadline = T_MIN + d_factor * (T_MAX - T_MIN)
Budget   = C_MIN + b_factor * (C_MAX - C_MIN)

All bounds use rated (not measured) capacity.
"""

from __future__ import annotations

import heapq
import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .domain import (
    Application,
    Experiment,
    Gridlet,
    ResourceCharacteristics,
    ScheduleBounds,
)
from .exceptions import BoundsError
from .models import COMPLETION_TOLERANCE

logger = logging.getLogger(__name__)


@dataclass
class _SlotPool:
    """Rated PE slots of one resource, keyed by the time each becomes free."""

    index: int
    mips: float
    cost_per_mi: float
    free_at: list[float] = field(default_factory=list)

    @classmethod
    def of(cls, index: int, resource: ResourceCharacteristics) -> _SlotPool:
        return cls(
            index=index,
            mips=resource.mips_per_pe,
            cost_per_mi=resource.cost_per_mi,
            free_at=[0.0] * resource.num_pes,
        )

    def finish_if_added(self, length_mi: float) -> float:
        return self.free_at[0] + length_mi / self.mips

    def add(self, length_mi: float) -> float:
        finish = self.finish_if_added(length_mi)
        heapq.heapreplace(self.free_at, finish)
        return finish


def _within(finish: float, deadline: float) -> bool:
    return finish <= deadline + COMPLETION_TOLERANCE * max(1.0, deadline)


def _check_inputs(
    resources: Sequence[ResourceCharacteristics], gridlets: Sequence[Gridlet]
) -> None:
    if not resources:
        raise BoundsError("cannot compute bounds without resources")
    if not gridlets:
        raise BoundsError("cannot compute bounds without jobs")


def _fastest_first(pools: Iterable[_SlotPool]) -> list[_SlotPool]:
    return sorted(pools, key=lambda p: (-p.mips, p.index))


def _eft_place(
    pools: Sequence[_SlotPool], length_mi: float
) -> tuple[float, _SlotPool]:
    """Place one job on the earliest-finishing slot; ties go to faster PEs."""
    best = min(pools, key=lambda p: p.finish_if_added(length_mi))
    return best.add(length_mi), best


def list_schedule_makespan(
    resources: Sequence[ResourceCharacteristics], gridlets: Sequence[Gridlet]
) -> float:
    """Makespan of earliest-finish list scheduling over all PEs, fastest first."""
    pools = _fastest_first(_SlotPool.of(i, r) for i, r in enumerate(resources))
    return max(_eft_place(pools, g.length_mi)[0] for g in gridlets)


def serial_time_on_slowest(
    resources: Sequence[ResourceCharacteristics], gridlets: Sequence[Gridlet]
) -> float:
    slowest = min(resource.mips_per_pe for resource in resources)
    return sum(g.length_mi for g in gridlets) / slowest


def capacity_fill_cost(
    resources: Sequence[ResourceCharacteristics],
    gridlets: Sequence[Gridlet],
    deadline: float,
    *,
    cheapest_first: bool = True,
) -> float:
    """Cost of filling resources in price order with jobs that meet ``deadline``.

    Jobs that fit nowhere are placed by earliest finish at their resource's
    price.
    """
    pools = [_SlotPool.of(i, r) for i, r in enumerate(resources)]
    sign = 1.0 if cheapest_first else -1.0
    ordered = sorted(pools, key=lambda p: (sign * p.cost_per_mi, -p.mips, p.index))
    pending = list(gridlets)
    cost = 0.0
    for pool in ordered:
        while pending:
            if not _within(pool.finish_if_added(pending[0].length_mi), deadline):
                break
            job = pending.pop(0)
            pool.add(job.length_mi)
            cost += job.length_mi * pool.cost_per_mi
    for job in pending:
        _, pool = _eft_place(_fastest_first(pools), job.length_mi)
        cost += job.length_mi * pool.cost_per_mi
    return cost


def compute_bounds(
    resources: Sequence[ResourceCharacteristics],
    application: Application | Sequence[Gridlet],
    *,
    deadline: float | None = None,
) -> ScheduleBounds:
    """Derive T_MIN, T_MAX, C_MIN and C_MAX on rated capacity.

    Args:
        deadline: Duration the cost bounds must meet; T_MAX when omitted.

    Raises:
        BoundsError: If there are no resources or no jobs.
    """
    gridlets = (
        application.gridlets if isinstance(application, Application) else application
    )
    _check_inputs(resources, gridlets)
    t_min = list_schedule_makespan(resources, gridlets)
    t_max = serial_time_on_slowest(resources, gridlets)
    horizon = t_max if deadline is None else deadline
    cheap = capacity_fill_cost(resources, gridlets, horizon, cheapest_first=True)
    dear = capacity_fill_cost(resources, gridlets, horizon, cheapest_first=False)
    bounds = ScheduleBounds(
        t_min=min(t_min, t_max),
        t_max=t_max,
        c_min=min(cheap, dear),
        c_max=max(cheap, dear),
    )
    logger.debug("Bounds for %d jobs: %s", len(gridlets), bounds)
    return bounds


def _interpolate(factor: float, low: float, high: float, what: str) -> float:
    if factor < 0:
        raise BoundsError(
            f"{what} factor {factor!r} is below 0: the experiment is never completed"
        )
    # Weighted form returns the bounds exactly at factors 0 and 1.
    return (1.0 - factor) * low + factor * high


def determine_deadline(d_factor: float, bounds: ScheduleBounds) -> float:
    return _interpolate(d_factor, bounds.t_min, bounds.t_max, "deadline")


def determine_budget(b_factor: float, bounds: ScheduleBounds) -> float:
    return _interpolate(b_factor, bounds.c_min, bounds.c_max, "budget")


def resolve_constraints(
    experiment: Experiment, resources: Sequence[ResourceCharacteristics]
) -> tuple[float, float, ScheduleBounds]:
    """Resolve an experiment's deadline (a duration) and budget.

    The deadline is resolved first; cost bounds are then computed against it.
    """
    application = experiment.application
    if experiment.deadline is not None:
        deadline = experiment.deadline
    else:
        time_bounds = compute_bounds(resources, application)
        deadline = determine_deadline(experiment.d_factor or 0.0, time_bounds)
    bounds = compute_bounds(resources, application, deadline=deadline)
    if experiment.budget is not None:
        budget = experiment.budget
    else:
        budget = determine_budget(experiment.b_factor or 0.0, bounds)
    return deadline, budget, bounds

"""
Shared planning state for the scheduling strategies.

The broker builds a fresh SchedulingState at every scheduling event. A
strategy reads the unassigned pool, places jobs on ResourceView forecasts
and returns the new assignments; the state is scratch and is discarded
after the event.
"""

from __future__ import annotations

import heapq
from collections.abc import Iterable
from dataclasses import dataclass, field

from ..domain import Gridlet
from ..models import COMPLETION_TOLERANCE

type AssignmentDelta = dict[int, list[Gridlet]]


def within(value: float, limit: float) -> bool:
    """``value <= limit`` up to the relative completion tolerance."""
    return value <= limit + COMPLETION_TOLERANCE * max(1.0, abs(limit))


class SlotForecast:
    """Predicted free times of a resource's PEs at the estimated rate.

    Each PE is assumed to deliver ``rate / num_pes`` MI per time unit to
    this user.
    """

    def __init__(self, num_pes: int, rate: float, now: float) -> None:
        self.slot_rate = rate / num_pes
        self.now = now
        self.free_at = [now] * num_pes

    def occupy(self, length_mi: float, elapsed: float = 0.0) -> float:
        """Book an in-flight job that has run for ``elapsed`` time units."""
        remaining = max(0.0, length_mi - self.slot_rate * elapsed)
        return self.add(remaining)

    def finish_if_added(self, length_mi: float) -> float:
        return self.free_at[0] + length_mi / self.slot_rate

    def add(self, length_mi: float) -> float:
        finish = self.finish_if_added(length_mi)
        heapq.heapreplace(self.free_at, finish)
        return finish


@dataclass
class ResourceView:
    """A resource as one strategy invocation sees it."""

    index: int
    name: str
    cost_per_mi: float
    total_mips: float
    num_pes: int
    rate: float
    forecast: SlotForecast

    def job_cost(self, gridlet: Gridlet) -> float:
        return gridlet.length_mi * self.cost_per_mi


@dataclass
class SchedulingState:
    """Inputs of one scheduling event.

    ``deadline`` is absolute simulation time; ``budget_left`` already
    excludes spend, in-flight cost and jobs assigned in earlier events.
    """

    now: float
    deadline: float
    budget_left: float
    pool: list[Gridlet]
    resources: list[ResourceView]
    assigned: AssignmentDelta = field(default_factory=dict)

    def meets_deadline(self, finish: float) -> bool:
        return within(finish, self.deadline)

    def fits(self, view: ResourceView, gridlet: Gridlet) -> bool:
        return self.meets_deadline(view.forecast.finish_if_added(gridlet.length_mi))

    def assign(self, view: ResourceView, gridlet: Gridlet) -> None:
        view.forecast.add(gridlet.length_mi)
        self.budget_left -= view.job_cost(gridlet)
        self.assigned.setdefault(view.index, []).append(gridlet)

    def earliest_finish(
        self, candidates: Iterable[ResourceView], gridlet: Gridlet
    ) -> ResourceView | None:
        """Candidate finishing ``gridlet`` first within the deadline.

        Ties keep the earlier candidate in iteration order.
        """
        best: ResourceView | None = None
        best_finish = 0.0
        for view in candidates:
            finish = view.forecast.finish_if_added(gridlet.length_mi)
            if not self.meets_deadline(finish):
                continue
            if best is None or finish < best_finish:
                best, best_finish = view, finish
        return best


def by_cost(resources: Iterable[ResourceView]) -> list[ResourceView]:
    """Ascending price; equal prices put the larger total MIPS first."""
    return sorted(resources, key=lambda v: (v.cost_per_mi, -v.total_mips, v.index))

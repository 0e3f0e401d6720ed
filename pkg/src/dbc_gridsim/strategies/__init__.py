"""
Deadline-and-budget constrained scheduling strategies.

Every strategy is a function ``(SchedulingState) -> AssignmentDelta`` that
places jobs from the unassigned pool onto resource forecasts. The broker
calls the selected strategy once per scheduling event.

STRATEGY MODULES:
- cost_strategy: cheapest resources first, up to their deadline capacity
- time_strategy: earliest completion among resources within budget per job
- cost_time_strategy: cost order, earliest completion within equal-price groups
- conservative_strategy: phased time optimisation that reserves budget per job

MODIFICATION GUIDE:
To add a strategy, add a member to ``domain.Strategy``, write a module with
one ``schedule_<name>(state)`` function using the helpers in ``planning``
and register it in ``STRATEGIES`` below.
"""

from collections.abc import Callable

from ..domain import Strategy
from .conservative_strategy import schedule_conservative_time
from .cost_strategy import schedule_cost
from .cost_time_strategy import schedule_cost_time
from .planning import (
    AssignmentDelta,
    ResourceView,
    SchedulingState,
    SlotForecast,
    by_cost,
    within,
)
from .time_strategy import schedule_time

type StrategyFunction = Callable[[SchedulingState], AssignmentDelta]

STRATEGIES: dict[Strategy, StrategyFunction] = {
    Strategy.COST: schedule_cost,
    Strategy.TIME: schedule_time,
    Strategy.COST_TIME: schedule_cost_time,
    Strategy.CONSERVATIVE_TIME: schedule_conservative_time,
}


def get_strategy(strategy: Strategy | str) -> StrategyFunction:
    """Look up a strategy function by enum member or its string value."""
    return STRATEGIES[Strategy(strategy)]


__all__ = [
    "STRATEGIES",
    "AssignmentDelta",
    "ResourceView",
    "SchedulingState",
    "SlotForecast",
    "StrategyFunction",
    "by_cost",
    "get_strategy",
    "schedule_conservative_time",
    "schedule_cost",
    "schedule_cost_time",
    "schedule_time",
    "within",
]

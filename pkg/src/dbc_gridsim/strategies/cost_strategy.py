"""
Cost optimisation.

Resources are filled cheapest first: each takes jobs from the pool for as
long as its forecast still finishes them before the deadline, and only
while the job's cost fits the remaining budget.
"""

from __future__ import annotations

from collections import deque

from .planning import AssignmentDelta, SchedulingState, by_cost, within


def schedule_cost(state: SchedulingState) -> AssignmentDelta:
    pending = deque(state.pool)
    for view in by_cost(state.resources):
        while pending:
            job = pending[0]
            if not within(view.job_cost(job), state.budget_left):
                return state.assigned
            if not state.fits(view, job):
                break
            state.assign(view, pending.popleft())
    return state.assigned

"""
Cost-time optimisation.

Like cost optimisation, but resources sharing a price form one group and
jobs inside a group go to whichever member finishes them first. Members
are ordered by total MIPS, so ties favour the more capable resource.
"""

from __future__ import annotations

import itertools
from collections import deque

from .planning import AssignmentDelta, SchedulingState, by_cost, within


def schedule_cost_time(state: SchedulingState) -> AssignmentDelta:
    pending = deque(state.pool)
    groups = itertools.groupby(by_cost(state.resources), key=lambda v: v.cost_per_mi)
    for _, group in groups:
        members = list(group)
        while pending:
            job = pending[0]
            if not within(members[0].job_cost(job), state.budget_left):
                return state.assigned
            best = state.earliest_finish(members, job)
            if best is None:
                break
            state.assign(best, pending.popleft())
    return state.assigned

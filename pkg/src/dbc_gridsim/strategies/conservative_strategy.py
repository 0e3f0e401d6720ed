"""
Conservative time optimisation.

Works in phases. Each phase fixes the budget per unplaced job, selects the
resources whose mean job cost fits it and spreads jobs across them by
earliest finish, so faster resources receive proportionally more. When no
selected resource can take the next job, those resources are closed and
the budget per job is recomputed over the jobs still unplaced before
dearer resources are considered. Every unplaced job keeps at least the
phase's budget per job in reserve.
"""

from __future__ import annotations

import numpy as np

from .planning import AssignmentDelta, SchedulingState, within


def schedule_conservative_time(state: SchedulingState) -> AssignmentDelta:
    pending = list(state.pool)
    closed: set[int] = set()
    while pending:
        budget_per_job = state.budget_left / len(pending)
        mean_length = float(np.mean([job.length_mi for job in pending]))
        group = [
            view
            for view in state.resources
            if view.index not in closed
            and within(view.cost_per_mi * mean_length, budget_per_job)
        ]
        if not group:
            break
        unplaced = []
        for job in pending:
            if unplaced:
                unplaced.append(job)
                continue
            affordable = (
                view for view in group if within(view.job_cost(job), budget_per_job)
            )
            best = state.earliest_finish(affordable, job)
            if best is None:
                unplaced.append(job)
            else:
                state.assign(best, job)
        pending = unplaced
        closed.update(view.index for view in group)
    return state.assigned

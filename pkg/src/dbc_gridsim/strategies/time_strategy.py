"""
Time optimisation.

Each job goes to the affordable resource that completes it first. A
resource is affordable for a job when the job's cost there does not exceed
the remaining budget per unplaced job.
"""

from __future__ import annotations

from .planning import AssignmentDelta, SchedulingState, within


def schedule_time(state: SchedulingState) -> AssignmentDelta:
    jobs = list(state.pool)
    for position, job in enumerate(jobs):
        budget_per_job = state.budget_left / (len(jobs) - position)
        affordable = (
            view
            for view in state.resources
            if within(view.job_cost(job), budget_per_job)
        )
        best = state.earliest_finish(affordable, job)
        if best is not None:
            state.assign(best, job)
    return state.assigned

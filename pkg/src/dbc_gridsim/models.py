"""Event tags, simulation constants and output layouts.

NOTE: Scheduling heuristics live in the strategies/ directory. Import them
from there:
- strategies.cost_strategy.schedule_cost
- strategies.time_strategy.schedule_time
- strategies.cost_time_strategy.schedule_cost_time
- strategies.conservative_strategy.schedule_conservative_time
"""

from __future__ import annotations

from datetime import UTC, datetime
from enum import IntEnum


class Tag(IntEnum):
    """Command codes carried by kernel events.

    Values 0-11 keep the historical GridSim numbering; the rest are local
    extensions used by this simulator's entities.
    """

    END_OF_SIMULATION = -1
    INSIGNIFICANT = 0
    EXPERIMENT = 1  # User <-> Broker
    REGISTER_RESOURCE = 2  # Resource -> GIS
    RESOURCE_LIST = 3  # GIS <-> Broker
    RESOURCE_CHARACTERISTICS = 4  # Broker <-> Resource
    RESOURCE_DYNAMICS = 5  # Broker <-> Resource
    GRIDLET_SUBMIT = 6  # Broker -> Resource
    GRIDLET_RETURN = 7  # Broker <- Resource
    GRIDLET_STATUS = 8  # Broker <-> Resource
    RECORD_STATISTICS = 9  # Entity -> Statistics
    RETURN_STAT_LIST = 10  # Entity <- Statistics
    RETURN_ACC_STATISTICS_BY_CATEGORY = 11
    GRIDLET_CANCEL = 12  # Broker -> Resource
    DEREGISTER_RESOURCE = 13  # Resource -> GIS
    RESOURCE_INTERNAL = 14  # Resource self-event (completion forecast)
    RESOURCE_OFFLINE = 15  # Resource self-event (availability window ends)
    BROKER_HOLD = 16  # Broker self-event (idle-round wakeup)
    BROKER_DEADLINE = 17  # Broker self-event (deadline reached)
    USER_FINISHED = 18  # User -> Shutdown


SCHEDULE_NOW = 0.0
DEFAULT_BAUD_RATE = 9600.0

# Relative tolerance for completion and deadline comparisons.
COMPLETION_TOLERANCE = 1e-9

# Broker rate estimation: sliding window of per-job delivery rates.
DEFAULT_RATE_WINDOW = 8
COLD_START_OPTIMISM = 1.0

# Idle-round hold: max(fraction * deadline_left, floor).
HOLD_FRACTION = 0.01
HOLD_FLOOR = 1.0

# Workload defaults for the task-farming application.
DEFAULT_JOB_COUNT = 200
DEFAULT_BASE_MI = 10_000.0
DEFAULT_VARIATION = 0.10
STANDARD_PE_MIPS = 100.0

# Per-user seed derivation multiplier.
USER_SEED_MULTIPLIER = 997

# Calendar origin: simulation time 0 maps to this UTC instant (a Monday).
CALENDAR_EPOCH = datetime(2001, 1, 1, tzinfo=UTC)
DEFAULT_PEAK_HOURS = (9, 17)
DEFAULT_WEEKENDS = frozenset({5, 6})

# Statistics categories recorded per user at experiment end.
STAT_TIME_UTILIZATION = "USER.TimeUtilization"
STAT_COMPLETION_FACTOR = "USER.GridletCompletionFactor"
STAT_BUDGET_UTILIZATION = "USER.BudgetUtilization"
STAT_EXPENSES = "USER.Expenses"
STAT_RESOURCE_COMPLETED = "RESOURCE.GridletsCompleted"

# Output format version written to the report metadata sheet.
REPORT_FORMAT_VERSION = "1"
FORMAT_TYPE_SUMMARY = "sweep-summary"

# Summary table column order (one row per user per cell).
SUMMARY_COLUMNS = [
    "user",
    "deadline",
    "budget",
    "seed",
    "strategy",
    "completed",
    "spend",
    "termination_time",
]

# Per-cell schedule trace columns.
TRACE_COLUMNS = [
    "user",
    "time",
    "resource",
    "committed",
    "processed",
    "spend",
]

FAILURE_COLUMNS = ["cell", "users", "strategy", "deadline", "budget", "seed", "error"]

# Excel "By strategy" sheet: means over users and seeds.
STRATEGY_MEAN_COLUMNS = [
    "strategy",
    "deadline",
    "budget",
    "runs",
    "completed",
    "spend",
    "termination_time",
]

STATS_COLUMNS = ["label", "time", "value"]
STATS_SUMMARY_COLUMNS = ["label", "count", "mean", "std", "min", "max", "sum"]

# Plan-file binding table pseudo-parameters and their defaults.
PSEUDO_PARAMETERS = ("jobname", "OS", "HOME")
DEFAULT_PLAN_OS = "linux"
DEFAULT_PLAN_HOME = "/home/user"

"""dbc-gridsim - Deadline and budget constrained grid scheduling simulator."""

from .broker import Broker, BrokerResource, estimate_rate
from .cli import main
from .config import SweepConfig, load_config, load_preset
from .domain import (
    AllocationPolicy,
    Application,
    Experiment,
    ExperimentResult,
    Gridlet,
    GridletStatus,
    ResourceCharacteristics,
    ScheduleBounds,
    Strategy,
    uniform_resource,
)
from .harness import SweepResult, run_sweep
from .kernel import Event, Kernel, SimEntity
from .plan import generate_jobs, parse_plan, substitute
from .report import emit_report
from .simulation import SimulationOptions, run_experiment, run_simulation

__version__ = "0.1.0"
__all__ = [
    "AllocationPolicy",
    "Application",
    "Broker",
    "BrokerResource",
    "Event",
    "Experiment",
    "ExperimentResult",
    "Gridlet",
    "GridletStatus",
    "Kernel",
    "ResourceCharacteristics",
    "ScheduleBounds",
    "SimEntity",
    "SimulationOptions",
    "Strategy",
    "SweepConfig",
    "SweepResult",
    "emit_report",
    "estimate_rate",
    "generate_jobs",
    "load_config",
    "load_preset",
    "main",
    "parse_plan",
    "run_experiment",
    "run_simulation",
    "run_sweep",
    "substitute",
    "uniform_resource",
]

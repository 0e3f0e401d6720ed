"""Sweep execution: expand the grid into cells and run each cell's simulation.

Cells are independent. Each builds fresh entities from the config and its
own seed, so results do not depend on execution order or worker count.
"""

from __future__ import annotations

import itertools
import logging
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import pandas as pd

from .config import SweepConfig, build_application
from .domain import Experiment, ExperimentResult, Strategy
from .models import FAILURE_COLUMNS, SUMMARY_COLUMNS, TRACE_COLUMNS
from .settings import get_default_parallel, get_rate_window
from .simulation import SimulationOptions, UserSetup, run_simulation
from .stats import StatisticsStore
from .workload import SimRandom, user_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Cell:
    """One grid point: user count, strategy, deadline, budget and seed."""

    index: int
    users: int
    strategy: Strategy
    deadline: float
    budget: float
    seed: int


@dataclass
class CellResult:
    cell: Cell
    results: list[ExperimentResult] = field(default_factory=list)
    statistics: StatisticsStore | None = None
    trace_hash: str | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def summary_rows(self) -> list[dict[str, object]]:
        count = self.cell.users
        return [
            result.summary_row(user=f"{result.user}/{count}", seed=self.cell.seed)
            for result in self.results
        ]

    def trace_frame(self) -> pd.DataFrame:
        rows = [
            {"user": result.user, **row.model_dump()}
            for result in self.results
            for row in result.trace
        ]
        return pd.DataFrame(rows, columns=TRACE_COLUMNS)


@dataclass
class SweepResult:
    config: SweepConfig
    cells: list[CellResult]

    @property
    def failures(self) -> list[CellResult]:
        return [cell for cell in self.cells if not cell.ok]

    def summary_frame(self) -> pd.DataFrame:
        rows = [row for cell in self.cells for row in cell.summary_rows()]
        return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)

    def failure_frame(self) -> pd.DataFrame:
        rows = [
            {
                "cell": failed.cell.index,
                "users": failed.cell.users,
                "strategy": failed.cell.strategy.value,
                "deadline": failed.cell.deadline,
                "budget": failed.cell.budget,
                "seed": failed.cell.seed,
                "error": failed.error,
            }
            for failed in self.failures
        ]
        return pd.DataFrame(rows, columns=FAILURE_COLUMNS)


def iter_cells(config: SweepConfig) -> list[Cell]:
    """Cross product of user counts, strategies, deadlines, budgets and seeds."""
    grid = itertools.product(
        config.users.counts,
        config.users.strategies,
        config.users.deadline_grid(),
        config.users.budget_grid(),
        config.seeds,
    )
    return [
        Cell(index, users, strategy, deadline, budget, seed)
        for index, (users, strategy, deadline, budget, seed) in enumerate(grid)
    ]


def build_users(config: SweepConfig, cell: Cell) -> list[UserSetup]:
    """Create each user's experiment with its own workload stream.

    With a non-zero ``stagger`` user i starts at ``stagger * rd_i``, the
    draws coming from the cell seed.
    """
    if config.stagger > 0:
        draws = SimRandom(cell.seed).draws(cell.users)
        offsets = [float(rd) * config.stagger for rd in draws]
    else:
        offsets = [0.0] * cell.users
    constraints: dict[str, float] = {
        "d_factor" if config.users.deadline_is_factor else "deadline": cell.deadline,
        "b_factor" if config.users.budget_is_factor else "budget": cell.budget,
    }
    users = []
    for index, offset in enumerate(offsets):
        application = build_application(config, user_seed(cell.seed, index))
        experiment = Experiment(
            application=application, strategy=cell.strategy, **constraints
        )
        users.append(UserSetup(f"U{index}", experiment, offset))
    return users


def simulation_options(config: SweepConfig, rate_window: int) -> SimulationOptions:
    return SimulationOptions(
        network_mode=config.network_mode,
        baud_rate=config.baud_rate,
        cancel_at_deadline=config.cancel_at_deadline,
        rate_window=rate_window,
        trace_events=config.trace_events,
    )


def run_cell(config: SweepConfig, cell: Cell, rate_window: int) -> CellResult:
    """Run one cell; any failure is recorded on the result instead of raised."""
    try:
        outcome = run_simulation(
            config.characteristics(),
            build_users(config, cell),
            simulation_options(config, rate_window),
        )
    except Exception as e:
        logger.error("Cell %d failed: %s", cell.index, e)
        return CellResult(cell=cell, error=f"{type(e).__name__}: {e}")
    logger.info(
        "Cell %d done: %d user(s), %s, deadline %s, budget %s, seed %d",
        cell.index,
        cell.users,
        cell.strategy.value,
        cell.deadline,
        cell.budget,
        cell.seed,
    )
    return CellResult(
        cell=cell,
        results=outcome.results,
        statistics=outcome.statistics,
        trace_hash=outcome.trace_hash,
    )


def _run_cell_task(task: tuple[SweepConfig, Cell, int]) -> CellResult:
    return run_cell(*task)


def _get_process_pool_context() -> mp.context.BaseContext | None:
    """Return a fork-based context when the runtime supports it."""
    try:
        return mp.get_context("fork")
    except ValueError:
        return None


def run_sweep(
    config: SweepConfig,
    *,
    parallel: int | None = None,
    rate_window: int | None = None,
) -> SweepResult:
    """Run every cell of the sweep and collect results in cell order.

    Args:
        parallel: Worker processes; defaults to ``DBC_GRIDSIM_PARALLEL`` or 1.
        rate_window: Broker rate window; defaults to ``DBC_GRIDSIM_WINDOW``.
    """
    workers = parallel if parallel is not None else get_default_parallel()
    if workers < 1:
        raise ValueError("parallel must be at least 1")
    window = rate_window if rate_window is not None else get_rate_window()
    cells = iter_cells(config)
    logger.info("Running %d cell(s) with %d worker(s)", len(cells), workers)

    context = _get_process_pool_context()
    tasks = [(config, cell, window) for cell in cells]
    if workers > 1 and len(cells) > 1 and context is not None:
        with ProcessPoolExecutor(
            max_workers=min(workers, len(cells)), mp_context=context
        ) as executor:
            results = list(executor.map(_run_cell_task, tasks))
    else:
        results = [_run_cell_task(task) for task in tasks]

    sweep = SweepResult(config=config, cells=results)
    if sweep.failures:
        logger.warning("%d of %d cell(s) failed", len(sweep.failures), len(cells))
    return sweep

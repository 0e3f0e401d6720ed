"""End-to-end scenarios on the built-in presets.

The test-queue preset has a zero-variation workload, so its outcomes are
exact. The WWG presets are checked for trends across several seeds.
"""

from __future__ import annotations

import numpy as np
import pytest

from dbc_gridsim.config import build_application, load_preset, parse_config
from dbc_gridsim.domain import Experiment, ExperimentResult, Strategy
from dbc_gridsim.harness import run_sweep
from dbc_gridsim.simulation import run_experiment

SEEDS = [1, 2, 3, 4, 5]


def _run(
    preset: str, strategy: Strategy, deadline: float, budget: float, seed: int = 1
) -> ExperimentResult:
    config = load_preset(preset)
    experiment = Experiment(
        application=build_application(config, seed),
        strategy=strategy,
        deadline=deadline,
        budget=budget,
    )
    return run_experiment(experiment, config.characteristics())


def _completed_by_resource(result: ExperimentResult) -> list[int]:
    return [usage.completed for usage in result.resources]


class TestQueueBudgets:
    @pytest.fixture
    def prices(self):
        config = load_preset("testqueues-4.6")
        application = build_application(config, 1)
        job_mi = application.gridlets[0].length_mi
        assert len(application.gridlets) == 100
        return [job_mi * r.cost_per_mi for r in config.characteristics()]

    def test_all_jobs_on_dearest_queue(self, prices):
        assert 100 * max(prices) == pytest.approx(252_000)

    def test_ten_jobs_per_queue(self, prices):
        assert 10 * sum(prices) == pytest.approx(171_000)

    def test_twenty_jobs_on_five_cheapest(self, prices):
        assert 20 * sum(sorted(prices)[:5]) == pytest.approx(126_000)


class TestQueueTimeStrategy:
    def test_spreads_evenly_at_ten_per_queue_budget(self):
        result = _run("testqueues-4.6", Strategy.TIME, 990, 171_000)

        assert result.completed_count == 100
        assert _completed_by_resource(result) == [10] * 10
        assert result.total_spend == pytest.approx(171_000)
        assert 900 <= result.makespan <= 990

    def test_extra_budget_is_not_spent(self):
        result = _run("testqueues-4.6", Strategy.TIME, 990, 252_000)

        assert result.completed_count == 100
        assert result.total_spend == pytest.approx(171_000)

    def test_tight_budget_is_spent_exactly(self):
        result = _run("testqueues-4.6", Strategy.TIME, 990, 126_000)

        assert result.total_spend == pytest.approx(126_000)
        assert result.total_spend <= 126_000 + 1e-6

    def test_spend_non_decreasing_in_budget(self):
        spends = [
            _run("testqueues-4.6", Strategy.TIME, 990, budget).total_spend
            for budget in (126_000, 171_000, 252_000)
        ]

        assert spends == sorted(spends)
        assert spends[1] == pytest.approx(spends[2])


class TestQueueCostStrategy:
    def test_packs_cheapest_queues_to_deadline(self):
        result = _run("testqueues-4.6", Strategy.COST, 2970, 126_000)

        assert result.completed_count == 100
        assert _completed_by_resource(result) == [33, 33, 33, 1, 0, 0, 0, 0, 0, 0]
        assert result.total_spend == pytest.approx(108_360)
        assert result.makespan <= 2970


class TestQueueConservativeTime:
    def test_reserves_budget_for_every_job(self):
        result = _run("testqueues-4.6", Strategy.CONSERVATIVE_TIME, 990, 171_000)

        assert result.completed_count == 100
        assert result.total_spend == pytest.approx(163_800)

    def test_matches_time_strategy_with_ample_budget(self):
        result = _run("testqueues-4.6", Strategy.CONSERVATIVE_TIME, 990, 252_000)

        assert result.completed_count == 100
        assert result.total_spend == pytest.approx(171_000)


@pytest.mark.slow
class TestWwgTrends:
    BUDGETS = list(range(5000, 22_001, 1000))

    def test_completions_grow_with_budget_at_short_deadline(self):
        means = [
            np.mean([
                _run("wwg-table-6.2", Strategy.COST, 100, budget, seed).completed_count
                for seed in SEEDS
            ])
            for budget in self.BUDGETS
        ]

        assert len(means) == 18
        assert all(later >= earlier for earlier, later in zip(means, means[1:]))

    def test_relaxed_deadline_uses_only_cheapest_resource(self):
        for seed in SEEDS:
            for budget in (8000, 15_000, 22_000):
                result = _run("wwg-table-6.2", Strategy.COST, 3100, budget, seed)

                assert result.completed_count == 200
                assert result.used_resources() == ["R8"]

    def test_time_strategy_is_faster_and_dearer(self):
        compared = 0
        for seed in SEEDS:
            for budget in self.BUDGETS:
                cost = _run("wwg-table-6.2", Strategy.COST, 3100, budget, seed)
                time = _run("wwg-table-6.2", Strategy.TIME, 3100, budget, seed)
                if cost.completion_factor < 1 or time.completion_factor < 1:
                    continue
                compared += 1
                assert time.makespan <= cost.makespan + 1e-6
                assert time.total_spend >= cost.total_spend - 1e-6

        assert compared > 0


@pytest.mark.slow
@pytest.mark.parametrize("deadline", [1600, 2100, 2600, 3100, 3600])
def test_cost_time_beats_cost_on_equal_prices(deadline):
    for seed in SEEDS:
        cost = _run("wwg-table-6.3", Strategy.COST, deadline, 22_000, seed)
        cost_time = _run("wwg-table-6.3", Strategy.COST_TIME, deadline, 22_000, seed)

        assert cost_time.makespan < cost.makespan
        assert cost_time.total_spend == pytest.approx(cost.total_spend, rel=0.01)


@pytest.mark.slow
def test_contention_lowers_completions_per_user():
    config = parse_config({
        "preset": "wwg-table-6.2",
        "seeds": SEEDS,
        "users": {
            "counts": [1, 10, 20, 40],
            "strategies": ["cost"],
            "deadlines": [3100],
            "budgets": [10_000],
        },
    })

    summary = run_sweep(config, parallel=1).summary_frame()

    summary["count"] = summary["user"].str.split("/").str[1].astype(int)
    means = summary.groupby("count")["completed"].mean().sort_index()
    assert means.index.tolist() == [1, 10, 20, 40]
    assert means.is_monotonic_decreasing

"""Tests for domain models."""

from __future__ import annotations

from datetime import date

import pytest
from pydantic import ValidationError

from dbc_gridsim.domain import (
    Application,
    Experiment,
    ExperimentResult,
    Gridlet,
    GridletStatus,
    Machine,
    PeriodClass,
    ProcessingElement,
    ResourceCalendar,
    ResourceCharacteristics,
    ResourceUsage,
    ScheduleBounds,
    Strategy,
    uniform_resource,
)


def _application(*lengths: float) -> Application:
    return Application(
        gridlets=[Gridlet(id=i, length_mi=mi) for i, mi in enumerate(lengths)]
    )


class TestResourceCharacteristics:
    def test_uniform_resource_layout(self):
        resource = uniform_resource("R0", pes=[2, 3], mips=377, price=4)

        assert resource.num_pes == 5
        assert resource.total_mips == pytest.approx(5 * 377)
        assert resource.pe_slots() == [(0, 0), (0, 1), (1, 0), (1, 1), (1, 2)]

    def test_cost_per_mi(self):
        resource = uniform_resource("R8", pes=2, mips=380, price=1)

        assert resource.cost_per_mi == pytest.approx(1 / 380)

    def test_mixed_ratings_rejected(self):
        machine = Machine(
            machine_id=0,
            pes=[
                ProcessingElement(pe_id=0, mips=100),
                ProcessingElement(pe_id=1, mips=200),
            ],
        )

        with pytest.raises(ValidationError, match="one MIPS rating"):
            ResourceCharacteristics(
                name="R0", machines=[machine], cost_per_pe_time_unit=1
            )

    def test_time_zone_range(self):
        with pytest.raises(ValidationError):
            uniform_resource("R0", pes=1, mips=1, price=1, time_zone=15)


class TestResourceCalendar:
    def test_load_for_each_period(self):
        calendar = ResourceCalendar(peak_load=0.5, off_peak_load=0.1, holiday_load=0.2)

        assert calendar.load_for(PeriodClass.PEAK) == 0.5
        assert calendar.load_for(PeriodClass.OFF_PEAK) == 0.1
        assert calendar.load_for(PeriodClass.HOLIDAY) == 0.2

    def test_holidays_are_dates(self):
        calendar = ResourceCalendar(holidays=[date(2001, 12, 25)])

        assert date(2001, 12, 25) in calendar.holidays

    @pytest.mark.parametrize(
        "fields",
        [{"weekends": [7]}, {"peak_hours": (18, 9)}, {"peak_load": 1.0}],
    )
    def test_invalid_profiles(self, fields):
        with pytest.raises(ValidationError):
            ResourceCalendar(**fields)


class TestGridlet:
    def test_defaults(self):
        gridlet = Gridlet(id=0, length_mi=10)

        assert gridlet.status == GridletStatus.CREATED
        assert not gridlet.is_finished
        assert gridlet.cost_incurred == 0.0

    @pytest.mark.parametrize(
        "status",
        [GridletStatus.SUCCESS, GridletStatus.FAILED, GridletStatus.CANCELED],
    )
    def test_terminal_states(self, status):
        assert Gridlet(id=0, length_mi=1, status=status).is_finished

    def test_length_must_be_positive(self):
        with pytest.raises(ValidationError):
            Gridlet(id=0, length_mi=0)


class TestApplication:
    def test_total_mi_and_length(self):
        application = _application(10, 20, 30)

        assert application.total_mi == pytest.approx(60)
        assert len(application) == 3

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValidationError, match="unique"):
            Application(
                gridlets=[Gridlet(id=1, length_mi=1), Gridlet(id=1, length_mi=2)]
            )


class TestExperiment:
    def test_absolute_constraints(self):
        experiment = Experiment(application=_application(1), deadline=10, budget=5)

        assert experiment.strategy is Strategy.COST
        assert experiment.d_factor is None

    def test_factor_constraints(self):
        experiment = Experiment(
            application=_application(1), d_factor=0.5, b_factor=1.0
        )

        assert experiment.deadline is None
        assert experiment.b_factor == 1.0

    def test_both_forms_rejected(self):
        with pytest.raises(ValidationError, match="exactly one of deadline"):
            Experiment(
                application=_application(1), deadline=10, d_factor=0.5, budget=5
            )

    def test_missing_budget_rejected(self):
        with pytest.raises(ValidationError, match="exactly one of budget"):
            Experiment(application=_application(1), deadline=10)


def test_schedule_bounds_ordering():
    with pytest.raises(ValidationError, match="t_min"):
        ScheduleBounds(t_min=5, t_max=1, c_min=0, c_max=1)


class TestExperimentResult:
    @pytest.fixture
    def result(self):
        return ExperimentResult(
            user="U0",
            strategy=Strategy.TIME,
            start_time=10,
            termination_time=50,
            deadline=60,
            budget=100,
            total_jobs=4,
            completed_count=3,
            total_spend=42,
            resources=[
                ResourceUsage(name="R0", cost_per_mi=1, completed=3),
                ResourceUsage(name="R1", cost_per_mi=2, failed=1),
            ],
        )

    def test_derived_measures(self, result):
        assert result.makespan == pytest.approx(40)
        assert result.completion_factor == pytest.approx(0.75)
        assert result.used_resources() == ["R0"]

    def test_summary_row(self, result):
        assert result.summary_row(user="U0/1", seed=7) == {
            "user": "U0/1",
            "deadline": 60,
            "budget": 100,
            "seed": 7,
            "strategy": "time",
            "completed": 3,
            "spend": 42,
            "termination_time": 50,
        }

    def test_empty_experiment_has_zero_completion(self, result):
        empty = result.model_copy(update={"total_jobs": 0, "completed_count": 0})

        assert empty.completion_factor == 0.0

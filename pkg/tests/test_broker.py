"""Tests for the economic broker."""

from __future__ import annotations

import pytest

from dbc_gridsim.broker import Broker, BrokerResource, estimate_rate
from dbc_gridsim.domain import (
    AllocationPolicy,
    Application,
    Experiment,
    Gridlet,
    GridletStatus,
    NetworkMode,
    ResourceCalendar,
    ResourceCharacteristics,
    Strategy,
    uniform_resource,
)
from dbc_gridsim.kernel import Event, Kernel, SimEntity
from dbc_gridsim.models import Tag
from dbc_gridsim.simulation import SimulationOptions, run_experiment


def _jobs(count: int, length: float = 10.0) -> Application:
    return Application(
        gridlets=[Gridlet(id=index, length_mi=length) for index in range(count)]
    )


def _pair():
    return [
        uniform_resource("R0", pes=1, mips=1.0, price=1.0),
        uniform_resource("R1", pes=1, mips=1.0, price=2.0),
    ]


def _ledger(pes: int = 2, mips: float = 5.0) -> BrokerResource:
    return BrokerResource(
        index=0,
        resource_id=3,
        characteristics=uniform_resource("R", pes=pes, mips=mips, price=10.0),
    )


class Recorder(SimEntity):
    """Entity that keeps every event sent to it."""

    def __init__(self, name: str) -> None:
        super().__init__(name)
        self.events: list[Event] = []

    def handle(self, event: Event) -> None:
        self.events.append(event)

    def payloads(self, tag: Tag) -> list[object]:
        return [event.payload for event in self.events if event.tag == tag]


def _broker_on_recorders(
    characteristics: list[ResourceCharacteristics], experiment: Experiment
) -> tuple[Kernel, Broker, list[Recorder]]:
    """Walk a broker through discovery against recorders standing in for resources."""
    kernel = Kernel()
    user, gis = Recorder("user"), Recorder("gis")
    sinks = [Recorder(c.name) for c in characteristics]
    for entity in (user, gis, *sinks):
        entity.attach(kernel)
    broker = Broker("broker", gis=gis.id, user_name="U0")
    broker.attach(kernel)

    def deliver(source: int, tag: Tag, payload: object) -> None:
        broker.handle(
            Event(
                fire_time=0.0,
                seq=0,
                source=source,
                dest=broker.id,
                tag=tag,
                payload=payload,
            )
        )

    deliver(user.id, Tag.EXPERIMENT, experiment)
    deliver(gis.id, Tag.RESOURCE_LIST, [sink.id for sink in sinks])
    for sink, resource in zip(sinks, characteristics, strict=True):
        deliver(sink.id, Tag.RESOURCE_CHARACTERISTICS, (sink.id, resource))
    return kernel, broker, sinks


class TestEstimateRate:
    def test_cold_start_assumes_rated_capacity(self):
        assert estimate_rate(_ledger()) == pytest.approx(10.0)

    def test_mean_of_recent_samples_times_pes(self):
        ledger = _ledger()
        ledger.rate_samples = [1.0, 2.0, 3.0]

        assert estimate_rate(ledger, window=2) == pytest.approx(5.0)

    def test_explicit_history(self):
        assert estimate_rate(_ledger(pes=1), [4.0, 6.0]) == pytest.approx(5.0)


class TestBrokerResource:
    def test_costs_and_commitment(self):
        ledger = _ledger(mips=5.0)
        ledger.assigned = [Gridlet(id=0, length_mi=10.0)]
        ledger.in_flight = {1: Gridlet(id=1, length_mi=5.0)}

        assert ledger.cost_per_mi == pytest.approx(2.0)
        assert ledger.reserved_cost() == pytest.approx(20.0)
        assert ledger.in_flight_cost() == pytest.approx(10.0)
        assert ledger.committed == 2

    def test_usage_summary(self):
        ledger = _ledger()
        ledger.dispatched_count = 3
        ledger.spend = 12.5

        usage = ledger.usage()

        assert usage.name == "R"
        assert (usage.dispatched, usage.completed, usage.spend) == (3, 0, 12.5)


class TestDispatch:
    @staticmethod
    def _four_pe_broker():
        resource = uniform_resource("R0", pes=4, mips=1.0, price=1.0)
        experiment = Experiment(application=_jobs(10), deadline=100.0, budget=1000.0)
        return _broker_on_recorders([resource], experiment)

    def test_submits_one_job_per_pe(self):
        _, broker, _ = self._four_pe_broker()
        (ledger,) = broker.resources

        assert broker.pool == []
        assert len(ledger.in_flight) == 4
        assert len(ledger.assigned) == 6
        assert ledger.dispatched_count == 4

    def test_full_resource_takes_nothing_more(self):
        _, broker, _ = self._four_pe_broker()

        assert broker.dispatch() == 0
        assert len(broker.resources[0].in_flight) == 4

    def test_completion_frees_exactly_one_slot(self):
        kernel, broker, (sink,) = self._four_pe_broker()
        (ledger,) = broker.resources
        gridlet = ledger.in_flight[0]
        gridlet.status = GridletStatus.SUCCESS
        gridlet.resource_id = sink.id
        gridlet.finish_time = 10.0
        gridlet.cost_incurred = 10.0
        kernel.schedule(broker.id, 10.0, Tag.GRIDLET_RETURN, gridlet, source=sink.id)

        kernel.run()

        assert len(sink.payloads(Tag.GRIDLET_SUBMIT)) == 5
        assert ledger.dispatched_count == 5
        assert len(ledger.in_flight) == 4
        assert len(ledger.assigned) == 5
        assert ledger.spend == pytest.approx(10.0)

    def test_excluded_resource_is_skipped(self):
        _, broker, _ = self._four_pe_broker()
        (ledger,) = broker.resources
        ledger.in_flight.clear()
        ledger.excluded = True

        assert broker.dispatch() == 0


class TestScheduling:
    def test_cost_strategy_fills_cheap_resource_first(self):
        experiment = Experiment(application=_jobs(4), deadline=20.0, budget=1000.0)

        result = run_experiment(experiment, _pair())

        assert result.completed_count == 4
        assert result.total_spend == pytest.approx(60.0)
        assert result.termination_time == pytest.approx(20.0)
        usage = {u.name: u for u in result.resources}
        assert usage["R0"].completed == usage["R1"].completed == 2

    def test_budget_caps_spend(self):
        experiment = Experiment(application=_jobs(4), deadline=20.0, budget=25.0)

        result = run_experiment(experiment, _pair())

        assert result.completed_count == 2
        assert result.total_spend == pytest.approx(20.0)
        assert result.used_resources() == ["R0"]

    def test_time_strategy_uses_both_resources_at_once(self):
        experiment = Experiment(
            application=_jobs(2), strategy=Strategy.TIME, deadline=20.0, budget=100.0
        )

        result = run_experiment(experiment, _pair())

        assert result.termination_time == pytest.approx(10.0)
        assert result.total_spend == pytest.approx(30.0)

    def test_unreachable_deadline_completes_nothing(self):
        experiment = Experiment(application=_jobs(2), deadline=5.0, budget=1000.0)

        result = run_experiment(experiment, _pair())

        assert result.completed_count == 0
        assert result.termination_time == 0.0
        assert result.completion_factor == 0.0

    def test_no_resources(self):
        experiment = Experiment(application=_jobs(3), deadline=5.0, budget=10.0)

        result = run_experiment(experiment, [])

        assert (result.total_jobs, result.completed_count) == (3, 0)

    @pytest.mark.parametrize("strategy", list(Strategy))
    def test_commitments_stay_within_budget_at_every_event(
        self, monkeypatch, strategy
    ):
        schedule_event = Broker._schedule_event
        slack: list[float] = []

        def checked(broker: Broker) -> None:
            schedule_event(broker)
            # Spend, in-flight and reserved costs together never pass the budget.
            slack.append(broker._budget_left())

        monkeypatch.setattr(Broker, "_schedule_event", checked)
        resources = [
            uniform_resource("R0", pes=2, mips=1.0, price=1.0),
            uniform_resource("R1", pes=1, mips=2.0, price=3.0),
            uniform_resource("R2", pes=1, mips=1.0, price=2.5),
        ]
        experiment = Experiment(
            application=_jobs(12), strategy=strategy, deadline=40.0, budget=200.0
        )

        result = run_experiment(experiment, resources)

        assert len(slack) > 1
        assert min(slack) >= -1e-6
        assert result.total_spend <= 200.0 + 1e-6

    def test_trace_records_commitments(self):
        experiment = Experiment(application=_jobs(4), deadline=20.0, budget=1000.0)

        result = run_experiment(experiment, _pair())

        first = [row for row in result.trace if row.time == 0.0]
        assert {(row.resource, row.committed) for row in first} == {
            ("R0", 2),
            ("R1", 2),
        }
        last = {row.resource: row for row in result.trace}
        assert last["R1"].processed == 2
        assert last["R1"].spend == pytest.approx(40.0)

    def test_experiment_can_be_rerun(self):
        experiment = Experiment(application=_jobs(4), deadline=20.0, budget=1000.0)

        first = run_experiment(experiment, _pair())
        second = run_experiment(experiment, _pair())

        assert first.total_spend == second.total_spend
        assert all(
            g.status == GridletStatus.CREATED for g in experiment.application.gridlets
        )

    def test_factors_resolve_against_bounds(self):
        experiment = Experiment(application=_jobs(4), d_factor=1.0, b_factor=1.0)

        result = run_experiment(experiment, _pair())

        assert result.bounds is not None
        assert result.deadline == pytest.approx(result.bounds.t_max)
        assert result.completed_count == 4


class TestDeadline:
    @staticmethod
    def _slow_resource():
        # Off-peak local load halves the rating the broker plans with.
        return [
            uniform_resource(
                "R0",
                pes=1,
                mips=1.0,
                price=2.0,
                policy=AllocationPolicy.SPACE_SHARED,
                calendar=ResourceCalendar(off_peak_load=0.5),
            )
        ]

    def test_overrunning_job_finishes_late_by_default(self):
        experiment = Experiment(application=_jobs(1, 40.0), deadline=50.0, budget=1e3)

        result = run_experiment(experiment, self._slow_resource())

        assert result.completed_count == 1
        assert result.termination_time == pytest.approx(80.0)

    def test_cancel_at_deadline_bills_partial_work(self):
        experiment = Experiment(application=_jobs(1, 40.0), deadline=50.0, budget=1e3)
        options = SimulationOptions(cancel_at_deadline=True)

        result = run_experiment(experiment, self._slow_resource(), options)

        assert result.completed_count == 0
        assert result.termination_time == pytest.approx(50.0)
        assert result.total_spend == pytest.approx(50.0)
        (gridlet,) = result.gridlets
        assert gridlet.status == GridletStatus.CANCELED

    def test_cancel_waits_for_gridlet_in_transit(self):
        # 1000 input bytes at 100 baud keep the gridlet on the link until t=80.
        application = Application(
            gridlets=[Gridlet(id=0, length_mi=10.0, input_bytes=1000)]
        )
        experiment = Experiment(application=application, deadline=50.0, budget=1e3)
        options = SimulationOptions(
            network_mode=NetworkMode.BAUD, baud_rate=100.0, cancel_at_deadline=True
        )
        resources = [uniform_resource("R0", pes=1, mips=1.0, price=1.0)]

        result = run_experiment(experiment, resources, options)

        (gridlet,) = result.gridlets
        assert gridlet.status == GridletStatus.CANCELED
        assert result.completed_count == 0
        assert result.termination_time == pytest.approx(80.0)
        assert result.total_spend == pytest.approx(0.0)


class TestFailures:
    def test_failed_gridlet_retried_on_other_resource(self):
        resources = [
            uniform_resource("R0", pes=1, mips=1.0, price=1.0, available_until=5.0),
            uniform_resource("R1", pes=1, mips=1.0, price=2.0),
        ]
        experiment = Experiment(application=_jobs(2), deadline=30.0, budget=1000.0)

        result = run_experiment(experiment, resources)

        usage = {u.name: u for u in result.resources}
        assert result.completed_count == 2
        assert usage["R0"].failed == 1
        assert usage["R1"].completed == 1
        assert result.total_spend == pytest.approx(30.0)
        assert result.termination_time == pytest.approx(20.0)

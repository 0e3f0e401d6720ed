"""Tests for the event-calendar kernel and the entity base class."""

from __future__ import annotations

import pytest

from dbc_gridsim.exceptions import (
    EntityRegistrationError,
    HandlerError,
    SchedulingError,
)
from dbc_gridsim.kernel import Event, Kernel, SimEntity
from dbc_gridsim.models import Tag


class Recorder(SimEntity):
    def __init__(self, name: str) -> None:
        super().__init__(name)
        self.seen: list[tuple[float, int, object]] = []

    def handle(self, event: Event) -> None:
        self.seen.append((event.fire_time, event.tag, event.payload))


class Echo(SimEntity):
    """Replies to every INSIGNIFICANT event after a fixed delay."""

    def __init__(self, name: str, delay: float) -> None:
        super().__init__(name)
        self.delay = delay

    def handle(self, event: Event) -> None:
        if event.tag == Tag.INSIGNIFICANT:
            self.send(event.source, Tag.EXPERIMENT, event.payload, self.delay)


def _kernel_with(*entities: SimEntity, trace: bool = False) -> Kernel:
    kernel = Kernel(trace=trace)
    for entity in entities:
        entity.attach(kernel)
    return kernel


class TestRegistration:
    def test_ids_are_dense_in_registration_order(self):
        a, b = Recorder("a"), Recorder("b")
        kernel = _kernel_with(a, b)

        assert (a.id, b.id) == (0, 1)
        assert kernel.entity_id("b") == 1
        assert kernel.entity_name(0) == "a"

    def test_duplicate_name_rejected(self):
        kernel = _kernel_with(Recorder("a"))

        with pytest.raises(EntityRegistrationError, match="duplicate"):
            Recorder("a").attach(kernel)

    def test_registration_after_start_rejected(self):
        kernel = _kernel_with(Recorder("a"))
        kernel.run()

        with pytest.raises(EntityRegistrationError, match="already started"):
            Recorder("late").attach(kernel)

    def test_unattached_entity_has_no_id(self):
        with pytest.raises(SchedulingError, match="not attached"):
            _ = Recorder("loose").id


class TestScheduling:
    def test_negative_delay_rejected(self):
        kernel = _kernel_with(Recorder("a"))

        with pytest.raises(SchedulingError, match="negative delay"):
            kernel.schedule(0, -1.0, Tag.INSIGNIFICANT)

    def test_unknown_destination_rejected(self):
        kernel = _kernel_with(Recorder("a"))

        with pytest.raises(SchedulingError, match="unknown destination"):
            kernel.schedule(5, 0.0, Tag.INSIGNIFICANT)

    def test_run_without_entities_fails(self):
        with pytest.raises(SchedulingError, match="no entities"):
            Kernel().run()

    def test_delivery_orders_by_time_then_seq(self):
        sink = Recorder("sink")
        kernel = _kernel_with(sink)
        kernel.schedule(sink.id, 5.0, Tag.INSIGNIFICANT, "late")
        kernel.schedule(sink.id, 1.0, Tag.INSIGNIFICANT, "first")
        kernel.schedule(sink.id, 1.0, Tag.INSIGNIFICANT, "second")

        final = kernel.run()

        payloads = [payload for _, _, payload in sink.seen]
        assert payloads == ["first", "second", "late"]
        assert final == 5.0
        assert kernel.delivered == 3

    def test_zero_delay_event_fires_at_current_time(self):
        sink = Recorder("sink")
        echo = Echo("echo", delay=0.0)
        kernel = _kernel_with(sink, echo)
        kernel.schedule(echo.id, 2.5, Tag.INSIGNIFICANT, "ping", source=sink.id)

        kernel.run()

        assert sink.seen == [(2.5, Tag.EXPERIMENT, "ping")]

    def test_clock_never_moves_backwards(self):
        times: list[float] = []

        class Chain(SimEntity):
            def handle(self, event: Event) -> None:
                times.append(self.now)
                if event.payload < 5:
                    delay = 0.5 * event.payload
                    self.schedule_self(delay, Tag.INSIGNIFICANT, event.payload + 1)

        chain = Chain("chain")
        kernel = _kernel_with(chain)
        kernel.schedule(chain.id, 0.0, Tag.INSIGNIFICANT, 0)
        kernel.run()

        assert times == sorted(times)
        assert len(times) == 6


class TestShutdown:
    def test_broadcast_delivers_in_given_order_and_drops_the_rest(self):
        a, b = Recorder("a"), Recorder("b")
        kernel = _kernel_with(a, b)
        kernel.schedule(a.id, 10.0, Tag.INSIGNIFICANT, "never")
        kernel.broadcast(Tag.END_OF_SIMULATION, dests=[b.id, a.id])

        kernel.run()

        assert b.seen == [(0.0, Tag.END_OF_SIMULATION, None)]
        assert a.seen == [(0.0, Tag.END_OF_SIMULATION, None)]
        assert kernel.discarded == 1
        assert kernel.pending == 0

    def test_run_ends_when_calendar_empties(self):
        sink = Recorder("sink")
        kernel = _kernel_with(sink)
        kernel.schedule(sink.id, 3.0, Tag.INSIGNIFICANT)

        assert kernel.run() == 3.0
        assert kernel.pending == 0


class TestStaleEvents:
    def test_cancel_stale_discards_superseded_internal_event(self):
        sink = Recorder("sink")
        kernel = _kernel_with(sink)
        old = kernel.schedule(sink.id, 1.0, Tag.RESOURCE_INTERNAL, source=sink.id)
        new = kernel.schedule(sink.id, 2.0, Tag.RESOURCE_INTERNAL, source=sink.id)
        stale = Event(1.0, old, sink.id, sink.id, Tag.RESOURCE_INTERNAL)
        current = Event(2.0, new, sink.id, sink.id, Tag.RESOURCE_INTERNAL)

        assert kernel.cancel_stale(sink.id, new, stale) is True
        assert kernel.cancel_stale(sink.id, new, current) is False
        assert kernel.discarded == 1

    def test_external_events_are_never_stale(self):
        sink, other = Recorder("sink"), Recorder("other")
        kernel = _kernel_with(sink, other)
        event = Event(0.0, 7, other.id, sink.id, Tag.GRIDLET_SUBMIT)

        assert kernel.cancel_stale(sink.id, 3, event) is False


class TestHandlerFailures:
    def test_handler_exception_is_wrapped_with_event(self):
        class Broken(SimEntity):
            def handle(self, event: Event) -> None:
                raise RuntimeError("boom")

        broken = Broken("broken")
        kernel = _kernel_with(broken)
        kernel.schedule(broken.id, 1.0, Tag.INSIGNIFICANT)

        with pytest.raises(HandlerError, match="boom") as excinfo:
            kernel.run()
        assert excinfo.value.event.fire_time == 1.0
        assert isinstance(excinfo.value.cause, RuntimeError)


class TestTrace:
    def _traced_run(self) -> Kernel:
        sink = Recorder("sink")
        echo = Echo("echo", delay=0.25)
        kernel = _kernel_with(sink, echo, trace=True)
        for step in range(3):
            kernel.schedule(
                echo.id, float(step), Tag.INSIGNIFICANT, step, source=sink.id
            )
        kernel.run()
        return kernel

    def test_trace_lines_record_every_delivery(self):
        kernel = self._traced_run()

        lines = kernel.trace_lines
        assert len(lines) == kernel.delivered == 6
        assert lines[0] == f"0.0\t0\t0\t1\t{int(Tag.INSIGNIFICANT)}"

    def test_trace_hash_is_reproducible(self):
        assert self._traced_run().trace_hash() == self._traced_run().trace_hash()

    def test_untraced_kernel_has_empty_trace(self):
        kernel = _kernel_with(Recorder("a"))
        kernel.run()

        assert kernel.trace_lines == []

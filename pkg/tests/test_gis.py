"""Tests for the Grid Information Service."""

from __future__ import annotations

from dbc_gridsim.gis import (
    GisEntity,
    GisRegistry,
    gis_deregister,
    gis_list,
    gis_register,
)
from dbc_gridsim.kernel import Event, Kernel, SimEntity
from dbc_gridsim.models import Tag


def test_empty_registry_lists_nothing():
    assert gis_list(GisRegistry()) == []


def test_registration_order_is_kept():
    registry = GisRegistry()
    for resource_id in (4, 2, 9):
        gis_register(registry, resource_id, f"R{resource_id}")

    assert gis_list(registry) == [4, 2, 9]


def test_eleven_resources_listed():
    registry = GisRegistry()
    for resource_id in range(11):
        gis_register(registry, resource_id, f"R{resource_id}")

    assert len(gis_list(registry)) == 11


def test_reregistration_is_idempotent():
    registry = GisRegistry()
    gis_register(registry, 1, "R1")
    gis_register(registry, 1, "R1-renamed")

    assert len(registry) == 1
    assert registry.entries[1] == "R1-renamed"


def test_deregister_unknown_is_noop():
    registry = GisRegistry()
    gis_register(registry, 1, "R1")
    gis_deregister(registry, 7)
    gis_deregister(registry, 1)

    assert gis_list(registry) == []


def test_entity_answers_resource_list():
    class Client(SimEntity):
        def __init__(self) -> None:
            super().__init__("client")
            self.lists: list[list[int]] = []

        def handle(self, event: Event) -> None:
            if event.tag == Tag.RESOURCE_LIST:
                self.lists.append(event.payload)

    kernel = Kernel()
    gis = GisEntity()
    client = Client()
    gis.attach(kernel)
    client.attach(kernel)
    kernel.schedule(gis.id, 0.0, Tag.REGISTER_RESOURCE, "client", source=client.id)
    kernel.schedule(gis.id, 1.0, Tag.RESOURCE_LIST, source=client.id)

    kernel.run()

    assert client.lists == [[client.id]]

"""Grid Information Service: resource registration and discovery."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .kernel import Event, SimEntity
from .models import Tag
from .types import EntityId

logger = logging.getLogger(__name__)


@dataclass
class GisRegistry:
    """Registered resources in registration order, one entry per id."""

    entries: dict[EntityId, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, resource_id: object) -> bool:
        return resource_id in self.entries


def gis_register(registry: GisRegistry, resource_id: EntityId, contact: str) -> None:
    """Add a resource, or update its contact record if already present."""
    if resource_id in registry.entries:
        logger.debug("Resource %d re-registered as %s", resource_id, contact)
    registry.entries[resource_id] = contact


def gis_deregister(registry: GisRegistry, resource_id: EntityId) -> None:
    registry.entries.pop(resource_id, None)


def gis_list(registry: GisRegistry) -> list[EntityId]:
    return list(registry.entries)


class GisEntity(SimEntity):
    """Answers registration and RESOURCE_LIST queries."""

    def __init__(self, name: str = "GIS") -> None:
        super().__init__(name)
        self.registry = GisRegistry()

    def handle(self, event: Event) -> None:
        match event.tag:
            case Tag.REGISTER_RESOURCE:
                gis_register(self.registry, event.source, str(event.payload))
            case Tag.DEREGISTER_RESOURCE:
                gis_deregister(self.registry, event.source)
                logger.debug("Resource %d left the grid", event.source)
            case Tag.RESOURCE_LIST:
                self.send(event.source, Tag.RESOURCE_LIST, gis_list(self.registry))
            case Tag.END_OF_SIMULATION:
                pass
            case _:
                logger.warning("GIS ignored event with tag %d", event.tag)

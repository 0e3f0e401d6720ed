"""Shared type aliases for dbc-gridsim."""

from __future__ import annotations

from collections.abc import Callable
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from .kernel import Event

# Kernel-assigned entity identifier; dense, starting at 0 in registration order.
type EntityId = int

# Simulation time in abstract time units (seconds for calendar purposes).
type SimTime = float

# Opaque event payload carried between entities.
type Payload = Any

type EventHandler = Callable[[Event], None]

# Typed literal bound to a plan parameter.
type PlanLiteral = int | float | str

"""Baud-rate links and per-entity I/O ports."""

from __future__ import annotations

import logging

from .domain import NetworkMode
from .exceptions import NetworkError
from .models import DEFAULT_BAUD_RATE
from .types import EntityId, SimTime

logger = logging.getLogger(__name__)


def transfer_delay(num_bytes: int, baud_rate: float) -> float:
    """Return the time needed to push ``num_bytes`` through a link.

    Raises:
        NetworkError: If the baud rate is not positive or the size is negative.
    """
    if baud_rate <= 0:
        raise NetworkError(f"baud rate must be positive, got {baud_rate!r}")
    if num_bytes < 0:
        raise NetworkError(f"transfer size must be non-negative, got {num_bytes}")
    return num_bytes * 8 / baud_rate


class Network:
    """Serializes transfers through each entity's input and output port.

    A transfer from ``src`` to ``dst`` occupies the sender's output port and
    the receiver's input port for ``bytes * 8 / min(baud_src, baud_dst)``.
    In ``NONE`` mode every transfer is instantaneous.
    """

    def __init__(
        self,
        mode: NetworkMode = NetworkMode.NONE,
        default_baud: float = DEFAULT_BAUD_RATE,
    ) -> None:
        if default_baud <= 0:
            raise NetworkError(f"baud rate must be positive, got {default_baud!r}")
        self.mode = mode
        self.default_baud = default_baud
        self._baud: dict[EntityId, float] = {}
        self._out_busy: dict[EntityId, SimTime] = {}
        self._in_busy: dict[EntityId, SimTime] = {}

    def set_baud(self, entity: EntityId, baud_rate: float) -> None:
        if baud_rate <= 0:
            raise NetworkError(f"baud rate must be positive, got {baud_rate!r}")
        self._baud[entity] = baud_rate

    def baud_of(self, entity: EntityId) -> float:
        return self._baud.get(entity, self.default_baud)

    def delay(
        self, now: SimTime, src: EntityId, dst: EntityId, num_bytes: int
    ) -> float:
        """Reserve both ports and return the delay until delivery at ``dst``."""
        if self.mode is NetworkMode.NONE or num_bytes == 0:
            return 0.0
        rate = min(self.baud_of(src), self.baud_of(dst))
        duration = transfer_delay(num_bytes, rate)
        start = max(now, self._out_busy.get(src, 0.0), self._in_busy.get(dst, 0.0))
        finish = start + duration
        self._out_busy[src] = finish
        self._in_busy[dst] = finish
        logger.debug(
            "Transfer %d -> %d of %d bytes: start=%s finish=%s",
            src,
            dst,
            num_bytes,
            start,
            finish,
        )
        return finish - now

"""Gridlet workloads and seeded uncertainty injection.

Estimated quantities (job lengths, output sizes, ...) are mapped to
"real-world" values with ``d * (1 - f_less + (f_less + f_more) * rd)``
where ``rd`` is a uniform draw from a seeded PCG64 stream.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from typing import TYPE_CHECKING

import numpy as np
from pydantic import BaseModel, Field

from .domain import Application, Gridlet
from .exceptions import RandomFactorError
from .models import (
    DEFAULT_BASE_MI,
    DEFAULT_JOB_COUNT,
    DEFAULT_VARIATION,
    USER_SEED_MULTIPLIER,
)

if TYPE_CHECKING:
    from .plan import JobBinding
    from .resources import ResGridlet

logger = logging.getLogger(__name__)


class RandomFactors(BaseModel):
    """Downward and upward uncertainty of an estimate, both in [0, 1]."""

    model_config = {"frozen": True}

    f_less: float = Field(default=0.0, ge=0.0, le=1.0)
    f_more: float = Field(default=0.0, ge=0.0, le=1.0)


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise RandomFactorError(f"{name} must be within [0, 1], got {value!r}")


def random_real(d: float, f_less: float, f_more: float, rd: float) -> float:
    """Map the estimate ``d`` into ``[d(1 - f_less), d(1 + f_more)]``.

    Raises:
        RandomFactorError: If a factor or the draw lies outside [0, 1].
    """
    _check_unit("f_less", f_less)
    _check_unit("f_more", f_more)
    _check_unit("rd", rd)
    return d * (1.0 - f_less + (f_less + f_more) * rd)


class SimRandom:
    """Seeded uniform stream with per-situation uncertainty factors."""

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self._generator = np.random.Generator(np.random.PCG64(seed))
        self.factors: dict[str, RandomFactors] = {}

    def draw(self) -> float:
        return float(self._generator.random())

    def draws(self, count: int) -> np.ndarray:
        return self._generator.random(count)

    def set_factors(self, situation: str, factors: RandomFactors) -> None:
        self.factors[situation] = factors

    def real(self, d: float, factors: RandomFactors | str) -> float:
        """Draw once and map ``d`` with the given (or named) factors."""
        if isinstance(factors, str):
            factors = self.factors.get(factors, RandomFactors())
        return random_real(d, factors.f_less, factors.f_more, self.draw())


def user_seed(seed: int, user_index: int) -> int:
    """Derive the independent stream seed of user ``user_index``."""
    return seed * USER_SEED_MULTIPLIER * (1 + user_index) + 1


def synthesize_application(  # noqa: PLR0913
    n_jobs: int = DEFAULT_JOB_COUNT,
    base_mi: float = DEFAULT_BASE_MI,
    positive_variation: float = DEFAULT_VARIATION,
    in_bytes: int = 0,
    out_bytes: int = 0,
    seed: int = 0,
    *,
    label: str = "application",
) -> Application:
    """Generate a task-farming application of independent gridlets.

    Each length is ``base_mi`` stretched upward by at most
    ``positive_variation``, one draw per job in id order.
    """
    if n_jobs < 1:
        raise ValueError(f"n_jobs must be at least 1, got {n_jobs}")
    draws = SimRandom(seed).draws(n_jobs)
    gridlets = [
        Gridlet(
            id=index,
            length_mi=random_real(base_mi, 0.0, positive_variation, float(rd)),
            input_bytes=in_bytes,
            output_bytes=out_bytes,
        )
        for index, rd in enumerate(draws)
    ]
    logger.debug(
        "Synthesized %d gridlets (base %s MI, variation %s, seed %d)",
        n_jobs,
        base_mi,
        positive_variation,
        seed,
    )
    return Application(label=label, gridlets=gridlets)


def application_from_bindings(  # noqa: PLR0913
    bindings: Sequence[JobBinding],
    base_mi: float = DEFAULT_BASE_MI,
    positive_variation: float = DEFAULT_VARIATION,
    in_bytes: int = 0,
    out_bytes: int = 0,
    seed: int = 0,
    *,
    label: str = "plan",
) -> Application:
    """One gridlet per plan binding; the gridlet id is the job index."""
    if not bindings:
        raise ValueError("plan produced no job bindings")
    draws = SimRandom(seed).draws(len(bindings))
    gridlets = [
        Gridlet(
            id=binding.job_index,
            length_mi=random_real(base_mi, 0.0, positive_variation, float(rd)),
            input_bytes=in_bytes,
            output_bytes=out_bytes,
        )
        for binding, rd in zip(bindings, draws, strict=True)
    ]
    return Application(label=label, gridlets=gridlets)


def length_in_time_units(item: Gridlet | ResGridlet, pe_mips: float) -> float:
    """Time a dedicated PE of ``pe_mips`` needs for the (remaining) work."""
    if pe_mips <= 0:
        raise ValueError(f"pe_mips must be positive, got {pe_mips!r}")
    work = item.length_mi if isinstance(item, Gridlet) else item.remaining_mi
    return work / pe_mips

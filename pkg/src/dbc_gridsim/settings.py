"""Environment overrides for sweep execution defaults."""

from __future__ import annotations

import os
import warnings
from collections.abc import Mapping

from .models import DEFAULT_RATE_WINDOW

BASE_DEFAULT_PARALLEL = 1
PARALLEL_ENV_VAR = "DBC_GRIDSIM_PARALLEL"
RATE_WINDOW_ENV_VAR = "DBC_GRIDSIM_WINDOW"


def _positive_int(raw_value: str | None, *, source_name: str, default: int) -> int:
    if raw_value is None or not raw_value.strip():
        return default
    try:
        value = int(raw_value.strip())
    except ValueError:
        warnings.warn(
            f"Ignoring invalid {source_name} value {raw_value!r}; using {default}.",
            stacklevel=3,
        )
        return default
    if value < 1:
        warnings.warn(
            f"Ignoring out-of-range {source_name} value {raw_value!r}; "
            f"using {default}.",
            stacklevel=3,
        )
        return default
    return value


def get_default_parallel(environ: Mapping[str, str] | None = None) -> int:
    """Return the default number of sweep worker processes.

    Reads ``DBC_GRIDSIM_PARALLEL`` when present. Invalid values fall back to
    one worker and emit a warning.
    """
    env = os.environ if environ is None else environ
    return _positive_int(
        env.get(PARALLEL_ENV_VAR),
        source_name=PARALLEL_ENV_VAR,
        default=BASE_DEFAULT_PARALLEL,
    )


def get_rate_window(environ: Mapping[str, str] | None = None) -> int:
    """Return the broker's rate-estimation window (``DBC_GRIDSIM_WINDOW``)."""
    env = os.environ if environ is None else environ
    return _positive_int(
        env.get(RATE_WINDOW_ENV_VAR),
        source_name=RATE_WINDOW_ENV_VAR,
        default=DEFAULT_RATE_WINDOW,
    )

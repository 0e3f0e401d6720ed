"""
Built-in sweep presets.

Each preset is raw configuration data, the same shape a TOML file parses
to, so presets can serve as the base of a user config.

PRESETS:
- wwg-table-6.2: eleven World-Wide Grid resources, 200-job application,
  cost strategy over the full deadline and budget grids
- wwg-table-6.3: the same testbed with R4 repriced to tie R8, comparing
  cost and cost-time
- testqueues-4.6: ten single-PE test queues priced 10..28 with 100 jobs of
  90 MI each, no length variation
"""

from __future__ import annotations

import copy
from typing import Any

from .exceptions import ConfigurationError

type PresetData = dict[str, Any]

_TIME_SHARED = "time-shared"
_SPACE_SHARED = "space-shared"


def _wwg_resource(  # noqa: PLR0913
    name: str,
    arch: str,
    os: str,
    pes: int,
    mips: float,
    price: float,
    location: str,
    time_zone: float,
    policy: str = _TIME_SHARED,
) -> dict[str, Any]:
    return {
        "name": name,
        "arch": arch,
        "os": os,
        "pes": pes,
        "mips": mips,
        "price": price,
        "location": location,
        "time_zone": time_zone,
        "policy": policy,
    }


_WWG_RESOURCES = [
    _wwg_resource("R0", "Compaq AlphaServer", "OSF1", 4, 515, 8, "VPAC, Australia", 10),
    _wwg_resource("R1", "Sun Ultra", "Solaris", 4, 377, 4, "AIST, Tokyo, Japan", 9),
    _wwg_resource("R2", "Sun Ultra", "Solaris", 4, 377, 3, "AIST, Tokyo, Japan", 9),
    _wwg_resource("R3", "Sun Ultra", "Solaris", 2, 377, 3, "AIST, Tokyo, Japan", 9),
    _wwg_resource(
        "R4", "Intel Pentium/VC820", "Linux", 2, 380, 2, "CNR, Pisa, Italy", 1
    ),
    _wwg_resource(
        "R5", "SGI Origin 3200", "IRIX", 6, 410, 5, "ZIB, Berlin, Germany", 1
    ),
    _wwg_resource(
        "R6", "SGI Origin 3200", "IRIX", 16, 410, 5, "ZIB, Berlin, Germany", 1
    ),
    _wwg_resource(
        "R7",
        "SGI Origin 3200",
        "IRIX",
        16,
        410,
        4,
        "Charles U., Prague, Czech Republic",
        1,
        policy=_SPACE_SHARED,
    ),
    _wwg_resource("R8", "Intel Pentium/VC820", "Linux", 2, 380, 1, "Portsmouth, UK", 0),
    _wwg_resource("R9", "SGI Origin 3200", "IRIX", 4, 410, 6, "Manchester, UK", 0),
    _wwg_resource("R10", "Sun Ultra", "Solaris", 8, 377, 3, "ANL, Chicago, USA", -6),
]

_WWG_APPLICATION = {"jobs": 200, "base_mi": 10_000, "variation": 0.10}

_WWG_USERS = {
    "counts": [1],
    "strategies": ["cost"],
    "deadlines": {"start": 100, "stop": 3600, "step": 500},
    "budgets": {"start": 5000, "stop": 22000, "step": 1000},
}


def _repriced(resources: list[dict[str, Any]], name: str, price: float) -> list:
    return [
        {**resource, "price": price} if resource["name"] == name else dict(resource)
        for resource in resources
    ]


_TEST_QUEUES = [
    {"name": f"Q{index}", "pes": 1, "mips": 1, "price": 10 + 2 * index}
    for index in range(10)
]

PRESETS: dict[str, PresetData] = {
    "wwg-table-6.2": {
        "seeds": [1],
        "resources": _WWG_RESOURCES,
        "application": _WWG_APPLICATION,
        "users": _WWG_USERS,
    },
    "wwg-table-6.3": {
        "seeds": [1],
        "resources": _repriced(_WWG_RESOURCES, "R4", 1),
        "application": _WWG_APPLICATION,
        "users": {**_WWG_USERS, "strategies": ["cost", "cost-time"]},
    },
    "testqueues-4.6": {
        "seeds": [1],
        "resources": _TEST_QUEUES,
        "application": {"jobs": 100, "base_mi": 90, "variation": 0.0},
        "users": {
            "counts": [1],
            "strategies": ["cost", "time", "conservative-time"],
            "deadlines": [990, 1980, 2970],
            "budgets": [126_000, 171_000, 252_000],
        },
    },
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def preset_data(name: str) -> PresetData:
    """Return a private copy of a preset's raw configuration data.

    Raises:
        ConfigurationError: If no preset has that name.
    """
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigurationError(
            f"unknown preset {name!r}; choose one of {', '.join(preset_names())}"
        ) from None

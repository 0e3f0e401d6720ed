"""Tests for the built-in sweep presets."""

from __future__ import annotations

import pytest

from dbc_gridsim.config import load_preset
from dbc_gridsim.domain import AllocationPolicy, Strategy
from dbc_gridsim.exceptions import ConfigurationError
from dbc_gridsim.harness import iter_cells
from dbc_gridsim.presets import PRESETS, preset_data, preset_names


def test_preset_names_sorted():
    assert preset_names() == ["testqueues-4.6", "wwg-table-6.2", "wwg-table-6.3"]


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_validates(name):
    config = load_preset(name)

    assert config.preset == name
    assert iter_cells(config)


def test_wwg_testbed():
    config = load_preset("wwg-table-6.2")
    resources = {r.name: r for r in config.characteristics()}

    assert len(resources) == 11
    assert resources["R7"].policy is AllocationPolicy.SPACE_SHARED
    assert resources["R6"].num_pes == 16
    assert resources["R8"].cost_per_pe_time_unit == 1
    assert config.application.jobs == 200
    assert config.users.deadline_grid()[:3] == [100, 600, 1100]
    assert config.users.deadline_grid()[-1] == 3600
    assert config.users.budget_grid()[-1] == 22000
    assert len(iter_cells(config)) == 8 * 18


def test_repriced_testbed():
    config = load_preset("wwg-table-6.3")
    resources = {r.name: r for r in config.characteristics()}

    assert resources["R4"].cost_per_pe_time_unit == 1
    assert config.users.strategies == [Strategy.COST, Strategy.COST_TIME]
    # The base table keeps its own price.
    assert load_preset("wwg-table-6.2").resources[4].price == 2


def test_test_queues():
    config = load_preset("testqueues-4.6")
    prices = [r.price for r in config.resources]

    assert prices == [10 + 2 * index for index in range(10)]
    assert config.application.variation == 0.0
    assert len(iter_cells(config)) == 27


def test_preset_data_is_a_private_copy():
    data = preset_data("testqueues-4.6")
    data["resources"].clear()

    assert len(preset_data("testqueues-4.6")["resources"]) == 10


def test_unknown_preset():
    with pytest.raises(ConfigurationError, match="unknown preset 'nope'"):
        preset_data("nope")

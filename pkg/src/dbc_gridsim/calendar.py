"""Local (non-grid) load calendar in resource-local time."""

from __future__ import annotations

from datetime import datetime, timedelta

from .domain import PeriodClass, ResourceCalendar, ResourceCharacteristics
from .models import CALENDAR_EPOCH
from .types import SimTime


def local_datetime(
    sim_time: SimTime, time_zone: float, calendar: ResourceCalendar
) -> datetime:
    """Map simulation time to the resource's local wall-clock time."""
    seconds = sim_time * calendar.time_unit_seconds + time_zone * 3600.0
    return CALENDAR_EPOCH + timedelta(seconds=seconds)


def period_class(
    sim_time: SimTime, time_zone: float, calendar: ResourceCalendar
) -> PeriodClass:
    """Classify a simulation instant as peak, off-peak or holiday.

    Weekends and listed holiday dates are HOLIDAY for the whole local day;
    otherwise local hours within ``peak_hours`` are PEAK.
    """
    local = local_datetime(sim_time, time_zone, calendar)
    if local.weekday() in calendar.weekends or local.date() in calendar.holidays:
        return PeriodClass.HOLIDAY
    start, end = calendar.peak_hours
    if start <= local.hour < end:
        return PeriodClass.PEAK
    return PeriodClass.OFF_PEAK


def local_load(resource: ResourceCharacteristics, sim_time: SimTime) -> float:
    period = period_class(sim_time, resource.time_zone, resource.calendar)
    return resource.calendar.load_for(period)


def effective_mips(resource: ResourceCharacteristics, sim_time: SimTime) -> float:
    """Per-PE MIPS left for grid work after local load."""
    return resource.mips_per_pe * (1.0 - local_load(resource, sim_time))

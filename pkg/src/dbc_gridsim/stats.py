"""Statistics records, per-label accumulators and the statistics entity."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TextIO

import pandas as pd

from .kernel import Event, SimEntity
from .models import STATS_COLUMNS, STATS_SUMMARY_COLUMNS, Tag
from .types import SimTime

logger = logging.getLogger(__name__)


@dataclass
class Accumulator:
    """Running count, sum, extrema and variance of one label's values.

    Variance uses Welford's update so it stays non-negative and matches a
    recomputation from the raw series.
    """

    count: int = 0
    sum: float = 0.0
    sum_sq: float = 0.0
    min: float = math.inf
    max: float = -math.inf
    _mean: float = 0.0
    _m2: float = 0.0

    def add(self, value: float) -> None:
        self.count += 1
        self.sum += value
        self.sum_sq += value * value
        self.min = min(self.min, value)
        self.max = max(self.max, value)
        delta = value - self._mean
        self._mean += delta / self.count
        self._m2 += delta * (value - self._mean)

    @property
    def mean(self) -> float | None:
        """Mean of recorded values, or None when nothing was recorded."""
        return self._mean if self.count else None

    @property
    def variance(self) -> float | None:
        """Sample (n - 1) variance; None with fewer than two values."""
        if self.count < 2:
            return None
        return max(self._m2 / (self.count - 1), 0.0)

    @property
    def std(self) -> float | None:
        variance = self.variance
        return math.sqrt(variance) if variance is not None else None

    def summary(self) -> dict[str, float | int | None]:
        return {
            "count": self.count,
            "mean": self.mean,
            "std": self.std,
            "min": self.min if self.count else None,
            "max": self.max if self.count else None,
            "sum": self.sum,
        }


@dataclass(frozen=True, slots=True)
class StatRecord:
    """One labelled, timestamped measurement."""

    label: str
    time: SimTime
    value: float


@dataclass(frozen=True)
class StatSeries:
    """Time-ordered records of one label with their accumulator."""

    label: str
    records: tuple[StatRecord, ...]
    accumulator: Accumulator

    @property
    def values(self) -> list[float]:
        return [record.value for record in self.records]


@dataclass
class StatisticsStore:
    records: list[StatRecord] = field(default_factory=list)
    accumulators: dict[str, Accumulator] = field(default_factory=dict)

    @property
    def labels(self) -> list[str]:
        return list(self.accumulators)

    def to_frame(self) -> pd.DataFrame:
        """Return every record as a DataFrame in record order."""
        return pd.DataFrame(
            [(r.label, r.time, r.value) for r in self.records], columns=STATS_COLUMNS
        )


def label_matches(pattern: str, label: str) -> bool:
    """Match dot-separated segments; ``*`` matches exactly one segment."""
    wanted = pattern.split(".")
    parts = label.split(".")
    if len(wanted) != len(parts):
        return False
    return all(w == "*" or w == p for w, p in zip(wanted, parts, strict=True))


def record(store: StatisticsStore, label: str, time: SimTime, value: float) -> None:
    store.records.append(StatRecord(label=label, time=time, value=value))
    store.accumulators.setdefault(label, Accumulator()).add(value)


def query(store: StatisticsStore, pattern: str) -> list[StatSeries]:
    """Return one series per label matching ``pattern``; unknown labels yield []."""
    matched = [label for label in store.accumulators if label_matches(pattern, label)]
    return [
        StatSeries(
            label=label,
            records=tuple(r for r in store.records if r.label == label),
            accumulator=store.accumulators[label],
        )
        for label in matched
    ]


def summary_frame(store: StatisticsStore) -> pd.DataFrame:
    rows = [
        {"label": label, **accumulator.summary()}
        for label, accumulator in store.accumulators.items()
    ]
    return pd.DataFrame(rows, columns=STATS_SUMMARY_COLUMNS)


def dump(store: StatisticsStore, stream: TextIO) -> None:
    """Write records, a blank line, then the per-label summary block."""
    store.to_frame().to_csv(stream, sep="\t", index=False, lineterminator="\n")
    stream.write("\n")
    summary_frame(store).to_csv(stream, sep="\t", index=False, lineterminator="\n")


class StatisticsEntity(SimEntity):
    """Records measurements sent by other entities at the current time."""

    def __init__(self, name: str = "Statistics") -> None:
        super().__init__(name)
        self.store = StatisticsStore()

    def handle(self, event: Event) -> None:
        match event.tag:
            case Tag.RECORD_STATISTICS:
                label, value = event.payload
                record(self.store, label, self.now, float(value))
            case Tag.RETURN_STAT_LIST:
                self.send(event.source, Tag.RETURN_STAT_LIST, self.store.labels)
            case Tag.RETURN_ACC_STATISTICS_BY_CATEGORY:
                series = query(self.store, str(event.payload))
                self.send(
                    event.source,
                    Tag.RETURN_ACC_STATISTICS_BY_CATEGORY,
                    {s.label: s.accumulator for s in series},
                )
            case Tag.END_OF_SIMULATION:
                count = len(self.store.records)
                logger.debug("Statistics closed with %d records", count)
            case _:
                logger.warning("Statistics ignored event with tag %d", event.tag)

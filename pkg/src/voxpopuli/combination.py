"""Point-forecast combination rules and their errors against a known outcome."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .dataset import EntrySet, percentile
from .errors import DomainError

DEFAULT_TRIMS = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45)


def combine_mean(data: EntrySet) -> float:
    # math.fsum keeps the mean exactly order-independent
    return math.fsum(data.values) / data.n


def combine_median(data: EntrySet) -> float:
    if data.n == 1:
        return float(data.values[0])
    return percentile(data, 0.5)


def combine_trimmed(data: EntrySet, trim_fraction: float) -> float:
    """Mean after dropping ``floor(trim_fraction * n)`` entries from each end."""
    if not 0.0 <= trim_fraction < 0.5:
        raise DomainError(f"trim fraction must lie in [0, 0.5), got {trim_fraction!r}")
    cut = int(math.floor(trim_fraction * data.n))
    kept = data.values[cut : data.n - cut]
    return math.fsum(kept) / kept.size


@dataclass(frozen=True)
class RankRange:
    """Rank of a value in the ranked entries; ``first < last`` when it ties several entries."""

    first: int
    last: int

    @property
    def rank(self) -> int:
        return self.first

    def __contains__(self, r: int) -> bool:
        return self.first <= r <= self.last


def outcome_rank(data: EntrySet, outcome: float) -> RankRange:
    below = int(np.searchsorted(data.values, outcome, side="left"))
    equal = int(np.searchsorted(data.values, outcome, side="right")) - below
    return RankRange(below + 1, below + max(equal, 1))


@dataclass(frozen=True)
class CombinationReport:
    mean: float
    median: float
    trimmed: tuple[tuple[float, float], ...]
    outcome: Optional[float] = None
    errors: dict[str, float] = field(default_factory=dict)
    outcome_rank: Optional[RankRange] = None

    def as_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "mean": self.mean,
            "median": self.median,
            "trimmed": [{"trim_fraction": f, "value": v} for f, v in self.trimmed],
            "errors": dict(self.errors),
            "outcome_rank": None
            if self.outcome_rank is None
            else {"first": self.outcome_rank.first, "last": self.outcome_rank.last},
        }


def trim_key(fraction: float) -> str:
    return f"trimmed_{fraction:g}"


def combine(data: EntrySet, outcome: Optional[float] = None, trims: Sequence[float] = DEFAULT_TRIMS) -> CombinationReport:
    """All combiners at once; signed errors are ``combined - outcome``."""
    if outcome is None:
        outcome = data.outcome
    mean = combine_mean(data)
    median = combine_median(data)
    trimmed = tuple((float(f), combine_trimmed(data, f)) for f in trims)
    errors: dict[str, float] = {}
    rank = None
    if outcome is not None:
        errors["mean"] = mean - outcome
        errors["median"] = median - outcome
        for f, v in trimmed:
            errors[trim_key(f)] = v - outcome
        rank = outcome_rank(data, outcome)
    return CombinationReport(mean, median, trimmed, outcome, errors, rank)


def table_mean(table: Iterable[tuple[float, float]]) -> float:
    """Mean of the values in a percentile table, a crude stand-in for the sample mean."""
    values = [w for _, w in table]
    if not values:
        raise DomainError("empty percentile table")
    return math.fsum(values) / len(values)

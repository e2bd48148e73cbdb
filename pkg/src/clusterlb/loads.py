"""Load values, thresholds and the LOW / MEDIUM / HIGH classification."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable


class LoadClass(enum.IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2


@dataclass(frozen=True)
class Thresholds:
    """Node load thresholds.

    ``low_max`` is the largest LOW load and ``medium_max`` the upper
    threshold: anything strictly above it is HIGH.
    """

    low_max: int
    medium_max: int

    def __post_init__(self):
        if not (0 < self.low_max < self.medium_max):
            raise ValueError(
                f"thresholds must satisfy 0 < low_max < medium_max, got "
                f"low_max={self.low_max}, medium_max={self.medium_max}"
            )


@dataclass(frozen=True)
class ClusterCapacity:
    size: int
    medium_max: int

    @property
    def cluster_medium_max(self) -> int:
        return self.medium_max * self.size

    @classmethod
    def for_cluster(cls, size: int, t: Thresholds) -> "ClusterCapacity":
        return cls(size=size, medium_max=t.medium_max)


def _check_load(load: int) -> None:
    if load < 0:
        raise ValueError(f"load must be non-negative, got {load}")


def classify_node_load(load: int, t: Thresholds) -> LoadClass:
    _check_load(load)
    if load <= t.low_max:
        return LoadClass.LOW
    if load <= t.medium_max:
        return LoadClass.MEDIUM
    return LoadClass.HIGH


def classify_cluster_load(total: int, cap: ClusterCapacity, t: Thresholds) -> LoadClass:
    """Classify a cluster by its summed load; both node thresholds scale with size."""
    _check_load(total)
    if total > cap.cluster_medium_max:
        return LoadClass.HIGH
    if total <= t.low_max * cap.size:
        return LoadClass.LOW
    return LoadClass.MEDIUM


def cluster_total(loads: Iterable[int]) -> int:
    return sum(loads)

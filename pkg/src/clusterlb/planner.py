"""Greedy excess-load redistribution.

The same walk serves both levels of the protocol: node loads inside a
cluster against ``medium_max``, and cluster totals across the grid against
each cluster's capacity.  Donors and recipients are visited in ascending
index order so every coordinator derives a byte-identical plan from the
same input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

from .loads import ClusterCapacity, Thresholds


class PlannerError(ValueError):
    """Planner inputs are inconsistent with the capacity they claim."""


@dataclass(frozen=True)
class TransferRecord:
    src: Hashable
    dst: Hashable
    amount: int

    def __post_init__(self):
        if self.amount <= 0:
            raise ValueError(f"transfer amount must be positive, got {self.amount}")
        if self.src == self.dst:
            raise ValueError(f"transfer from {self.src!r} to itself")


@dataclass(frozen=True)
class TransferPlan:
    transfers: tuple[TransferRecord, ...]
    final_loads: tuple[int, ...]

    def __len__(self):
        return len(self.transfers)


def _greedy(loads: Sequence[int], caps: Sequence[int], ids: Sequence[Hashable]) -> TransferPlan:
    cur = list(loads)
    n = len(cur)
    transfers = []
    for i in range(n):
        excess = cur[i] - caps[i]
        if excess <= 0:
            continue
        for j in range(n):
            if excess == 0:
                break
            if j == i or cur[j] >= caps[j]:
                continue
            amount = min(excess, caps[j] - cur[j])
            excess -= amount
            cur[i] -= amount
            cur[j] += amount
            transfers.append(TransferRecord(ids[i], ids[j], amount))
    return TransferPlan(tuple(transfers), tuple(cur))


def local_balance_plan(loads: Sequence[int], t: Thresholds,
                       ids: Sequence[Hashable] | None = None) -> TransferPlan:
    """Move each HIGH node's excess over ``medium_max`` onto nodes below it.

    ``ids`` labels the positions of ``loads`` in the emitted records and
    defaults to the positions themselves.
    """
    if not loads:
        raise ValueError("local_balance_plan needs at least one load")
    if any(x < 0 for x in loads):
        raise ValueError("loads must be non-negative")
    ids = range(len(loads)) if ids is None else ids
    return _greedy(loads, [t.medium_max] * len(loads), ids)


def global_balance_plan(cluster_totals: Sequence[int], caps: Sequence[ClusterCapacity | int],
                        ids: Sequence[Hashable] | None = None) -> TransferPlan:
    """Cluster-granularity version of :func:`local_balance_plan`.

    Entries must be ordered by cluster identifier.
    """
    if len(cluster_totals) != len(caps):
        raise ValueError(
            f"{len(cluster_totals)} cluster totals but {len(caps)} capacities"
        )
    limits = [c.cluster_medium_max if isinstance(c, ClusterCapacity) else int(c) for c in caps]
    ids = range(len(cluster_totals)) if ids is None else ids
    return _greedy(cluster_totals, limits, ids)


def sender_assignment(local_loads: Sequence[int], t: Thresholds,
                      outgoing: Sequence[tuple[Hashable, int]],
                      node_ids: Sequence[Hashable] | None = None) -> list[tuple[Hashable, Hashable, int]]:
    """Split the outgoing inter-cluster amounts into per-donor chunks.

    Donors are drained in ascending order, never below ``medium_max``;
    destinations are served in the order given.  Returns
    ``(donor, dest_cluster, amount)`` triples.
    """
    node_ids = list(range(len(local_loads))) if node_ids is None else list(node_ids)
    spare = [(nid, load - t.medium_max) for nid, load in zip(node_ids, local_loads)
             if load > t.medium_max]
    need = sum(a for _, a in outgoing)
    have = sum(e for _, e in spare)
    if need > have:
        raise PlannerError(f"outgoing load {need} exceeds local excess {have}")

    chunks = []
    k = 0
    for dest, amount in outgoing:
        while amount > 0:
            nid, excess = spare[k]
            step = min(excess, amount)
            chunks.append((nid, dest, step))
            amount -= step
            if step == excess:
                k += 1
            else:
                spare[k] = (nid, excess - step)
    return chunks


def receiver_assignment(local_loads: Sequence[int], t: Thresholds, incoming_amount: int,
                        node_ids: Sequence[Hashable] | None = None) -> list[tuple[Hashable, int]]:
    """Fill nodes below ``medium_max`` in ascending order with ``incoming_amount``."""
    node_ids = list(range(len(local_loads))) if node_ids is None else list(node_ids)
    room = sum(max(0, t.medium_max - x) for x in local_loads)
    if incoming_amount > room:
        raise PlannerError(f"incoming load {incoming_amount} exceeds spare capacity {room}")
    out = []
    left = incoming_amount
    for nid, load in zip(node_ids, local_loads):
        if left == 0:
            break
        gap = t.medium_max - load
        if gap <= 0:
            continue
        step = min(gap, left)
        out.append((nid, step))
        left -= step
    return out


def apply_transfers(loads: Sequence[int], transfers: Sequence[TransferRecord],
                    ids: Sequence[Hashable] | None = None) -> list[int]:
    """Replay ``transfers`` onto ``loads``; used to cross-check a plan's final state."""
    ids = list(range(len(loads))) if ids is None else list(ids)
    pos = {k: i for i, k in enumerate(ids)}
    out = list(loads)
    for tr in transfers:
        out[pos[tr.src]] -= tr.amount
        out[pos[tr.dst]] += tr.amount
    return out

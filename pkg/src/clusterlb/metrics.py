"""Balancing-quality statistics, bound checkers and row emitters."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .loads import LoadClass, Thresholds, classify_node_load
from .sim import RoundResult, TransferLog, message_counts

CSV_COLUMNS = ("scenario_id", "seed", "n_actors", "n_clusters", "profile",
               "high_before", "high_after", "pct_before", "pct_after",
               "std_before", "std_after", "token_hops", "msgs_total", "sim_time")


def count_high(loads: Iterable[int], t: Thresholds) -> int:
    return sum(1 for x in loads if classify_node_load(x, t) is LoadClass.HIGH)


def std_dev(loads: Sequence[int]) -> float:
    """Population standard deviation."""
    if len(loads) == 0:
        raise ValueError("std_dev of an empty load vector")
    return float(np.std(np.asarray(loads, dtype=float)))


@dataclass
class Metrics:
    n_actors: int
    high_count_before: int
    high_count_after: int
    high_pct_before: float
    high_pct_after: float
    std_dev_before: float
    std_dev_after: float
    message_counts: dict[str, int] = field(default_factory=dict)
    token_hops: int = 0
    global_knowledge_msgs: int = 0
    msgs_total: int = 0
    sim_time: float = 0.0
    transfers_completed: int = 0

    @property
    def std_ratio(self) -> float:
        if self.std_dev_before == 0:
            return 1.0
        return self.std_dev_after / self.std_dev_before

    @property
    def high_reduction(self) -> float | None:
        if self.high_count_before == 0:
            return None
        return (self.high_count_before - self.high_count_after) / self.high_count_before

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(before: Sequence[int], after: Sequence[int], result: RoundResult | None,
              t: Thresholds) -> Metrics:
    if len(before) != len(after):
        raise ValueError(f"load vectors differ in length: {len(before)} vs {len(after)}")
    n = len(before)
    hb, ha = count_high(before, t), count_high(after, t)
    m = Metrics(
        n_actors=n,
        high_count_before=hb,
        high_count_after=ha,
        high_pct_before=hb / n,
        high_pct_after=ha / n,
        std_dev_before=std_dev(before),
        std_dev_after=std_dev(after),
    )
    if result is not None:
        counts = message_counts(result.trace)
        m.message_counts = counts
        m.token_hops = counts["token_hops"]
        m.global_knowledge_msgs = counts["token_hops"] + counts["loadvector"]
        m.msgs_total = result.msgs_total
        m.sim_time = result.sim_time
        m.transfers_completed = len(result.transfers)
    return m


# --------------------------------------------------------------------------
# bound checkers

def token_bound(k: int) -> float:
    return k * (k - 1) / 2


def knowledge_msg_bound(k: int) -> float:
    return k * (1 + (k - 1) / 2)


@dataclass
class Theorem2Check:
    k: int
    token_hops: int
    global_knowledge_msgs: int
    token_bound: float
    total_bound: float
    broadcast_cost: int

    @property
    def passed(self) -> bool:
        return (self.token_hops <= self.token_bound
                and self.global_knowledge_msgs <= self.total_bound
                and self.token_hops <= self.broadcast_cost / 2)


def check_theorem2(result: RoundResult, k: int | None = None) -> Theorem2Check:
    """Token hops against k(k-1)/2, token + LoadVector messages against k(1+(k-1)/2).

    Also compares against all-to-all broadcasting of cluster loads, which
    costs k(k-1) messages; the token must need at most half of that.
    """
    k = result.topology.k if k is None else k
    return Theorem2Check(
        k=k,
        token_hops=result.token_hops,
        global_knowledge_msgs=result.global_knowledge_msgs,
        token_bound=token_bound(k),
        total_bound=knowledge_msg_bound(k),
        broadcast_cost=k * (k - 1),
    )


@dataclass
class PathCheck:
    transfer: TransferLog
    lower: float
    upper: float

    @property
    def value(self) -> float:
        return self.transfer.critical_path

    @property
    def passed(self) -> bool:
        eps = 1e-9
        return self.lower - eps <= self.value <= self.upper + eps


@dataclass
class Theorem3Check:
    paths: list[PathCheck]

    @property
    def passed(self) -> bool:
        return bool(self.paths) and all(p.passed for p in self.paths)


def check_theorem3(result: RoundResult, d: int | None = None, T: float | None = None,
                   L: float | None = None) -> Theorem3Check:
    """Each transfer's critical path must lie in [4dT+L, (4d+1)T+L].

    ``L`` defaults to the topology's payload time for each transfer's amount.
    """
    topo = result.topology
    d = topo.d if d is None else d
    T = topo.T if T is None else T
    paths = []
    for tr in result.transfers:
        pay = topo.L(tr.amount) if L is None else L
        paths.append(PathCheck(tr, 4 * d * T + pay, (4 * d + 1) * T + pay))
    return Theorem3Check(paths)


@dataclass
class KnowledgeTimeCheck:
    measured: float | None
    bound: float

    @property
    def passed(self) -> bool:
        return self.measured is None or self.measured <= self.bound + 1e-9


def check_knowledge_time(result: RoundResult) -> KnowledgeTimeCheck:
    """First token send to last LoadVector delivery, against ((2k-1)+d)T."""
    topo = result.topology
    return KnowledgeTimeCheck(result.knowledge_time, ((2 * topo.k - 1) + topo.d) * topo.T)


# --------------------------------------------------------------------------
# emitters

def metrics_row(scenario_id: str, seed, n_clusters: int, profile: str, m: Metrics) -> dict:
    return {
        "scenario_id": scenario_id,
        "seed": seed,
        "n_actors": m.n_actors,
        "n_clusters": n_clusters,
        "profile": profile,
        "high_before": m.high_count_before,
        "high_after": m.high_count_after,
        "pct_before": m.high_pct_before,
        "pct_after": m.high_pct_after,
        "std_before": m.std_dev_before,
        "std_after": m.std_dev_after,
        "token_hops": m.token_hops,
        "msgs_total": m.msgs_total,
        "sim_time": m.sim_time,
    }


def mean_row(rows: Sequence[dict]) -> dict:
    """Average the numeric columns of rows sharing one configuration."""
    first = rows[0]
    out = {k: first[k] for k in ("scenario_id", "n_actors", "n_clusters", "profile")}
    out["seed"] = "mean"
    for col in ("high_before", "high_after", "pct_before", "pct_after", "std_before",
                "std_after", "token_hops", "msgs_total", "sim_time"):
        out[col] = float(np.mean([r[col] for r in rows]))
    return {c: out[c] for c in CSV_COLUMNS}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def write_csv(rows: Iterable[dict], fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])


def write_json(rows: Iterable[dict], fh: IO[str]) -> None:
    json.dump([{c: r[c] for c in CSV_COLUMNS} for r in rows], fh, indent=1)
    fh.write("\n")

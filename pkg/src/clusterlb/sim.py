"""Deterministic discrete-event simulator for one balancing round.

Links are reliable and FIFO with deterministic latency.  Node-to-coordinator
and node-to-node messages cost ``d * T``, coordinator-to-coordinator messages
cost ``T`` (zero when a coordinator addresses itself), and messages that
carry load pay the payload time ``L`` on top.  Simultaneous deliveries are
ordered by a global sequence number taken at send time.
"""

from __future__ import annotations

import heapq
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .loads import ClusterCapacity, Thresholds
from .messages import (
    CoordLoad, LoadVector, Message, NodeAck, NodeLoad, StateReport, Timeout,
    Token, XferCmd, coord, fmt_addr,
)
from .protocol import CoordinatorState, NodeState, coordinator_step, node_step

DEFAULT_EVENT_CEILING = 10**6


class NonQuiescence(RuntimeError):
    """The round stopped (or was stopped) with live actors."""

    def __init__(self, reason: str, live: dict[str, str], events: int, time: float):
        self.reason = reason
        self.live = live
        self.events = events
        self.time = time
        shown = ", ".join(f"{k}={v}" for k, v in list(live.items())[:12])
        more = "" if len(live) <= 12 else f", ... ({len(live)} live)"
        super().__init__(f"{reason} after {events} events at t={time:g}: {shown}{more}")


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class PayloadTime:
    """Load transfer time: ``constant`` or ``linear`` (``value`` per unit)."""

    kind: str = "constant"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "linear"):
            raise ValueError(f"unknown payload time model {self.kind!r}")
        if self.value < 0:
            raise ValueError("payload time must be non-negative")

    def __call__(self, amount: int) -> float:
        return self.value if self.kind == "constant" else self.value * amount


@dataclass(frozen=True)
class Topology:
    clusters: tuple[tuple[int, ...], ...]
    d: int = 1
    T: float = 1.0
    L: PayloadTime = PayloadTime()

    def __post_init__(self):
        if self.d < 1 or self.T <= 0:
            raise ValueError(f"need d >= 1 and T > 0, got d={self.d}, T={self.T}")

    @property
    def ring(self) -> tuple[int, ...]:
        return tuple(sorted(c[0] for c in self.clusters))

    @property
    def k(self) -> int:
        return len(self.clusters)

    @property
    def n_actors(self) -> int:
        return sum(len(c) for c in self.clusters)

    @property
    def cluster_sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.clusters)

    def cluster_of(self) -> dict[int, int]:
        return {m: c[0] for c in self.clusters for m in c}

    def latency(self, msg: Message) -> float:
        src, dst = msg.src, msg.dst
        if src == dst:
            base = 0.0
        elif src[0] == "C" and dst[0] == "C":
            base = self.T
        else:
            base = self.d * self.T
        if msg.carries_load:
            base += self.L(msg.amount)
        return base


def build_topology(cluster_sizes: Sequence[int], d: int = 1, T: float = 1.0,
                   L: PayloadTime | float = 0.0) -> Topology:
    """Consecutive ids per cluster; the first id of each cluster is its coordinator."""
    if not cluster_sizes:
        raise ValueError("need at least one cluster")
    if any(s < 1 for s in cluster_sizes):
        raise ValueError(f"cluster sizes must be positive, got {list(cluster_sizes)}")
    if not isinstance(L, PayloadTime):
        L = PayloadTime("constant", float(L))
    clusters = []
    start = 0
    for size in cluster_sizes:
        clusters.append(tuple(range(start, start + size)))
        start += size
    return Topology(tuple(clusters), d=d, T=float(T), L=L)


@dataclass
class TransferLog:
    """One donor-side transfer: command receipt through final ack."""

    donor: int
    amount: int
    remote: bool
    dest: int  # recipient node (local) or destination cluster (remote)
    report_sent: float
    report_leg: float
    cmd_leg: float
    payload_leg: float = 0.0
    ack_leg: float = 0.0
    done_at: float | None = None
    ring_hop: float = 0.0

    @property
    def critical_path(self) -> float:
        # donor's state report, command, payload departure, the one ring
        # crossing of a remote payload, and the ack closing the handshake
        return self.report_leg + self.cmd_leg + self.payload_leg + self.ring_hop + self.ack_leg

    @property
    def elapsed(self) -> float:
        return self.done_at - self.report_sent


@dataclass(frozen=True)
class TraceRecord:
    time: float
    seq: int
    msg: Message

    def line(self) -> str:
        fields = [f"{self.time:.6f}", fmt_addr(self.msg.src), fmt_addr(self.msg.dst), self.msg.kind]
        summary = self.msg.summary()
        if summary:
            fields.append(summary)
        return "\t".join(fields)


@dataclass
class RoundResult:
    topology: Topology
    thresholds: Thresholds
    initial_loads: list[int]
    final_loads: list[int]
    counts: Counter
    token_sends: int
    token_hops: int
    token_drops: int
    circuits: int
    loadvector_sends: int
    sim_time: float
    events: int
    transfers: list[TransferLog]
    trace: list[TraceRecord] = field(repr=False)
    knowledge_time: float | None = None

    @property
    def global_knowledge_msgs(self) -> int:
        return self.token_hops + self.loadvector_sends

    @property
    def msgs_total(self) -> int:
        return sum(self.counts.values())

    @property
    def local_transfers(self) -> list[TransferLog]:
        return [t for t in self.transfers if not t.remote]

    @property
    def remote_transfers(self) -> list[TransferLog]:
        return [t for t in self.transfers if t.remote]

    def trace_text(self) -> str:
        return "".join(r.line() + "\n" for r in self.trace)


def message_counts(trace: Sequence[TraceRecord]) -> dict[str, int]:
    """Per-variant delivery counts, plus token hop and LoadVector tallies.

    Timer expiries are not messages and are left out.  ``token_hops``
    counts forwarding transmissions, i.e. Token messages whose sender is not
    the token's originator.
    """
    counts: Counter = Counter()
    hops = 0
    for rec in trace:
        m = rec.msg
        if isinstance(m, Timeout):
            continue
        counts[m.kind] += 1
        if isinstance(m, Token) and m.src[1] != m.originator:
            hops += 1
    out = dict(sorted(counts.items()))
    out["token_hops"] = hops
    out["loadvector"] = counts.get("LoadVector", 0)
    return out


def _timer_offsets(ring: Sequence[int], timers) -> dict[int, float]:
    if timers is None:
        return {c: 0.0 for c in ring}
    if isinstance(timers, Mapping):
        missing = set(ring) - set(timers)
        if missing:
            raise ValueError(f"no timer for coordinators {sorted(missing)}")
        return {c: float(timers[c]) for c in ring}
    timers = list(timers)
    if len(timers) != len(ring):
        raise ValueError(f"{len(timers)} timer offsets for {len(ring)} coordinators")
    return {c: float(x) for c, x in zip(ring, timers)}


def run_round(topology: Topology, initial_loads: Sequence[int], thresholds: Thresholds,
              timers=None, event_ceiling: int = DEFAULT_EVENT_CEILING,
              check_invariants: bool = True) -> RoundResult:
    """Run coordinators' timers once each and drain events until quiescence.

    ``timers`` is ``None`` (all fire at t=0), a sequence of offsets in ring
    order, or a mapping coordinator id -> offset.
    """
    n = topology.n_actors
    if len(initial_loads) != n:
        raise ValueError(f"{len(initial_loads)} loads for {n} actors")
    if any(x < 0 for x in initial_loads):
        raise ValueError("initial loads must be non-negative")
    t = thresholds
    ring = topology.ring
    cluster_of = topology.cluster_of()
    caps = {c[0]: ClusterCapacity.for_cluster(len(c), t).cluster_medium_max for c in topology.clusters}

    nodes = [NodeState(node_id=i, coordinator=cluster_of[i], load=int(x))
             for i, x in enumerate(initial_loads)]
    coords = {c[0]: CoordinatorState(cid=c[0], members=c, ring=ring, caps=caps, thresholds=t)
              for c in topology.clusters}

    heap: list = []
    seq = 0
    link_clock: dict = {}
    counts: Counter = Counter()
    latency = topology.latency
    in_flight = 0
    total0 = sum(nodes[i].load for i in range(n))
    node_total = total0

    for c, off in _timer_offsets(ring, timers).items():
        heapq.heappush(heap, (off, seq, off, Timeout(src=coord(c), dst=coord(c))))
        seq += 1

    trace: list[TraceRecord] = []
    transfers: list[TransferLog] = []
    report_leg: dict[int, tuple[float, float]] = {}
    cmd_legs: dict[int, deque] = {}
    open_xfer: dict[int, TransferLog] = {}
    held_at = {c: 0 for c in coords}
    token_sends = token_hops = lv_sends = 0
    first_token = last_lv = None
    events = 0
    now = 0.0

    def live_states() -> dict[str, str]:
        live = {f"C{c}": s.mode.value for c, s in coords.items() if s.mode.value != "IDLE"}
        live.update({f"N{s.node_id}": s.mode.value for s in nodes if s.mode.value != "IDLE"})
        return live

    while heap:
        if events >= event_ceiling:
            raise NonQuiescence(f"event ceiling {event_ceiling} reached", live_states(), events, now)
        now, s_, sent_at, msg = heapq.heappop(heap)
        events += 1
        trace.append(TraceRecord(now, s_, msg))
        role, idx = msg.dst
        if msg.carries_load:
            in_flight -= msg.amount

        if role == "N":
            before = nodes[idx]
            if isinstance(msg, XferCmd):
                cmd_legs.setdefault(idx, deque()).append(now - sent_at)
            elif isinstance(msg, NodeAck) and idx in open_xfer and before.current is not None:
                log = open_xfer.pop(idx)
                log.ack_leg = now - sent_at
                log.done_at = now
                transfers.append(log)
            after, outs = node_step(before, msg, t)
            nodes[idx] = after
            node_total += after.load - before.load
            for out in outs:
                if isinstance(out, (NodeLoad, CoordLoad)):
                    cmd = after.current
                    sent, leg = report_leg[idx]
                    open_xfer[idx] = TransferLog(
                        donor=idx, amount=out.amount, remote=cmd.remote, dest=cmd.dest,
                        report_sent=sent, report_leg=leg, cmd_leg=cmd_legs[idx].popleft(),
                        ring_hop=topology.T if cmd.remote else 0.0,
                    )
        else:
            if isinstance(msg, StateReport):
                report_leg[msg.src[1]] = (sent_at, now - sent_at)
            elif isinstance(msg, LoadVector):
                last_lv = now
            cs = coords[idx]
            parked = len(cs.inbound)
            _, outs = coordinator_step(cs, msg)
            if len(cs.inbound) != parked:
                # deferred XLoads sit at the coordinator but still count as in flight
                held = sum(x.amount for x in cs.inbound) - held_at[idx]
                held_at[idx] += held
                in_flight += held

        if msg.carries_load and msg.src[0] == "N":
            donor = msg.src[1]
            if donor in open_xfer:
                open_xfer[donor].payload_leg = now - sent_at

        for out in outs:
            arrive = now + latency(out)
            link = (out.src, out.dst)
            prev = link_clock.get(link)
            if prev is not None and prev > arrive:
                arrive = prev
            link_clock[link] = arrive
            heapq.heappush(heap, (arrive, seq, now, out))
            seq += 1
            counts[out.kind] += 1
            if out.carries_load:
                in_flight += out.amount
            if isinstance(out, Token):
                token_sends += 1
                if first_token is None:
                    first_token = now
                if out.src[1] != out.originator:
                    token_hops += 1
            elif isinstance(out, LoadVector):
                lv_sends += 1

        if check_invariants and node_total + in_flight != total0:
            raise InvariantViolation(
                f"load not conserved at t={now:g}: nodes {node_total} + in flight {in_flight} != {total0}"
            )

    live = live_states()
    if live:
        raise NonQuiescence("event queue drained with live actors", live, events, now)
    if open_xfer:
        raise InvariantViolation(f"transfers never acknowledged: {sorted(open_xfer)}")

    return RoundResult(
        topology=topology,
        thresholds=t,
        initial_loads=[int(x) for x in initial_loads],
        final_loads=[s.load for s in nodes],
        counts=counts,
        token_sends=token_sends,
        token_hops=token_hops,
        token_drops=sum(s.dropped for s in coords.values()),
        circuits=sum(s.circuits for s in coords.values()),
        loadvector_sends=lv_sends,
        sim_time=now,
        events=events,
        transfers=transfers,
        trace=trace,
        knowledge_time=None if first_token is None or last_lv is None else last_lv - first_token,
    )

"""Node and coordinator state machines.

Both machines are driven one event at a time.  :func:`node_step` is pure and
returns a fresh :class:`NodeState`; :func:`coordinator_step` updates the
(larger) :class:`CoordinatorState` in place and returns it, which keeps the
simulator's inner loop cheap.  Any (state, message) pair outside the
transition tables raises :class:`ProtocolError` rather than being dropped.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field, replace

from .loads import Thresholds
from .messages import (
    Addr, CoordLoad, End, LoadVector, Message, NodeAck, NodeLoad, Poll,
    StateReport, Timeout, Token, XAck, XferCmd, XLoad, coord, node,
)
from .planner import global_balance_plan, local_balance_plan, receiver_assignment, sender_assignment


class ProtocolError(RuntimeError):
    def __init__(self, actor: str, state: str, msg: Message | str, detail: str = ""):
        self.actor = actor
        self.state = state
        self.variant = msg if isinstance(msg, str) else msg.kind
        text = f"{actor}: unexpected {self.variant} in state {state}"
        if detail:
            text += f" ({detail})"
        super().__init__(text)


class NodeMode(str, enum.Enum):
    IDLE = "IDLE"
    WAIT_XFER = "WAIT_XFER"
    WAIT_LD = "WAIT_LD"
    WAIT_ACK = "WAIT_ACK"


class CoordMode(str, enum.Enum):
    IDLE = "IDLE"
    WAIT_POLL = "WAIT_POLL"
    WAIT_XFER_MES = "WAIT_XFER_MES"
    WAIT_LD = "WAIT_LD"
    WAIT_XACK = "WAIT_XACK"
    WAIT_XLD = "WAIT_XLD"
    WAIT_INACK = "WAIT_INACK"


# --------------------------------------------------------------------------
# node

@dataclass(frozen=True)
class NodeState:
    node_id: int
    coordinator: int
    load: int
    mode: NodeMode = NodeMode.IDLE
    pending: tuple[XferCmd, ...] = ()
    current: XferCmd | None = None

    @property
    def me(self) -> Addr:
        return node(self.node_id)


def _execute(s: NodeState, cmd: XferCmd) -> tuple[NodeState, Message]:
    if cmd.amount > s.load:
        raise ProtocolError(f"node {s.node_id}", s.mode.value, cmd,
                            f"asked to ship {cmd.amount} with load {s.load}")
    if cmd.remote:
        out = CoordLoad(src=s.me, dst=coord(s.coordinator), amount=cmd.amount, dest_cluster=cmd.dest)
    else:
        out = NodeLoad(src=s.me, dst=node(cmd.dest), amount=cmd.amount)
    return replace(s, load=s.load - cmd.amount, mode=NodeMode.WAIT_ACK, current=cmd), out


def node_step(s: NodeState, msg: Message, t: Thresholds) -> tuple[NodeState, list[Message]]:
    mode = s.mode
    if mode is NodeMode.IDLE:
        if isinstance(msg, Poll):
            report = StateReport(src=s.me, dst=coord(s.coordinator), load=s.load)
            if s.load > t.medium_max:
                nxt = NodeMode.WAIT_XFER
            elif s.load == t.medium_max:
                nxt = NodeMode.IDLE
            else:
                nxt = NodeMode.WAIT_LD
            return replace(s, mode=nxt), [report]
        if isinstance(msg, End):
            # End is multicast to every member, including those already IDLE
            return s, []
    elif mode is NodeMode.WAIT_LD:
        if isinstance(msg, NodeLoad):
            ack = NodeAck(src=s.me, dst=msg.src, amount=msg.amount, local=msg.src[0] == "N")
            return replace(s, load=s.load + msg.amount), [ack]
        if isinstance(msg, End):
            return replace(s, mode=NodeMode.IDLE), []
    elif mode is NodeMode.WAIT_XFER:
        if isinstance(msg, XferCmd):
            s2, out = _execute(s, msg)
            return s2, [out]
        if isinstance(msg, End):
            return replace(s, mode=NodeMode.IDLE), []
    elif mode is NodeMode.WAIT_ACK:
        if isinstance(msg, XferCmd):
            return replace(s, pending=s.pending + (msg,)), []
        if isinstance(msg, NodeAck):
            outs: list[Message] = []
            if msg.src[0] == "N":
                # local handshake done; the coordinator holds End until it hears this
                outs.append(NodeAck(src=s.me, dst=coord(s.coordinator), amount=msg.amount, local=True))
            if s.pending:
                s2, out = _execute(replace(s, pending=s.pending[1:]), s.pending[0])
                return s2, outs + [out]
            return replace(s, mode=NodeMode.WAIT_XFER, current=None), outs
    raise ProtocolError(f"node {s.node_id}", mode.value, msg)


# --------------------------------------------------------------------------
# token handling

def token_merge(own_id: int, own_total: int, incoming: Token, smallest_seen: int | None,
                to: Addr) -> Token | None:
    """Append this cluster's entry to ``incoming`` and address it to ``to``.

    Returns ``None`` (drop) when a token with a smaller originator has
    already been originated or forwarded here.
    """
    if incoming.originator == own_id:
        raise ValueError("token_merge called with the coordinator's own token")
    if smallest_seen is not None and incoming.originator > smallest_seen:
        return None
    if any(c == own_id for c, _ in incoming.entries):
        raise ProtocolError(f"coordinator {own_id}", "-", incoming, "token already holds own entry")
    return Token(src=coord(own_id), dst=to, originator=incoming.originator,
                 entries=incoming.entries + ((own_id, own_total),))


# --------------------------------------------------------------------------
# coordinator

@dataclass
class CoordinatorState:
    cid: int
    members: tuple[int, ...]
    ring: tuple[int, ...]
    caps: dict[int, int]
    thresholds: Thresholds
    mode: CoordMode = CoordMode.IDLE
    activated: bool = False
    member_loads: dict[int, int] = field(default_factory=dict)
    awaiting_reports: set[int] = field(default_factory=set)
    token_received: bool = False
    held_token: Token | None = None
    smallest_seen: int | None = None
    cluster_total: int = 0
    local_pending: int = 0
    in_global: bool = False
    outgoing: deque = field(default_factory=deque)
    current_out: tuple[int, int, int] | None = None
    expected_in: int = 0
    received_in: int = 0
    inbound: deque = field(default_factory=deque)
    current_in: XLoad | None = None
    in_acks_pending: int = 0
    # accounting read by the simulator
    originated: int = 0
    forwarded: int = 0
    dropped: int = 0
    circuits: int = 0

    @property
    def me(self) -> Addr:
        return coord(self.cid)

    @property
    def ring_next(self) -> int:
        i = self.ring.index(self.cid)
        return self.ring[(i + 1) % len(self.ring)]

    @property
    def capacity(self) -> int:
        return self.caps[self.cid]

    def _err(self, msg, detail=""):
        return ProtocolError(f"coordinator {self.cid}", self.mode.value, msg, detail)


def _multicast(s: CoordinatorState, cls) -> list[Message]:
    return [cls(src=s.me, dst=node(m)) for m in s.members]


def _start_poll(s: CoordinatorState) -> list[Message]:
    s.activated = True
    s.mode = CoordMode.WAIT_POLL
    s.awaiting_reports = set(s.members)
    s.member_loads = {}
    return _multicast(s, Poll)


def _forward(s: CoordinatorState, tok: Token) -> list[Message]:
    out = token_merge(s.cid, s.cluster_total, tok, s.smallest_seen, coord(s.ring_next))
    assert out is not None
    s.smallest_seen = tok.originator
    s.forwarded += 1
    s.held_token = None
    s.mode = CoordMode.WAIT_XFER_MES
    return [out]


def _finish(s: CoordinatorState) -> list[Message]:
    """Global work is over: wait for outstanding local acks, else End."""
    if s.local_pending > 0:
        s.mode = CoordMode.WAIT_INACK
        return []
    s.mode = CoordMode.IDLE
    s.token_received = False
    s.held_token = None
    s.in_global = False
    s.current_out = None
    s.current_in = None
    s.expected_in = s.received_in = 0
    return _multicast(s, End)


def _local_wait(s: CoordinatorState) -> bool:
    return s.mode is CoordMode.WAIT_INACK and s.in_acks_pending == 0


def _on_reports_complete(s: CoordinatorState) -> list[Message]:
    t = s.thresholds
    loads = [s.member_loads[m] for m in s.members]
    plan = local_balance_plan(loads, t, ids=s.members)
    out: list[Message] = [
        XferCmd(src=s.me, dst=node(tr.src), dest=tr.dst, amount=tr.amount) for tr in plan.transfers
    ]
    s.local_pending += len(plan.transfers)
    s.member_loads = dict(zip(s.members, plan.final_loads))
    s.cluster_total = sum(plan.final_loads)

    held = s.held_token
    if s.cluster_total > s.capacity:
        if held is not None and held.originator < s.cid:
            # keep the smaller-originator token travelling, suppress our own
            out += _forward(s, held)
        else:
            if held is not None:
                s.dropped += 1
                s.held_token = None
            s.smallest_seen = s.cid
            s.originated += 1
            out.append(Token(src=s.me, dst=coord(s.ring_next), originator=s.cid,
                             entries=((s.cid, s.cluster_total),)))
            s.mode = CoordMode.WAIT_XFER_MES
    elif held is not None:
        out += _forward(s, held)
    else:
        out += _finish(s)
    return out


def _on_token(s: CoordinatorState, tok: Token) -> list[Message]:
    if tok.originator == s.cid:
        if s.mode is not CoordMode.WAIT_XFER_MES:
            raise s._err(tok, "own token returned outside WAIT_XFER_MES")
        have = {c for c, _ in tok.entries}
        if have != set(s.ring):
            raise s._err(tok, f"completed token covers {sorted(have)}, ring is {sorted(s.ring)}")
        s.circuits += 1
        entries = tuple(sorted(tok.entries))
        return [LoadVector(src=s.me, dst=coord(c), entries=entries) for c in s.ring]

    if s.smallest_seen is not None and tok.originator > s.smallest_seen:
        s.dropped += 1
        return []

    mode = s.mode
    if mode is CoordMode.IDLE:
        out = _start_poll(s)
        s.token_received = True
        s.held_token = tok
        s.smallest_seen = tok.originator
        return out
    if mode is CoordMode.WAIT_POLL:
        if s.held_token is not None:
            s.dropped += 1  # the larger of the two held tokens dies here
        s.token_received = True
        s.held_token = tok
        s.smallest_seen = tok.originator
        return []
    if mode is CoordMode.WAIT_XFER_MES or (_local_wait(s) and not s.in_global):
        return _forward(s, tok)
    raise s._err(tok, "live token during the global phase")


def _issue_next_out(s: CoordinatorState) -> list[Message]:
    donor, dest, amount = s.outgoing.popleft()
    s.member_loads[donor] -= amount
    s.current_out = (donor, dest, amount)
    s.mode = CoordMode.WAIT_LD
    return [XferCmd(src=s.me, dst=node(donor), dest=dest, amount=amount, remote=True)]


def _accept_xload(s: CoordinatorState, x: XLoad) -> list[Message]:
    loads = [s.member_loads[m] for m in s.members]
    assignment = receiver_assignment(loads, s.thresholds, x.amount, node_ids=s.members)
    for nid, amount in assignment:
        s.member_loads[nid] += amount
    s.current_in = x
    s.in_acks_pending = len(assignment)
    s.mode = CoordMode.WAIT_INACK
    return [NodeLoad(src=s.me, dst=node(nid), amount=amount) for nid, amount in assignment]


def _on_load_vector(s: CoordinatorState, lv: LoadVector) -> list[Message]:
    entries = sorted(lv.entries)
    ids = [c for c, _ in entries]
    plan = global_balance_plan([v for _, v in entries], [s.caps[c] for c in ids], ids=ids)
    outgoing = [(tr.dst, tr.amount) for tr in plan.transfers if tr.src == s.cid]
    incoming = sum(tr.amount for tr in plan.transfers if tr.dst == s.cid)
    s.in_global = True
    if outgoing:
        loads = [s.member_loads[m] for m in s.members]
        s.outgoing = deque(sender_assignment(loads, s.thresholds, outgoing, node_ids=s.members))
        return _issue_next_out(s)
    if incoming:
        s.expected_in = incoming
        s.received_in = 0
        s.mode = CoordMode.WAIT_XLD
        if s.inbound:
            return _accept_xload(s, s.inbound.popleft())
        return []
    return _finish(s)


def coordinator_step(s: CoordinatorState, msg: Message) -> tuple[CoordinatorState, list[Message]]:
    mode = s.mode

    if isinstance(msg, Timeout):
        # a coordinator already woken by a token this round ignores its timer
        if mode is CoordMode.IDLE and not s.activated:
            return s, _start_poll(s)
        return s, []

    if isinstance(msg, Token):
        return s, _on_token(s, msg)

    if isinstance(msg, NodeAck) and msg.local:
        if mode is CoordMode.IDLE or s.local_pending == 0:
            raise s._err(msg, "no local transfer outstanding")
        s.local_pending -= 1
        if _local_wait(s) and s.local_pending == 0:
            return s, _finish(s)
        return s, []

    if isinstance(msg, XLoad):
        if mode is CoordMode.WAIT_XLD:
            return s, _accept_xload(s, msg)
        if mode is CoordMode.IDLE:
            raise s._err(msg)
        # one inbound transfer at a time; later arrivals wait their turn
        s.inbound.append(msg)
        return s, []

    if mode is CoordMode.WAIT_POLL and isinstance(msg, StateReport):
        m = msg.src[1]
        if m not in s.awaiting_reports:
            raise s._err(msg, f"duplicate or foreign report from {m}")
        s.awaiting_reports.discard(m)
        s.member_loads[m] = msg.load
        if s.awaiting_reports:
            return s, []
        return s, _on_reports_complete(s)

    if mode is CoordMode.WAIT_XFER_MES and isinstance(msg, LoadVector):
        return s, _on_load_vector(s, msg)

    if mode is CoordMode.WAIT_LD and isinstance(msg, CoordLoad):
        donor, dest, amount = s.current_out
        if msg.src != node(donor) or msg.amount != amount or msg.dest_cluster != dest:
            raise s._err(msg, f"expected {amount} from node {donor} for cluster {dest}")
        s.mode = CoordMode.WAIT_XACK
        return s, [XLoad(src=s.me, dst=coord(dest), amount=amount, sender_cluster=s.cid)]

    if mode is CoordMode.WAIT_XACK and isinstance(msg, XAck):
        donor, _, amount = s.current_out
        out: list[Message] = [NodeAck(src=s.me, dst=node(donor), amount=amount)]
        s.current_out = None
        if s.outgoing:
            return s, out + _issue_next_out(s)
        return s, out + _finish(s)

    if mode is CoordMode.WAIT_INACK and isinstance(msg, NodeAck) and s.in_acks_pending > 0:
        s.in_acks_pending -= 1
        if s.in_acks_pending:
            return s, []
        x = s.current_in
        s.current_in = None
        s.received_in += x.amount
        out = [XAck(src=s.me, dst=coord(x.sender_cluster), amount=x.amount)]
        if s.received_in < s.expected_in:
            s.mode = CoordMode.WAIT_XLD
            if s.inbound:
                out += _accept_xload(s, s.inbound.popleft())
            return s, out
        if s.received_in > s.expected_in:
            raise s._err(msg, f"received {s.received_in}, planned {s.expected_in}")
        return s, out + _finish(s)

    raise s._err(msg)


def is_idle(state: NodeState | CoordinatorState) -> bool:
    return state.mode.value == "IDLE"

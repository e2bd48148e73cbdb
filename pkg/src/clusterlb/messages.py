"""Wire vocabulary exchanged by nodes and coordinators.

Endpoints are ``(role, id)`` pairs: ``("N", i)`` is the node process of
actor ``i`` and ``("C", c)`` the coordinator process of the cluster whose
first actor is ``c``.  A coordinator actor therefore owns two endpoints.

Paper names, for reference: Poll = Coord_Poll, StateReport = Node_State,
XferCmd = Coord_Xfer, NodeLoad = Node_Load / In_Load (towards a node),
CoordLoad = In_Load (donor to its coordinator), XLoad = X_Load,
NodeAck = Xfer_ACK / In_ACK, XAck = X_ACK, Token = Xfer_Token,
LoadVector = Xfer_List, End = End.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

Addr = tuple[str, int]


def node(i: int) -> Addr:
    return ("N", i)


def coord(c: int) -> Addr:
    return ("C", c)


def fmt_addr(a: Addr) -> str:
    return f"{a[0]}{a[1]}"


@dataclass(frozen=True, slots=True)
class Message:
    src: Addr
    dst: Addr
    kind: ClassVar[str] = "Message"
    # load-bearing variants pay the payload transfer time on top of hop latency
    carries_load: ClassVar[bool] = False

    def summary(self) -> str:
        return ""


@dataclass(frozen=True, slots=True)
class Timeout(Message):
    """Coordinator timer expiry; delivered by the simulator, never counted."""

    kind: ClassVar[str] = "Timeout"


@dataclass(frozen=True, slots=True)
class Poll(Message):
    kind: ClassVar[str] = "Poll"


@dataclass(frozen=True, slots=True)
class StateReport(Message):
    load: int
    kind: ClassVar[str] = "NodeState"

    def summary(self):
        return f"load={self.load}"


@dataclass(frozen=True, slots=True)
class XferCmd(Message):
    """Ship ``amount`` to node ``dest`` (local) or to cluster ``dest`` (remote)."""

    dest: int
    amount: int
    remote: bool = False
    kind: ClassVar[str] = "XferCmd"

    def summary(self):
        where = f"cluster={self.dest}" if self.remote else f"node={self.dest}"
        return f"{where} amount={self.amount}"


@dataclass(frozen=True, slots=True)
class NodeLoad(Message):
    amount: int
    kind: ClassVar[str] = "NodeLoad"
    carries_load: ClassVar[bool] = True

    def summary(self):
        return f"amount={self.amount}"


@dataclass(frozen=True, slots=True)
class CoordLoad(Message):
    amount: int
    dest_cluster: int
    kind: ClassVar[str] = "CoordLoad"
    carries_load: ClassVar[bool] = True

    def summary(self):
        return f"amount={self.amount} dest_cluster={self.dest_cluster}"


@dataclass(frozen=True, slots=True)
class XLoad(Message):
    amount: int
    sender_cluster: int
    kind: ClassVar[str] = "XLoad"
    carries_load: ClassVar[bool] = True

    def summary(self):
        return f"amount={self.amount} sender_cluster={self.sender_cluster}"


@dataclass(frozen=True, slots=True)
class NodeAck(Message):
    """Delivery acknowledgement.

    ``local`` marks acks that close an intra-cluster node-to-node transfer;
    the donor also uses a local ack to report completion to its coordinator.
    """

    amount: int = 0
    local: bool = False
    kind: ClassVar[str] = "NodeAck"

    def summary(self):
        return f"amount={self.amount}" + (" local" if self.local else "")


@dataclass(frozen=True, slots=True)
class XAck(Message):
    amount: int = 0
    kind: ClassVar[str] = "XAck"

    def summary(self):
        return f"amount={self.amount}"


@dataclass(frozen=True, slots=True)
class Token(Message):
    originator: int
    entries: tuple[tuple[int, int], ...]
    kind: ClassVar[str] = "Token"

    def __post_init__(self):
        seen = [c for c, _ in self.entries]
        if len(seen) != len(set(seen)):
            raise ValueError(f"token carries duplicate cluster entries: {seen}")
        if self.originator not in seen:
            raise ValueError(f"token from {self.originator} lacks the originator's entry")

    def summary(self):
        body = ",".join(f"{c}:{v}" for c, v in self.entries)
        return f"orig={self.originator} [{body}]"


@dataclass(frozen=True, slots=True)
class LoadVector(Message):
    entries: tuple[tuple[int, int], ...]
    kind: ClassVar[str] = "LoadVector"

    def summary(self):
        return "[" + ",".join(f"{c}:{v}" for c, v in self.entries) + "]"


@dataclass(frozen=True, slots=True)
class End(Message):
    kind: ClassVar[str] = "End"


VARIANTS = ("Poll", "NodeState", "XferCmd", "NodeLoad", "CoordLoad", "XLoad",
            "NodeAck", "XAck", "Token", "LoadVector", "End")

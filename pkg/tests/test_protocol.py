import pytest

from clusterlb.loads import Thresholds
from clusterlb.messages import (
    CoordLoad, End, LoadVector, NodeAck, NodeLoad, Poll, StateReport, Timeout, Token, XAck, XferCmd,
    XLoad, coord, node,
)
from clusterlb.protocol import (
    CoordinatorState, CoordMode, NodeMode, NodeState, ProtocolError, coordinator_step, is_idle,
    node_step, token_merge,
)

T = Thresholds(5, 10)
C0 = coord(0)


def poll(i):
    return Poll(src=C0, dst=node(i))


# -- nodes ----------------------------------------------------------------

@pytest.mark.parametrize("load,mode", [(15, NodeMode.WAIT_XFER), (10, NodeMode.IDLE), (7, NodeMode.WAIT_LD)])
def test_poll_reports_and_picks_mode(load, mode):
    s, out = node_step(NodeState(1, 0, load), poll(1), T)
    assert s.mode is mode
    assert out == [StateReport(src=node(1), dst=C0, load=load)]


def test_donor_ships_and_waits_for_ack():
    s, _ = node_step(NodeState(1, 0, 15), poll(1), T)
    s, out = node_step(s, XferCmd(src=C0, dst=node(1), dest=2, amount=3), T)
    assert s.load == 12 and s.mode is NodeMode.WAIT_ACK
    assert out == [NodeLoad(src=node(1), dst=node(2), amount=3)]
    s, out = node_step(s, NodeAck(src=node(2), dst=node(1), amount=3, local=True), T)
    assert s.mode is NodeMode.WAIT_XFER
    assert out == [NodeAck(src=node(1), dst=C0, amount=3, local=True)]
    s, out = node_step(s, End(src=C0, dst=node(1)), T)
    assert is_idle(s) and out == []


def test_remote_command_routes_through_coordinator():
    s, _ = node_step(NodeState(1, 0, 15), poll(1), T)
    s, out = node_step(s, XferCmd(src=C0, dst=node(1), dest=18, amount=4, remote=True), T)
    assert out == [CoordLoad(src=node(1), dst=C0, amount=4, dest_cluster=18)]
    # the coordinator's ack is not a local handshake, so nothing is relayed
    s, out = node_step(s, NodeAck(src=C0, dst=node(1), amount=4), T)
    assert out == [] and s.mode is NodeMode.WAIT_XFER


def test_commands_queue_while_waiting_for_ack():
    s, _ = node_step(NodeState(1, 0, 20), poll(1), T)
    s, _ = node_step(s, XferCmd(src=C0, dst=node(1), dest=2, amount=3), T)
    s, out = node_step(s, XferCmd(src=C0, dst=node(1), dest=3, amount=2), T)
    assert out == [] and len(s.pending) == 1
    s, out = node_step(s, NodeAck(src=node(2), dst=node(1), amount=3, local=True), T)
    assert out[1] == NodeLoad(src=node(1), dst=node(3), amount=2)
    assert s.load == 15 and s.mode is NodeMode.WAIT_ACK


def test_recipient_acks_each_delivery():
    s, _ = node_step(NodeState(2, 0, 7), poll(2), T)
    s, out = node_step(s, NodeLoad(src=node(1), dst=node(2), amount=3), T)
    assert s.load == 10
    assert out == [NodeAck(src=node(2), dst=node(1), amount=3, local=True)]
    s, out = node_step(s, NodeLoad(src=C0, dst=node(2), amount=1), T)
    assert out == [NodeAck(src=node(2), dst=C0, amount=1, local=False)]


def test_end_at_idle_is_ignored():
    s = NodeState(1, 0, 10)
    assert node_step(s, End(src=C0, dst=node(1)), T) == (s, [])


@pytest.mark.parametrize("state,msg", [
    (NodeState(1, 0, 10), NodeLoad(src=node(2), dst=node(1), amount=1)),
    (NodeState(1, 0, 10, mode=NodeMode.WAIT_LD), poll(1)),
    (NodeState(1, 0, 15, mode=NodeMode.WAIT_XFER), NodeAck(src=node(2), dst=node(1))),
])
def test_unexpected_messages_raise(state, msg):
    with pytest.raises(ProtocolError) as e:
        node_step(state, msg, T)
    assert e.value.variant == msg.kind


def test_overdraw_raises():
    s = NodeState(1, 0, 12, mode=NodeMode.WAIT_XFER)
    with pytest.raises(ProtocolError):
        node_step(s, XferCmd(src=C0, dst=node(1), dest=2, amount=13), T)


# -- token merge ----------------------------------------------------------

def tok(orig, entries, src=0, dst=6):
    return Token(src=coord(src), dst=coord(dst), originator=orig, entries=tuple(entries))


def test_merge_appends_own_entry():
    out = token_merge(6, 60, tok(0, [(0, 64)]), None, coord(12))
    assert out.entries == ((0, 64), (6, 60))
    assert out.originator == 0 and out.dst == coord(12) and out.src == coord(6)


def test_merge_drops_larger_originator():
    assert token_merge(0, 64, tok(12, [(12, 68), (18, 48)], 18, 0), 0, coord(6)) is None


def test_merge_passes_smaller_originator():
    out = token_merge(12, 68, tok(0, [(0, 64), (6, 60)], 6, 12), 12, coord(18))
    assert out.entries[-1] == (12, 68)


def test_merge_rejects_duplicate_own_entry():
    with pytest.raises(ProtocolError):
        token_merge(6, 60, tok(0, [(0, 64), (6, 60)]), None, coord(12))


def test_token_validation():
    with pytest.raises(ValueError):
        tok(0, [(6, 1)])
    with pytest.raises(ValueError):
        tok(0, [(0, 1), (0, 2)])


# -- coordinator ----------------------------------------------------------

def make_coord(cid=0, members=(0, 1, 2), ring=(0, 3), size=3):
    caps = {c: 10 * size for c in ring}
    return CoordinatorState(cid=cid, members=tuple(members), ring=tuple(ring), caps=caps, thresholds=T)


def report(s, loads):
    outs = []
    for m, x in zip(s.members, loads):
        _, out = coordinator_step(s, StateReport(src=node(m), dst=s.me, load=x))
        outs += out
    return outs


def test_timeout_polls_members():
    s = make_coord()
    _, out = coordinator_step(s, Timeout(src=C0, dst=C0))
    assert s.mode is CoordMode.WAIT_POLL
    assert [m.dst for m in out] == [node(0), node(1), node(2)]
    assert all(isinstance(m, Poll) for m in out)


def test_balanced_cluster_ends_round():
    s = make_coord()
    coordinator_step(s, Timeout(src=C0, dst=C0))
    out = report(s, [10, 7, 9])
    assert s.mode is CoordMode.IDLE
    assert [type(m) for m in out] == [End] * 3


def test_local_only_round_waits_for_local_acks():
    s = make_coord()
    coordinator_step(s, Timeout(src=C0, dst=C0))
    out = report(s, [13, 7, 9])
    assert out == [XferCmd(src=C0, dst=node(0), dest=1, amount=3)]
    assert s.mode is CoordMode.WAIT_INACK
    _, out = coordinator_step(s, NodeAck(src=node(0), dst=C0, amount=3, local=True))
    assert s.mode is CoordMode.IDLE and len(out) == 3


def test_high_cluster_originates_token():
    s = make_coord()
    coordinator_step(s, Timeout(src=C0, dst=C0))
    out = report(s, [15, 12, 10])
    assert out == [Token(src=C0, dst=coord(3), originator=0, entries=((0, 37),))]
    assert s.mode is CoordMode.WAIT_XFER_MES and s.originated == 1


def test_full_remote_shipment_cycle():
    s = make_coord()
    coordinator_step(s, Timeout(src=C0, dst=C0))
    report(s, [15, 12, 10])
    _, out = coordinator_step(s, Token(src=coord(3), dst=C0, originator=0, entries=((0, 37), (3, 20))))
    assert [m.dst for m in out] == [C0, coord(3)] and s.circuits == 1
    _, out = coordinator_step(s, out[0])
    assert out == [XferCmd(src=C0, dst=node(0), dest=3, amount=5, remote=True)]
    _, out = coordinator_step(s, CoordLoad(src=node(0), dst=C0, amount=5, dest_cluster=3))
    assert out == [XLoad(src=C0, dst=coord(3), amount=5, sender_cluster=0)]
    _, out = coordinator_step(s, XAck(src=coord(3), dst=C0, amount=5))
    assert out[0] == NodeAck(src=C0, dst=node(0), amount=5)
    assert out[1:] == [XferCmd(src=C0, dst=node(1), dest=3, amount=2, remote=True)]


def test_receiving_cluster_distributes_and_acks():
    s = make_coord(cid=3, members=(3, 4, 5))
    coordinator_step(s, Token(src=C0, dst=coord(3), originator=0, entries=((0, 37),)))
    assert s.mode is CoordMode.WAIT_POLL and s.token_received
    out = report(s, [5, 5, 10])
    assert out == [Token(src=coord(3), dst=C0, originator=0, entries=((0, 37), (3, 20)))]
    lv = LoadVector(src=C0, dst=coord(3), entries=((0, 37), (3, 20)))
    assert coordinator_step(s, lv)[1] == []
    assert s.mode is CoordMode.WAIT_XLD
    _, out = coordinator_step(s, XLoad(src=C0, dst=coord(3), amount=5, sender_cluster=0))
    assert out == [NodeLoad(src=coord(3), dst=node(3), amount=5)]
    _, out = coordinator_step(s, NodeAck(src=node(3), dst=coord(3), amount=5))
    assert out == [XAck(src=coord(3), dst=C0, amount=5)]
    assert s.mode is CoordMode.WAIT_XLD


def test_early_xload_is_deferred():
    s = make_coord(cid=3, members=(3, 4, 5))
    coordinator_step(s, Token(src=C0, dst=coord(3), originator=0, entries=((0, 37),)))
    report(s, [5, 5, 10])
    x = XLoad(src=C0, dst=coord(3), amount=5, sender_cluster=0)
    assert coordinator_step(s, x)[1] == []
    _, out = coordinator_step(s, LoadVector(src=C0, dst=coord(3), entries=((0, 37), (3, 20))))
    assert out == [NodeLoad(src=coord(3), dst=node(3), amount=5)]


def test_timeout_after_token_wake_is_ignored():
    s = make_coord(cid=3, members=(3, 4, 5))
    coordinator_step(s, Token(src=C0, dst=coord(3), originator=0, entries=((0, 37),)))
    report(s, [5, 5, 10])
    mode = s.mode
    assert coordinator_step(s, Timeout(src=coord(3), dst=coord(3)))[1] == []
    assert s.mode is mode


def test_high_coordinator_forwards_smaller_token_instead_of_own():
    s = make_coord(cid=3, members=(3, 4, 5))
    coordinator_step(s, Timeout(src=coord(3), dst=coord(3)))
    coordinator_step(s, Token(src=C0, dst=coord(3), originator=0, entries=((0, 37),)))
    out = report(s, [15, 15, 10])
    assert out == [Token(src=coord(3), dst=C0, originator=0, entries=((0, 37), (3, 40)))]
    assert s.originated == 0 and s.forwarded == 1


def test_larger_token_dropped():
    s = make_coord()
    coordinator_step(s, Timeout(src=C0, dst=C0))
    report(s, [15, 12, 10])
    out = coordinator_step(s, Token(src=coord(3), dst=C0, originator=3, entries=((3, 40),)))[1]
    assert out == [] and s.dropped == 1


def test_unexpected_coordinator_message():
    s = make_coord()
    with pytest.raises(ProtocolError):
        coordinator_step(s, XAck(src=coord(3), dst=C0, amount=1))
    with pytest.raises(ProtocolError):
        coordinator_step(s, XLoad(src=coord(3), dst=C0, amount=1, sender_cluster=3))

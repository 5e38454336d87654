import pytest
from hypothesis import given, settings, strategies as st

from planarbcast.protocol import (EMPTY, REL, SRC, FloodNode, Message, NodeState,
                                  ProtocolError, Role, StoreAllNode, check_delivery,
                                  handle_message, relay, source_info, source_start,
                                  state_size_bits)

M, X = 128, 8


def inner(node=10, neighbors=(1, 2, 3, 4), source=0, z=4):
    return NodeState.create(node, neighbors, source, z)


def test_roles():
    assert NodeState.create(0, (1, 2), 0, 4).role is Role.SOURCE
    assert NodeState.create(1, (0, 2), 0, 4).role is Role.SOURCE_NEIGHBOR
    assert inner().role is Role.INNER


def test_source_start_multicasts_to_every_neighbor():
    src = NodeState.create(0, (1, 2, 3, 4), 0, 4)
    new, sends = source_start(src, b"m0")
    assert sends == [(q, Message(SRC, b"m0")) for q in (1, 2, 3, 4)]
    assert new.delivered == b"m0" and new.stopped
    assert not src.started  # pure
    with pytest.raises(ProtocolError):
        source_start(new, b"m0")


def test_start_on_non_source_is_an_error():
    with pytest.raises(ProtocolError):
        inner().start(b"m0")


def test_source_neighbor_delivers_on_source_info():
    s = NodeState.create(1, (0, 2, 3, 4), 0, 4)
    new, sends = handle_message(s, 0, source_info(b"m"))
    assert new.delivered == b"m" and new.stopped
    assert sends == [(q, relay(b"m")) for q in (0, 2, 3, 4)]
    # a second source message is ignored
    again, more = handle_message(new, 0, source_info(b"x"))
    assert again.delivered == b"m" and more == []


def test_source_neighbor_ignores_forged_source_claims():
    s = NodeState.create(1, (0, 2, 3, 4), 0, 4)
    new, sends = handle_message(s, 2, source_info(b"evil"))
    assert new == s and sends == []
    new, sends = handle_message(s, 2, relay(b"evil"))
    assert new == s and sends == []


def test_inner_stores_and_relays():
    s = inner()
    new, sends = handle_message(s, 1, relay(b"m"))
    assert new.rec == {1: (b"m", EMPTY)}
    assert sends == [(q, relay(b"m", {1})) for q in (1, 2, 3, 4)]
    assert s.rec == {}  # input untouched


def test_oversized_visited_set_dropped():
    new, sends = handle_message(inner(), 1, relay(b"m", {5, 6}))
    assert new.rec == {} and sends == []


def test_sender_in_visited_dropped():
    new, sends = handle_message(inner(), 1, relay(b"m", {1}))
    assert new.rec == {} and sends == []


def test_inner_ignores_source_info():
    new, sends = handle_message(inner(), 1, source_info(b"m"))
    assert new.rec == {} and sends == []


def test_delivery_rule():
    s = inner()
    s, _ = handle_message(s, 1, relay(b"m"))
    s, sends = handle_message(s, 2, relay(b"m", {3}))
    assert s.delivered == b"m" and s.stopped
    assert sends[-4:] == [(q, relay(b"m")) for q in (1, 2, 3, 4)]
    frozen, out = handle_message(s, 3, relay(b"z"))
    assert frozen == s and out == []


def test_overwrite_keeps_last_tuple_per_neighbor():
    s = inner(z=5)
    s, _ = handle_message(s, 1, relay(b"a", {7}))
    s, _ = handle_message(s, 1, relay(b"b", {7, 8}))
    assert s.rec == {1: (b"b", frozenset({7, 8}))}


def test_own_id_in_visited_accepted():
    s, sends = handle_message(inner(node=10), 1, relay(b"m", {10}))
    assert s.rec[1] == (b"m", frozenset({10}))


def test_unknown_sender_is_a_harness_error():
    with pytest.raises(ProtocolError):
        handle_message(inner(), 99, relay(b"m"))


@pytest.mark.parametrize("rec,expected", [
    ({1: (b"m", EMPTY), 2: (b"m", frozenset({3}))}, b"m"),
    ({1: (b"m", EMPTY)}, None),
    ({1: (b"m", EMPTY), 2: (b"m", frozenset({1}))}, None),
    ({1: (b"m", EMPTY), 2: (b"x", frozenset({3}))}, None),
    # two qualifying infos: the smaller one wins
    ({1: (b"b", EMPTY), 2: (b"b", EMPTY), 3: (b"a", EMPTY), 4: (b"a", EMPTY)}, b"a"),
])
def test_check_delivery(rec, expected):
    s = inner()
    s.rec = dict(rec)
    assert check_delivery(s) == expected


def test_state_size_bits():
    s = inner()
    assert state_size_bits(s, M, X) == 0
    s.rec = {1: (b"m", frozenset({3}))}
    assert state_size_bits(s, M, X) == M + X
    z, y = 6, 4
    s.rec = {q: (b"m", frozenset(range(20, 20 + z - 3))) for q in (1, 2, 3, 4)}
    assert state_size_bits(s, M, X) <= y * (M + z * X)


def test_wire_encoding_roundtrip():
    for msg in (source_info(b"\x00\xff"), relay(b"m"), relay(b"m", {12, 3, 7})):
        assert Message.decode(msg.encode()) == msg
    assert relay(b"m0", {7, 3}).encode() == "REL 6d30 [3,7]"
    assert source_info(b"m0").encode() == "SRC 6d30"
    with pytest.raises(ValueError):
        Message.decode("XYZ 00")


def test_store_all_keeps_everything():
    s = StoreAllNode.create(10, (1, 2, 3, 4), 0, 4)
    for i in range(50):
        s.receive(1, relay(f"f{i}".encode()))
    assert s.n_entries == 50
    assert s.bits(M, X) == 50 * M
    s.receive(2, relay(b"f3", {7}))
    assert s.delivered == b"f3"


def test_flood_node_delivers_first_message():
    f = FloodNode.create(10, (1, 2), 0, 4)
    sends = f.receive(1, relay(b"x", {1, 2, 3}))
    assert f.delivered == b"x" and len(sends) == 2


node_ids = st.integers(0, 12)
messages = st.builds(
    Message, st.sampled_from([SRC, REL]), st.binary(min_size=1, max_size=3),
    st.frozensets(node_ids, max_size=4))


@settings(max_examples=300, deadline=None)
@given(st.integers(3, 6), st.lists(st.tuples(st.sampled_from([1, 2, 3, 4, 5]), messages),
                                    max_size=30))
def test_acceptance_filter_under_arbitrary_input(z, inputs):
    s = NodeState.create(10, (1, 2, 3, 4, 5), 0, z)
    delivered = None
    for sender, msg in inputs:
        was_stopped = s.stopped
        before = (dict(s.rec), s.delivered)
        sends = s.receive(sender, msg)
        for q, (m, visited) in s.rec.items():
            assert q not in visited and len(visited) <= z - 3
        assert len(s.rec) <= 5
        if was_stopped:
            assert sends == [] and (dict(s.rec), s.delivered) == before
        if delivered is not None:
            assert s.delivered == delivered
        delivered = s.delivered
        # an empty relay is only emitted together with a delivery
        if any(m.kind == REL and not m.visited for _, m in sends):
            assert s.delivered is not None
    assert s.stopped == (s.delivered is not None)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([1, 2, 3, 4]), messages)
def test_handle_message_is_pure(sender, msg):
    s = inner()
    s.rec = {1: (b"m", EMPTY)}
    snapshot = (dict(s.rec), s.delivered, s.stopped)
    a = handle_message(s, sender, msg)
    b = handle_message(s, sender, msg)
    assert a == b
    assert (dict(s.rec), s.delivered, s.stopped) == snapshot

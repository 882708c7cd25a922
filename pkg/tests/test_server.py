import time

import pytest

from gridmesh import client
from gridmesh.client import Binding, UnknownGroup, connect
from gridmesh.values import VDouble, VInt


def test_join_creates_group(srv):
    with connect(srv.tcp_binding) as h:
        assert h.list_groups() == []
        h.join(["g1"])
        assert h.list_groups() == [("g1", 1, 0)]


def test_join_idempotent(srv):
    with connect(srv.tcp_binding) as h:
        h.join(["g1", "g1"])
        h.join(["g1"])
        assert h.list_groups() == [("g1", 1, 0)]


def test_two_members_share_table(srv):
    with connect(srv.tcp_binding) as a, connect(srv.tcp_binding) as b:
        a.join(["g1"])
        b.join(["g1"])
        assert a.list_groups() == [("g1", 2, 0)]


def test_group_gc_on_last_leave(srv):
    with connect(srv.tcp_binding) as h:
        h.join(["g1"])
        h.leave(["g1"])
        assert h.list_groups() == []


def test_leave_unjoined_is_noop(srv):
    with connect(srv.tcp_binding) as h:
        h.leave(["nope"])
        assert h.list_groups() == []


def test_send_vs_broadcast_visibility(srv):
    # A,B in g1; C in g2: sends to g1 reach B only, broadcasts reach both
    with connect(srv.tcp_binding) as a, connect(srv.tcp_binding) as b, connect(
        srv.tcp_binding
    ) as c:
        a.join(["g1"])
        b.join(["g1"])
        c.join(["g2"])
        a.send_r(["g1"], "x", VDouble(1.5))
        assert dict(b.sync_r()) == {"x": VDouble(1.5)}
        assert c.sync_r() == []
        a.broadcast_r("y", VInt(3))
        assert dict(b.sync_r()) == {"y": VInt(3)}
        assert dict(c.sync_r()) == {"y": VInt(3)}


def test_send_unknown_group_atomic(srv):
    with connect(srv.tcp_binding) as a, connect(srv.tcp_binding) as b:
        a.join(["g1"])
        b.join(["g1"])
        with pytest.raises(UnknownGroup) as ei:
            a.send_r(["g1", "gx"], "x", VInt(1))
        assert ei.value.groups == ["gx"]
        assert b.sync_r() == []  # nothing was written to g1


def test_last_write_wins(srv):
    with connect(srv.tcp_binding) as a, connect(srv.tcp_binding) as b:
        a.join(["g1"])
        b.join(["g1"])
        a.send_r(["g1"], "x", VInt(1))
        a.send_r(["g1"], "x", VInt(2))
        assert dict(b.sync_r()) == {"x": VInt(2)}


def test_self_authored_excluded(srv):
    with connect(srv.tcp_binding) as a:
        a.join(["g1"])
        a.send_r(["g1"], "x", VInt(1))
        assert a.sync_r() == []


def test_late_joiner_catches_up(srv):
    with connect(srv.tcp_binding) as a:
        a.join(["g1"])
        a.send_r(["g1"], "x", VInt(2))
        with connect(srv.tcp_binding) as b:
            b.join(["g1"])
            assert dict(b.sync_r()) == {"x": VInt(2)}


def test_broadcast_skips_later_groups(srv):
    with connect(srv.tcp_binding) as a, connect(srv.tcp_binding) as b:
        a.join(["g1"])
        a.broadcast_r("x", VInt(1))
        b.join(["g2"])
        assert b.sync_r() == []  # g2 did not exist at broadcast time


def test_sync_max_n_truncation(srv):
    with connect(srv.tcp_binding) as a, connect(srv.tcp_binding) as b:
        a.join(["g1"])
        b.join(["g1"])
        for name in ("p", "q", "r"):
            a.send_r(["g1"], name, VInt(1))
        first = b.sync_r(max_n=1)
        assert len(first) == 1
        rest = b.sync_r()
        assert len(rest) == 2
        assert {n for n, _ in first} | {n for n, _ in rest} == {"p", "q", "r"}


def test_monotone_delivery(srv):
    with connect(srv.tcp_binding) as a, connect(srv.tcp_binding) as b:
        a.join(["g1"])
        b.join(["g1"])
        a.send_r(["g1"], "x", VInt(1))
        assert len(b.sync_r()) == 1
        assert b.sync_r() == []  # not delivered twice


def test_wait_notify(srv):
    with connect(srv.tcp_binding) as a, connect(srv.tcp_binding) as b:
        a.join(["g1"])
        b.join(["g1"])
        assert b.wait(timeout_ms=0) is False
        a.send_r(["g1"], "x", VInt(1))
        assert b.wait(timeout_ms=0) is True
        b.sync()
        assert b.wait(timeout_ms=100) is False  # drained, times out


def test_wait_ignores_self_writes(srv):
    with connect(srv.tcp_binding) as a:
        a.join(["g1"])
        a.send_r(["g1"], "x", VInt(1))
        assert a.wait(timeout_ms=100) is False


def test_wait_wakes_on_peer_write(srv):
    import threading

    with connect(srv.tcp_binding) as a, connect(srv.tcp_binding) as b:
        a.join(["g1"])
        b.join(["g1"])

        def poke():
            time.sleep(0.2)
            a.send_r(["g1"], "x", VInt(1))

        t = threading.Thread(target=poke)
        t.start()
        start = time.monotonic()
        assert b.wait(timeout_ms=5000) is True
        assert time.monotonic() - start < 4.0
        t.join()


def test_disconnect_garbage_collects(srv):
    a = connect(srv.tcp_binding)
    a.join(["g1"])
    with connect(srv.tcp_binding) as b:
        b.join(["g1", "g2"])
        a.close()
        deadline = time.monotonic() + 5
        while time.monotonic() < deadline and srv.session_count() > 1:
            time.sleep(0.02)
        assert srv.session_count() == 1
        # g1 still alive through b; b's cursors intact
        assert b.list_groups() == [("g1", 1, 0), ("g2", 1, 0)]


def test_write_count_in_list(srv):
    with connect(srv.tcp_binding) as a:
        a.join(["g1"])
        a.send_pairs(["g1"], [("u", VInt(1)), ("v", VInt(2)), ("w", VInt(3))])
        assert a.list_groups() == [("g1", 1, 3)]


def test_member_of_two_groups_partial_leave(srv):
    with connect(srv.tcp_binding) as a, connect(srv.tcp_binding) as b:
        a.join(["g1", "g2"])
        b.join(["g1", "g2"])
        a.leave(["g1"])
        b.send_r(["g2"], "z", VInt(9))
        assert dict(a.sync_r()) == {"z": VInt(9)}


def test_session_limit(srv):
    srv.server.broker.max_sessions = 2
    h1 = connect(srv.tcp_binding)
    h2 = connect(srv.tcp_binding)
    with pytest.raises(client.ProtocolMismatch):
        connect(srv.tcp_binding)
    h1.close()
    h2.close()


def test_proto_mismatch(srv):
    with pytest.raises(client.ProtocolMismatch):
        connect(srv.tcp_binding, proto=2)

import pytest

from gridmesh.client import (
    Binding,
    ConnectFailed,
    NameNotInWorkspace,
    UnknownGroup,
    connect,
)
from gridmesh.values import VDouble, VInt, VStr, array_of_doubles


@pytest.fixture(params=["tcp", "ipc", "websocket"])
def binding(request, srv_all):
    return {
        "tcp": srv_all.tcp_binding,
        "ipc": srv_all.ipc_binding,
        "websocket": srv_all.ws_binding,
    }[request.param]


def test_workspace_echo(binding):
    # bit-exact round trip of a workspace variable through the broker
    with connect(binding) as a, connect(binding) as b:
        a.join(["g"])
        b.join(["g"])
        a.workspace["x"] = VDouble(-0.0)
        a.send(["g"], ["x"])
        assert b.sync() == 1
        assert b.workspace["x"] == a.workspace["x"]


def test_send_missing_name(binding):
    with connect(binding) as a:
        a.join(["g"])
        with pytest.raises(NameNotInWorkspace):
            a.send(["g"], ["z"])


def test_send_empty_names_is_noop(binding):
    with connect(binding) as a:
        a.join(["g"])
        a.send(["g"], [])


def test_send_r_bypasses_workspace(binding):
    with connect(binding) as a, connect(binding) as b:
        a.join(["g"])
        b.join(["g"])
        a.send_r(["g"], "x", VInt(7))
        assert a.workspace == {}
        assert dict(b.sync_r()) == {"x": VInt(7)}


def test_send_r_unknown_group(binding):
    with connect(binding) as a:
        with pytest.raises(UnknownGroup):
            a.send_r(["nope"], "x", VInt(1))


def test_broadcast_on_empty_server(binding):
    with connect(binding) as a:
        a.broadcast_r("x", VInt(1))  # zero groups: ok, no-op


def test_sync_r_leaves_workspace(binding):
    with connect(binding) as a, connect(binding) as b:
        a.join(["g"])
        b.join(["g"])
        a.send_r(["g"], "x", VStr("hello"))
        pairs = b.sync_r()
        assert dict(pairs) == {"x": VStr("hello")}
        assert b.workspace == {}


def test_sync_vs_sync_r_equivalence(srv):
    with connect(srv.tcp_binding) as a, connect(srv.tcp_binding) as b1, connect(
        srv.tcp_binding
    ) as b2:
        a.join(["g"])
        b1.join(["g"])
        b2.join(["g"])
        payload = [("m", VInt(4)), ("n", array_of_doubles([1.0, 2.0]))]
        a.send_pairs(["g"], payload)
        r1 = b1.sync_r()
        assert b2.sync() == len(r1)
        assert dict(r1) == {k: b2.workspace[k] for k, _ in r1}


def test_leave_all_then_sync_empty(binding):
    with connect(binding) as a, connect(binding) as b:
        a.join(["g"])
        b.join(["g"])
        b.leave(["g"])
        a.join(["g"])  # keep group alive
        a.send_r(["g"], "x", VInt(1))
        assert b.sync_r() == []


def test_double_close(binding):
    h = connect(binding)
    h.close()
    h.close()  # no-op


def test_connect_refused():
    with pytest.raises(ConnectFailed):
        connect(Binding("tcp", "127.0.0.1:1"), timeout=1.0)


def test_large_array_round_trip(srv):
    with connect(srv.tcp_binding) as a, connect(srv.tcp_binding) as b:
        a.join(["g"])
        b.join(["g"])
        big = array_of_doubles(list(range(200_000)))
        a.send_r(["g"], "big", big)
        assert dict(b.sync_r())["big"] == big

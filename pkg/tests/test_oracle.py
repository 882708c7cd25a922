"""Randomized differential test: real broker vs the straight-line model."""

import random

import pytest

from gridmesh.client import UnknownGroup, connect
from gridmesh.values import VInt

from refmodel import ModelBroker

GROUPS = ["g1", "g2", "g3", "g4"]
VARS = ["u", "v", "w", "x", "y", "z"]


def run_differential(srv, n_commands, seed, n_clients=5):
    rng = random.Random(seed)
    model = ModelBroker()
    handles = []
    writes = {}  # var -> set of groups ever written
    stats = {"sync_checks": 0, "deliveries": 0}
    for cid in range(n_clients):
        handles.append(connect(srv.tcp_binding))
        model.add_client(cid)

    try:
        for step in range(n_commands):
            cid = rng.randrange(n_clients)
            h = handles[cid]
            op = rng.choices(
                ["join", "leave", "send", "broadcast", "sync", "list"],
                weights=[15, 8, 25, 8, 35, 4],
            )[0]
            if op == "join":
                gs = rng.sample(GROUPS, rng.randint(1, 2))
                h.join(gs)
                model.join(cid, gs)
            elif op == "leave":
                gs = rng.sample(GROUPS, rng.randint(1, 2))
                h.leave(gs)
                model.leave(cid, gs)
            elif op == "send":
                gs = rng.sample(GROUPS, rng.randint(1, 2))
                pairs = [
                    (var, step * 10 + k)
                    for k, var in enumerate(rng.sample(VARS, rng.randint(1, 3)))
                ]
                expected = model.send(cid, gs, pairs)
                if expected == "ok":
                    h.send_pairs(gs, [(n, VInt(v)) for n, v in pairs])
                    for n, _ in pairs:
                        writes.setdefault(n, set()).update(gs)
                else:
                    with pytest.raises(UnknownGroup) as ei:
                        h.send_pairs(gs, [(n, VInt(v)) for n, v in pairs])
                    assert sorted(ei.value.groups) == expected[1], f"step {step}"
            elif op == "broadcast":
                pairs = [
                    (var, step * 10 + k)
                    for k, var in enumerate(rng.sample(VARS, rng.randint(1, 2)))
                ]
                existing = set(model.groups)
                model.broadcast(cid, pairs)
                for n, v in pairs:
                    h.broadcast_r(n, VInt(v))
                    writes.setdefault(n, set()).update(existing)
            elif op == "sync":
                max_n = rng.choice([-1, -1, 1, 2, 5])
                expected = model.sync(cid, max_n)
                got = h.sync_r(max_n=max_n)
                assert [(n, v.v) for n, v in got] == expected, f"step {step}"
                stats["sync_checks"] += 1
                stats["deliveries"] += len(got)
                # isolation: every delivered variable was written to a
                # group this client is currently a member of
                for n, _ in got:
                    assert writes.get(n, set()) & model.clients[cid]["groups"], (
                        f"step {step}: {n} delivered outside joined groups"
                    )
            else:
                assert h.list_groups() == model.list_groups(), f"step {step}"
    finally:
        for h in handles:
            h.close()
    return stats


def test_differential_short(srv):
    run_differential(srv, 1500, seed=1)


def test_differential_alt_seed(srv):
    run_differential(srv, 1500, seed=2)

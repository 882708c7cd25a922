"""Straight-line reference model of the broker's observable semantics.

Replays the table-with-cursor rules naively: one dict per group table,
per-client cursors, self-author exclusion, atomic send, and the
(group name asc, seq asc) sync ordering with later-examined name wins.
Used as the independent oracle against the real server.
"""


class ModelBroker:
    def __init__(self):
        self.groups = {}  # name -> {"entries": {var: (value, seq, author)}, "next": int, "members": set}
        self.clients = {}  # cid -> {"groups": set, "cursors": dict}

    def add_client(self, cid):
        self.clients[cid] = {"groups": set(), "cursors": {}}

    def join(self, cid, names):
        c = self.clients[cid]
        for name in names:
            g = self.groups.setdefault(
                name, {"entries": {}, "next": 1, "members": set()}
            )
            if cid not in g["members"]:
                g["members"].add(cid)
                c["groups"].add(name)
                c["cursors"][name] = 0
        return "ok"

    def leave(self, cid, names):
        c = self.clients[cid]
        for name in names:
            g = self.groups.get(name)
            if g is None or cid not in g["members"]:
                continue
            g["members"].discard(cid)
            c["groups"].discard(name)
            c["cursors"].pop(name, None)
            if not g["members"]:
                del self.groups[name]
        return "ok"

    def send(self, cid, names, pairs):
        missing = [n for n in names if n not in self.groups]
        if missing:
            return ("unknown_group", sorted(missing))
        for name in names:
            g = self.groups[name]
            for var, value in pairs:
                g["entries"][var] = (value, g["next"], cid)
                g["next"] += 1
        return "ok"

    def broadcast(self, cid, pairs):
        for g in self.groups.values():
            for var, value in pairs:
                g["entries"][var] = (value, g["next"], cid)
                g["next"] += 1
        return "ok"

    def sync(self, cid, max_n):
        c = self.clients[cid]
        selected = {}
        count = 0
        for gname in sorted(c["groups"]):
            g = self.groups[gname]
            pending = sorted(
                (e for e in g["entries"].items() if e[1][1] > c["cursors"][gname]),
                key=lambda kv: kv[1][1],
            )
            stop = False
            for var, (value, seq, author) in pending:
                if 0 <= max_n <= count:
                    stop = True
                    break
                c["cursors"][gname] = seq
                if author == cid:
                    continue
                selected[var] = value
                count += 1
            if stop:
                break
        return list(selected.items())

    def pending(self, cid):
        c = self.clients[cid]
        for gname in c["groups"]:
            g = self.groups[gname]
            for value, seq, author in g["entries"].values():
                if seq > c["cursors"][gname] and author != cid:
                    return True
        return False

    def list_groups(self):
        return [
            (name, len(g["members"]), g["next"] - 1)
            for name, g in sorted(self.groups.items())
        ]

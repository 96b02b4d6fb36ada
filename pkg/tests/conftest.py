from __future__ import annotations

import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from siotsim.geo import GeoPoint
from siotsim.humangraph import FriendshipGraph
from siotsim.interests import InterestDescriptor
from siotsim.siotgraph import FIXED, MOBILE, Device, SIoTGraph, device_id
from siotsim.trace import CheckIn, TraceCorpus


class FixedDecisions:
    """Decision stub with directly controlled booleans (hop-independent)."""

    def __init__(self, authorize=True, forward=True, seed=0, replicate=0):
        self.authorize = authorize
        self.forward = forward
        self.seed = seed
        self.replicate = replicate

    def _lookup(self, table, key) -> bool:
        if isinstance(table, dict):
            return table.get(key, False)
        return bool(table)

    def authorizes(self, node, hop) -> bool:
        return self._lookup(self.authorize, node)

    def forwards(self, entity, hop) -> bool:
        return self._lookup(self.forward, entity)


def make_devices(users, model="m0", lat=0.0) -> dict:
    devices = {}
    for i, user in enumerate(users):
        home = GeoPoint(lat, 0.001 * i)
        for kind in (MOBILE, FIXED):
            did = device_id(user, kind)
            devices[did] = Device(did, user, kind, model,
                                  home if kind == FIXED else None)
    return devices


def mobile(user: str) -> str:
    return device_id(user, MOBILE)


def fixed(user: str) -> str:
    return device_id(user, FIXED)


def profile(owner: str, held) -> InterestDescriptor:
    return InterestDescriptor.from_counts(owner, {m: 1 for m in held}, 1)


def checkin(user: str, ts: float, lat: float, lon: float, place="p") -> CheckIn:
    return CheckIn(user, ts, GeoPoint(lat, lon), place)


def corpus_of(checkins, friendships=()) -> TraceCorpus:
    return TraceCorpus.build(checkins, friendships)


def random_friend_graph(rnd: random.Random, n: int, p: float) -> FriendshipGraph:
    users = [f"u{i:03d}" for i in range(n)]
    g = FriendshipGraph.from_pairs(users)
    for i in range(n):
        for j in range(i + 1, n):
            if rnd.random() < p:
                g.add_edge(users[i], users[j])
    return g


def random_nonincreasing(rnd: random.Random, length: int) -> tuple[float, ...]:
    return tuple(sorted((rnd.random() for _ in range(length)), reverse=True))


def random_device_graph(rnd: random.Random, n_users: int,
                        edge_prob: float) -> SIoTGraph:
    from siotsim.siotgraph import RelationshipKind
    users = [f"u{i:03d}" for i in range(n_users)]
    graph = SIoTGraph(make_devices(users))
    for u in users:
        graph.add_edge(mobile(u), fixed(u), RelationshipKind.OOR)
    ids = sorted(graph.devices)
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            if graph.devices[ids[i]].owner == graph.devices[ids[j]].owner:
                continue
            if rnd.random() < edge_prob:
                kind = rnd.choice([RelationshipKind.POR, RelationshipKind.SOR,
                                   RelationshipKind.CLOR])
                graph.add_edge(ids[i], ids[j], kind)
    return graph

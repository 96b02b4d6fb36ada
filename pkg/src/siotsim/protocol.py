"""Anonymous co-interest link establishment between devices.

A source device floods an anonymized copy of its owner's interest profile
over the device graph with a bounded time-to-live. Receivers that find the
profile similar enough, and that hold the target interest, send an
establishment request backwards along the relay chain; each intermediary
knows only the previous hop, so the source stays anonymous until the
request arrives and the direct co-interest edge is created.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import rng
from .humangraph import AuthorizationMap
from .interests import (DEFAULT_SIMILARITY_THRESHOLD, InterestDescriptor,
                        cosine_similarity)
from .siotgraph import MOBILE, RelationshipKind, SIoTGraph, SIoTView

DEFAULT_TTL = 6

ORIGIN_MOBILE = "mobile"
ORIGIN_BOTH = "both"


@dataclass(frozen=True)
class VuipToken:
    """An in-flight interest profile. The payload carries no owner
    identifier; receivers can correlate deliveries only via token_id."""

    token_id: str
    payload: InterestDescriptor
    ttl: int

    def __post_init__(self) -> None:
        if self.payload.owner is not None:
            raise ValueError("token payload must be anonymized")
        if self.ttl < 0:
            raise ValueError("ttl must be >= 0")


@dataclass(frozen=True)
class RelayRecord:
    holder: str
    token_id: str
    previous_hop: str
    received_ttl: int

    def __post_init__(self) -> None:
        if self.previous_hop == self.holder:
            raise ValueError("relay record cannot point at its own holder")


@dataclass(frozen=True)
class CiorRequest:
    requester: str  # device id; the requester's identity travels openly
    token_id: str
    interest: int | None


@dataclass
class PropagationTrace:
    token_id: str
    source_device: str
    initial_ttl: int
    records: dict[str, RelayRecord] = field(default_factory=dict)
    hops: dict[str, int] = field(default_factory=dict)
    evaluated: set[str] = field(default_factory=set)
    established: list["CiorEdge"] = field(default_factory=list)

    def receivers(self) -> list[str]:
        return sorted(self.records)


@dataclass(frozen=True)
class CiorEdge:
    source_device: str
    requester_device: str
    interests: frozenset[int]
    walk_length: int


def propagate_vuip(source_device: str, view: SIoTView, token: VuipToken,
                   decisions: AuthorizationMap) -> PropagationTrace:
    """Flood the token breadth-first from the source device.

    The source always sends to all its first social neighbors. Any other
    device forwards only while the token has remaining hops and its own
    per-replicate forwarding decision (at the hop where it received the
    token) is positive. Each device receives and evaluates a token at most
    once.
    """
    if token.ttl < 1:
        raise ValueError("propagation needs ttl >= 1")
    if source_device not in view.graph.devices:
        raise ValueError(f"unknown source device: {source_device!r}")
    trace = PropagationTrace(token.token_id, source_device, token.ttl)
    seen = {source_device}
    queue: deque[tuple[str, int]] = deque([(source_device, 0)])
    while queue:
        holder, hop = queue.popleft()
        if hop >= token.ttl:
            continue
        if holder != source_device and not decisions.forwards(holder, hop):
            continue
        for neighbor in view.neighbors(holder):
            if neighbor in seen:
                continue
            seen.add(neighbor)
            trace.records[neighbor] = RelayRecord(
                holder=neighbor,
                token_id=token.token_id,
                previous_hop=holder,
                received_ttl=token.ttl - (hop + 1),
            )
            trace.hops[neighbor] = hop + 1
            queue.append((neighbor, hop + 1))
    return trace


def make_token(owner_profile: InterestDescriptor, seed: int, replicate: int,
               source_device: str, ttl: int = DEFAULT_TTL) -> VuipToken:
    token_id = rng.token_hex(seed, replicate, "token", source_device)
    return VuipToken(token_id, owner_profile.anonymized(), ttl)


def evaluate_candidates(trace: PropagationTrace, graph: SIoTGraph,
                        profiles: Mapping[str, InterestDescriptor],
                        token: VuipToken,
                        sim_threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
                        interest: int | None = None) -> list[CiorRequest]:
    """Decide which receiving devices request a co-interest link.

    A receiver requests iff the cosine similarity between its owner's
    profile and the token payload reaches `sim_threshold` (inclusive) and,
    when `interest` is given, its owner holds that interest. The source
    owner's own devices never request.
    """
    source_owner = graph.devices[trace.source_device].owner
    requests: list[CiorRequest] = []
    for holder in trace.receivers():
        trace.evaluated.add(holder)
        owner = graph.devices[holder].owner
        if owner == source_owner:
            continue
        own = profiles.get(owner, InterestDescriptor.empty(owner))
        if cosine_similarity(own, token.payload) < sim_threshold:
            continue
        if interest is not None and interest not in own.held:
            continue
        requests.append(CiorRequest(holder, token.token_id, interest))
    return requests


def backpropagate(request: CiorRequest, trace: PropagationTrace,
                  graph: SIoTGraph,
                  profiles: Mapping[str, InterestDescriptor]) -> CiorEdge:
    """Walk the relay chain backwards from the requester to the source and
    return the established edge, annotated with the shared interests of the
    two owners."""
    cur = request.requester
    steps = 0
    while cur != trace.source_device:
        record = trace.records.get(cur)
        if record is None or steps > len(trace.records):
            raise RuntimeError(
                f"broken relay chain for {request.requester!r} at {cur!r}")
        cur = record.previous_hop
        steps += 1
    source_owner = graph.devices[trace.source_device].owner
    requester_owner = graph.devices[request.requester].owner
    shared = (profiles.get(source_owner, InterestDescriptor.empty()).held
              & profiles.get(requester_owner, InterestDescriptor.empty()).held)
    edge = CiorEdge(trace.source_device, request.requester, frozenset(shared), steps)
    trace.established.append(edge)
    return edge


def run_cior_round(sources: Iterable[str], graph: SIoTGraph,
                   kinds: Iterable[RelationshipKind],
                   profiles: Mapping[str, InterestDescriptor],
                   decisions: AuthorizationMap, interest: int,
                   ttl: int = DEFAULT_TTL,
                   sim_threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
                   origin_device: str = ORIGIN_MOBILE) -> SIoTGraph:
    """Run one full establishment round and return the augmented graph.

    Every source user's origin device(s) propagate in turn over the
    selected-kind view of the base graph; all established co-interest
    edges are merged into a copy of the graph. Deterministic for a fixed
    decision map.
    """
    if origin_device not in (ORIGIN_MOBILE, ORIGIN_BOTH):
        raise ValueError(f"bad origin_device: {origin_device!r}")
    view = graph.select_kinds(frozenset(kinds) - {RelationshipKind.CIOR})
    augmented = graph.copy()
    for user in sorted(set(sources)):
        own = profiles.get(user)
        if own is None or not own.held:
            continue
        for dev in graph.owner_devices.get(user, ()):
            if origin_device == ORIGIN_MOBILE and graph.devices[dev].kind != MOBILE:
                continue
            token = make_token(own, decisions.seed, decisions.replicate, dev, ttl)
            trace = propagate_vuip(dev, view, token, decisions)
            for req in evaluate_candidates(trace, graph, profiles, token,
                                           sim_threshold, interest):
                edge = backpropagate(req, trace, graph, profiles)
                augmented.add_edge(edge.source_device, edge.requester_device,
                                   RelationshipKind.CIOR, edge.interests)
    return augmented


def serialize_trace(trace: PropagationTrace) -> str:
    """Debug export, one line per relay record:
    `token_id,holder,previous_hop,hop`."""
    lines = []
    for holder in trace.receivers():
        r = trace.records[holder]
        lines.append(f"{r.token_id},{r.holder},{r.previous_hop},{trace.hops[holder]}")
    return "\n".join(lines) + ("\n" if lines else "")

"""Human social layer: friendships, per-hop authorization decisions and
interest-community reachability.

Discovery follows the contacts-of-contacts rule: a search expands through a
node's contact list only if that node authorizes access to it. Interested
nodes that were reached relaunch the search as sources of their own, and
the community of an interest is the fixed point of that relaunch process.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from . import rng

DEFAULT_MAX_HOPS = 4


class FriendshipGraph:
    """Undirected friendship graph without self-loops."""

    def __init__(self) -> None:
        self._adj: dict[str, set[str]] = {}

    @staticmethod
    def from_pairs(users: Iterable[str] = (),
                   pairs: Iterable[tuple[str, str]] = ()) -> "FriendshipGraph":
        g = FriendshipGraph()
        for u in users:
            g.add_node(u)
        for a, b in pairs:
            g.add_edge(a, b)
        return g

    def add_node(self, u: str) -> None:
        self._adj.setdefault(u, set())

    def add_edge(self, a: str, b: str) -> None:
        if a == b:
            raise ValueError(f"self-loop on {a!r}")
        self._adj.setdefault(a, set()).add(b)
        self._adj.setdefault(b, set()).add(a)

    def has_node(self, u: str) -> bool:
        return u in self._adj

    def neighbors(self, u: str) -> tuple[str, ...]:
        return tuple(sorted(self._adj.get(u, ())))

    @property
    def nodes(self) -> frozenset[str]:
        return frozenset(self._adj)

    def edges(self) -> list[tuple[str, str]]:
        out = []
        for a, nbrs in self._adj.items():
            for b in nbrs:
                if a < b:
                    out.append((a, b))
        return sorted(out)

    def degree(self, u: str) -> int:
        return len(self._adj.get(u, ()))


def _validate_probs(name: str, probs: tuple[float, ...]) -> None:
    if not probs:
        raise ValueError(f"{name} must be non-empty")
    if any(not 0.0 <= p <= 1.0 for p in probs):
        raise ValueError(f"{name} values must be in [0, 1]: {probs}")
    if any(probs[i] < probs[i + 1] for i in range(len(probs) - 1)):
        # cooperation must not grow with social distance, otherwise the
        # coupled-randomness dominance guarantees break sample-wise
        raise ValueError(f"{name} must be non-increasing per hop: {probs}")


@dataclass(frozen=True)
class AuthorizationPolicy:
    """Per-hop cooperation probabilities, indexed by hop distance 1..H.

    `auth_prob_per_hop` governs access to a node's contact list during
    discovery; `spread_prob_per_hop` governs forwarding of interest
    profiles during protocol propagation. Hops beyond the end of a list
    use its last entry. Both vectors must be non-increasing.
    """

    auth_prob_per_hop: tuple[float, ...] = (1.0,)
    spread_prob_per_hop: tuple[float, ...] = (1.0,)

    def __post_init__(self) -> None:
        object.__setattr__(self, "auth_prob_per_hop", tuple(self.auth_prob_per_hop))
        object.__setattr__(self, "spread_prob_per_hop", tuple(self.spread_prob_per_hop))
        _validate_probs("auth_prob_per_hop", self.auth_prob_per_hop)
        _validate_probs("spread_prob_per_hop", self.spread_prob_per_hop)

    def auth_at(self, hop: int) -> float:
        if hop < 1:
            raise ValueError(f"hop index must be >= 1, got {hop}")
        return self.auth_prob_per_hop[min(hop, len(self.auth_prob_per_hop)) - 1]

    def spread_at(self, hop: int) -> float:
        if hop < 1:
            raise ValueError(f"hop index must be >= 1, got {hop}")
        return self.spread_prob_per_hop[min(hop, len(self.spread_prob_per_hop)) - 1]


def cooperates(draw: float, prob: float) -> bool:
    """A draw in [0, 1) cooperates at probability `prob` iff draw < prob,
    so raising the probability never un-cooperates an entity."""
    return draw < prob


class AuthorizationMap:
    """Per-replicate cooperation decisions for every node and device.

    Each entity gets one uniform draw per decision dimension, fully
    determined by (seed, replicate, entity). The boolean decision at hop k
    compares that draw against the policy's hop-k probability, so the same
    entity never flip-flops within a replicate and the identical draw is
    reused across modes and sweep points.
    """

    def __init__(self, policy: AuthorizationPolicy, seed: int, replicate: int):
        self.policy = policy
        self.seed = seed
        self.replicate = replicate
        self._auth: dict[str, float] = {}
        self._spread: dict[str, float] = {}

    def auth_draw(self, node: str) -> float:
        d = self._auth.get(node)
        if d is None:
            d = rng.unit_draw(self.seed, self.replicate, "auth", node)
            self._auth[node] = d
        return d

    def spread_draw(self, entity: str) -> float:
        d = self._spread.get(entity)
        if d is None:
            d = rng.unit_draw(self.seed, self.replicate, "spread", entity)
            self._spread[entity] = d
        return d

    def authorizes(self, node: str, hop: int) -> bool:
        return cooperates(self.auth_draw(node), self.policy.auth_at(hop))

    def forwards(self, entity: str, hop: int) -> bool:
        return cooperates(self.spread_draw(entity), self.policy.spread_at(hop))


def sample_decisions(graph: FriendshipGraph, policy: AuthorizationPolicy,
                     seed: int, replicate: int) -> AuthorizationMap:
    """Materialize the coupled decision draws for every node of the graph."""
    auth = AuthorizationMap(policy, seed, replicate)
    for node in graph.nodes:
        auth.auth_draw(node)
        auth.spread_draw(node)
    return auth


@dataclass(frozen=True)
class ReachabilityResult:
    source: str
    interest: int
    direct: frozenset[str]
    indirect: frozenset[str]
    community: frozenset[str]
    hop_count: Mapping[str, int]


@dataclass
class ReachContext:
    """Shared state for reachability runs over one fixed configuration.

    `adjacency` maps node -> sorted contact tuple, `holders` is the set of
    nodes holding the interest, `extra_contacts` optionally adds each
    node's own device-layer contacts (one hop, no authorization needed).
    Local discovery results are memoized per relauncher because they do
    not depend on the original source.
    """

    adjacency: Mapping[str, tuple[str, ...]]
    holders: frozenset[str]
    authorizes: Callable[[str, int], bool]
    max_hops: int = DEFAULT_MAX_HOPS
    extra_contacts: Mapping[str, tuple[str, ...]] | None = None
    _memo: dict[str, dict[str, int]] = field(default_factory=dict)

    @staticmethod
    def for_graph(graph: FriendshipGraph, holders: Iterable[str],
                  auth: AuthorizationMap, max_hops: int = DEFAULT_MAX_HOPS,
                  extra_contacts: Mapping[str, tuple[str, ...]] | None = None,
                  ) -> "ReachContext":
        adjacency = {u: graph.neighbors(u) for u in graph.nodes}
        return ReachContext(adjacency, frozenset(holders), auth.authorizes,
                            max_hops, extra_contacts)


def _discover_from(ctx: ReachContext, start: str) -> dict[str, int]:
    """One discovery pass launched by `start`: interested nodes it can see,
    mapped to their hop distance from `start`.

    The launcher always uses its own contact list; expansion through any
    other node at hop k requires that node's authorization at hop k. The
    launcher's device-layer contacts, when present, are visible at hop 1.
    """
    cached = ctx._memo.get(start)
    if cached is not None:
        return cached
    hops: dict[str, int] = {start: 0}
    frontier = [start]
    hop = 0
    while frontier and hop < ctx.max_hops:
        nxt: list[str] = []
        for u in frontier:
            if u != start and not ctx.authorizes(u, hops[u]):
                continue
            for v in ctx.adjacency.get(u, ()):
                if v not in hops:
                    hops[v] = hop + 1
                    nxt.append(v)
        frontier = nxt
        hop += 1
    found = {n: h for n, h in hops.items() if n != start and n in ctx.holders}
    if ctx.extra_contacts is not None:
        for v in ctx.extra_contacts.get(start, ()):
            if v != start and v in ctx.holders:
                prev = found.get(v)
                if prev is None or prev > 1:
                    found[v] = 1
    ctx._memo[start] = found
    return found


def interest_reach(source: str, ctx: ReachContext) -> tuple[dict[str, int], dict[str, int]]:
    """Full reach of `source` for the context's interest.

    Returns (direct, best): `direct` maps the interested nodes found by the
    source's own discovery pass to their hop distance; `best` maps every
    interested node reached after relaunches to its minimum cumulative hop
    distance. Minimality follows from running a shortest-path search over
    relaunchers, whose pass results are independent of the original source.
    """
    if source not in ctx.adjacency and (
            ctx.extra_contacts is None or source not in ctx.extra_contacts):
        raise ValueError(f"unknown source node: {source!r}")
    direct = dict(_discover_from(ctx, source))
    best: dict[str, int] = dict(direct)
    heap: list[tuple[int, str]] = [(h, n) for n, h in direct.items()]
    heapq.heapify(heap)
    settled: set[str] = set()
    while heap:
        h, r = heapq.heappop(heap)
        if r in settled or h > best.get(r, h):
            continue
        settled.add(r)
        for n, k in _discover_from(ctx, r).items():
            if n == source:
                continue
            cand = h + k
            if cand < best.get(n, cand + 1):
                best[n] = cand
                heapq.heappush(heap, (cand, n))
    return direct, best


def discover_direct(source: str, interest: int, graph: FriendshipGraph,
                    auth: AuthorizationMap, max_hops: int = DEFAULT_MAX_HOPS,
                    holders: Iterable[str] | None = None) -> frozenset[str]:
    """Interested nodes the source reaches through its own discovery pass."""
    ctx = _default_context(interest, graph, auth, max_hops, holders)
    if source not in ctx.adjacency:
        raise ValueError(f"unknown source node: {source!r}")
    return frozenset(_discover_from(ctx, source))


def discover_indirect(source: str, interest: int, graph: FriendshipGraph,
                      auth: AuthorizationMap, max_hops: int = DEFAULT_MAX_HOPS,
                      holders: Iterable[str] | None = None) -> frozenset[str]:
    """Interested nodes reached only after reached interested nodes
    relaunch the search as sources of their own."""
    ctx = _default_context(interest, graph, auth, max_hops, holders)
    direct, best = interest_reach(source, ctx)
    return frozenset(best) - frozenset(direct) - {source}


def community_of(source: str, interest: int, graph: FriendshipGraph,
                 auth: AuthorizationMap, max_hops: int = DEFAULT_MAX_HOPS,
                 holders: Iterable[str] | None = None) -> ReachabilityResult:
    """The interest community seen from `source`: the fixed point of the
    relaunch process, split into directly and indirectly reached nodes."""
    ctx = _default_context(interest, graph, auth, max_hops, holders)
    if source not in ctx.holders:
        raise ValueError(f"source {source!r} does not hold interest {interest}")
    direct, best = interest_reach(source, ctx)
    direct_set = frozenset(direct)
    community = frozenset(best) | {source}
    return ReachabilityResult(
        source=source,
        interest=interest,
        direct=direct_set,
        indirect=frozenset(best) - direct_set - {source},
        community=community,
        hop_count=dict(best),
    )


def _default_context(interest: int, graph: FriendshipGraph, auth: AuthorizationMap,
                     max_hops: int, holders: Iterable[str] | None) -> ReachContext:
    if holders is None:
        raise ValueError("holders of the interest must be provided")
    return ReachContext.for_graph(graph, holders, auth, max_hops)


# --- connected components ----------------------------------------------------

class UnionFind:
    """Union-find with path compression and union by size."""

    def __init__(self, items: Iterable[str]):
        self._parent: dict[str, str] = {x: x for x in items}
        self._size: dict[str, int] = {x: 1 for x in self._parent}

    def find(self, x: str) -> str:
        root = x
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[x] != root:
            self._parent[x], x = root, self._parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self._size[ra] < self._size[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        self._size[ra] += self._size[rb]

    def component_sizes(self) -> list[int]:
        counts: dict[str, int] = {}
        for x in self._parent:
            r = self.find(x)
            counts[r] = counts.get(r, 0) + 1
        return sorted(counts.values(), reverse=True)


def giant_component_pct(nodes: Iterable[str],
                        edges: Iterable[tuple[str, str]]) -> float:
    """Percentage of `nodes` inside the largest connected component of the
    graph restricted to `nodes`. Edges with endpoints outside the node set
    are ignored."""
    node_set = set(nodes)
    if not node_set:
        raise ValueError("giant_component_pct: empty node set")
    uf = UnionFind(node_set)
    for a, b in edges:
        if a in node_set and b in node_set and a != b:
            uf.union(a, b)
    return 100.0 * uf.component_sizes()[0] / len(node_set)

"""Device layer: device instantiation from users and typed social-object
relationship edges (POR, C-LOR, OOR, SOR, plus protocol-established C-IOR).
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import rng
from .geo import GeoPoint, haversine_m
from .trace import CoLocation

MOBILE = "mobile"
FIXED = "fixed"

DEFAULT_SOR_THRESHOLD = 3
DEFAULT_CLOR_RADIUS_M = 250.0
DEFAULT_MODEL_COUNT = 10


class RelationshipKind(enum.Enum):
    """Typed device relationships. The co-work kind is deliberately absent."""

    POR = "POR"
    CLOR = "C-LOR"
    OOR = "OOR"
    SOR = "SOR"
    CIOR = "C-IOR"


BASE_KINDS = frozenset({RelationshipKind.POR, RelationshipKind.CLOR,
                        RelationshipKind.OOR, RelationshipKind.SOR})


def parse_kind(text: str) -> RelationshipKind:
    for kind in RelationshipKind:
        if kind.value == text:
            return kind
    raise ValueError(f"unknown relationship kind: {text!r}")


@dataclass(frozen=True)
class Device:
    device_id: str
    owner: str
    kind: str  # MOBILE or FIXED
    model: str
    location: GeoPoint | None  # home point for fixed devices, None for mobile

    def __post_init__(self) -> None:
        if self.kind not in (MOBILE, FIXED):
            raise ValueError(f"bad device kind: {self.kind!r}")
        if self.kind == FIXED and self.location is None:
            raise ValueError(f"fixed device {self.device_id} needs a location")


@dataclass(frozen=True)
class SIoTEdge:
    device_a: str
    device_b: str
    kinds: frozenset[RelationshipKind]
    cior_interests: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if self.device_a >= self.device_b:
            raise ValueError("edge endpoints must be in canonical order")
        if not self.kinds:
            raise ValueError("edge must carry at least one kind")


def device_id(owner: str, kind: str) -> str:
    return f"{owner}:{kind}"


def default_model_catalog(n: int = DEFAULT_MODEL_COUNT) -> list[tuple[str, float]]:
    return [(f"model_{i:02d}", 1.0 / n) for i in range(n)]


def load_model_catalog(path: str | Path) -> list[tuple[str, float]]:
    """Load a model catalog from CSV `model_id,probability`."""
    catalog: list[tuple[str, float]] = []
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["model_id", "probability"]:
            raise ValueError(f"{path}: unexpected model catalog header {header}")
        for model_id, prob in reader:
            catalog.append((model_id, float(prob)))
    return catalog


def instantiate_devices(users: Iterable[str], home_points: Mapping[str, GeoPoint],
                        catalog: Sequence[tuple[str, float]], seed: int,
                        ) -> dict[str, Device]:
    """Create one mobile and one fixed device per user, with models drawn
    from the catalog. The fixed device sits at the owner's home point."""
    total = sum(p for _, p in catalog)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"model catalog probabilities sum to {total}, expected 1")
    devices: dict[str, Device] = {}
    for user in sorted(set(users)):
        home = home_points.get(user)
        if home is None:
            raise ValueError(f"user {user!r} has no home point")
        for kind in (MOBILE, FIXED):
            did = device_id(user, kind)
            draw = rng.unit_draw(seed, "model", user, kind)
            model = _pick_model(catalog, draw)
            devices[did] = Device(did, user, kind, model,
                                  home if kind == FIXED else None)
    return devices


def _pick_model(catalog: Sequence[tuple[str, float]], draw: float) -> str:
    acc = 0.0
    for model, prob in catalog:
        acc += prob
        if draw < acc:
            return model
    return catalog[-1][0]


def establish_por(devices: Mapping[str, Device]) -> list[tuple[str, str]]:
    """Pair every two devices sharing a model identifier (model is the
    production-batch proxy)."""
    by_model: dict[str, list[str]] = {}
    for d in devices.values():
        by_model.setdefault(d.model, []).append(d.device_id)
    pairs: list[tuple[str, str]] = []
    for ids in by_model.values():
        ids.sort()
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                pairs.append((ids[i], ids[j]))
    return sorted(pairs)


def establish_clor(devices: Mapping[str, Device],
                   radius_m: float = DEFAULT_CLOR_RADIUS_M) -> list[tuple[str, str]]:
    """Pair fixed devices whose home points lie within `radius_m` meters.
    Mobile devices never receive this kind."""
    fixed = sorted((d for d in devices.values() if d.kind == FIXED),
                   key=lambda d: d.device_id)
    pairs: list[tuple[str, str]] = []
    for i in range(len(fixed)):
        for j in range(i + 1, len(fixed)):
            if haversine_m(fixed[i].location, fixed[j].location) <= radius_m:
                pairs.append((fixed[i].device_id, fixed[j].device_id))
    return pairs


def establish_oor(devices: Mapping[str, Device]) -> list[tuple[str, str]]:
    """Pair the mobile and fixed device of each owner."""
    by_owner: dict[str, list[str]] = {}
    for d in devices.values():
        by_owner.setdefault(d.owner, []).append(d.device_id)
    pairs = []
    for ids in by_owner.values():
        if len(ids) == 2:
            a, b = sorted(ids)
            pairs.append((a, b))
    return sorted(pairs)


def establish_sor(devices: Mapping[str, Device], colocations: Sequence[CoLocation],
                  meet_threshold: int = DEFAULT_SOR_THRESHOLD) -> list[tuple[str, str]]:
    """Pair the mobile devices of two users who co-located at least
    `meet_threshold` times."""
    if meet_threshold < 1:
        raise ValueError("meet_threshold must be >= 1")
    meetings: dict[tuple[str, str], int] = {}
    for c in colocations:
        key = (c.user_a, c.user_b)
        meetings[key] = meetings.get(key, 0) + 1
    pairs = []
    for (ua, ub), n in sorted(meetings.items()):
        if n < meet_threshold:
            continue
        da, db = device_id(ua, MOBILE), device_id(ub, MOBILE)
        if da in devices and db in devices:
            pairs.append((da, db) if da < db else (db, da))
    return sorted(pairs)


class SIoTGraph:
    """Typed-edge device graph with owner indexing and kind-filtered views."""

    def __init__(self, devices: Mapping[str, Device]):
        self.devices = dict(devices)
        self._edges: dict[tuple[str, str], SIoTEdge] = {}
        self._adj: dict[str, set[str]] = {d: set() for d in self.devices}
        self.owner_devices: dict[str, list[str]] = {}
        for d in sorted(self.devices.values(), key=lambda d: d.device_id):
            self.owner_devices.setdefault(d.owner, []).append(d.device_id)

    def add_edge(self, a: str, b: str, kind: RelationshipKind,
                 interests: Iterable[int] = ()) -> None:
        if a == b:
            raise ValueError(f"self-edge on device {a!r}")
        if a not in self.devices or b not in self.devices:
            raise ValueError(f"unknown device in edge ({a!r}, {b!r})")
        if a > b:
            a, b = b, a
        interests = frozenset(interests)
        if kind is not RelationshipKind.CIOR and interests:
            raise ValueError("only C-IOR edges carry interests")
        old = self._edges.get((a, b))
        if old is None:
            edge = SIoTEdge(a, b, frozenset({kind}), interests)
        else:
            edge = SIoTEdge(a, b, old.kinds | {kind}, old.cior_interests | interests)
        self._edges[(a, b)] = edge
        self._adj[a].add(b)
        self._adj[b].add(a)

    def edges(self) -> list[SIoTEdge]:
        return [self._edges[k] for k in sorted(self._edges)]

    def edge_between(self, a: str, b: str) -> SIoTEdge | None:
        if a > b:
            a, b = b, a
        return self._edges.get((a, b))

    def kind_counts(self) -> dict[RelationshipKind, int]:
        counts = {kind: 0 for kind in RelationshipKind}
        for e in self._edges.values():
            for kind in e.kinds:
                counts[kind] += 1
        return counts

    def copy(self) -> "SIoTGraph":
        g = SIoTGraph(self.devices)
        g._edges = dict(self._edges)
        g._adj = {d: set(nbrs) for d, nbrs in self._adj.items()}
        return g

    def select_kinds(self, kinds: Iterable[RelationshipKind],
                     interest: int | None = None) -> "SIoTView":
        return SIoTView(self, kinds, interest)


class SIoTView:
    """Read-only view of a SIoTGraph exposing only edges carrying at least
    one selected kind. C-IOR edges additionally require the view's interest
    (when set) to be among the edge's interests."""

    def __init__(self, graph: SIoTGraph, kinds: Iterable[RelationshipKind],
                 interest: int | None = None):
        self.graph = graph
        self.kinds = frozenset(kinds)
        self.interest = interest
        if not self.kinds:
            raise ValueError("kind selection must be non-empty")

    def _visible(self, edge: SIoTEdge) -> bool:
        base = edge.kinds & (self.kinds - {RelationshipKind.CIOR})
        if base:
            return True
        if (RelationshipKind.CIOR in self.kinds
                and RelationshipKind.CIOR in edge.kinds):
            return self.interest is None or self.interest in edge.cior_interests
        return False

    def edges(self) -> list[SIoTEdge]:
        return [e for e in self.graph.edges() if self._visible(e)]

    def neighbors(self, device: str) -> tuple[str, ...]:
        out = []
        for other in self.graph._adj.get(device, ()):
            edge = self.graph.edge_between(device, other)
            if edge is not None and self._visible(edge):
                out.append(other)
        return tuple(sorted(out))

    def owner_contacts(self) -> dict[str, tuple[str, ...]]:
        """Owner-level projection: for each user, the owners of devices
        linked to any of that user's devices (self excluded)."""
        contacts: dict[str, set[str]] = {}
        for edge in self.edges():
            oa = self.graph.devices[edge.device_a].owner
            ob = self.graph.devices[edge.device_b].owner
            if oa == ob:
                continue
            contacts.setdefault(oa, set()).add(ob)
            contacts.setdefault(ob, set()).add(oa)
        return {u: tuple(sorted(vs)) for u, vs in contacts.items()}


def build_siot_graph(devices: Mapping[str, Device], colocations: Sequence[CoLocation],
                     sor_threshold: int = DEFAULT_SOR_THRESHOLD,
                     clor_radius_m: float = DEFAULT_CLOR_RADIUS_M) -> SIoTGraph:
    """Assemble the device graph from the trace-derived relationship rules.
    C-IOR edges are added later by the protocol, never here."""
    g = SIoTGraph(devices)
    for a, b in establish_por(devices):
        g.add_edge(a, b, RelationshipKind.POR)
    for a, b in establish_clor(devices, clor_radius_m):
        g.add_edge(a, b, RelationshipKind.CLOR)
    for a, b in establish_oor(devices):
        g.add_edge(a, b, RelationshipKind.OOR)
    for a, b in establish_sor(devices, colocations, sor_threshold):
        g.add_edge(a, b, RelationshipKind.SOR)
    return g


# --- exports -----------------------------------------------------------------

DEVICE_HEADER = ["device_id", "owner", "kind", "model", "lat", "lon"]


def write_devices_csv(devices: Mapping[str, Device], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DEVICE_HEADER)
        for did in sorted(devices):
            d = devices[did]
            lat = repr(d.location.lat) if d.location else ""
            lon = repr(d.location.lon) if d.location else ""
            w.writerow([d.device_id, d.owner, d.kind, d.model, lat, lon])


def read_devices_csv(path: str | Path) -> dict[str, Device]:
    devices: dict[str, Device] = {}
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != DEVICE_HEADER:
            raise ValueError(f"{path}: unexpected device header {header}")
        for did, owner, kind, model, lat, lon in reader:
            loc = GeoPoint(float(lat), float(lon)) if lat else None
            devices[did] = Device(did, owner, kind, model, loc)
    return devices


def write_siot_graph(graph: SIoTGraph, path: str | Path) -> None:
    """Line-oriented export `device_a,device_b,kind[,interest_id]`, one line
    per edge kind (C-IOR lines are repeated per interest)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for edge in graph.edges():
            for kind in sorted(edge.kinds, key=lambda k: k.value):
                if kind is RelationshipKind.CIOR:
                    for interest in sorted(edge.cior_interests):
                        fh.write(f"{edge.device_a},{edge.device_b},{kind.value},{interest}\n")
                else:
                    fh.write(f"{edge.device_a},{edge.device_b},{kind.value}\n")


def read_siot_graph(path: str | Path, devices: Mapping[str, Device]) -> SIoTGraph:
    g = SIoTGraph(devices)
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) == 3:
                a, b, kind_text = parts
                g.add_edge(a, b, parse_kind(kind_text))
            elif len(parts) == 4:
                a, b, kind_text, interest = parts
                kind = parse_kind(kind_text)
                if kind is not RelationshipKind.CIOR:
                    raise ValueError(f"{path}: interest on non-C-IOR line {line!r}")
                g.add_edge(a, b, kind, (int(interest),))
            else:
                raise ValueError(f"{path}: malformed edge line {line!r}")
    return g

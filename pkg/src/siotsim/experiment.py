"""Experiment campaigns: discovery runs per source in friendships-only vs
device-enhanced modes, swept over cooperation levels, relationship kinds
and hop budgets, with coupled randomness across modes and sweep points."""

from __future__ import annotations

import concurrent.futures
import csv
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from . import rng
from .humangraph import (DEFAULT_MAX_HOPS, AuthorizationMap,
                         AuthorizationPolicy, ReachContext, interest_reach)
from .interests import DEFAULT_SIMILARITY_THRESHOLD
from .protocol import DEFAULT_TTL, ORIGIN_BOTH, ORIGIN_MOBILE, run_cior_round
from .scenario import Scenario
from .siotgraph import BASE_KINDS, RelationshipKind, SIoTGraph, parse_kind

MODE_FRIENDSHIPS = "friendships"
MODE_ENHANCED = "enhanced"


@dataclass(frozen=True)
class Mode:
    """Reach mode: friendships only, or friendships plus the device layer
    with the given relationship kinds (and protocol-established co-interest
    links when `cior` is set)."""

    name: str
    kinds: frozenset[RelationshipKind] = frozenset()
    cior: bool = False

    def __post_init__(self) -> None:
        if self.name not in (MODE_FRIENDSHIPS, MODE_ENHANCED):
            raise ValueError(f"unknown mode: {self.name!r}")
        if self.name == MODE_FRIENDSHIPS and (self.kinds or self.cior):
            raise ValueError("friendships mode uses zero device edges")

    @staticmethod
    def friendships() -> "Mode":
        return Mode(MODE_FRIENDSHIPS)

    @staticmethod
    def enhanced(kinds: Iterable[RelationshipKind] = BASE_KINDS,
                 cior: bool = True) -> "Mode":
        return Mode(MODE_ENHANCED, frozenset(kinds) - {RelationshipKind.CIOR}, cior)

    def kinds_label(self) -> str:
        if self.name == MODE_FRIENDSHIPS:
            return ""
        parts = sorted(k.value for k in self.kinds)
        if self.cior:
            parts.append(RelationshipKind.CIOR.value)
        return "+".join(parts)


@dataclass(frozen=True)
class DecisionStreams:
    """Coupled per-replicate uniform draws, keyed only by the entity, so
    the identical draw is reused across modes and sweep points."""

    seed: int
    replicate: int

    def auth_draw(self, node: str) -> float:
        return rng.unit_draw(self.seed, self.replicate, "auth", node)

    def spread_draw(self, entity: str) -> float:
        return rng.unit_draw(self.seed, self.replicate, "spread", entity)


def couple_randomness(seed: int, replicate: int) -> DecisionStreams:
    return DecisionStreams(seed, replicate)


@dataclass(frozen=True)
class SweepPoint:
    var: str
    value: str
    policy: AuthorizationPolicy
    ttl: int
    kinds: frozenset[RelationshipKind]
    max_hops: int


@dataclass(frozen=True)
class SourceRun:
    campaign: str
    interest: int
    mode: str
    kinds: str
    sweep_var: str
    sweep_value: str
    replicate: int
    source: str
    reached: frozenset[str]
    hops: dict[str, int]
    denominator: int

    @property
    def irn_pct(self) -> float:
        if self.denominator == 0:
            return 0.0
        return 100.0 * len(self.reached) / self.denominator

    @property
    def mean_hops(self) -> float | None:
        if not self.reached:
            return None
        return sum(self.hops[n] for n in self.reached) / len(self.reached)


@dataclass
class ExperimentResult:
    campaign: str
    runs: list[SourceRun] = field(default_factory=list)


@dataclass(frozen=True)
class ExperimentConfig:
    campaign: str = "campaign"
    scenario: str | None = None
    interest: int = 3
    modes: tuple[str, ...] = (MODE_FRIENDSHIPS, MODE_ENHANCED)
    kinds: frozenset[RelationshipKind] = BASE_KINDS
    cior: bool = True
    sweep: str = "none"
    spread_values: tuple[float, ...] = ()
    auth_values: tuple[tuple[float, ...], ...] = ()
    kind_sets: tuple[frozenset[RelationshipKind], ...] = ()
    ttl_values: tuple[int, ...] = ()
    hops_values: tuple[int, ...] = ()
    auth_prob_per_hop: tuple[float, ...] = (1.0,)
    spread_prob_per_hop: tuple[float, ...] = (1.0,)
    replicates: int = 30
    seed: int = 0
    include_isolated: bool = True
    max_hops: int = DEFAULT_MAX_HOPS
    ttl: int = DEFAULT_TTL
    sim_threshold: float = DEFAULT_SIMILARITY_THRESHOLD
    origin_device: str = ORIGIN_MOBILE
    sources: str = "all"
    # pipeline-stage thresholds, addressable from the same config file
    min_checkins: int = 10
    min_places: int = 10
    coloc_radius_m: float = 250.0
    coloc_window_s: float = 1800.0
    poi_radius_m: float = 250.0
    interest_threshold: int = 10
    sor_threshold: int = 3
    clor_radius_m: float = 250.0
    home_cell_deg: float = 0.25

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.sweep not in ("none", "spread", "auth", "kinds", "ttl", "hops"):
            raise ValueError(f"unknown sweep variable: {self.sweep!r}")
        for mode in self.modes:
            if mode not in (MODE_FRIENDSHIPS, MODE_ENHANCED):
                raise ValueError(f"unknown mode: {mode!r}")
        if self.origin_device not in (ORIGIN_MOBILE, ORIGIN_BOTH):
            raise ValueError(f"unknown origin_device: {self.origin_device!r}")
        if self.sources != "all":
            if int(self.sources) < 1:
                raise ValueError("sources sample must be >= 1")
        if self.ttl < 1 or self.max_hops < 1:
            raise ValueError("ttl and max_hops must be >= 1")
        if any(t < 1 for t in self.ttl_values) or any(h < 1 for h in self.hops_values):
            raise ValueError("ttl_values and hops_values must be >= 1")
        self.sweep_points()  # validates probability vectors and sweep values

    def sweep_points(self) -> list[SweepPoint]:
        base_policy = AuthorizationPolicy(self.auth_prob_per_hop,
                                          self.spread_prob_per_hop)
        if self.sweep == "none":
            return [SweepPoint("none", "", base_policy, self.ttl, self.kinds,
                               self.max_hops)]
        if self.sweep == "spread":
            if not self.spread_values:
                raise ValueError("sweep=spread needs spread_values")
            return [SweepPoint("spread", _fmt(v),
                               replace(base_policy, spread_prob_per_hop=(v,)),
                               self.ttl, self.kinds, self.max_hops)
                    for v in self.spread_values]
        if self.sweep == "auth":
            if not self.auth_values:
                raise ValueError("sweep=auth needs auth_values")
            return [SweepPoint("auth", ",".join(_fmt(x) for x in vec),
                               replace(base_policy, auth_prob_per_hop=vec),
                               self.ttl, self.kinds, self.max_hops)
                    for vec in self.auth_values]
        if self.sweep == "kinds":
            if not self.kind_sets:
                raise ValueError("sweep=kinds needs kind_sets")
            return [SweepPoint("kinds",
                               "+".join(sorted(k.value for k in kinds)),
                               base_policy, self.ttl, kinds, self.max_hops)
                    for kinds in self.kind_sets]
        if self.sweep == "ttl":
            if not self.ttl_values:
                raise ValueError("sweep=ttl needs ttl_values")
            return [SweepPoint("ttl", str(t), base_policy, t, self.kinds,
                               self.max_hops)
                    for t in self.ttl_values]
        if not self.hops_values:
            raise ValueError("sweep=hops needs hops_values")
        return [SweepPoint("hops", str(h), base_policy, self.ttl, self.kinds, h)
                for h in self.hops_values]

    def mode_for(self, name: str, point: SweepPoint) -> Mode:
        if name == MODE_FRIENDSHIPS:
            return Mode.friendships()
        return Mode.enhanced(point.kinds, self.cior)


def _fmt(v: float) -> str:
    return f"{v:g}"


_BOOL_VALUES = {"true": True, "1": True, "yes": True,
                "false": False, "0": False, "no": False}


def _parse_bool(value: str, key: str) -> bool:
    try:
        return _BOOL_VALUES[value.strip().lower()]
    except KeyError:
        raise ValueError(f"config key {key}: expected a boolean, got {value!r}")


def _parse_floats(value: str) -> tuple[float, ...]:
    return tuple(float(x) for x in value.split(",") if x.strip())


def _parse_kindset(value: str) -> frozenset[RelationshipKind]:
    return frozenset(parse_kind(x.strip()) for x in value.split(",") if x.strip())


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse a flat `key = value` experiment config file. Unknown keys are
    fatal."""
    kwargs: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            _apply_config_key(kwargs, key, value, path, lineno)
    return ExperimentConfig(**kwargs)


def _apply_config_key(kwargs: dict, key: str, value: str,
                      path: str | Path, lineno: int) -> None:
    ints = {"interest", "replicates", "seed", "max_hops", "ttl", "min_checkins",
            "min_places", "interest_threshold", "sor_threshold"}
    floats = {"sim_threshold", "coloc_radius_m", "coloc_window_s", "poi_radius_m",
              "clor_radius_m", "home_cell_deg"}
    strings = {"campaign", "scenario", "sweep", "origin_device", "sources"}
    try:
        if key in ints:
            kwargs[key] = int(value)
        elif key in floats:
            kwargs[key] = float(value)
        elif key in strings:
            kwargs[key] = value
        elif key == "modes":
            kwargs[key] = tuple(m.strip() for m in value.split(",") if m.strip())
        elif key == "kinds":
            kwargs[key] = _parse_kindset(value) - {RelationshipKind.CIOR}
        elif key == "cior":
            kwargs[key] = _parse_bool(value, key)
        elif key == "include_isolated":
            kwargs[key] = _parse_bool(value, key)
        elif key == "spread_values":
            kwargs[key] = _parse_floats(value)
        elif key == "auth_values":
            kwargs[key] = tuple(_parse_floats(v) for v in value.split(";") if v.strip())
        elif key == "kind_sets":
            kwargs[key] = tuple(_parse_kindset(v) for v in value.split(";") if v.strip())
        elif key == "ttl_values":
            kwargs[key] = tuple(int(v) for v in value.split(",") if v.strip())
        elif key == "hops_values":
            kwargs[key] = tuple(int(v) for v in value.split(",") if v.strip())
        elif key == "auth_prob_per_hop":
            kwargs[key] = _parse_floats(value)
        elif key == "spread_prob_per_hop":
            kwargs[key] = _parse_floats(value)
        else:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
    except ValueError as exc:
        if "unknown config key" in str(exc) or "expected a boolean" in str(exc):
            raise
        raise ValueError(f"{path}:{lineno}: bad value for {key!r}: {value!r}") from exc


def build_reach_context(scenario: Scenario, interest: int, mode: Mode,
                        auth: AuthorizationMap, max_hops: int,
                        siot: SIoTGraph | None = None) -> ReachContext:
    """Assemble the reachability context for one (mode, decisions) pair.

    In enhanced mode every node additionally sees, one hop away, the owners
    of devices linked to its own devices in the selected-kind view (with
    co-interest edges gated on the interest)."""
    holders = scenario.holders(interest)
    extra = None
    if mode.name == MODE_ENHANCED:
        graph = siot if siot is not None else scenario.siot
        view_kinds = set(mode.kinds)
        if mode.cior:
            view_kinds.add(RelationshipKind.CIOR)
        if view_kinds:
            extra = graph.select_kinds(view_kinds, interest).owner_contacts()
        else:
            extra = {}
    return ReachContext.for_graph(scenario.friendships, holders, auth,
                                  max_hops, extra)


def run_source(source: str, interest: int, mode: Mode, scenario: Scenario,
               auth: AuthorizationMap, max_hops: int = DEFAULT_MAX_HOPS,
               siot: SIoTGraph | None = None,
               context: ReachContext | None = None,
               include_isolated: bool = True,
               campaign: str = "adhoc", sweep_var: str = "none",
               sweep_value: str = "", replicate: int = 0) -> SourceRun:
    """One discovery run: everything the source can reach for the interest
    under the mode, with minimum hop counts."""
    if context is None:
        context = build_reach_context(scenario, interest, mode, auth, max_hops, siot)
    if source not in context.holders:
        raise ValueError(f"source {source!r} does not hold interest {interest}")
    _, best = interest_reach(source, context)
    reached = frozenset(best) - {source}
    eligible = context.holders - {source}
    if not include_isolated:
        eligible -= scenario.isolated_users()
    return SourceRun(
        campaign=campaign,
        interest=interest,
        mode=mode.name,
        kinds=mode.kinds_label(),
        sweep_var=sweep_var,
        sweep_value=sweep_value,
        replicate=replicate,
        source=source,
        reached=reached,
        hops={n: best[n] for n in reached},
        denominator=len(eligible),
    )


def select_sources(scenario: Scenario, config: ExperimentConfig) -> list[str]:
    holders = sorted(scenario.holders(config.interest))
    if not holders:
        raise ValueError(f"no eligible sources hold interest {config.interest}")
    if config.sources == "all":
        return holders
    k = int(config.sources)
    if k >= len(holders):
        return holders
    return sorted(rng.stream(config.seed, "sources", config.interest).sample(holders, k))


def _run_replicate(scenario: Scenario, config: ExperimentConfig,
                   sources: Sequence[str], replicate: int) -> list[SourceRun]:
    runs: list[SourceRun] = []
    all_holders = sorted(scenario.holders(config.interest))
    for point in config.sweep_points():
        auth = AuthorizationMap(point.policy, config.seed, replicate)
        for mode_name in config.modes:
            mode = config.mode_for(mode_name, point)
            siot = scenario.siot
            if mode.name == MODE_ENHANCED and mode.cior and mode.kinds:
                siot = run_cior_round(all_holders, scenario.siot, mode.kinds,
                                      scenario.profiles, auth, config.interest,
                                      ttl=point.ttl,
                                      sim_threshold=config.sim_threshold,
                                      origin_device=config.origin_device)
            context = build_reach_context(scenario, config.interest, mode,
                                          auth, point.max_hops, siot)
            for source in sources:
                runs.append(run_source(
                    source, config.interest, mode, scenario, auth,
                    max_hops=point.max_hops, siot=siot, context=context,
                    include_isolated=config.include_isolated,
                    campaign=config.campaign, sweep_var=point.var,
                    sweep_value=point.value, replicate=replicate))
    return runs


def run_campaign(scenario: Scenario, config: ExperimentConfig,
                 threads: int = 1) -> ExperimentResult:
    """Run the full campaign: every (sweep point, mode, replicate, source)
    combination. Replicates use independent decision draws; results are
    deterministic for a fixed seed regardless of `threads`."""
    sources = select_sources(scenario, config)
    result = ExperimentResult(config.campaign)
    if threads > 1 and config.replicates > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_replicate, scenario, config, sources, r)
                       for r in range(config.replicates)]
            for fut in futures:
                result.runs.extend(fut.result())
    else:
        for r in range(config.replicates):
            result.runs.extend(_run_replicate(scenario, config, sources, r))
    return result


RESULT_HEADER = ["campaign", "interest", "mode", "kinds", "sweep_var",
                 "sweep_value", "replicate", "source", "reached",
                 "denominator", "irn_pct", "mean_hops"]


def result_rows(result: ExperimentResult) -> list[list[str]]:
    rows = []
    for run in result.runs:
        mean_hops = run.mean_hops
        rows.append([
            run.campaign, str(run.interest), run.mode, run.kinds,
            run.sweep_var, run.sweep_value, str(run.replicate), run.source,
            str(len(run.reached)), str(run.denominator),
            f"{run.irn_pct:.6g}",
            "" if mean_hops is None else f"{mean_hops:.6g}",
        ])
    return rows


def result_csv_text(result: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_HEADER)
    w.writerows(result_rows(result))
    return buf.getvalue()


def write_result_csv(result: ExperimentResult, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(result_csv_text(result))


@dataclass(frozen=True)
class ResultRow:
    """A re-loaded result record; carries the aggregate numbers but not the
    per-node reach sets."""

    campaign: str
    interest: int
    mode: str
    kinds: str
    sweep_var: str
    sweep_value: str
    replicate: int
    source: str
    reached_count: int
    denominator: int
    irn_pct: float
    mean_hops: float | None


def read_result_csv(path: str | Path) -> list[ResultRow]:
    rows: list[ResultRow] = []
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RESULT_HEADER:
            raise ValueError(f"{path}: unexpected result header {header}")
        for rec in reader:
            (campaign, interest, mode, kinds, sweep_var, sweep_value,
             replicate, source, reached, denominator, irn_pct, mean_hops) = rec
            rows.append(ResultRow(
                campaign, int(interest), mode, kinds, sweep_var, sweep_value,
                int(replicate), source, int(reached), int(denominator),
                float(irn_pct), float(mean_hops) if mean_hops else None))
    return rows

"""Aggregation of source runs into reported metric series and their
deterministic CSV / plot-data exports."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

Z_95 = 1.96


@dataclass(frozen=True)
class MetricSeries:
    label: str
    x: tuple
    y: tuple[float, ...]
    ci_halfwidth: tuple[float | None, ...]

    def __post_init__(self) -> None:
        if not (len(self.x) == len(self.y) == len(self.ci_halfwidth)):
            raise ValueError("series vectors must have equal length")
        if any(c is not None and c < 0 for c in self.ci_halfwidth):
            raise ValueError("ci_halfwidth must be >= 0")


def _series_label(run, series_keys: Sequence[str]) -> str:
    parts = []
    for key in series_keys:
        value = getattr(run, key)
        parts.append(str(value) if value != "" else "-")
    return "|".join(parts)


def _aggregate(values_by_replicate: dict[int, list[float]],
               pooled: bool = False) -> tuple[float, float | None]:
    """Average sources within each replicate, then replicates (or pool all
    runs directly when `pooled`); the confidence half-width is computed
    over the replicate means and is absent (not zero) for a single
    replicate."""
    means = [float(np.mean(vs)) for _, vs in sorted(values_by_replicate.items())]
    if pooled:
        y = float(np.mean([v for vs in values_by_replicate.values() for v in vs]))
    else:
        y = float(np.mean(means))
    if len(means) < 2:
        return y, None
    ci = Z_95 * float(np.std(means, ddof=1)) / math.sqrt(len(means))
    return y, ci


def mean_irn_pct(runs: Iterable, x_key: str = "sweep_value",
                 series_keys: Sequence[str] = ("mode", "kinds"),
                 pooled: bool = False) -> list[MetricSeries]:
    """Mean percentage of interested nodes reached, grouped into one series
    per `series_keys` with one point per `x_key` value. Empty groups are
    omitted with a warning. By default sources are averaged within each
    replicate before replicates are averaged; `pooled` averages all runs in
    one pass instead (identical when every replicate covers the same
    sources)."""
    table: dict[str, dict] = {}
    x_order: dict[str, list] = {}
    for run in runs:
        label = _series_label(run, series_keys)
        x = getattr(run, x_key)
        series = table.setdefault(label, {})
        if x not in series:
            x_order.setdefault(label, []).append(x)
            series[x] = {}
        series[x].setdefault(run.replicate, []).append(run.irn_pct)
    out = []
    for label in sorted(table):
        xs, ys, cis = [], [], []
        for x in x_order[label]:
            by_rep = table[label][x]
            if not by_rep:
                log.warning("mean_irn_pct: empty group %s at %s", label, x)
                continue
            y, ci = _aggregate(by_rep, pooled)
            xs.append(x)
            ys.append(y)
            cis.append(ci)
        out.append(MetricSeries(label, tuple(xs), tuple(ys), tuple(cis)))
    return out


def irn_pct_at_hop(run, hop: int) -> float:
    """Percentage of interested nodes reached within `hop` hops; zero at
    hop 0 by definition."""
    if hop <= 0 or run.denominator == 0:
        return 0.0
    within = sum(1 for n in run.reached if run.hops[n] <= hop)
    return 100.0 * within / run.denominator


def irn_by_hop(runs: Iterable, max_hops: int,
               series_keys: Sequence[str] = ("mode", "kinds", "sweep_value"),
               ) -> list[MetricSeries]:
    """Cumulative reach curves: one point per hop 1..max_hops, counting
    only nodes first reached within that many hops. Non-decreasing in the
    hop index by construction."""
    groups: dict[str, list] = {}
    for run in runs:
        groups.setdefault(_series_label(run, series_keys), []).append(run)
    out = []
    for label in sorted(groups):
        xs, ys, cis = [], [], []
        for hop in range(1, max_hops + 1):
            by_rep: dict[int, list[float]] = {}
            for run in groups[label]:
                by_rep.setdefault(run.replicate, []).append(irn_pct_at_hop(run, hop))
            y, ci = _aggregate(by_rep)
            xs.append(hop)
            ys.append(y)
            cis.append(ci)
        out.append(MetricSeries(label, tuple(xs), tuple(ys), tuple(cis)))
    return out


@dataclass(frozen=True)
class HopComparison:
    """Paired per-source mean hop counts over nodes reached in both
    conditions, plus the pooled with/without ratio."""

    pairs: tuple[tuple[str, float, float], ...]  # (source, with, without)
    ratio: float | None


def mean_hops_comparison(runs_with: Iterable, runs_without: Iterable) -> HopComparison:
    """Compare hop counts with and without co-interest links.

    Runs are matched on (source, replicate, sweep_value); for each match
    only nodes reached in both conditions contribute. Matches with no
    common reached node are skipped with a warning.
    """
    def index(runs):
        return {(r.source, r.replicate, r.sweep_value): r for r in runs}

    with_idx = index(runs_with)
    without_idx = index(runs_without)
    per_source: dict[str, list[tuple[float, float]]] = {}
    for key in sorted(with_idx.keys() & without_idx.keys()):
        rw, ro = with_idx[key], without_idx[key]
        common = rw.reached & ro.reached
        if not common:
            log.warning("mean_hops_comparison: no common reached nodes for %s", key)
            continue
        w = sum(rw.hops[n] for n in common) / len(common)
        o = sum(ro.hops[n] for n in common) / len(common)
        per_source.setdefault(key[0], []).append((w, o))
    pairs = []
    for source in sorted(per_source):
        ws, os_ = zip(*per_source[source])
        pairs.append((source, float(np.mean(ws)), float(np.mean(os_))))
    if not pairs:
        return HopComparison((), None)
    total_with = float(np.mean([p[1] for p in pairs]))
    total_without = float(np.mean([p[2] for p in pairs]))
    ratio = total_with / total_without if total_without > 0 else None
    return HopComparison(tuple(pairs), ratio)


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return f"{value:.6g}"


def series_csv_text(series: Sequence[MetricSeries]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "x", "y", "ci_halfwidth"])
    for s in series:
        for x, y, ci in zip(s.x, s.y, s.ci_halfwidth):
            w.writerow([s.label, _fmt(x), _fmt(y), "" if ci is None else _fmt(ci)])
    return buf.getvalue()


def emit_csv(series: Sequence[MetricSeries], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(series_csv_text(series))


def plot_data_text(series: Sequence[MetricSeries]) -> str:
    """Whitespace-separated x/y/err blocks, one labeled block per series,
    consumable by generic plotting tools."""
    blocks = []
    for s in series:
        lines = [f"# {s.label}"]
        for x, y, ci in zip(s.x, s.y, s.ci_halfwidth):
            if ci is None:
                lines.append(f"{_fmt(x)} {_fmt(y)}")
            else:
                lines.append(f"{_fmt(x)} {_fmt(y)} {_fmt(ci)}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def emit_plot_data(series: Sequence[MetricSeries], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(plot_data_text(series))

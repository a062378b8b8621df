"""Joined evaluation records, summaries, slicing, and CSV export.

The unit of analysis is one scenario evaluated under an original and a
perturbed variant of the same predictor. joint_evaluate pairs the two
prediction sets with the ground truth future and the perturbation
covariates; everything downstream (summaries, covariate slicing, the
scatter of original versus perturbed error) is a pure function of those
records.
"""

from __future__ import annotations

import bisect
import csv
import enum
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .labels import AgreementHistogram, CausalLabelFile, causal_union, effective_causal_ids
from .metrics import (
    DEFAULT_METRIC_CONFIG,
    AbsDeltaSummary,
    MetricConfig,
    abs_delta,
    min_ade,
    min_fde,
    trajectory_set_iou,
    ts_min_ade,
)
from .scenario import (
    CURRENT_INDEX,
    PredictionSet,
    Scenario,
    Trajectory,
    av_speed,
    distance_to_av,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PerExampleRecord:
    """Paired metrics and covariates for one scenario."""

    scenario_id: str
    original_min_ade: float
    perturbed_min_ade: float
    original_min_fde: float
    perturbed_min_fde: float
    iou: float
    ts_min_ade: float
    av_speed: float
    num_removed: int | None
    removed_fraction_of_context: float | None
    min_removed_distance: float | None


@dataclass(frozen=True)
class SkippedScenario:
    scenario_id: str
    reason: str


def ground_truth_future(scenario: Scenario) -> Trajectory | None:
    """The AV's observed future, or None when any future state is invalid."""
    states = scenario.av_track().states[CURRENT_INDEX + 1 :]
    if not all(s.valid for s in states):
        return None
    return Trajectory([(s.x, s.y) for s in states])


def joint_evaluate(
    corpus: Iterable[Scenario],
    predictions_original: Mapping[str, PredictionSet],
    predictions_perturbed: Mapping[str, PredictionSet],
    covariates: Mapping[str, Mapping] | None = None,
    config: MetricConfig = DEFAULT_METRIC_CONFIG,
) -> tuple[list[PerExampleRecord], list[SkippedScenario]]:
    """Join scenario ground truth with both prediction variants.

    Scenarios missing either prediction variant or a fully valid future
    are skipped, not fatal; the skip list names each with a reason, and
    len(records) + len(skipped) equals the corpus size.
    """
    records: list[PerExampleRecord] = []
    skipped: list[SkippedScenario] = []
    for scenario in corpus:
        sid = scenario.scenario_id
        gt = ground_truth_future(scenario)
        if gt is None:
            skipped.append(SkippedScenario(sid, "AV future has invalid states"))
            continue
        if sid not in predictions_original:
            skipped.append(SkippedScenario(sid, "missing original prediction"))
            continue
        if sid not in predictions_perturbed:
            skipped.append(SkippedScenario(sid, "missing perturbed prediction"))
            continue
        po = predictions_original[sid]
        pp = predictions_perturbed[sid]
        cov = dict(covariates.get(sid, {})) if covariates else {}
        records.append(
            PerExampleRecord(
                scenario_id=sid,
                original_min_ade=min_ade(gt, po, config),
                perturbed_min_ade=min_ade(gt, pp, config),
                original_min_fde=min_fde(gt, po, config),
                perturbed_min_fde=min_fde(gt, pp, config),
                iou=trajectory_set_iou(po, pp, config),
                ts_min_ade=ts_min_ade(po, pp),
                av_speed=av_speed(scenario),
                num_removed=cov.get("num_removed"),
                removed_fraction_of_context=cov.get("removed_fraction_of_context"),
                min_removed_distance=cov.get("min_removed_distance"),
            )
        )
    for s in skipped:
        logger.warning("skipping scenario %r: %s", s.scenario_id, s.reason)
    return records, skipped


@dataclass(frozen=True)
class EvaluationSummary:
    """Corpus-level roll-up of the per-example records."""

    n: int
    min_ade: AbsDeltaSummary
    min_fde: AbsDeltaSummary
    mean_iou: float
    mean_ts_min_ade: float


def summarize(records: list[PerExampleRecord]) -> EvaluationSummary:
    if not records:
        raise ValueError("summarize needs at least one record")
    return EvaluationSummary(
        n=len(records),
        min_ade=abs_delta([(r.original_min_ade, r.perturbed_min_ade) for r in records]),
        min_fde=abs_delta([(r.original_min_fde, r.perturbed_min_fde) for r in records]),
        mean_iou=sum(r.iou for r in records) / len(records),
        mean_ts_min_ade=sum(r.ts_min_ade for r in records) / len(records),
    )


class SliceDimension(str, enum.Enum):
    AV_SPEED = "av_speed"
    REMOVED_FRACTION = "removed_fraction"
    MIN_REMOVED_DISTANCE = "min_removed_distance"


# 5 mph steps to 75 mph; 10 percent steps with room for exactly 1.0;
# 10 m rings to 100 m.
DEFAULT_BIN_EDGES: dict[SliceDimension, tuple[float, ...]] = {
    SliceDimension.AV_SPEED: tuple(i * 2.235 for i in range(16)),
    SliceDimension.REMOVED_FRACTION: tuple(i * 0.1 for i in range(12)),
    SliceDimension.MIN_REMOVED_DISTANCE: tuple(float(i * 10) for i in range(11)),
}


@dataclass(frozen=True)
class SliceSpec:
    dimension: SliceDimension
    bin_edges: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.bin_edges) < 2:
            raise ValueError("need at least two bin edges")
        if list(self.bin_edges) != sorted(set(self.bin_edges)):
            raise ValueError("bin edges must be strictly increasing")

    @classmethod
    def with_default_edges(cls, dimension: SliceDimension | str) -> "SliceSpec":
        dim = SliceDimension(dimension)
        return cls(dimension=dim, bin_edges=DEFAULT_BIN_EDGES[dim])


@dataclass(frozen=True)
class SliceBin:
    """One covariate bin. lo/hi are None for the n/a bucket."""

    lo: float | None
    hi: float | None
    count: int
    summary: AbsDeltaSummary | None

    @property
    def label(self) -> str:
        if self.lo is None:
            return "n/a"
        return f"[{self.lo:.6g},{self.hi:.6g})"


@dataclass(frozen=True)
class SliceReport:
    dimension: SliceDimension
    bin_edges: tuple[float, ...]
    bins: list[SliceBin]
    na: SliceBin


def _record_value(record: PerExampleRecord, dimension: SliceDimension) -> float | None:
    if dimension == SliceDimension.AV_SPEED:
        return record.av_speed
    if dimension == SliceDimension.REMOVED_FRACTION:
        return record.removed_fraction_of_context
    if dimension == SliceDimension.MIN_REMOVED_DISTANCE:
        return record.min_removed_distance
    raise ValueError(f"unknown slice dimension {dimension!r}")


def _bin_summary(lo, hi, members: list[PerExampleRecord]) -> SliceBin:
    summary = (
        abs_delta([(r.original_min_ade, r.perturbed_min_ade) for r in members])
        if members
        else None
    )
    return SliceBin(lo=lo, hi=hi, count=len(members), summary=summary)


def slice_records(records: list[PerExampleRecord], spec: SliceSpec) -> SliceReport:
    """Partition records into half-open covariate bins.

    Records whose covariate is missing, or falls outside the edge range,
    land in the explicit n/a bucket, so bin counts plus the n/a count
    always add up to len(records).
    """
    edges = list(spec.bin_edges)
    members: list[list[PerExampleRecord]] = [[] for _ in range(len(edges) - 1)]
    na: list[PerExampleRecord] = []
    for record in records:
        value = _record_value(record, spec.dimension)
        if value is None:
            na.append(record)
            continue
        idx = bisect.bisect_right(edges, value) - 1
        if 0 <= idx < len(members) and value < edges[idx + 1]:
            members[idx].append(record)
        else:
            na.append(record)
    return SliceReport(
        dimension=spec.dimension,
        bin_edges=tuple(edges),
        bins=[
            _bin_summary(edges[i], edges[i + 1], members[i])
            for i in range(len(members))
        ],
        na=_bin_summary(None, None, na),
    )


@dataclass(frozen=True)
class CausalStats:
    """Corpus-level structure of the causal labels."""

    n_scenarios: int
    mean_causal_fraction: float
    frac_scenes_below_30pct: float
    mean_causal_distance: float | None
    mean_all_distance: float | None
    causal_likelihood_by_type: dict[str, float | None]


def causal_stats(corpus: Iterable[Scenario], labels: CausalLabelFile) -> CausalStats:
    """Aggregate label structure over every labeled scenario in the corpus.

    Distances are planar, measured from the AV at the current step to
    each agent's temporally nearest valid state; agent-type likelihoods
    and distances pool agents across scenarios.
    """
    fractions: list[float] = []
    causal_distances: list[float] = []
    all_distances: list[float] = []
    type_totals: dict[str, int] = {}
    type_causal: dict[str, int] = {}

    for scenario in corpus:
        sid = scenario.scenario_id
        if sid not in labels:
            continue
        non_av = [t for t in scenario.agents if t.agent_id != scenario.av_agent_id]
        if not non_av:
            logger.warning("scenario %r has no non-AV agents, skipped in stats", sid)
            continue
        causal_ids = effective_causal_ids(scenario, causal_union(labels, sid))
        fractions.append(len(causal_ids) / len(non_av))
        for track in non_av:
            type_totals[track.agent_type.value] = type_totals.get(track.agent_type.value, 0) + 1
            if track.agent_id in causal_ids:
                type_causal[track.agent_type.value] = type_causal.get(track.agent_type.value, 0) + 1
            if not any(s.valid for s in track.states):
                continue
            d = distance_to_av(scenario, track.agent_id)
            all_distances.append(d)
            if track.agent_id in causal_ids:
                causal_distances.append(d)

    if not fractions:
        raise ValueError("no labeled scenarios with agents in the corpus")
    return CausalStats(
        n_scenarios=len(fractions),
        mean_causal_fraction=sum(fractions) / len(fractions),
        frac_scenes_below_30pct=sum(1 for f in fractions if f < 0.3) / len(fractions),
        mean_causal_distance=(
            sum(causal_distances) / len(causal_distances) if causal_distances else None
        ),
        mean_all_distance=(
            sum(all_distances) / len(all_distances) if all_distances else None
        ),
        causal_likelihood_by_type={
            kind: (type_causal.get(kind, 0) / total if total else None)
            for kind, total in sorted(type_totals.items())
        },
    )


# ---------------------------------------------------------------------------
# CSV export. Floats are written with 6 significant digits, missing values
# as empty cells, newline "\n" on every platform.

RECORD_COLUMNS = (
    "scenario_id",
    "original_min_ade",
    "perturbed_min_ade",
    "original_min_fde",
    "perturbed_min_fde",
    "iou",
    "ts_min_ade",
    "av_speed",
    "num_removed",
    "removed_fraction_of_context",
    "min_removed_distance",
)

SUMMARY_COLUMNS = (
    "metric",
    "n",
    "mean_original",
    "mean_perturbed",
    "abs_delta",
    "abs_delta_std",
    "relative_pct",
    "fraction_improved",
    "mean",
)

SLICE_COLUMNS = (
    "dimension",
    "bin",
    "lo",
    "hi",
    "count",
    "mean_original",
    "mean_perturbed",
    "abs_delta",
    "abs_delta_std",
    "relative_pct",
    "fraction_improved",
)


def _fmt(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_records_csv(records: list[PerExampleRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(RECORD_COLUMNS)
        for r in records:
            w.writerow([_fmt(getattr(r, col)) for col in RECORD_COLUMNS])


def read_records_csv(path: str | Path) -> list[PerExampleRecord]:
    """Load records written by write_records_csv."""
    out: list[PerExampleRecord] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RECORD_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"records file {path} lacks columns: {sorted(missing)}")
        for row in reader:
            out.append(
                PerExampleRecord(
                    scenario_id=row["scenario_id"],
                    original_min_ade=float(row["original_min_ade"]),
                    perturbed_min_ade=float(row["perturbed_min_ade"]),
                    original_min_fde=float(row["original_min_fde"]),
                    perturbed_min_fde=float(row["perturbed_min_fde"]),
                    iou=float(row["iou"]),
                    ts_min_ade=float(row["ts_min_ade"]),
                    av_speed=float(row["av_speed"]),
                    num_removed=int(row["num_removed"]) if row["num_removed"] else None,
                    removed_fraction_of_context=(
                        float(row["removed_fraction_of_context"])
                        if row["removed_fraction_of_context"]
                        else None
                    ),
                    min_removed_distance=(
                        float(row["min_removed_distance"])
                        if row["min_removed_distance"]
                        else None
                    ),
                )
            )
    return out


def _summary_row(metric: str, s: AbsDeltaSummary) -> list[str]:
    return [
        metric,
        _fmt(s.n),
        _fmt(s.mean_original),
        _fmt(s.mean_perturbed),
        _fmt(s.abs_delta),
        _fmt(s.abs_delta_std),
        _fmt(s.relative_pct),
        _fmt(s.fraction_improved),
        "",
    ]


def write_summary_csv(summary: EvaluationSummary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        w.writerow(_summary_row("min_ade", summary.min_ade))
        w.writerow(_summary_row("min_fde", summary.min_fde))
        w.writerow(["iou", _fmt(summary.n), "", "", "", "", "", "", _fmt(summary.mean_iou)])
        w.writerow(
            ["ts_min_ade", _fmt(summary.n), "", "", "", "", "", "", _fmt(summary.mean_ts_min_ade)]
        )


def write_slices_csv(report: SliceReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(SLICE_COLUMNS)
        for b in list(report.bins) + [report.na]:
            s = b.summary
            w.writerow(
                [
                    report.dimension.value,
                    b.label,
                    _fmt(b.lo),
                    _fmt(b.hi),
                    _fmt(b.count),
                    _fmt(s.mean_original if s else None),
                    _fmt(s.mean_perturbed if s else None),
                    _fmt(s.abs_delta if s else None),
                    _fmt(s.abs_delta_std if s else None),
                    _fmt(s.relative_pct if s else None),
                    _fmt(s.fraction_improved if s else None),
                ]
            )


def write_stats_csv(stats: CausalStats, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["key", "value"])
        w.writerow(["n_scenarios", _fmt(stats.n_scenarios)])
        w.writerow(["mean_causal_fraction", _fmt(stats.mean_causal_fraction)])
        w.writerow(["frac_scenes_below_30pct", _fmt(stats.frac_scenes_below_30pct)])
        w.writerow(["mean_causal_distance", _fmt(stats.mean_causal_distance)])
        w.writerow(["mean_all_distance", _fmt(stats.mean_all_distance)])
        for kind, value in stats.causal_likelihood_by_type.items():
            w.writerow([f"causal_likelihood_{kind}", _fmt(value)])


def write_agreement_csv(histogram: AgreementHistogram, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["labeler_count", "num_agents"])
        for k, n in sorted(histogram.counts.items()):
            w.writerow([str(k), str(n)])


def export_csv(obj: object, path: str | Path) -> None:
    """Type-dispatched CSV export for every report artifact."""
    if isinstance(obj, EvaluationSummary):
        write_summary_csv(obj, path)
    elif isinstance(obj, SliceReport):
        write_slices_csv(obj, path)
    elif isinstance(obj, CausalStats):
        write_stats_csv(obj, path)
    elif isinstance(obj, AgreementHistogram):
        write_agreement_csv(obj, path)
    elif isinstance(obj, list) and all(isinstance(r, PerExampleRecord) for r in obj):
        write_records_csv(obj, path)
    else:
        raise TypeError(f"no CSV exporter for {type(obj).__name__}")

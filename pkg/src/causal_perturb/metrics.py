"""Forecasting metrics and paired-comparison summaries.

Accuracy metrics follow the usual multi-modal convention: compute the
error of each of the K hypotheses against the ground truth, keep the
best one per horizon, then average over the configured horizons. The
set-level metrics (voxel IoU, cross-set min ADE) compare two prediction
sets directly and need no ground truth; they quantify how much a
model's output moved when the scene was perturbed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import PredictionSet, Trajectory
from .validation import check_equal_lengths


@dataclass(frozen=True)
class MetricConfig:
    """Shared metric settings.

    horizons: evaluation horizons in seconds, averaged in the reported value.
    step_hz: trajectory sampling rate.
    k: default number of modes produced by predictors.
    iou_resolution: voxel edge length in meters for the set IoU.
    iou_upsample_hz: sampling rate trajectories are linearly upsampled to
        before voxelization, an integer multiple of step_hz.
    """

    horizons: tuple[float, ...] = (3.0, 5.0, 8.0)
    step_hz: float = 10.0
    k: int = 6
    iou_resolution: float = 0.5
    iou_upsample_hz: float = 100.0

    def __post_init__(self) -> None:
        if len(self.horizons) == 0:
            raise ValueError("horizons must not be empty")
        if list(self.horizons) != sorted(self.horizons):
            raise ValueError("horizons must be sorted ascending")
        if any(h <= 0 for h in self.horizons):
            raise ValueError("horizons must be positive")
        if self.step_hz <= 0 or self.iou_upsample_hz <= 0:
            raise ValueError("sampling rates must be positive")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.iou_resolution <= 0:
            raise ValueError("iou_resolution must be positive")
        ratio = self.iou_upsample_hz / self.step_hz
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("iou_upsample_hz must be an integer multiple of step_hz")

    @property
    def upsample_factor(self) -> int:
        return int(round(self.iou_upsample_hz / self.step_hz))


DEFAULT_METRIC_CONFIG = MetricConfig()


def _horizon_steps(config: MetricConfig, length: int) -> list[int]:
    steps = [int(round(h * config.step_hz)) for h in config.horizons]
    if any(s < 1 for s in steps):
        raise ValueError("every horizon must cover at least one step")
    if max(steps) > length:
        raise ValueError(
            f"trajectories cover {length} steps but the longest horizon needs {max(steps)}"
        )
    return steps


def _stacked(predictions: PredictionSet) -> np.ndarray:
    trajs = [pt.trajectory for pt in predictions.trajectories]
    check_equal_lengths(trajs, f"predictions for {predictions.scenario_id!r}")
    return np.stack([t.as_array() for t in trajs])


def _distance_table(ground_truth: Trajectory, predictions: PredictionSet) -> np.ndarray:
    """Pointwise 2D distances, shape (K, steps)."""
    gt = ground_truth.as_array()
    preds = _stacked(predictions)
    if preds.shape[1] != gt.shape[0]:
        raise ValueError(
            f"trajectory length mismatch: predictions cover {preds.shape[1]} steps, "
            f"ground truth {gt.shape[0]}"
        )
    deltas = preds - gt[None, :, :]
    return np.sqrt((deltas ** 2).sum(axis=2))


def min_ade(
    ground_truth: Trajectory,
    predictions: PredictionSet,
    config: MetricConfig = DEFAULT_METRIC_CONFIG,
) -> float:
    """Best average displacement error over the prediction hypotheses.

    For each horizon, averages the pointwise distance of every hypothesis
    over the steps up to that horizon and keeps the minimum across
    hypotheses; the returned value is the mean over horizons.

    Args:
        ground_truth: observed future trajectory.
        predictions: K hypotheses of the same length as the ground truth.
        config: horizon and sampling settings.

    Returns:
        Mean over horizons of the per-horizon minimum ADE, in meters.
    """
    dists = _distance_table(ground_truth, predictions)
    steps = _horizon_steps(config, dists.shape[1])
    per_horizon = [float(dists[:, :s].mean(axis=1).min()) for s in steps]
    return float(np.mean(per_horizon))


def min_fde(
    ground_truth: Trajectory,
    predictions: PredictionSet,
    config: MetricConfig = DEFAULT_METRIC_CONFIG,
) -> float:
    """Best final displacement error, averaged over horizons.

    Same selection rule as min_ade but judged only at each horizon's
    final step.
    """
    dists = _distance_table(ground_truth, predictions)
    steps = _horizon_steps(config, dists.shape[1])
    per_horizon = [float(dists[:, s - 1].min()) for s in steps]
    return float(np.mean(per_horizon))


@dataclass(frozen=True)
class AbsDeltaSummary:
    """Paired comparison of a metric before and after a perturbation.

    abs_delta is the mean absolute per-example change; relative_pct
    expresses it as a percentage of the mean original value and is None
    when that mean is not positive. fraction_improved counts examples
    whose perturbed value strictly decreased.
    """

    n: int
    mean_original: float
    mean_perturbed: float
    abs_delta: float
    abs_delta_std: float
    relative_pct: float | None
    fraction_improved: float


def abs_delta(pairs: list[tuple[float, float]]) -> AbsDeltaSummary:
    """Summarize (original, perturbed) metric pairs.

    Args:
        pairs: one (original, perturbed) value pair per example.

    Returns:
        AbsDeltaSummary with the mean absolute change, its population
        standard deviation, the change relative to the original mean in
        percent, and the fraction of examples that improved.
    """
    if not pairs:
        raise ValueError("abs_delta needs at least one pair")
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("pairs must be (original, perturbed) tuples")
    original = arr[:, 0]
    perturbed = arr[:, 1]
    deltas = np.abs(perturbed - original)
    mean_original = float(original.mean())
    mean_abs = float(deltas.mean())
    relative = 100.0 * mean_abs / mean_original if mean_original > 0 else None
    return AbsDeltaSummary(
        n=len(pairs),
        mean_original=mean_original,
        mean_perturbed=float(perturbed.mean()),
        abs_delta=mean_abs,
        abs_delta_std=float(deltas.std()),
        relative_pct=relative,
        fraction_improved=float((perturbed < original).mean()),
    )


def _upsample(points: np.ndarray, factor: int) -> np.ndarray:
    """Linear upsampling: factor - 1 interpolated points per segment,
    endpoints inclusive, final endpoint emitted once."""
    if points.shape[0] == 1 or factor == 1:
        return points
    t = np.arange(factor, dtype=float) / float(factor)
    p0 = points[:-1]
    p1 = points[1:]
    segs = p0[:, None, :] + (p1 - p0)[:, None, :] * t[None, :, None]
    return np.concatenate([segs.reshape(-1, 2), points[-1:]], axis=0)


def _voxel_set(predictions: PredictionSet, config: MetricConfig) -> set[tuple[int, int]]:
    voxels: set[tuple[int, int]] = set()
    for pt in predictions.trajectories:
        dense = _upsample(pt.trajectory.as_array(), config.upsample_factor)
        cells = np.floor(dense / config.iou_resolution).astype(np.int64)
        voxels.update(map(tuple, cells.tolist()))
    return voxels


def trajectory_set_iou(
    a: PredictionSet,
    b: PredictionSet,
    config: MetricConfig = DEFAULT_METRIC_CONFIG,
) -> float:
    """Voxel overlap between two prediction sets.

    Each set is rendered as the union of the voxels its upsampled
    trajectories touch, on a fixed grid anchored at the origin; the
    result is intersection over union of those two voxel sets. Identical
    sets score exactly 1.0.
    """
    va = _voxel_set(a, config)
    vb = _voxel_set(b, config)
    union = va | vb
    if not union:
        raise ValueError("prediction sets produced no voxels")
    return len(va & vb) / len(union)


def ts_min_ade(a: PredictionSet, b: PredictionSet) -> float:
    """Closest cross-set trajectory distance.

    Minimum, over every pair of one trajectory from each set, of the
    mean pointwise 2D distance. Zero exactly when some trajectory of one
    set coincides with one of the other.
    """
    pa = _stacked(a)
    pb = _stacked(b)
    if pa.shape[1] != pb.shape[1]:
        raise ValueError(
            f"trajectory length mismatch between sets: {pa.shape[1]} vs {pb.shape[1]} steps"
        )
    deltas = pa[:, None, :, :] - pb[None, :, :, :]
    means = np.sqrt((deltas ** 2).sum(axis=3)).mean(axis=2)
    return float(means.min())

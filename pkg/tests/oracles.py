"""Plain-Python reference implementations used to cross-check the library.

Everything here is deliberately written with explicit loops and math.*
so that a bug in the vectorized code cannot hide inside its own oracle.
Trajectories are plain lists of (x, y) tuples, positions lists of
(x, y, z) tuples; no package types appear on purpose.
"""

from __future__ import annotations

import math


def dist2d(p, q) -> float:
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return math.sqrt(dx * dx + dy * dy)


def brute_min_ade(gt, preds, horizon_steps) -> float:
    per_horizon = []
    for s in horizon_steps:
        best = math.inf
        for traj in preds:
            total = 0.0
            for i in range(s):
                total += dist2d(traj[i], gt[i])
            best = min(best, total / s)
        per_horizon.append(best)
    return sum(per_horizon) / len(per_horizon)


def brute_min_fde(gt, preds, horizon_steps) -> float:
    per_horizon = []
    for s in horizon_steps:
        best = min(dist2d(traj[s - 1], gt[s - 1]) for traj in preds)
        per_horizon.append(best)
    return sum(per_horizon) / len(per_horizon)


def brute_upsample(points, factor: int):
    """Endpoint-inclusive linear interpolation, factor points per segment
    plus the final endpoint once. Mirrors the documented resampling rule
    but runs one coordinate at a time in scalar Python."""
    if len(points) == 1 or factor == 1:
        return [(float(p[0]), float(p[1])) for p in points]
    out = []
    for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
        for i in range(factor):
            t = i / factor
            out.append((x0 + (x1 - x0) * t, y0 + (y1 - y0) * t))
    last = points[-1]
    out.append((float(last[0]), float(last[1])))
    return out


def brute_voxels(trajectories, factor: int, resolution: float):
    cells = set()
    for traj in trajectories:
        for x, y in brute_upsample(traj, factor):
            cells.add((math.floor(x / resolution), math.floor(y / resolution)))
    return cells


def brute_iou(set_a, set_b, factor: int, resolution: float) -> float:
    va = brute_voxels(set_a, factor, resolution)
    vb = brute_voxels(set_b, factor, resolution)
    return len(va & vb) / len(va | vb)


def brute_ts_min_ade(set_a, set_b) -> float:
    best = math.inf
    for ta in set_a:
        for tb in set_b:
            total = 0.0
            for p, q in zip(ta, tb):
                total += dist2d(p, q)
            best = min(best, total / len(ta))
    return best


def brute_abs_delta(pairs):
    """Returns (mean_original, mean_perturbed, abs_delta, std, rel_pct, frac_improved)."""
    n = len(pairs)
    deltas = [abs(p - o) for o, p in pairs]
    mean_orig = sum(o for o, _ in pairs) / n
    mean_pert = sum(p for _, p in pairs) / n
    mean_abs = sum(deltas) / n
    var = sum((d - mean_abs) ** 2 for d in deltas) / n
    rel = 100.0 * mean_abs / mean_orig if mean_orig > 0 else None
    frac = sum(1 for o, p in pairs if p < o) / n
    return mean_orig, mean_pert, mean_abs, math.sqrt(var), rel, frac


def brute_displacement(positions) -> float:
    """Max pairwise 3D distance over the given (x, y, z) points."""
    if not positions:
        raise ValueError("no valid positions")
    best = 0.0
    for i in range(len(positions)):
        xi, yi, zi = positions[i]
        for j in range(i + 1, len(positions)):
            dx = xi - positions[j][0]
            dy = yi - positions[j][1]
            dz = zi - positions[j][2]
            best = max(best, math.sqrt(dx * dx + dy * dy + dz * dz))
    return best


def brute_free_road(x0: float, speed0: float, v0: float, a_max: float, n_steps: int):
    """Open-road car-following rollout: record, accelerate toward v0,
    clamp speed at zero, advance with the updated speed."""
    xs, vs = [], []
    x, v = x0, speed0
    for _ in range(n_steps):
        xs.append(x)
        vs.append(v)
        a = a_max * (1.0 - (v / v0) ** 4)
        v = max(0.0, v + a * 0.1)
        x = x + v * 0.1
    return xs, vs

"""Reading and writing scenario and prediction files.

Both formats are line-delimited JSON, one record per line, streamed so
that corpus size is bounded by the largest single record rather than
the file. Serialization is canonical: fixed key order, agents sorted by
id, invalid states zeroed. Writing what was read produces byte-identical
lines, which makes reruns diffable.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterable, Iterator

from .errors import RecordFormatError
from .scenario import (
    AgentState,
    AgentTrack,
    AgentType,
    FeatureType,
    PredictedTrajectory,
    PredictionSet,
    RoadFeature,
    Scenario,
    Trajectory,
    canonicalize_scenario,
)
from .validation import check_equal_lengths, validate_scenario

logger = logging.getLogger(__name__)

_STATE_FIELDS = ("x", "y", "z", "vx", "vy", "heading", "length", "width")


def _req(obj: dict, key: str, where: str) -> object:
    if not isinstance(obj, dict):
        raise RecordFormatError(f"{where}: expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise RecordFormatError(f"{where}: missing field '{key}'")
    return obj[key]


def _as_float(value: object, field: str, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise RecordFormatError(f"{where}: field '{field}' must be a number, got {value!r}")
    return float(value)


def _as_int(value: object, field: str, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise RecordFormatError(f"{where}: field '{field}' must be an integer, got {value!r}")
    return value


def _as_bool(value: object, field: str, where: str) -> bool:
    if not isinstance(value, bool):
        raise RecordFormatError(f"{where}: field '{field}' must be a boolean, got {value!r}")
    return value


def _as_str(value: object, field: str, where: str) -> str:
    if not isinstance(value, str):
        raise RecordFormatError(f"{where}: field '{field}' must be a string, got {value!r}")
    return value


def _as_list(value: object, field: str, where: str) -> list:
    if not isinstance(value, list):
        raise RecordFormatError(f"{where}: field '{field}' must be a list, got {type(value).__name__}")
    return value


def _state_from_record(obj: object, where: str) -> AgentState:
    values = {f: _as_float(_req(obj, f, where), f, where) for f in _STATE_FIELDS}
    valid = _as_bool(_req(obj, "valid", where), "valid", where)
    return AgentState(valid=valid, **values)


def _track_from_record(obj: object, where: str) -> AgentTrack:
    agent_id = _as_int(_req(obj, "agent_id", where), "agent_id", where)
    raw_type = _as_str(_req(obj, "agent_type", where), "agent_type", where)
    try:
        agent_type = AgentType(raw_type)
    except ValueError:
        raise RecordFormatError(f"{where}: field 'agent_type' has unknown value {raw_type!r}") from None
    is_context = _as_bool(_req(obj, "is_context", where), "is_context", where)
    states = [
        _state_from_record(s, where)
        for s in _as_list(_req(obj, "states", where), "states", where)
    ]
    return AgentTrack(agent_id=agent_id, agent_type=agent_type, is_context=is_context, states=states)


def _feature_from_record(obj: object, where: str) -> RoadFeature:
    feature_id = _as_int(_req(obj, "feature_id", where), "feature_id", where)
    raw_type = _as_str(_req(obj, "feature_type", where), "feature_type", where)
    try:
        feature_type = FeatureType(raw_type)
    except ValueError:
        raise RecordFormatError(f"{where}: field 'feature_type' has unknown value {raw_type!r}") from None
    polyline = []
    for p in _as_list(_req(obj, "polyline", where), "polyline", where):
        pts = _as_list(p, "polyline", where)
        if len(pts) != 3:
            raise RecordFormatError(f"{where}: field 'polyline' points must have 3 coordinates")
        polyline.append(tuple(_as_float(c, "polyline", where) for c in pts))
    return RoadFeature(feature_id=feature_id, feature_type=feature_type, polyline=polyline)


def scenario_from_record(obj: object, where: str = "record") -> Scenario:
    """Build a validated, canonical Scenario from a parsed JSON object."""
    scenario = Scenario(
        scenario_id=_as_str(_req(obj, "scenario_id", where), "scenario_id", where),
        av_agent_id=_as_int(_req(obj, "av_agent_id", where), "av_agent_id", where),
        timestamps=[
            _as_float(t, "timestamps", where)
            for t in _as_list(_req(obj, "timestamps", where), "timestamps", where)
        ],
        agents=[
            _track_from_record(a, where)
            for a in _as_list(_req(obj, "agents", where), "agents", where)
        ],
        roadgraph=[
            _feature_from_record(f, where)
            for f in _as_list(_req(obj, "roadgraph", where), "roadgraph", where)
        ],
    )
    validate_scenario(scenario, where)
    return canonicalize_scenario(scenario)


def scenario_to_record(scenario: Scenario) -> dict:
    s = canonicalize_scenario(scenario)
    return {
        "scenario_id": s.scenario_id,
        "av_agent_id": s.av_agent_id,
        "timestamps": list(s.timestamps),
        "agents": [
            {
                "agent_id": t.agent_id,
                "agent_type": t.agent_type.value,
                "is_context": t.is_context,
                "states": [
                    {
                        "x": st.x, "y": st.y, "z": st.z,
                        "vx": st.vx, "vy": st.vy,
                        "heading": st.heading,
                        "length": st.length, "width": st.width,
                        "valid": st.valid,
                    }
                    for st in t.states
                ],
            }
            for t in s.agents
        ],
        "roadgraph": [
            {
                "feature_id": f.feature_id,
                "feature_type": f.feature_type.value,
                "polyline": [list(p) for p in f.polyline],
            }
            for f in s.roadgraph
        ],
    }


def dumps_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario_to_record(scenario), separators=(",", ":"))


def _iter_json_lines(path: str | Path) -> Iterator[tuple[int, object]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordFormatError(f"line {line_no}: invalid record: {exc}") from None


def load_scenarios(path: str | Path) -> Iterator[Scenario]:
    """Stream scenarios from a line-delimited file, validating each."""
    for line_no, obj in _iter_json_lines(path):
        yield scenario_from_record(obj, where=f"line {line_no}")


def save_scenarios(scenarios: Iterable[Scenario], path: str | Path) -> int:
    """Write scenarios one per line in canonical form. Returns the count."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in scenarios:
            fh.write(dumps_scenario(s))
            fh.write("\n")
            n += 1
    return n


def prediction_from_record(obj: object, where: str = "record") -> PredictionSet:
    scenario_id = _as_str(_req(obj, "scenario_id", where), "scenario_id", where)
    variant = _as_str(_req(obj, "variant", where), "variant", where)
    trajectories = []
    for entry in _as_list(_req(obj, "trajectories", where), "trajectories", where):
        probability = _as_float(_req(entry, "probability", where), "probability", where)
        if not probability >= 0.0:
            raise RecordFormatError(f"{where}: field 'probability' must be non-negative")
        points = []
        for p in _as_list(_req(entry, "points", where), "points", where):
            pts = _as_list(p, "points", where)
            if len(pts) != 2:
                raise RecordFormatError(f"{where}: field 'points' entries must have 2 coordinates")
            points.append((_as_float(pts[0], "points", where), _as_float(pts[1], "points", where)))
        try:
            trajectory = Trajectory(points)
        except ValueError as exc:
            raise RecordFormatError(f"{where}: {exc}") from None
        trajectories.append(PredictedTrajectory(trajectory=trajectory, probability=probability))
    if not trajectories:
        raise RecordFormatError(f"{where}: field 'trajectories' is empty")
    pset = PredictionSet(scenario_id=scenario_id, variant=variant, trajectories=trajectories)
    check_equal_lengths([pt.trajectory for pt in pset.trajectories], where)
    total = sum(pt.probability for pt in pset.trajectories)
    if abs(total - 1.0) > 1e-6:
        logger.warning("%s: probabilities sum to %.6g, expected 1", where, total)
    return pset


def prediction_to_record(pset: PredictionSet) -> dict:
    return {
        "scenario_id": pset.scenario_id,
        "variant": pset.variant,
        "trajectories": [
            {
                "probability": pt.probability,
                "points": [[x, y] for x, y in pt.trajectory.points],
            }
            for pt in pset.trajectories
        ],
    }


def dumps_prediction(pset: PredictionSet) -> str:
    return json.dumps(prediction_to_record(pset), separators=(",", ":"))


def load_predictions(
    path: str | Path, expected_length: int | None = None
) -> Iterator[PredictionSet]:
    """Stream prediction sets, rejecting duplicate (scenario, variant) pairs.

    When expected_length is given, every trajectory must cover exactly
    that many steps.
    """
    seen: dict[tuple[str, str], int] = {}
    for line_no, obj in _iter_json_lines(path):
        where = f"line {line_no}"
        pset = prediction_from_record(obj, where=where)
        key = (pset.scenario_id, pset.variant)
        if key in seen:
            raise RecordFormatError(
                f"{where}: duplicate prediction for scenario {pset.scenario_id!r} "
                f"variant {pset.variant!r} (first at line {seen[key]})"
            )
        seen[key] = line_no
        if expected_length is not None:
            actual = len(pset.trajectories[0].trajectory)
            if actual != expected_length:
                raise RecordFormatError(
                    f"{where}: trajectory length {actual} does not match declared horizon {expected_length}"
                )
        yield pset


def save_predictions(psets: Iterable[PredictionSet], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in psets:
            fh.write(dumps_prediction(p))
            fh.write("\n")
            n += 1
    return n


def outcome_to_covariate_record(outcome) -> dict:
    """Flatten a PerturbationOutcome into its sidecar line."""
    return {
        "scenario_id": outcome.perturbed.scenario_id,
        "kind": outcome.kind.value,
        "removed_ids": sorted(outcome.removed_ids),
        "num_removed": outcome.num_removed,
        "num_causal": outcome.num_causal,
        "num_noncausal": outcome.num_noncausal,
        "min_removed_distance": outcome.min_removed_distance,
        "removed_fraction_of_context": outcome.removed_fraction_of_context,
    }


def save_covariates(records: Iterable[dict], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")))
            fh.write("\n")
            n += 1
    return n


def load_covariates(path: str | Path) -> dict[str, dict]:
    """Covariate sidecar lines keyed by scenario id."""
    out: dict[str, dict] = {}
    for line_no, obj in _iter_json_lines(path):
        where = f"line {line_no}"
        sid = _as_str(_req(obj, "scenario_id", where), "scenario_id", where)
        if sid in out:
            raise RecordFormatError(f"{where}: duplicate covariates for scenario {sid!r}")
        out[sid] = obj
    return out

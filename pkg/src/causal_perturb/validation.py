"""Input validation helpers.

Estimators and loaders funnel their inputs through these checks so that
bad data fails loudly, with messages naming the offending record and
field, instead of corrupting downstream numbers.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from .errors import RecordFormatError
from .scenario import (
    CURRENT_INDEX,
    N_STEPS,
    AgentTrack,
    Scenario,
)


def check_probability(value: float, name: str) -> float:
    if not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
        raise ValueError(f"{name} must be a probability in [0, 1], got {value!r}")
    return float(value)


def check_positive(value: float, name: str) -> float:
    if not (isinstance(value, (int, float)) and value > 0.0):
        raise ValueError(f"{name} must be positive, got {value!r}")
    return float(value)


def check_non_negative(value: float, name: str) -> float:
    if not (isinstance(value, (int, float)) and value >= 0.0):
        raise ValueError(f"{name} must be non-negative, got {value!r}")
    return float(value)


def ensure_scenario_sequence(X: object) -> list[Scenario]:
    """Coerce estimator input to a list of scenarios.

    Accepts any iterable of Scenario. A bare Scenario is rejected with a
    pointed message because silently wrapping it hides batching bugs.
    """
    if isinstance(X, Scenario):
        raise TypeError("expected an iterable of Scenario, got a single Scenario; wrap it in a list")
    if not isinstance(X, Iterable):
        raise TypeError(f"expected an iterable of Scenario, got {type(X).__name__}")
    out = []
    for i, item in enumerate(X):
        if not isinstance(item, Scenario):
            raise TypeError(f"item {i} is {type(item).__name__}, expected Scenario")
        out.append(item)
    return out


def _check_track(track: AgentTrack, where: str) -> None:
    if len(track.states) != N_STEPS:
        raise RecordFormatError(
            f"{where}: agent {track.agent_id} has {len(track.states)} states, expected {N_STEPS} states"
        )
    for i, s in enumerate(track.states):
        if not s.valid:
            continue
        for field in ("x", "y", "z", "vx", "vy", "heading", "length", "width"):
            v = getattr(s, field)
            if not math.isfinite(v):
                raise RecordFormatError(
                    f"{where}: agent {track.agent_id} state {i} field '{field}' is not finite"
                )
        if not (-math.pi <= s.heading < math.pi):
            raise RecordFormatError(
                f"{where}: agent {track.agent_id} state {i} field 'heading' "
                f"out of [-pi, pi): {s.heading!r}"
            )
        if s.length < 0.0 or s.width < 0.0:
            raise RecordFormatError(
                f"{where}: agent {track.agent_id} state {i} has a negative box dimension"
            )


def validate_scenario(scenario: Scenario, where: str | None = None) -> Scenario:
    """Check the structural invariants of a scenario, returning it unchanged.

    Raises RecordFormatError on the first violation found.
    """
    loc = where or f"scenario {scenario.scenario_id!r}"
    ts = scenario.timestamps
    if len(ts) != N_STEPS:
        raise RecordFormatError(f"{loc}: field 'timestamps' has {len(ts)} entries, expected {N_STEPS}")
    for a, b in zip(ts, ts[1:]):
        if not b > a:
            raise RecordFormatError(f"{loc}: field 'timestamps' is not strictly increasing")
    spacing = (ts[-1] - ts[0]) / (len(ts) - 1)
    if abs(spacing - 0.1) > 1e-6:
        raise RecordFormatError(
            f"{loc}: field 'timestamps' has mean spacing {spacing:.6g}, expected 0.1"
        )

    seen: set[int] = set()
    for track in scenario.agents:
        if track.agent_id in seen:
            raise RecordFormatError(f"{loc}: duplicate agent_id {track.agent_id}")
        seen.add(track.agent_id)
        _check_track(track, loc)

    if scenario.av_agent_id not in seen:
        raise RecordFormatError(f"{loc}: av_agent_id {scenario.av_agent_id} has no track")
    av = scenario.av_track()
    if av.is_context:
        raise RecordFormatError(f"{loc}: the AV track is flagged is_context")
    if not av.states[CURRENT_INDEX].valid:
        raise RecordFormatError(
            f"{loc}: AV agent {scenario.av_agent_id} is invalid at the current step (index {CURRENT_INDEX})"
        )
    return scenario


def check_equal_lengths(trajectories: Sequence, what: str) -> int:
    """All trajectories in a set must cover the same number of steps."""
    lengths = {len(t) for t in trajectories}
    if len(lengths) > 1:
        raise ValueError(f"{what}: trajectory length mismatch, saw lengths {sorted(lengths)}")
    return lengths.pop()

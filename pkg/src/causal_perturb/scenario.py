"""Scenario data model.

A scenario is a fixed-rate snippet of driving: 91 steps at 10 Hz, with
step index 10 being the current instant (11 history steps including the
current one, 80 future steps). Each agent carries one state per step
plus a validity flag; invalid states hold no information and are zeroed
by canonicalization so that equality and serialization are stable.

All types are plain frozen dataclasses and are treated as immutable
values after construction. Operations that change a scenario build a
new one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

N_STEPS = 91
CURRENT_INDEX = 10
HISTORY_STEPS = 11
FUTURE_STEPS = 80
STEP_DT = 0.1
STEP_HZ = 10.0


class AgentType(str, enum.Enum):
    VEHICLE = "vehicle"
    PEDESTRIAN = "pedestrian"
    CYCLIST = "cyclist"


class FeatureType(str, enum.Enum):
    LANE_CENTER = "lane_center"
    ROAD_EDGE = "road_edge"
    CROSSWALK = "crosswalk"
    STOP_LINE = "stop_line"


@dataclass(frozen=True)
class AgentState:
    """Pose and box of one agent at one step. Units: meters, m/s, radians."""

    x: float
    y: float
    z: float
    vx: float
    vy: float
    heading: float
    length: float
    width: float
    valid: bool


ZERO_STATE = AgentState(
    x=0.0, y=0.0, z=0.0, vx=0.0, vy=0.0, heading=0.0, length=0.0, width=0.0, valid=False
)


@dataclass(frozen=True)
class AgentTrack:
    """One agent's 91-step state sequence.

    is_context marks agents that are scene context rather than targets
    of prediction; the autonomous vehicle is never context.
    """

    agent_id: int
    agent_type: AgentType
    is_context: bool
    states: list[AgentState]

    def valid_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.states) if s.valid]

    def valid_positions(self) -> np.ndarray:
        """Positions (n, 3) of the valid states, in step order."""
        return np.array(
            [(s.x, s.y, s.z) for s in self.states if s.valid], dtype=float
        ).reshape(-1, 3)

    def state_near(self, index: int = CURRENT_INDEX) -> AgentState:
        """Valid state temporally nearest to the given step index.

        Ties break toward the earlier step. Raises ValueError when the
        track has no valid state at all.
        """
        valid = self.valid_indices()
        if not valid:
            raise ValueError(f"agent {self.agent_id} has no valid states")
        best = min(valid, key=lambda i: (abs(i - index), i))
        return self.states[best]


@dataclass(frozen=True)
class RoadFeature:
    """A polyline map element."""

    feature_id: int
    feature_type: FeatureType
    polyline: list[tuple[float, float, float]]


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    av_agent_id: int
    timestamps: list[float]
    agents: list[AgentTrack]
    roadgraph: list[RoadFeature]

    def track(self, agent_id: int) -> AgentTrack:
        for t in self.agents:
            if t.agent_id == agent_id:
                return t
        raise KeyError(f"no agent {agent_id} in scenario {self.scenario_id}")

    def av_track(self) -> AgentTrack:
        return self.track(self.av_agent_id)

    def agent_ids(self) -> set[int]:
        return {t.agent_id for t in self.agents}

    def non_av_ids(self) -> set[int]:
        return {t.agent_id for t in self.agents if t.agent_id != self.av_agent_id}

    def context_ids(self) -> set[int]:
        return {
            t.agent_id
            for t in self.agents
            if t.is_context and t.agent_id != self.av_agent_id
        }


@dataclass(frozen=True)
class Trajectory:
    """A 2D polyline over future steps, one point per step."""

    points: list[tuple[float, float]]

    def __post_init__(self) -> None:
        if len(self.points) < 1:
            raise ValueError("trajectory needs at least one point")
        for p in self.points:
            if not (math.isfinite(p[0]) and math.isfinite(p[1])):
                raise ValueError(f"non-finite trajectory point {p!r}")

    def as_array(self) -> np.ndarray:
        return np.array(self.points, dtype=float).reshape(-1, 2)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class PredictedTrajectory:
    trajectory: Trajectory
    probability: float


@dataclass(frozen=True)
class PredictionSet:
    """K weighted trajectory hypotheses for one scenario variant."""

    scenario_id: str
    variant: str
    trajectories: list[PredictedTrajectory]

    def __post_init__(self) -> None:
        if len(self.trajectories) < 1:
            raise ValueError("prediction set needs at least one trajectory")


def _zeroed(state: AgentState) -> AgentState:
    if state.valid:
        return state
    return ZERO_STATE


def canonicalize_scenario(scenario: Scenario) -> Scenario:
    """Return the canonical form: agents sorted by id, roadgraph sorted
    by feature id, every invalid state zeroed. Idempotent."""
    agents = [
        replace(track, states=[_zeroed(s) for s in track.states])
        for track in sorted(scenario.agents, key=lambda t: t.agent_id)
    ]
    roadgraph = sorted(scenario.roadgraph, key=lambda f: f.feature_id)
    return replace(scenario, agents=agents, roadgraph=roadgraph)


def agent_displacement(track: AgentTrack) -> float:
    """Maximum distance between any two valid states of the track, in 3D.

    A track with a single valid state moved nowhere (0.0). A track with
    no valid states has no defensible answer and raises ValueError.
    """
    pts = track.valid_positions()
    if pts.shape[0] == 0:
        raise ValueError(f"agent {track.agent_id} has no valid states")
    if pts.shape[0] == 1:
        return 0.0
    deltas = pts[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", deltas, deltas)
    return float(math.sqrt(d2.max()))


def distance_to_av(scenario: Scenario, agent_id: int) -> float:
    """Planar distance from the AV to an agent, both taken at the current
    step (nearest valid state when an agent is invalid at index 10)."""
    av = scenario.av_track().states[CURRENT_INDEX]
    other = scenario.track(agent_id).state_near(CURRENT_INDEX)
    return math.hypot(other.x - av.x, other.y - av.y)


def av_speed(scenario: Scenario) -> float:
    """AV speed magnitude at the current step."""
    s = scenario.av_track().states[CURRENT_INDEX]
    return math.hypot(s.vx, s.vy)

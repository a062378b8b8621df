"""Hand-rolled scenario builders shared across the test modules.

All builders produce records that satisfy the full validation contract
(91 steps, AV valid at the current step, headings in [-pi, pi)), so the
same objects can flow through serialization round trips unchanged.
"""

from __future__ import annotations

from causal_perturb import AgentState, AgentTrack, AgentType, PredictionSet, Scenario, Trajectory
from causal_perturb.scenario import (
    CURRENT_INDEX,
    N_STEPS,
    STEP_DT,
    ZERO_STATE,
    PredictedTrajectory,
)

TIMESTAMPS = tuple(round(i * STEP_DT, 6) for i in range(N_STEPS))


def make_state(
    x=0.0,
    y=0.0,
    z=0.0,
    vx=0.0,
    vy=0.0,
    heading=0.0,
    length=4.0,
    width=2.0,
    valid=True,
) -> AgentState:
    return AgentState(
        x=float(x),
        y=float(y),
        z=float(z),
        vx=float(vx),
        vy=float(vy),
        heading=float(heading),
        length=float(length),
        width=float(width),
        valid=bool(valid),
    )


def const_states(x=0.0, y=0.0, n=N_STEPS, **kw) -> list[AgentState]:
    return [make_state(x=x, y=y, **kw) for _ in range(n)]


def moving_states(x0=0.0, y0=0.0, vx=0.0, vy=0.0, n=N_STEPS, **kw) -> list[AgentState]:
    return [
        make_state(x=x0 + vx * STEP_DT * i, y=y0 + vy * STEP_DT * i, vx=vx, vy=vy, **kw)
        for i in range(n)
    ]


def make_track(
    agent_id: int,
    states,
    agent_type: AgentType = AgentType.VEHICLE,
    is_context: bool = True,
) -> AgentTrack:
    return AgentTrack(
        agent_id=agent_id,
        agent_type=agent_type,
        is_context=is_context,
        states=list(states),
    )


def av_track(agent_id=1, vx=1.0, vy=0.0, **kw) -> AgentTrack:
    return make_track(
        agent_id, moving_states(vx=vx, vy=vy, **kw), AgentType.VEHICLE, is_context=False
    )


def make_scenario(tracks, scenario_id="s1", av_agent_id=None, roadgraph=()) -> Scenario:
    tracks = list(tracks)
    if av_agent_id is None:
        av_agent_id = tracks[0].agent_id
    return Scenario(
        scenario_id=scenario_id,
        av_agent_id=av_agent_id,
        timestamps=list(TIMESTAMPS),
        agents=tracks,
        roadgraph=list(roadgraph),
    )


def invalidate(states, indices) -> list[AgentState]:
    """Zero out the given step indices, the canonical form of a gap."""
    out = list(states)
    for i in indices:
        out[i] = ZERO_STATE
    return out


def traj(points) -> Trajectory:
    return Trajectory(points=[(float(x), float(y)) for x, y in points])


def pset(trajectory_points, sid="s1", variant="original", probs=None) -> PredictionSet:
    trajs = [traj(pts) for pts in trajectory_points]
    if probs is None:
        probs = [1.0 / len(trajs)] * len(trajs)
    return PredictionSet(
        scenario_id=sid,
        variant=variant,
        trajectories=[
            PredictedTrajectory(trajectory=t, probability=float(p))
            for t, p in zip(trajs, probs)
        ],
    )


def same_scenario(a, b) -> bool:
    """Equality on the canonical serialized form, container-agnostic."""
    from causal_perturb.io import dumps_scenario

    return dumps_scenario(a) == dumps_scenario(b)


__all__ = [
    "CURRENT_INDEX",
    "N_STEPS",
    "STEP_DT",
    "TIMESTAMPS",
    "av_track",
    "const_states",
    "invalidate",
    "make_scenario",
    "make_state",
    "make_track",
    "moving_states",
    "pset",
    "same_scenario",
    "traj",
]

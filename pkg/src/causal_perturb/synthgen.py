"""Synthetic straight-lane scene generator with known causality.

Scenes are built so that the set of agents the ego's motion actually
depends on is known by construction. The ego follows an intelligent
driver model along a straight lane and reacts only to the obstacle
directly ahead in its corridor: the lead vehicle, or a pedestrian while
it is inside the corridor. Parked cars sit at least 3 m off the lane
and far traffic runs on a distant parallel line; the dynamics never
read them, so deleting them reproduces the ego trajectory bit for bit.
Re-simulation with agents removed is exposed for exactly that check.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import RecordFormatError
from .io import save_scenarios
from .labels import CausalLabelFile, save_labels
from .scenario import (
    N_STEPS,
    STEP_DT,
    AgentState,
    AgentTrack,
    AgentType,
    FeatureType,
    RoadFeature,
    Scenario,
    canonicalize_scenario,
)
from .seeding import rng_for

LANE_HALF_WIDTH = 2.0
AV_LENGTH = 4.8
AV_WIDTH = 2.1
CAR_LENGTH = 4.8
CAR_WIDTH = 2.1
PED_RADIUS = 0.3
PED_SIZE = 0.6
PARKED_MIN_OFFSET = 3.0
PARKED_JITTER = 0.02
FAR_TRAFFIC_OFFSET = 30.0
MAX_SPAWN_ATTEMPTS = 100

AV_ID = 1
LEAD_ID = 2
PED_ID = 3
PARKED_ID_BASE = 10
FAR_ID_BASE = 100


@dataclass(frozen=True)
class IdmParams:
    """Intelligent driver model constants."""

    v0: float = 15.0
    T: float = 1.5
    a_max: float = 1.5
    b: float = 2.0
    s0: float = 2.0


@dataclass(frozen=True)
class SynthParams:
    """Scene template knobs.

    n_lead is 0 or 1; lead_stationary freezes the lead in place, which
    makes it both static and causal (useful for exercising the static
    filter against a causal agent). n_far_traffic adds moving vehicles
    on a parallel line far outside every interaction radius.
    """

    n_parked: int = 4
    n_lead: int = 1
    pedestrian_cross: bool = False
    n_far_traffic: int = 0
    lead_stationary: bool = False
    lane_length: float = 300.0
    idm: IdmParams = field(default_factory=IdmParams)
    seed: int = 0


class Rationale(str, enum.Enum):
    LEAD_VEHICLE = "lead_vehicle"
    CROSSING_PEDESTRIAN = "crossing_pedestrian"
    PARKED = "parked"
    FAR_TRAFFIC = "far_traffic"


@dataclass(frozen=True)
class SynthGroundTruth:
    """Which agents the generated ego motion truly depends on."""

    scenario_id: str
    causal_ids: frozenset[int]
    noncausal_ids: frozenset[int]
    rationale: dict[int, Rationale]


@dataclass(frozen=True)
class _Lead:
    agent_id: int
    x0: float
    speed: float


@dataclass(frozen=True)
class _Pedestrian:
    agent_id: int
    cross_x: float
    y0: float
    speed: float


@dataclass(frozen=True)
class _Parked:
    agent_id: int
    x: float
    y: float


@dataclass(frozen=True)
class _FarVehicle:
    agent_id: int
    x0: float
    y: float
    speed: float


@dataclass(frozen=True)
class World:
    """Fully specified scene, sufficient to re-simulate the ego."""

    scenario_id: str
    params: SynthParams
    av_x0: float
    av_speed0: float
    lead: _Lead | None
    pedestrian: _Pedestrian | None
    parked: list[_Parked]
    far: list[_FarVehicle]

    def agent_ids(self) -> set[int]:
        ids = {AV_ID}
        if self.lead:
            ids.add(self.lead.agent_id)
        if self.pedestrian:
            ids.add(self.pedestrian.agent_id)
        ids.update(p.agent_id for p in self.parked)
        ids.update(f.agent_id for f in self.far)
        return ids


def idm_acceleration(speed: float, lead_speed: float, gap: float, p: IdmParams) -> float:
    """IDM acceleration when following a leader at the given net gap."""
    gap = max(gap, 1e-2)
    dv = speed - lead_speed
    s_star = p.s0 + speed * p.T + speed * dv / (2.0 * math.sqrt(p.a_max * p.b))
    return p.a_max * (1.0 - (speed / p.v0) ** 4 - (s_star / gap) ** 2)


def idm_free_acceleration(speed: float, p: IdmParams) -> float:
    """IDM acceleration on an open road."""
    return p.a_max * (1.0 - (speed / p.v0) ** 4)


def idm_equilibrium_gap(speed: float, p: IdmParams) -> float:
    """Steady-state net gap when following a leader at constant speed."""
    if not 0.0 <= speed < p.v0:
        raise ValueError("equilibrium requires 0 <= speed < v0")
    return (p.s0 + speed * p.T) / math.sqrt(1.0 - (speed / p.v0) ** 4)


def simulate_av(
    world: World,
    removed_ids: frozenset[int] | set[int] = frozenset(),
    n_steps: int = N_STEPS,
) -> tuple[np.ndarray, np.ndarray]:
    """Roll the ego forward, ignoring the removed agents entirely.

    Semi-implicit Euler at the scenario rate: acceleration from the
    nearest in-corridor obstacle ahead, velocity update clamped at zero,
    then the position update with the new velocity.

    Returns:
        (positions, speeds) along the lane, each of length n_steps.
    """
    p = world.params.idm
    lead = world.lead if world.lead and world.lead.agent_id not in removed_ids else None
    ped = (
        world.pedestrian
        if world.pedestrian and world.pedestrian.agent_id not in removed_ids
        else None
    )
    xs = np.empty(n_steps, dtype=float)
    vs = np.empty(n_steps, dtype=float)
    x = world.av_x0
    v = world.av_speed0
    for i in range(n_steps):
        xs[i] = x
        vs[i] = v
        t = i * STEP_DT
        best_gap = math.inf
        best_speed = 0.0
        if lead is not None:
            gap = (lead.x0 + lead.speed * t) - x - 0.5 * (CAR_LENGTH + AV_LENGTH)
            if gap > 0.0 and gap < best_gap:
                best_gap = gap
                best_speed = lead.speed
        if ped is not None:
            y_ped = ped.y0 + ped.speed * t
            if abs(y_ped) <= LANE_HALF_WIDTH:
                gap = ped.cross_x - x - 0.5 * AV_LENGTH - PED_RADIUS
                if gap > 0.0 and gap < best_gap:
                    best_gap = gap
                    best_speed = 0.0
        if math.isinf(best_gap):
            a = idm_free_acceleration(v, p)
        else:
            a = idm_acceleration(v, best_speed, best_gap, p)
        v = max(0.0, v + a * STEP_DT)
        x = x + v * STEP_DT
    return xs, vs


def _propose(params: SynthParams, scenario_id: str, rng: np.random.Generator) -> World | None:
    """One placement attempt; None when the geometry does not work out."""
    idm = params.idm
    av_x0 = 5.0
    av_speed0 = idm.v0 * rng.uniform(0.55, 0.9)

    lead = None
    if params.n_lead not in (0, 1):
        raise ValueError(f"n_lead must be 0 or 1, got {params.n_lead}")
    if params.n_lead == 1:
        speed = 0.0 if params.lead_stationary else idm.v0 * rng.uniform(0.4, 0.8)
        gap0 = rng.uniform(25.0, 50.0)
        lead = _Lead(
            agent_id=LEAD_ID,
            x0=av_x0 + gap0 + 0.5 * (CAR_LENGTH + AV_LENGTH),
            speed=speed,
        )

    base = World(
        scenario_id=scenario_id,
        params=params,
        av_x0=av_x0,
        av_speed0=av_speed0,
        lead=lead,
        pedestrian=None,
        parked=[],
        far=[],
    )

    pedestrian = None
    if params.pedestrian_cross:
        xs_pre, _ = simulate_av(base)
        t_in = rng.uniform(1.5, 6.0)
        i_in = min(int(round(t_in / STEP_DT)), N_STEPS - 1)
        lo = xs_pre[i_in] + 6.0
        hi = xs_pre[i_in] + 30.0
        if lead is not None:
            hi = min(hi, lead.x0 + lead.speed * t_in - 6.0)
        if hi <= lo:
            return None
        speed = rng.uniform(1.0, 1.6)
        pedestrian = _Pedestrian(
            agent_id=PED_ID,
            cross_x=float(rng.uniform(lo, hi)),
            y0=-(LANE_HALF_WIDTH + speed * t_in),
            speed=speed,
        )

    parked: list[_Parked] = []
    span = min(params.lane_length - 20.0, 200.0)
    if params.n_parked > 0 and span <= 0:
        return None
    for i in range(params.n_parked):
        side = 1.0 if rng.uniform() < 0.5 else -1.0
        parked.append(
            _Parked(
                agent_id=PARKED_ID_BASE + i,
                x=float(rng.uniform(av_x0 + 10.0, av_x0 + 10.0 + span)),
                y=side * (PARKED_MIN_OFFSET + float(rng.uniform(0.0, 1.5))),
            )
        )
    for i, a in enumerate(parked):
        for b in parked[i + 1 :]:
            if math.hypot(a.x - b.x, a.y - b.y) < 5.5:
                return None

    far = [
        _FarVehicle(
            agent_id=FAR_ID_BASE + i,
            x0=float(rng.uniform(0.0, params.lane_length)),
            y=(1.0 if i % 2 == 0 else -1.0) * (FAR_TRAFFIC_OFFSET + 3.5 * i),
            speed=float(rng.uniform(5.0, 15.0)) * (1.0 if rng.uniform() < 0.5 else -1.0),
        )
        for i in range(params.n_far_traffic)
    ]

    world = replace(base, pedestrian=pedestrian, parked=parked, far=far)
    xs_full, _ = simulate_av(world)
    horizon = (N_STEPS - 1) * STEP_DT
    if xs_full[-1] > params.lane_length:
        return None
    if lead is not None and lead.x0 + lead.speed * horizon > params.lane_length:
        return None
    return world


def generate_world(params: SynthParams, scenario_id: str) -> World:
    """Sample a feasible world, retrying with derived sub-seeds.

    Raises RuntimeError when no feasible placement is found within
    MAX_SPAWN_ATTEMPTS attempts.
    """
    for attempt in range(MAX_SPAWN_ATTEMPTS):
        rng = rng_for(params.seed, scenario_id, attempt)
        world = _propose(params, scenario_id, rng)
        if world is not None:
            return world
    raise RuntimeError(
        f"could not place a feasible scene for {scenario_id!r} "
        f"after {MAX_SPAWN_ATTEMPTS} attempts"
    )


def _vehicle_state(x: float, y: float, vx: float, heading: float = 0.0) -> AgentState:
    return AgentState(
        x=x, y=y, z=0.0, vx=vx, vy=0.0, heading=heading,
        length=CAR_LENGTH, width=CAR_WIDTH, valid=True,
    )


def realize_scenario(world: World) -> tuple[Scenario, SynthGroundTruth, dict[str, list[int]]]:
    """Render a world into a scenario, its ground truth, and a label entry."""
    params = world.params
    xs, vs = simulate_av(world)
    times = [i * STEP_DT for i in range(N_STEPS)]

    agents: list[AgentTrack] = []
    agents.append(
        AgentTrack(
            agent_id=AV_ID,
            agent_type=AgentType.VEHICLE,
            is_context=False,
            states=[
                AgentState(
                    x=float(xs[i]), y=0.0, z=0.0, vx=float(vs[i]), vy=0.0,
                    heading=0.0, length=AV_LENGTH, width=AV_WIDTH, valid=True,
                )
                for i in range(N_STEPS)
            ],
        )
    )

    rationale: dict[int, Rationale] = {}
    causal: set[int] = set()
    noncausal: set[int] = set()

    if world.lead is not None:
        lead = world.lead
        agents.append(
            AgentTrack(
                agent_id=lead.agent_id,
                agent_type=AgentType.VEHICLE,
                is_context=True,
                states=[
                    _vehicle_state(lead.x0 + lead.speed * t, 0.0, lead.speed)
                    for t in times
                ],
            )
        )
        causal.add(lead.agent_id)
        rationale[lead.agent_id] = Rationale.LEAD_VEHICLE

    if world.pedestrian is not None:
        ped = world.pedestrian
        agents.append(
            AgentTrack(
                agent_id=ped.agent_id,
                agent_type=AgentType.PEDESTRIAN,
                is_context=True,
                states=[
                    AgentState(
                        x=ped.cross_x, y=ped.y0 + ped.speed * t, z=0.0,
                        vx=0.0, vy=ped.speed, heading=math.pi / 2.0,
                        length=PED_SIZE, width=PED_SIZE, valid=True,
                    )
                    for t in times
                ],
            )
        )
        causal.add(ped.agent_id)
        rationale[ped.agent_id] = Rationale.CROSSING_PEDESTRIAN

    jitter_rng = rng_for(params.seed, world.scenario_id, "parked-jitter")
    for spot in world.parked:
        jitter = jitter_rng.uniform(-PARKED_JITTER, PARKED_JITTER, size=(N_STEPS, 2))
        agents.append(
            AgentTrack(
                agent_id=spot.agent_id,
                agent_type=AgentType.VEHICLE,
                is_context=True,
                states=[
                    _vehicle_state(spot.x + float(jitter[i, 0]), spot.y + float(jitter[i, 1]), 0.0)
                    for i in range(N_STEPS)
                ],
            )
        )
        noncausal.add(spot.agent_id)
        rationale[spot.agent_id] = Rationale.PARKED

    for mover in world.far:
        heading = 0.0 if mover.speed >= 0 else -math.pi
        agents.append(
            AgentTrack(
                agent_id=mover.agent_id,
                agent_type=AgentType.VEHICLE,
                is_context=True,
                states=[
                    _vehicle_state(mover.x0 + mover.speed * t, mover.y, mover.speed, heading)
                    for t in times
                ],
            )
        )
        noncausal.add(mover.agent_id)
        rationale[mover.agent_id] = Rationale.FAR_TRAFFIC

    roadgraph = [
        RoadFeature(
            feature_id=1,
            feature_type=FeatureType.LANE_CENTER,
            polyline=[(0.0, 0.0, 0.0), (params.lane_length, 0.0, 0.0)],
        ),
        RoadFeature(
            feature_id=2,
            feature_type=FeatureType.ROAD_EDGE,
            polyline=[(0.0, LANE_HALF_WIDTH, 0.0), (params.lane_length, LANE_HALF_WIDTH, 0.0)],
        ),
        RoadFeature(
            feature_id=3,
            feature_type=FeatureType.ROAD_EDGE,
            polyline=[(0.0, -LANE_HALF_WIDTH, 0.0), (params.lane_length, -LANE_HALF_WIDTH, 0.0)],
        ),
    ]

    scenario = canonicalize_scenario(
        Scenario(
            scenario_id=world.scenario_id,
            av_agent_id=AV_ID,
            timestamps=times,
            agents=agents,
            roadgraph=roadgraph,
        )
    )
    truth = SynthGroundTruth(
        scenario_id=world.scenario_id,
        causal_ids=frozenset(causal),
        noncausal_ids=frozenset(noncausal),
        rationale=rationale,
    )
    label_entry = {"synthetic": sorted(causal)}
    return scenario, truth, label_entry


def generate(params: SynthParams, scenario_id: str) -> tuple[Scenario, SynthGroundTruth, dict[str, list[int]]]:
    """Generate one scenario. Deterministic in (params, scenario_id)."""
    return realize_scenario(generate_world(params, scenario_id))


def default_template(index: int, rng: np.random.Generator) -> SynthParams:
    """Mixed traffic templates for corpus generation."""
    return SynthParams(
        n_parked=int(rng.integers(2, 9)),
        n_lead=1 if rng.uniform() < 0.85 else 0,
        pedestrian_cross=bool(rng.uniform() < 0.3),
        n_far_traffic=int(rng.integers(0, 4)),
    )


def generate_corpus(
    n: int,
    seed: int = 0,
    params_fn: Callable[[int, np.random.Generator], SynthParams] | None = None,
) -> tuple[list[Scenario], CausalLabelFile, dict[str, SynthGroundTruth]]:
    """Generate n scenarios with labels and ground truth, in memory."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    params_fn = params_fn or default_template
    scenarios: list[Scenario] = []
    labels: CausalLabelFile = {}
    truths: dict[str, SynthGroundTruth] = {}
    for i in range(n):
        scenario_id = f"synth-{seed}-{i:05d}"
        params = replace(params_fn(i, rng_for(seed, "template", i)), seed=seed)
        scenario, truth, label_entry = generate(params, scenario_id)
        scenarios.append(scenario)
        labels[scenario_id] = label_entry
        truths[scenario_id] = truth
    return scenarios, labels, truths


def save_ground_truth(truths: dict[str, SynthGroundTruth], path: str | Path) -> None:
    out = {
        sid: {
            "causal_ids": sorted(t.causal_ids),
            "noncausal_ids": sorted(t.noncausal_ids),
            "rationale": {str(a): r.value for a, r in sorted(t.rationale.items())},
        }
        for sid, t in sorted(truths.items())
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(out, fh, separators=(",", ":"), sort_keys=True)
        fh.write("\n")


def load_ground_truth(path: str | Path) -> dict[str, SynthGroundTruth]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RecordFormatError(f"ground truth file {path}: invalid JSON: {exc}") from None
    truths = {}
    for sid, entry in raw.items():
        truths[sid] = SynthGroundTruth(
            scenario_id=sid,
            causal_ids=frozenset(entry["causal_ids"]),
            noncausal_ids=frozenset(entry["noncausal_ids"]),
            rationale={int(a): Rationale(r) for a, r in entry["rationale"].items()},
        )
    return truths


def write_corpus(
    out_prefix: str | Path,
    scenarios: list[Scenario],
    labels: CausalLabelFile,
    truths: dict[str, SynthGroundTruth],
) -> dict[str, Path]:
    """Write the three corpus files next to each other.

    Returns the paths keyed as scenarios/labels/ground_truth.
    """
    prefix = Path(out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    paths = {
        "scenarios": prefix.with_name(prefix.name + "_scenarios.jsonl"),
        "labels": prefix.with_name(prefix.name + "_labels.json"),
        "ground_truth": prefix.with_name(prefix.name + "_ground_truth.json"),
    }
    save_scenarios(scenarios, paths["scenarios"])
    save_labels(labels, paths["labels"])
    save_ground_truth(truths, paths["ground_truth"])
    return paths

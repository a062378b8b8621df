"""Context-free and context-sensitive baseline predictors.

These are deliberately simple kinematic models. The constant-velocity
and constant-turn-rate predictors read nothing but the ego state, so
any scene perturbation leaves their output bit-identical; they anchor
the zero end of the sensitivity scale. The social-repulsion predictor
adds a short-range push away from nearby agents and is the cheapest
model whose output visibly reacts to agent removal.
"""

from __future__ import annotations

import enum
import math

from sklearn.base import BaseEstimator

from .scenario import (
    CURRENT_INDEX,
    FUTURE_STEPS,
    STEP_DT,
    PredictedTrajectory,
    PredictionSet,
    Scenario,
    Trajectory,
)
from .validation import ensure_scenario_sequence

DEFAULT_SPEED_MULTIPLIERS = (0.0, 0.5, 0.8, 1.0, 1.2, 1.5)
DEFAULT_INFLUENCE_RADIUS = 15.0
DEFAULT_REPULSION_GAIN = 2.0


class PredictorKind(str, enum.Enum):
    CONSTANT_VELOCITY = "constant_velocity"
    CONSTANT_TURN_RATE = "constant_turn_rate"
    SOCIAL_REPULSION = "social_repulsion"


def _wrap_angle(angle: float) -> float:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def _mode_multipliers(k: int, speed_multipliers: tuple[float, ...]) -> tuple[float, ...]:
    if not 1 <= k <= len(speed_multipliers):
        raise ValueError(
            f"k must be between 1 and {len(speed_multipliers)} (one speed multiplier per mode), got {k}"
        )
    return tuple(speed_multipliers[:k])


class _ScenarioPredictor(BaseEstimator):
    """Shared batch plumbing; subclasses fill in one mode's rollout."""

    def fit(self, X, y=None):
        return self

    def _rollout(self, scenario: Scenario, multiplier: float) -> list[tuple[float, float]]:
        raise NotImplementedError

    def predict_scenario(self, scenario: Scenario) -> PredictionSet:
        multipliers = _mode_multipliers(self.k, tuple(self.speed_multipliers))
        prob = 1.0 / len(multipliers)
        trajectories = [
            PredictedTrajectory(trajectory=Trajectory(self._rollout(scenario, m)), probability=prob)
            for m in multipliers
        ]
        return PredictionSet(
            scenario_id=scenario.scenario_id,
            variant=self.variant,
            trajectories=trajectories,
        )

    def predict(self, X) -> list[PredictionSet]:
        return [self.predict_scenario(s) for s in ensure_scenario_sequence(X)]


class ConstantVelocityPredictor(_ScenarioPredictor):
    """Ego state at the current step, propagated linearly.

    Each of the k modes scales the current velocity by one entry of
    speed_multipliers; probabilities are uniform. Depends on nothing but
    the AV track, so it is invariant to any change of the other agents.
    """

    def __init__(
        self,
        k: int = 6,
        speed_multipliers: tuple[float, ...] = DEFAULT_SPEED_MULTIPLIERS,
        variant: str = "original",
    ) -> None:
        self.k = k
        self.speed_multipliers = speed_multipliers
        self.variant = variant

    def _rollout(self, scenario: Scenario, multiplier: float) -> list[tuple[float, float]]:
        # accumulate like the other rollouts so that an obstacle-free
        # social rollout reproduces this output bit for bit
        s = scenario.av_track().states[CURRENT_INDEX]
        x, y = s.x, s.y
        vx = s.vx * multiplier
        vy = s.vy * multiplier
        points = []
        for _ in range(FUTURE_STEPS):
            x += vx * STEP_DT
            y += vy * STEP_DT
            points.append((x, y))
        return points


class ConstantTurnRatePredictor(_ScenarioPredictor):
    """Constant speed on a circular arc.

    The turn rate is estimated from the last two valid history headings
    of the AV; with fewer than two valid history states it degrades to
    constant velocity.
    """

    def __init__(
        self,
        k: int = 6,
        speed_multipliers: tuple[float, ...] = DEFAULT_SPEED_MULTIPLIERS,
        variant: str = "original",
    ) -> None:
        self.k = k
        self.speed_multipliers = speed_multipliers
        self.variant = variant

    def _turn_rate(self, scenario: Scenario) -> float:
        track = scenario.av_track()
        valid = [i for i in track.valid_indices() if i <= CURRENT_INDEX]
        if len(valid) < 2:
            return 0.0
        i, j = valid[-2], valid[-1]
        dh = _wrap_angle(track.states[j].heading - track.states[i].heading)
        return dh / ((j - i) * STEP_DT)

    def _rollout(self, scenario: Scenario, multiplier: float) -> list[tuple[float, float]]:
        s = scenario.av_track().states[CURRENT_INDEX]
        omega = self._turn_rate(scenario)
        c = math.cos(omega * STEP_DT)
        sn = math.sin(omega * STEP_DT)
        x, y = s.x, s.y
        vx = s.vx * multiplier
        vy = s.vy * multiplier
        points = []
        for _ in range(FUTURE_STEPS):
            vx, vy = c * vx - sn * vy, sn * vx + c * vy
            x += vx * STEP_DT
            y += vy * STEP_DT
            points.append((x, y))
        return points


class SocialRepulsionPredictor(_ScenarioPredictor):
    """Constant velocity with a local push away from other agents.

    At every rollout step the position advanced by the scaled velocity
    is additionally displaced by

        gain * sum_agents unit_away(agent) * max(0, 1 - dist / radius)

    where dist is measured from the previous rollout point to the
    agent's last valid position. Agents farther than the radius from
    the ego's current position and from every predicted point therefore
    contribute exactly nothing, and deleting them cannot change the
    output.
    """

    def __init__(
        self,
        k: int = 6,
        speed_multipliers: tuple[float, ...] = DEFAULT_SPEED_MULTIPLIERS,
        influence_radius: float = DEFAULT_INFLUENCE_RADIUS,
        repulsion_gain: float = DEFAULT_REPULSION_GAIN,
        variant: str = "original",
    ) -> None:
        self.k = k
        self.speed_multipliers = speed_multipliers
        self.influence_radius = influence_radius
        self.repulsion_gain = repulsion_gain
        self.variant = variant

    def _anchors(self, scenario: Scenario) -> list[tuple[float, float]]:
        anchors = []
        for track in scenario.agents:
            if track.agent_id == scenario.av_agent_id:
                continue
            valid = track.valid_indices()
            if not valid:
                continue
            last = track.states[valid[-1]]
            anchors.append((last.x, last.y))
        return anchors

    def _push(self, x: float, y: float, anchors: list[tuple[float, float]]) -> tuple[float, float]:
        radius = float(self.influence_radius)
        if radius <= 0:
            raise ValueError(f"influence_radius must be positive, got {radius!r}")
        px = py = 0.0
        for ax, ay in anchors:
            dx = x - ax
            dy = y - ay
            dist = math.hypot(dx, dy)
            if dist >= radius or dist == 0.0:
                continue
            w = self.repulsion_gain * (1.0 - dist / radius)
            px += dx / dist * w
            py += dy / dist * w
        return px, py

    def _rollout(self, scenario: Scenario, multiplier: float) -> list[tuple[float, float]]:
        s = scenario.av_track().states[CURRENT_INDEX]
        anchors = self._anchors(scenario)
        x, y = s.x, s.y
        vx = s.vx * multiplier
        vy = s.vy * multiplier
        points = []
        for _ in range(FUTURE_STEPS):
            px, py = self._push(x, y, anchors)
            x += vx * STEP_DT + px
            y += vy * STEP_DT + py
            points.append((x, y))
        return points


_PREDICTORS = {
    PredictorKind.CONSTANT_VELOCITY: ConstantVelocityPredictor,
    PredictorKind.CONSTANT_TURN_RATE: ConstantTurnRatePredictor,
    PredictorKind.SOCIAL_REPULSION: SocialRepulsionPredictor,
}


def make_predictor(kind: PredictorKind | str, **params) -> _ScenarioPredictor:
    """Instantiate a baseline predictor by kind name."""
    return _PREDICTORS[PredictorKind(kind)](**params)


def predict_trajectories(
    kind: PredictorKind | str,
    scenario: Scenario,
    k: int = 6,
    variant: str = "original",
    **params,
) -> PredictionSet:
    """One-call form of make_predictor(...).predict_scenario(...)."""
    return make_predictor(kind, k=k, variant=variant, **params).predict_scenario(scenario)

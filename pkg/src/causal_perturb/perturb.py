"""Agent-deletion perturbations.

A perturbation removes a chosen subset of non-ego agents from a
scenario. Removal is total: every state of the agent becomes invalid
and zeroed, as if the agent had never been observed. The four kinds
differ only in how the subset is chosen (labeled causal agents, labeled
non-causal agents, a size-matched random subset of the non-causal
agents, or agents that barely move).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from sklearn.base import BaseEstimator, TransformerMixin

from .labels import CausalLabelFile, CausalSet, causal_union, effective_causal_ids
from .scenario import (
    ZERO_STATE,
    AgentTrack,
    Scenario,
    agent_displacement,
    distance_to_av,
)
from .seeding import rng_for
from .validation import check_non_negative, ensure_scenario_sequence

DEFAULT_STATIC_THRESHOLD = 0.1


class PerturbationKind(str, enum.Enum):
    REMOVE_CAUSAL = "remove_causal"
    REMOVE_NONCAUSAL = "remove_noncausal"
    REMOVE_NONCAUSAL_EQUAL = "remove_noncausal_equal"
    REMOVE_STATIC = "remove_static"


LABEL_KINDS = frozenset(
    {
        PerturbationKind.REMOVE_CAUSAL,
        PerturbationKind.REMOVE_NONCAUSAL,
        PerturbationKind.REMOVE_NONCAUSAL_EQUAL,
    }
)


def _deleted(track: AgentTrack) -> AgentTrack:
    return replace(track, states=[ZERO_STATE] * len(track.states))


def delete_agents(scenario: Scenario, agent_ids: set[int]) -> Scenario:
    """Return a copy of the scenario with the given agents fully removed.

    Removing the AV is refused; ids not present in the scenario are
    ignored, which makes deletion compose: deleting A then B equals
    deleting A | B.
    """
    if scenario.av_agent_id in agent_ids:
        raise ValueError(
            f"refusing to delete the AV (agent {scenario.av_agent_id}) "
            f"from scenario {scenario.scenario_id!r}"
        )
    agents = [
        _deleted(t) if t.agent_id in agent_ids else t for t in scenario.agents
    ]
    return replace(scenario, agents=agents)


def select_static(
    scenario: Scenario, threshold: float = DEFAULT_STATIC_THRESHOLD
) -> set[int]:
    """Non-ego agents whose total movement stays within the threshold.

    Movement is the maximum 3D distance between any two valid states.
    Tracks without a single valid state are skipped; there is nothing
    left of them to remove.
    """
    check_non_negative(threshold, "threshold")
    out: set[int] = set()
    for track in scenario.agents:
        if track.agent_id == scenario.av_agent_id:
            continue
        if not any(s.valid for s in track.states):
            continue
        if agent_displacement(track) <= threshold:
            out.add(track.agent_id)
    return out


@dataclass(frozen=True)
class PerturbationOutcome:
    """A perturbed scenario plus the covariates of what was removed.

    num_causal and num_noncausal describe the original scenario and are
    None when the perturbation ran without labels. min_removed_distance
    is the planar distance from the AV (current step, nearest valid
    state) to the closest removed agent, None when nothing was removed.
    removed_fraction_of_context is the removed share of the scenario's
    context agents, None when the scenario has no context agents.
    """

    perturbed: Scenario
    kind: PerturbationKind
    removed_ids: frozenset[int]
    num_removed: int
    num_causal: int | None
    num_noncausal: int | None
    min_removed_distance: float | None
    removed_fraction_of_context: float | None


def _pick_removal(
    kind: PerturbationKind,
    scenario: Scenario,
    causal: CausalSet | None,
    seed: int,
    static_threshold: float,
) -> tuple[set[int], int | None, int | None]:
    if kind == PerturbationKind.REMOVE_STATIC:
        removed = select_static(scenario, static_threshold)
        if causal is None:
            return removed, None, None
        causal_ids = effective_causal_ids(scenario, causal)
        return removed, len(causal_ids), len(scenario.non_av_ids() - causal_ids)

    if causal is None:
        raise ValueError(f"perturbation kind {kind.value!r} requires causal labels")
    causal_ids = effective_causal_ids(scenario, causal)
    noncausal_ids = scenario.non_av_ids() - causal_ids

    if kind == PerturbationKind.REMOVE_CAUSAL:
        removed = set(causal_ids)
    elif kind == PerturbationKind.REMOVE_NONCAUSAL:
        removed = set(noncausal_ids)
    elif kind == PerturbationKind.REMOVE_NONCAUSAL_EQUAL:
        m = min(len(causal_ids), len(noncausal_ids))
        removed = set()
        if m > 0:
            candidates = sorted(noncausal_ids)
            rng = rng_for(seed, scenario.scenario_id)
            chosen = rng.choice(len(candidates), size=m, replace=False)
            removed = {candidates[i] for i in chosen}
    else:
        raise ValueError(f"unknown perturbation kind {kind!r}")
    return removed, len(causal_ids), len(noncausal_ids)


def apply_perturbation(
    kind: PerturbationKind | str,
    scenario: Scenario,
    causal: CausalSet | None = None,
    seed: int = 0,
    static_threshold: float = DEFAULT_STATIC_THRESHOLD,
) -> PerturbationOutcome:
    """Apply one perturbation to one scenario.

    The label-driven kinds require the scenario's causal set; the static
    kind works without labels. The random subset drawn by
    remove_noncausal_equal depends only on (seed, scenario_id), so a
    corpus run is reproducible regardless of ordering or parallelism.
    """
    kind = PerturbationKind(kind)
    removed, num_causal, num_noncausal = _pick_removal(
        kind, scenario, causal, seed, static_threshold
    )
    perturbed = delete_agents(scenario, removed)
    context = scenario.context_ids()
    fraction = len(removed & context) / len(context) if context else None
    min_dist = (
        min(distance_to_av(scenario, a) for a in removed) if removed else None
    )
    return PerturbationOutcome(
        perturbed=perturbed,
        kind=kind,
        removed_ids=frozenset(removed),
        num_removed=len(removed),
        num_causal=num_causal,
        num_noncausal=num_noncausal,
        min_removed_distance=min_dist,
        removed_fraction_of_context=fraction,
    )


def is_noncausal_perturbation(outcome: PerturbationOutcome, causal: CausalSet) -> bool:
    """Certificate that a perturbation left the causal structure intact:
    nothing removed was labeled causal and the AV is untouched."""
    if outcome.perturbed.av_agent_id in outcome.removed_ids:
        return False
    return not (outcome.removed_ids & causal.causal_ids)


class ScenarioPerturber(BaseEstimator, TransformerMixin):
    """Transformer that perturbs every scenario in a batch.

    Parameters
    ----------
    kind : str or PerturbationKind, default "remove_noncausal"
        Which removal rule to apply.
    labels : CausalLabelFile or None
        Causal labels, required by every kind except remove_static.
    seed : int, default 0
        Base seed for the size-matched random kind.
    static_threshold : float, default 0.1
        Displacement bound, in meters, below which an agent counts as static.
    """

    def __init__(
        self,
        kind: str | PerturbationKind = PerturbationKind.REMOVE_NONCAUSAL,
        labels: CausalLabelFile | None = None,
        seed: int = 0,
        static_threshold: float = DEFAULT_STATIC_THRESHOLD,
    ) -> None:
        self.kind = kind
        self.labels = labels
        self.seed = seed
        self.static_threshold = static_threshold

    def _resolved_kind(self) -> PerturbationKind:
        return PerturbationKind(self.kind)

    def fit(self, X, y=None):
        self._resolved_kind()
        check_non_negative(self.static_threshold, "static_threshold")
        return self

    def perturb(self, scenario: Scenario) -> PerturbationOutcome:
        """Perturb one scenario, returning the outcome with covariates."""
        kind = self._resolved_kind()
        causal = None
        if self.labels is not None:
            causal = causal_union(self.labels, scenario.scenario_id)
        return apply_perturbation(
            kind,
            scenario,
            causal=causal,
            seed=self.seed,
            static_threshold=self.static_threshold,
        )

    def transform(self, X) -> list[Scenario]:
        self.fit(X)
        return [self.perturb(s).perturbed for s in ensure_scenario_sequence(X)]

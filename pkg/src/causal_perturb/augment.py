"""Training-time augmentation by random agent dropout.

Dropout draws are independent per agent and keyed by a stable hash of
(seed, scenario id, agent id), so a corpus pass yields the same result
shuffled, sharded, or rerun. The ego vehicle is never eligible, and the
label-aware kind never drops a labeled causal agent.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Mapping

from sklearn.base import BaseEstimator, TransformerMixin

from .labels import CausalLabelFile, causal_union, effective_causal_ids
from .perturb import DEFAULT_STATIC_THRESHOLD, delete_agents, select_static
from .scenario import Scenario
from .seeding import rng_for, stable_seed, unit_float
from .validation import check_probability, ensure_scenario_sequence


class AugmentKind(str, enum.Enum):
    DROP_CONTEXT = "drop_context"
    DROP_STATIC_CONTEXT = "drop_static_context"
    DROP_NONCAUSAL = "drop_noncausal"


@dataclass(frozen=True)
class AugmentConfig:
    kind: AugmentKind = AugmentKind.DROP_CONTEXT
    drop_probability: float = 0.1
    static_threshold: float = DEFAULT_STATIC_THRESHOLD
    seed: int = 0


def eligible_ids(
    scenario: Scenario,
    labels: CausalLabelFile | None,
    config: AugmentConfig,
) -> set[int]:
    """Agents the given augmentation kind is allowed to drop."""
    kind = AugmentKind(config.kind)
    if kind == AugmentKind.DROP_CONTEXT:
        return scenario.context_ids()
    if kind == AugmentKind.DROP_STATIC_CONTEXT:
        return scenario.context_ids() & select_static(scenario, config.static_threshold)
    if kind == AugmentKind.DROP_NONCAUSAL:
        if labels is None:
            raise ValueError("drop_noncausal needs a label file")
        if scenario.scenario_id not in labels:
            return set()
        causal = causal_union(labels, scenario.scenario_id)
        return scenario.non_av_ids() - effective_causal_ids(scenario, causal)
    raise ValueError(f"unknown augmentation kind {config.kind!r}")


def augment_scenario(
    scenario: Scenario,
    labels: CausalLabelFile | None,
    config: AugmentConfig,
) -> Scenario:
    """Independently drop each eligible agent with the configured probability.

    A scenario without labels under drop_noncausal has no eligible
    agents and comes back unchanged.
    """
    p = check_probability(config.drop_probability, "drop_probability")
    dropped = {
        agent_id
        for agent_id in eligible_ids(scenario, labels, config)
        if unit_float(config.seed, scenario.scenario_id, agent_id) < p
    }
    if not dropped:
        return scenario
    return delete_agents(scenario, dropped)


class ScenarioAugmenter(BaseEstimator, TransformerMixin):
    """Transformer applying one dropout kind to every scenario in a batch."""

    def __init__(
        self,
        kind: str | AugmentKind = AugmentKind.DROP_CONTEXT,
        drop_probability: float = 0.1,
        static_threshold: float = DEFAULT_STATIC_THRESHOLD,
        labels: CausalLabelFile | None = None,
        seed: int = 0,
    ) -> None:
        self.kind = kind
        self.drop_probability = drop_probability
        self.static_threshold = static_threshold
        self.labels = labels
        self.seed = seed

    def _config(self) -> AugmentConfig:
        return AugmentConfig(
            kind=AugmentKind(self.kind),
            drop_probability=self.drop_probability,
            static_threshold=self.static_threshold,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        self._config()
        check_probability(self.drop_probability, "drop_probability")
        return self

    def augment(self, scenario: Scenario) -> Scenario:
        return augment_scenario(scenario, self.labels, self._config())

    def transform(self, X) -> list[Scenario]:
        self.fit(X)
        return [self.augment(s) for s in ensure_scenario_sequence(X)]


def fold_validation_split(
    corpus: list[Scenario],
    labels: CausalLabelFile | None,
    fraction: float = 0.7,
    copies: int = 1,
    seed: int = 0,
    config: AugmentConfig | None = None,
) -> tuple[list[Scenario], list[Scenario]]:
    """Fold part of a held-out corpus back into training material.

    A deterministic per-scenario hash selects roughly the given fraction
    of the corpus. Each selected scenario contributes `copies`
    independently augmented variants (ids suffixed "#fold<j>" to keep
    them unique); the rest is returned untouched as the holdout.

    Returns:
        (train_addition, holdout)
    """
    check_probability(fraction, "fraction")
    if copies < 0:
        raise ValueError(f"copies must be non-negative, got {copies}")
    if config is None:
        config = AugmentConfig(kind=AugmentKind.DROP_NONCAUSAL)
    train: list[Scenario] = []
    holdout: list[Scenario] = []
    for scenario in corpus:
        if unit_float(seed, "fold", scenario.scenario_id) >= fraction:
            holdout.append(scenario)
            continue
        for j in range(copies):
            copy_config = replace(config, seed=stable_seed(seed, "fold-copy", j, config.seed))
            augmented = augment_scenario(scenario, labels, copy_config)
            train.append(
                replace(augmented, scenario_id=f"{scenario.scenario_id}#fold{j}")
            )
    return train, holdout


def subsample_line_indices(n: int, fraction: float, seed: int = 0, replicate: int = 0) -> set[int]:
    """Positions kept by a deterministic floor(fraction * n) subsample.

    The selection depends only on (seed, replicate, n), so replicates of
    the same corpus differ while reruns do not.
    """
    check_probability(fraction, "fraction")
    m = int(math.floor(fraction * n))
    if m == n:
        return set(range(n))
    rng = rng_for(seed, "subsample", replicate)
    return set(rng.choice(n, size=m, replace=False).tolist())


def subsample_corpus(
    corpus: list[Scenario],
    fraction: float,
    seed: int = 0,
    replicate: int = 0,
) -> list[Scenario]:
    """Uniform subsample without replacement, keeping input order."""
    chosen = subsample_line_indices(len(corpus), fraction, seed, replicate)
    return [s for i, s in enumerate(corpus) if i in chosen]

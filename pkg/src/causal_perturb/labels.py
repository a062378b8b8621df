"""Causal label store.

A label file maps scenario id to per-labeler lists of agent ids that the
labeler judged causally relevant to the ego vehicle's behavior. Several
labelers can cover one scenario and they rarely agree perfectly, so the
working causal set of a scenario is the union across labelers, with the
per-agent labeler count kept for agreement analysis.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .errors import RecordFormatError, UnlabeledScenarioError
from .scenario import Scenario

logger = logging.getLogger(__name__)

# scenario_id -> labeler_id -> sorted agent ids
CausalLabelFile = dict[str, dict[str, list[int]]]

EXPECTED_MAX_LABELERS = 5


@dataclass(frozen=True)
class CausalSet:
    """Union of labeler selections for one scenario.

    agreement maps each causal agent id to the number of labelers that
    selected it; causal_ids is exactly the key set of agreement.
    """

    scenario_id: str
    causal_ids: frozenset[int]
    agreement: dict[int, int]


def _no_duplicate_keys(pairs: list[tuple[str, object]]) -> dict:
    obj: dict = {}
    for key, value in pairs:
        if key in obj:
            raise RecordFormatError(f"duplicate key {key!r}")
        obj[key] = value
    return obj


def load_labels(path: str | Path) -> CausalLabelFile:
    """Parse a label file, rejecting duplicate keys and malformed entries.

    Agent id lists are normalized to sorted order so that reserializing
    a loaded file is stable.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh, object_pairs_hook=_no_duplicate_keys)
        except json.JSONDecodeError as exc:
            raise RecordFormatError(f"labels file {path}: invalid JSON: {exc}") from None
        except RecordFormatError as exc:
            raise RecordFormatError(f"labels file {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise RecordFormatError(f"labels file {path}: top level must be an object")

    labels: CausalLabelFile = {}
    for scenario_id, per_labeler in raw.items():
        if not isinstance(per_labeler, dict):
            raise RecordFormatError(
                f"labels file {path}: scenario {scenario_id!r} entry must be an object"
            )
        if len(per_labeler) > EXPECTED_MAX_LABELERS:
            logger.warning(
                "scenario %r has %d labelers, more than the expected %d",
                scenario_id, len(per_labeler), EXPECTED_MAX_LABELERS,
            )
        clean: dict[str, list[int]] = {}
        for labeler_id, agent_ids in per_labeler.items():
            if not isinstance(agent_ids, list):
                raise RecordFormatError(
                    f"labels file {path}: scenario {scenario_id!r} labeler {labeler_id!r} "
                    f"must list agent ids"
                )
            for a in agent_ids:
                if isinstance(a, bool) or not isinstance(a, int):
                    raise RecordFormatError(
                        f"labels file {path}: scenario {scenario_id!r} labeler {labeler_id!r} "
                        f"has non-integer agent id {a!r}"
                    )
            if len(set(agent_ids)) != len(agent_ids):
                raise RecordFormatError(
                    f"labels file {path}: scenario {scenario_id!r} labeler {labeler_id!r} "
                    f"lists a duplicate agent id"
                )
            clean[labeler_id] = sorted(agent_ids)
        labels[scenario_id] = clean
    return labels


def save_labels(labels: CausalLabelFile, path: str | Path) -> None:
    out = {
        sid: {lab: sorted(ids) for lab, ids in sorted(per.items())}
        for sid, per in sorted(labels.items())
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(out, fh, separators=(",", ":"), sort_keys=True)
        fh.write("\n")


def causal_union(labels: Mapping[str, Mapping[str, list[int]]], scenario_id: str) -> CausalSet:
    """Causal set of a scenario: any agent selected by at least one labeler."""
    if scenario_id not in labels:
        raise UnlabeledScenarioError(f"scenario {scenario_id!r} has no causal labels")
    agreement: dict[int, int] = {}
    for agent_ids in labels[scenario_id].values():
        for a in agent_ids:
            agreement[a] = agreement.get(a, 0) + 1
    return CausalSet(
        scenario_id=scenario_id,
        causal_ids=frozenset(agreement),
        agreement=agreement,
    )


def effective_causal_ids(scenario: Scenario, causal: CausalSet) -> set[int]:
    """Causal ids usable against a concrete scenario.

    Label entries naming the AV are ignored, and entries naming agents
    absent from the scenario are dropped with a warning that counts them.
    """
    present = scenario.agent_ids()
    dangling = [a for a in causal.causal_ids if a not in present]
    if dangling:
        logger.warning(
            "scenario %r: dropping %d labeled agent id(s) absent from the scenario: %s",
            scenario.scenario_id, len(dangling), sorted(dangling),
        )
    return {a for a in causal.causal_ids if a in present and a != scenario.av_agent_id}


@dataclass(frozen=True)
class AgreementHistogram:
    """How many agents were selected by exactly k labelers, pooled."""

    counts: dict[int, int]

    @property
    def total_agents(self) -> int:
        return sum(self.counts.values())

    @property
    def fraction_single(self) -> float:
        """Share of labeled agents selected by exactly one labeler."""
        total = self.total_agents
        if total == 0:
            return 0.0
        return self.counts.get(1, 0) / total


def agreement_histogram(
    labels: Mapping[str, Mapping[str, list[int]]], scenarios: Iterable[Scenario]
) -> AgreementHistogram:
    """Pool labeler-agreement counts over all labeled scenarios in a corpus.

    Only agents actually present in their scenario count; the AV and
    dangling label ids are excluded the same way they are everywhere else.
    """
    counts: dict[int, int] = {}
    for scenario in scenarios:
        if scenario.scenario_id not in labels:
            continue
        causal = causal_union(labels, scenario.scenario_id)
        kept = effective_causal_ids(scenario, causal)
        for agent_id in kept:
            k = causal.agreement[agent_id]
            counts[k] = counts.get(k, 0) + 1
    return AgreementHistogram(counts=dict(sorted(counts.items())))

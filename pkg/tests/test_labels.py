import json
import logging
from collections import Counter

import numpy as np
import pytest

from causal_perturb import (
    RecordFormatError,
    UnlabeledScenarioError,
    agreement_histogram,
    causal_union,
    effective_causal_ids,
)
from causal_perturb.labels import load_labels, save_labels

from helpers import av_track, const_states, make_scenario, make_track


FIXTURE = {"s1": {"L1": [101, 102], "L2": [102, 103]}}


class TestLoadSave:
    def test_minimal_file(self, tmp_path):
        p = tmp_path / "labels.json"
        p.write_text('{"s1": {"L1": [3, 5]}}')
        labels = load_labels(p)
        assert labels == {"s1": {"L1": [3, 5]}}

    def test_round_trip(self, tmp_path):
        p1 = tmp_path / "a.json"
        p2 = tmp_path / "b.json"
        save_labels(FIXTURE, p1)
        loaded = load_labels(p1)
        assert loaded == FIXTURE
        save_labels(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_agent_lists_normalized_sorted(self, tmp_path):
        p = tmp_path / "labels.json"
        p.write_text('{"s1": {"L1": [9, 2, 5]}}')
        assert load_labels(p)["s1"]["L1"] == [2, 5, 9]

    def test_duplicate_scenario_key_rejected(self, tmp_path):
        p = tmp_path / "labels.json"
        p.write_text('{"s1": {"L1": [1]}, "s1": {"L1": [2]}}')
        with pytest.raises(RecordFormatError, match="duplicate"):
            load_labels(p)

    def test_duplicate_labeler_key_rejected(self, tmp_path):
        p = tmp_path / "labels.json"
        p.write_text('{"s1": {"L1": [1], "L1": [2]}}')
        with pytest.raises(RecordFormatError, match="duplicate"):
            load_labels(p)

    def test_duplicate_agent_id_rejected(self, tmp_path):
        p = tmp_path / "labels.json"
        p.write_text('{"s1": {"L1": [4, 4]}}')
        with pytest.raises(RecordFormatError, match="duplicate"):
            load_labels(p)

    def test_non_integer_agent_id_rejected(self, tmp_path):
        p = tmp_path / "labels.json"
        p.write_text('{"s1": {"L1": ["a"]}}')
        with pytest.raises(RecordFormatError):
            load_labels(p)

    def test_many_labelers_warn(self, tmp_path, caplog):
        p = tmp_path / "labels.json"
        entry = {f"L{i}": [1] for i in range(6)}
        p.write_text(json.dumps({"s1": entry}))
        with caplog.at_level(logging.WARNING, logger="causal_perturb.labels"):
            load_labels(p)
        assert any("labelers" in r.message for r in caplog.records)


class TestCausalUnion:
    def test_two_labeler_fixture(self):
        cs = causal_union(FIXTURE, "s1")
        assert cs.causal_ids == frozenset({101, 102, 103})
        assert cs.agreement == {101: 1, 102: 2, 103: 1}

    def test_single_labeler(self):
        cs = causal_union({"s": {"L1": [7]}}, "s")
        assert cs.causal_ids == frozenset({7})
        assert cs.agreement == {7: 1}

    def test_unlabeled_scenario_raises(self):
        with pytest.raises(UnlabeledScenarioError, match="nope"):
            causal_union(FIXTURE, "nope")

    def test_matches_multiset_union_brute_force(self):
        rng = np.random.default_rng(5)
        pool = list(range(200, 230))
        for _ in range(25):
            n_labelers = int(rng.integers(1, 6))
            entry = {}
            for j in range(n_labelers):
                k = int(rng.integers(0, 10))
                picks = rng.choice(pool, size=k, replace=False)
                entry[f"L{j}"] = sorted(int(a) for a in picks)
            cs = causal_union({"s": entry}, "s")
            counter = Counter()
            for ids in entry.values():
                counter.update(ids)
            assert cs.causal_ids == frozenset(counter)
            assert cs.agreement == dict(counter)

    def test_insertion_order_irrelevant(self):
        a = causal_union({"s": {"L1": [1, 2], "L2": [2, 3]}}, "s")
        b = causal_union({"s": {"L2": [2, 3], "L1": [1, 2]}}, "s")
        assert a == b


class TestEffectiveCausalIds:
    def _scenario(self):
        return make_scenario(
            [av_track(1), make_track(2, const_states()), make_track(3, const_states())]
        )

    def test_av_label_ignored(self, caplog):
        cs = causal_union({"s1": {"L1": [1, 2]}}, "s1")
        assert effective_causal_ids(self._scenario(), cs) == {2}

    def test_dangling_ids_dropped_with_warning(self, caplog):
        cs = causal_union({"s1": {"L1": [2, 77, 88]}}, "s1")
        with caplog.at_level(logging.WARNING, logger="causal_perturb.labels"):
            ids = effective_causal_ids(self._scenario(), cs)
        assert ids == {2}
        assert any("2" in r.message for r in caplog.records)

    def test_all_present(self):
        cs = causal_union({"s1": {"L1": [2, 3]}}, "s1")
        assert effective_causal_ids(self._scenario(), cs) == {2, 3}


class TestAgreementHistogram:
    def _corpus(self):
        return [
            make_scenario(
                [
                    av_track(1),
                    make_track(101, const_states()),
                    make_track(102, const_states()),
                    make_track(103, const_states()),
                ],
                scenario_id="s1",
            )
        ]

    def test_two_labeler_fixture(self):
        hist = agreement_histogram(FIXTURE, self._corpus())
        assert hist.counts == {1: 2, 2: 1}
        assert hist.total_agents == 3
        assert hist.fraction_single == pytest.approx(2.0 / 3.0)

    def test_unanimous_labelers(self):
        labels = {"s1": {"L1": [101, 102], "L2": [101, 102]}}
        hist = agreement_histogram(labels, self._corpus())
        assert hist.counts == {2: 2}
        assert hist.fraction_single == 0.0

    def test_unlabeled_scenarios_skipped(self):
        corpus = self._corpus() + [
            make_scenario([av_track(1)], scenario_id="unlabeled")
        ]
        hist = agreement_histogram(FIXTURE, corpus)
        assert hist.counts == {1: 2, 2: 1}

    def test_empty_histogram(self):
        hist = agreement_histogram({}, self._corpus())
        assert hist.counts == {}
        assert hist.total_agents == 0
        assert hist.fraction_single == 0.0

    def test_pools_across_scenarios(self):
        labels = {
            "s1": {"L1": [101]},
            "s2": {"L1": [101], "L2": [101]},
        }
        corpus = self._corpus() + [
            make_scenario(
                [av_track(1), make_track(101, const_states())], scenario_id="s2"
            )
        ]
        hist = agreement_histogram(labels, corpus)
        assert hist.counts == {1: 1, 2: 1}

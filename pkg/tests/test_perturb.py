import numpy as np
import pytest
from sklearn.base import clone

from causal_perturb import (
    PerturbationKind,
    ScenarioPerturber,
    UnlabeledScenarioError,
    apply_perturbation,
    causal_union,
    delete_agents,
    is_noncausal_perturbation,
    select_static,
)
from causal_perturb.scenario import N_STEPS, ZERO_STATE

from helpers import (
    av_track,
    const_states,
    invalidate,
    make_scenario,
    make_state,
    make_track,
    moving_states,
)


def _scenario_with_context(n_context=4, scenario_id="s1"):
    tracks = [av_track(1, vx=2.0)]
    for i in range(n_context):
        tracks.append(make_track(10 + i, const_states(x=10.0 + 5.0 * i, y=3.0)))
    return make_scenario(tracks, scenario_id=scenario_id)


def _causal(label_ids, sid="s1"):
    return causal_union({sid: {"L1": sorted(label_ids)}}, sid)


class TestDeleteAgents:
    def test_empty_set_is_identity(self):
        s = _scenario_with_context()
        assert delete_agents(s, set()) == s

    def test_deleting_av_refused(self):
        s = _scenario_with_context()
        with pytest.raises(ValueError, match="refusing to delete the AV"):
            delete_agents(s, {1, 10})

    def test_unknown_ids_ignored(self):
        s = _scenario_with_context()
        assert delete_agents(s, {999}) == s

    def test_deleted_track_fully_zeroed(self):
        s = _scenario_with_context()
        out = delete_agents(s, {10})
        assert out.track(10).states == [ZERO_STATE] * N_STEPS
        assert out.track(11) is s.track(11)
        assert out.av_track() is s.av_track()

    def test_composes(self):
        rng = np.random.default_rng(13)
        s = _scenario_with_context(6)
        ids = sorted(s.non_av_ids())
        for _ in range(20):
            a = {int(i) for i in rng.choice(ids, size=2, replace=False)}
            b = {int(i) for i in rng.choice(ids, size=3, replace=False)}
            assert delete_agents(delete_agents(s, a), b) == delete_agents(s, a | b)


class TestSelectStatic:
    def _track_with_span(self, agent_id, span):
        states = list(const_states(x=0.0))
        states[-1] = make_state(x=span)
        return make_track(agent_id, states)

    def test_threshold_is_inclusive(self):
        s = make_scenario(
            [av_track(1), self._track_with_span(2, 0.099), self._track_with_span(3, 0.101)]
        )
        assert select_static(s) == {2}

    def test_jittering_parked_car_selected(self):
        s = make_scenario([av_track(1), self._track_with_span(2, 0.05)])
        assert select_static(s) == {2}

    def test_moving_car_not_selected(self):
        s = make_scenario([av_track(1), self._track_with_span(2, 10.0)])
        assert select_static(s) == set()

    def test_av_never_selected(self):
        s = make_scenario([av_track(1, vx=0.0)])
        assert select_static(s) == set()

    def test_fully_invalid_track_skipped(self):
        dead = make_track(5, invalidate(const_states(), range(N_STEPS)))
        s = make_scenario([av_track(1), dead])
        assert select_static(s) == set()

    def test_matches_brute_force(self):
        from causal_perturb import agent_displacement

        rng = np.random.default_rng(21)
        tracks = [av_track(1, vx=3.0)]
        for i in range(12):
            wiggle = rng.uniform(0.0, 0.3)
            xs = rng.uniform(0.0, wiggle, size=N_STEPS)
            tracks.append(
                make_track(10 + i, [make_state(x=x, y=float(i)) for x in xs])
            )
        s = make_scenario(tracks)
        expected = {
            t.agent_id
            for t in s.agents
            if t.agent_id != 1 and agent_displacement(t) <= 0.1
        }
        assert select_static(s) == expected

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            select_static(_scenario_with_context(), threshold=-1.0)


class TestApplyPerturbation:
    def test_remove_causal(self):
        s = _scenario_with_context(3)
        out = apply_perturbation("remove_causal", s, causal=_causal({10, 12}))
        assert out.removed_ids == frozenset({10, 12})
        assert out.num_removed == 2
        assert out.num_causal == 2
        assert out.num_noncausal == 1
        assert out.perturbed.track(10).states == [ZERO_STATE] * N_STEPS

    def test_remove_noncausal(self):
        s = _scenario_with_context(3)
        out = apply_perturbation("remove_noncausal", s, causal=_causal({10}))
        assert out.removed_ids == frozenset({11, 12})

    def test_partition_property(self):
        rng = np.random.default_rng(2)
        for trial in range(20):
            s = _scenario_with_context(int(rng.integers(1, 8)), scenario_id=f"s{trial}")
            ids = sorted(s.non_av_ids())
            k = int(rng.integers(0, len(ids) + 1))
            causal = _causal(
                {int(i) for i in rng.choice(ids, size=k, replace=False)}, sid=s.scenario_id
            )
            removed_c = apply_perturbation("remove_causal", s, causal=causal).removed_ids
            removed_n = apply_perturbation("remove_noncausal", s, causal=causal).removed_ids
            assert removed_c & removed_n == frozenset()
            assert removed_c | removed_n == s.non_av_ids()

    def test_av_label_never_removed(self):
        s = _scenario_with_context(2)
        out = apply_perturbation("remove_causal", s, causal=_causal({1, 10}))
        assert out.removed_ids == frozenset({10})
        assert 1 in out.perturbed.agent_ids()

    def test_label_kinds_require_labels(self):
        s = _scenario_with_context()
        for kind in ("remove_causal", "remove_noncausal", "remove_noncausal_equal"):
            with pytest.raises(ValueError, match="requires causal labels"):
                apply_perturbation(kind, s)

    def test_remove_static_without_labels(self):
        s = _scenario_with_context(2)
        out = apply_perturbation("remove_static", s)
        assert out.removed_ids == frozenset({10, 11})
        assert out.num_causal is None and out.num_noncausal is None

    def test_remove_static_with_labels_fills_counts(self):
        s = _scenario_with_context(2)
        out = apply_perturbation("remove_static", s, causal=_causal({10}))
        assert out.num_causal == 1
        assert out.num_noncausal == 1

    def test_string_and_enum_kinds_agree(self):
        s = _scenario_with_context(2)
        causal = _causal({10})
        a = apply_perturbation("remove_causal", s, causal=causal)
        b = apply_perturbation(PerturbationKind.REMOVE_CAUSAL, s, causal=causal)
        assert a == b


class TestRemoveNoncausalEqual:
    def test_cardinality_is_min(self):
        s = _scenario_with_context(5)
        out = apply_perturbation("remove_noncausal_equal", s, causal=_causal({10, 11}))
        assert out.num_removed == 2
        assert out.removed_ids <= {12, 13, 14}

    def test_more_causal_than_noncausal(self):
        s = _scenario_with_context(3)
        out = apply_perturbation("remove_noncausal_equal", s, causal=_causal({10, 11}))
        assert out.removed_ids == frozenset({12})

    def test_no_causal_removes_nothing(self):
        s = _scenario_with_context(3)
        out = apply_perturbation("remove_noncausal_equal", s, causal=_causal(set()))
        assert out.removed_ids == frozenset()
        assert out.min_removed_distance is None

    def test_all_causal_removes_nothing(self):
        s = _scenario_with_context(2)
        out = apply_perturbation("remove_noncausal_equal", s, causal=_causal({10, 11}))
        assert out.removed_ids == frozenset()

    def test_deterministic_for_fixed_seed(self):
        s = _scenario_with_context(6)
        causal = _causal({10})
        draws = {
            apply_perturbation("remove_noncausal_equal", s, causal=causal, seed=42).removed_ids
            for _ in range(5)
        }
        assert len(draws) == 1

    def test_seed_changes_selection_somewhere(self):
        causal = _causal({10})
        differs = False
        for i in range(50):
            s = _scenario_with_context(6, scenario_id=f"s1")
            a = apply_perturbation("remove_noncausal_equal", s, causal=causal, seed=i).removed_ids
            b = apply_perturbation("remove_noncausal_equal", s, causal=causal, seed=i + 1).removed_ids
            if a != b:
                differs = True
                break
        assert differs

    def test_selection_uniform_over_candidates(self):
        # 1 causal, 2 non-causal: each candidate should be drawn about
        # half the time across seeds
        tracks = [
            av_track(1),
            make_track(2, const_states(x=5.0)),
            make_track(3, const_states(x=10.0)),
            make_track(4, const_states(x=15.0)),
        ]
        s = make_scenario(tracks)
        causal = _causal({2})
        hits = {3: 0, 4: 0}
        n = 10_000
        for seed in range(n):
            out = apply_perturbation("remove_noncausal_equal", s, causal=causal, seed=seed)
            assert len(out.removed_ids) == 1
            hits[next(iter(out.removed_ids))] += 1
        assert hits[3] / n == pytest.approx(0.5, abs=0.02)
        assert hits[4] / n == pytest.approx(0.5, abs=0.02)


class TestCovariates:
    def _layout(self):
        # context agents at planar distances 7 and 24, a tracked
        # (non-context) agent at 40
        tracks = [
            av_track(1, vx=0.0),
            make_track(2, const_states(x=7.0)),
            make_track(3, const_states(y=24.0)),
            make_track(4, const_states(x=40.0), is_context=False),
        ]
        return make_scenario(tracks)

    def test_min_removed_distance(self):
        s = self._layout()
        out = apply_perturbation("remove_noncausal", s, causal=_causal(set()))
        assert out.removed_ids == frozenset({2, 3, 4})
        assert out.min_removed_distance == pytest.approx(7.0)

    def test_fraction_counts_context_only(self):
        s = self._layout()
        out = apply_perturbation("remove_noncausal", s, causal=_causal({3}))
        assert out.removed_ids == frozenset({2, 4})
        assert out.removed_fraction_of_context == pytest.approx(0.5)

    def test_fraction_none_without_context(self):
        s = make_scenario(
            [av_track(1), make_track(2, const_states(x=3.0), is_context=False)]
        )
        out = apply_perturbation("remove_noncausal", s, causal=_causal(set()))
        assert out.removed_fraction_of_context is None

    def test_nothing_removed(self):
        s = self._layout()
        out = apply_perturbation("remove_causal", s, causal=_causal(set()))
        assert out.num_removed == 0
        assert out.min_removed_distance is None
        assert out.removed_fraction_of_context == 0.0

    def test_distance_falls_back_to_nearest_valid(self):
        far = invalidate(const_states(x=30.0, y=40.0), range(1, N_STEPS))
        s = make_scenario([av_track(1, vx=0.0), make_track(2, far)])
        out = apply_perturbation("remove_noncausal", s, causal=_causal(set()))
        assert out.min_removed_distance == pytest.approx(50.0)


class TestCertificate:
    def test_noncausal_outcome_passes(self):
        s = _scenario_with_context(3)
        causal = _causal({10})
        out = apply_perturbation("remove_noncausal", s, causal=causal)
        assert is_noncausal_perturbation(out, causal)

    def test_causal_outcome_fails(self):
        s = _scenario_with_context(3)
        causal = _causal({10})
        out = apply_perturbation("remove_causal", s, causal=causal)
        assert not is_noncausal_perturbation(out, causal)

    def test_static_removal_of_causal_agent_fails(self):
        # a stopped lead car is static yet causal: removing it must not
        # certify as a non-causal perturbation
        s = make_scenario(
            [av_track(1, vx=5.0), make_track(2, const_states(x=30.0))]
        )
        causal = _causal({2})
        out = apply_perturbation("remove_static", s, causal=causal)
        assert out.removed_ids == frozenset({2})
        assert not is_noncausal_perturbation(out, causal)


class TestScenarioPerturber:
    def test_sklearn_params_round_trip(self):
        est = ScenarioPerturber(kind="remove_static", seed=9, static_threshold=0.2)
        params = est.get_params()
        assert params["kind"] == "remove_static"
        assert params["seed"] == 9
        cloned = clone(est)
        assert cloned.get_params() == params

    def test_fit_validates_kind(self):
        with pytest.raises(ValueError):
            ScenarioPerturber(kind="remove_everything").fit([])

    def test_transform_batch(self):
        s = _scenario_with_context(2)
        labels = {"s1": {"L1": [10]}}
        est = ScenarioPerturber(kind="remove_causal", labels=labels)
        (out,) = est.transform([s])
        assert out.track(10).states == [ZERO_STATE] * N_STEPS
        assert out.track(11) is s.track(11)

    def test_bare_scenario_rejected(self):
        s = _scenario_with_context(1)
        est = ScenarioPerturber(kind="remove_static")
        with pytest.raises(TypeError, match="wrap it in a list"):
            est.transform(s)

    def test_unlabeled_scenario_raises(self):
        s = _scenario_with_context(1, scenario_id="mystery")
        est = ScenarioPerturber(kind="remove_causal", labels={"other": {"L1": [2]}})
        with pytest.raises(UnlabeledScenarioError):
            est.transform([s])

    def test_perturb_returns_outcome(self):
        s = _scenario_with_context(2)
        est = ScenarioPerturber(kind="remove_static").fit([s])
        out = est.perturb(s)
        assert out.kind == PerturbationKind.REMOVE_STATIC
        assert out.removed_ids == frozenset({10, 11})

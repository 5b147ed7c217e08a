"""Tests for strategy construction, naming, ordering, and metering."""

import numpy as np
import pytest

from acqbench import model as mdl
from acqbench.strategies import KNOWN_KINDS, RoundState, build_strategy

SCORER_KINDS = ("entropy", "least_confident", "margin", "mean_std", "bald")


def _state(n=30, n_labeled=6, n_passes=3, seed=0):
    g = np.random.default_rng(seed)
    X = g.normal(size=(n, 4))
    params = mdl.init_model(4, 8, 3, dropout=0.3, seed=seed)
    labeled = np.arange(n_labeled, dtype=np.int64)
    mc = mdl.MCConfig(n_passes=n_passes, dropout_active=True, seed=seed)
    return RoundState(params, X, labeled, mc, round_index=1, run_seed=seed)


def _pool(state, k=12):
    return np.arange(len(state.labeled), len(state.labeled) + k, dtype=np.int64)


def _spec(kind, **kw):
    spec = {"kind": kind}
    spec.update(kw)
    return spec


COMPOSITE_SPECS = {
    "series": _spec("series", params={"kappas": [2, 1]},
                    constituents=[_spec("k_centers"), _spec("bald")]),
    "parallel": _spec("parallel", constituents=[_spec("entropy"), _spec("badge")]),
    "parallel_ranked": _spec("parallel_ranked",
                             constituents=[_spec("entropy"), _spec("bald")]),
    "hybrid": _spec("hybrid", params={"budgets": [2, 2]},
                    constituents=[_spec("entropy"), _spec("k_centers")]),
    "feedback": _spec("feedback", constituents=[_spec("random"), _spec("bald")]),
    "annealing": _spec("annealing", constituents=[_spec("random"), _spec("bald")]),
    "random_alternate": _spec("random_alternate",
                              constituents=[_spec("random"), _spec("bald")]),
}


def _spec_for(kind):
    if kind in COMPOSITE_SPECS:
        return COMPOSITE_SPECS[kind]
    return _spec(kind)


class TestBuildStrategy:
    def test_every_kind_constructs_and_selects(self):
        for kind in KNOWN_KINDS:
            strategy = build_strategy(_spec_for(kind))
            state = _state()
            batch = strategy.select(state, _pool(state), 4, (0, 1, 2))
            assert len(batch) == 4
            assert len(set(batch.tolist())) == 4

    def test_derived_names(self):
        cases = {
            "series_k_centers_bald_k2x1": COMPOSITE_SPECS["series"],
            "parallel_entropy_badge": COMPOSITE_SPECS["parallel"],
            "parallel_ranked_entropy_bald": COMPOSITE_SPECS["parallel_ranked"],
            "hybrid_entropy2_k_centers2": COMPOSITE_SPECS["hybrid"],
            "feedback_random_bald": COMPOSITE_SPECS["feedback"],
            "annealing_random_bald_r1.5": COMPOSITE_SPECS["annealing"],
            "random_alt_random_bald": COMPOSITE_SPECS["random_alternate"],
            "power_bald_p2": _spec("power_bald", params={"power": 2}),
            "bald": _spec("bald"),
        }
        for want, spec in cases.items():
            assert build_strategy(spec).name == want

    def test_name_override(self):
        s = build_strategy(_spec("bald", name="my_strategy"))
        assert s.name == "my_strategy"
        assert s.last_tag == "my_strategy"

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            build_strategy(_spec("gradient_descent"))

    def test_unknown_top_level_key(self):
        with pytest.raises(ValueError, match="bogus"):
            build_strategy({"kind": "bald", "bogus": 1})

    def test_unknown_param_key(self):
        with pytest.raises(ValueError, match="powerr"):
            build_strategy(_spec("power_bald", params={"powerr": 2}))

    def test_scorer_takes_no_constituents(self):
        with pytest.raises(ValueError):
            build_strategy(_spec("entropy", constituents=[_spec("bald")]))

    def test_pair_structures_need_two_constituents(self):
        with pytest.raises(ValueError, match="2"):
            build_strategy(_spec("parallel", constituents=[_spec("entropy")]))

    def test_parallel_ranked_rejects_non_scorers(self):
        with pytest.raises(ValueError):
            build_strategy(_spec("parallel_ranked",
                                 constituents=[_spec("entropy"), _spec("k_centers")]))

    def test_series_needs_kappas_list(self):
        with pytest.raises(ValueError, match="kappas"):
            build_strategy(_spec("series", constituents=[_spec("bald")]))

    def test_series_kappa_count_must_match(self):
        with pytest.raises(ValueError):
            build_strategy(_spec("series", params={"kappas": [2, 1]},
                                 constituents=[_spec("bald")]))

    def test_hybrid_needs_budget_pair(self):
        with pytest.raises(ValueError, match="budgets"):
            build_strategy(_spec("hybrid", params={"budgets": [2]},
                                 constituents=[_spec("entropy"), _spec("bald")]))

    def test_empty_name_override_rejected(self):
        with pytest.raises(ValueError, match="name"):
            build_strategy(_spec("bald", name=""))

    def test_non_dict_spec_rejected(self):
        with pytest.raises(ValueError):
            build_strategy(["bald"])


class TestCandidateOrdering:
    def test_scored_strategies_ignore_candidate_order(self):
        for kind in SCORER_KINDS + ("k_centers", "facility_location", "badge"):
            strategy = build_strategy(_spec(kind))
            pool = np.array([25, 7, 13, 9, 21, 11, 17, 8], dtype=np.int64)
            a = strategy.select(_state(), pool, 3, (5,))
            b = strategy.select(_state(), pool[::-1].copy(), 3, (5,))
            np.testing.assert_array_equal(a, b)

    def test_disparity_min_seeds_on_first_given(self):
        strategy = build_strategy(_spec("disparity_min"))
        pool = np.array([25, 7, 13, 9], dtype=np.int64)
        a = strategy.select(_state(), pool, 1, (5,))
        b = strategy.select(_state(), pool[::-1].copy(), 1, (5,))
        assert a[0] == 25 and b[0] == 9


class TestTags:
    def test_base_strategy_tag_is_its_name(self):
        s = build_strategy(_spec("bald"))
        assert s.last_tag == "bald"

    def test_annealing_tags_follow_schedule(self):
        spec = _spec("annealing", params={"t_initial": 1, "t_exploit": 1,
                                          "t_explore": 1, "rate": 1.0},
                     constituents=[_spec("random"), _spec("bald")])
        s = build_strategy(spec)
        tags = []
        for t in (1, 2, 3):
            state = _state()
            state.round_index = t
            s.select(state, _pool(state), 2, (0,))
            tags.append(s.last_tag)
        assert tags == ["explore:random", "exploit:bald", "explore:random"]

    def test_feedback_tag_reflects_choice(self):
        s = build_strategy(COMPOSITE_SPECS["feedback"])
        state = _state()
        s.select(state, _pool(state), 2, (0,))
        assert s.last_tag == "explore:random"  # beta starts at 0.5


class TestMetering:
    def test_mc_scorers_cost_passes_times_candidates(self):
        for kind in SCORER_KINDS:
            state = _state(n_passes=3)
            build_strategy(_spec(kind)).select(state, _pool(state, 10), 3, (0,))
            assert state.meter.mc == 3 * 10
            assert state.meter.features == 0

    def test_k_centers_costs_pool_plus_labeled_features(self):
        state = _state(n_labeled=6)
        build_strategy(_spec("k_centers")).select(state, _pool(state, 10), 3, (0,))
        assert state.meter.features == 10 + 6
        assert state.meter.mc == 0

    def test_badge_costs_mc_and_features(self):
        state = _state(n_passes=3)
        build_strategy(_spec("badge")).select(state, _pool(state, 10), 3, (0,))
        assert state.meter.mc == 3 * 10
        assert state.meter.features == 10

    def test_parallel_ranked_shares_one_mc_pass(self):
        state = _state(n_passes=3)
        build_strategy(COMPOSITE_SPECS["parallel_ranked"]).select(
            state, _pool(state, 10), 3, (0,)
        )
        assert state.meter.mc == 3 * 10  # both scorers read the same tensor

    def test_random_costs_nothing(self):
        state = _state()
        build_strategy(_spec("random")).select(state, _pool(state), 3, (0,))
        assert state.meter.total == 0

    def test_series_adds_stage_costs(self):
        state = _state(n_labeled=6, n_passes=3)
        build_strategy(COMPOSITE_SPECS["series"]).select(state, _pool(state, 12), 3, (0,))
        # k_centers reads 12 pool + 6 labeled features, bald scores 2*3 survivors
        assert state.meter.features == 12 + 6
        assert state.meter.mc == 3 * 6


class TestFeedbackWiring:
    def test_observe_loss_moves_the_balance(self):
        s = build_strategy(COMPOSITE_SPECS["feedback"])
        assert s.state.beta == 0.5
        s.observe_loss(1.0)
        s.observe_loss(2.0)  # rising loss pushes toward exploit
        assert s.state.beta > 0.5

    def test_observe_loss_noop_on_base_strategies(self):
        s = build_strategy(_spec("bald"))
        s.observe_loss(1.0)  # must not raise or change behavior
        state = _state()
        np.testing.assert_array_equal(
            s.select(state, _pool(state), 2, (0,)),
            build_strategy(_spec("bald")).select(_state(), _pool(_state()), 2, (0,)),
        )


class TestHybridBudget:
    def test_mismatched_round_budget_rejected(self):
        s = build_strategy(COMPOSITE_SPECS["hybrid"])
        state = _state()
        with pytest.raises(ValueError, match="budget"):
            s.select(state, _pool(state), 5, (0,))


class TestRandomStrategy:
    def test_deterministic_given_seed_key(self):
        s = build_strategy(_spec("random"))
        state = _state()
        a = s.select(state, _pool(state), 4, (1, 2, 3))
        b = s.select(state, _pool(state), 4, (1, 2, 3))
        np.testing.assert_array_equal(a, b)

    def test_different_keys_differ_somewhere(self):
        s = build_strategy(_spec("random"))
        state = _state()
        draws = {tuple(s.select(state, _pool(state), 4, (k,)).tolist()) for k in range(20)}
        assert len(draws) > 1

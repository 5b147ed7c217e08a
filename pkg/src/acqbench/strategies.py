"""Executable acquisition strategies and the spec that names them.

A `Strategy` owns one round-level decision: given the current model (via
`RoundState`) and a candidate index array, pick `budget` dataset indices.
`build_strategy` turns a plain config dict (kind / params / constituents)
into a strategy tree, so config files, ablations, and tests all share one
vocabulary.

Candidate order: every strategy canonicalizes its candidates to ascending
dataset index before selecting, so "lowest index" tie-breaks always mean
dataset order. The one deliberate exception is disparity_min, which seeds
at position 0 of the list as given; a series stage upstream therefore
hands it their top-ranked pick as the seed.

`RoundState` meters every forward pass a strategy asks for (Monte Carlo
scoring vs feature extraction), which is what makes the per-round
inference accounting exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model as mdl
from .acquisition import (
    ProbabilityTensor,
    bald_scores,
    entropy_scores,
    gradient_embeddings,
    least_confident_scores,
    margin_scores,
    mean_std_scores,
    select_disparity_min,
    select_facility_location,
    select_k_centers,
    select_kmeanspp,
    select_power,
    select_top_k,
)
from .aggregation import (
    EXPLOIT,
    EXPLORE,
    AnnealingSchedule,
    FeedbackState,
    HybridSpec,
    SeriesSpec,
    annealing_phase,
    feedback_select,
    feedback_update,
    hybrid_select,
    parallel_ranked_select,
    parallel_select,
    random_alternate,
    series_select,
)
from .rng import derive_seed, stream


@dataclass
class InferenceMeter:
    """Forward passes consumed during one acquisition round, by purpose."""

    mc: int = 0
    features: int = 0

    @property
    def total(self) -> int:
        return self.mc + self.features


class RoundState:
    """Read-only model access for one round, with metered inference."""

    def __init__(
        self,
        params: mdl.ModelParams,
        X: np.ndarray,
        labeled: np.ndarray,
        mc: mdl.MCConfig,
        round_index: int = 1,
        run_seed: int = 0,
    ):
        self.params = params
        self.X = np.asarray(X)
        self.labeled = np.asarray(labeled, dtype=np.int64)
        self.mc = mc
        self.round_index = round_index
        self.run_seed = run_seed
        self.meter = InferenceMeter()

    def mc_probs(self, idx: np.ndarray) -> ProbabilityTensor:
        """Monte Carlo softmax stack for the given dataset indices."""
        self.meter.mc += self.mc.n_passes * len(idx)
        return mdl.mc_predict(self.params, self.X[idx], self.mc)

    def features_of(self, idx: np.ndarray) -> np.ndarray:
        """Last-hidden-layer features for the given dataset indices."""
        self.meter.features += len(idx)
        return mdl.features(self.params, self.X[idx])

    def labeled_features(self) -> np.ndarray:
        """Features of the currently labeled set (empty set costs nothing)."""
        if len(self.labeled) == 0:
            return np.zeros((0, self.params.hidden))
        return self.features_of(self.labeled)


class Strategy:
    """Base: one select() per round; alternators overwrite `last_tag`."""

    def __init__(self, name: str):
        self.name = name
        self.last_tag = name

    def select(
        self, state: RoundState, candidates: np.ndarray, budget: int, seed: tuple[int, ...]
    ) -> np.ndarray:
        raise NotImplementedError

    def observe_loss(self, loss: float) -> None:
        """Post-round hook fed the selecting model's loss on the batch."""


def _ascending(candidates: np.ndarray) -> np.ndarray:
    return np.sort(np.asarray(candidates, dtype=np.int64))


class RandomStrategy(Strategy):
    def __init__(self):
        super().__init__("random")

    def select(self, state, candidates, budget, seed):
        cands = _ascending(candidates)
        picks = stream(*seed).choice(len(cands), size=budget, replace=False)
        return cands[np.sort(picks)]


SCORERS = {
    "entropy": entropy_scores,
    "least_confident": least_confident_scores,
    "margin": margin_scores,
    "mean_std": mean_std_scores,
    "bald": bald_scores,
}


class ScoredStrategy(Strategy):
    """MC-dropout scorer + deterministic top-k."""

    def __init__(self, kind: str):
        super().__init__(kind)
        self.scorer = SCORERS[kind]

    def scores(self, state: RoundState, cands: np.ndarray) -> np.ndarray:
        return self.scorer(state.mc_probs(cands))

    def select(self, state, candidates, budget, seed):
        cands = _ascending(candidates)
        return cands[select_top_k(self.scores(state, cands), budget)]


class PowerBaldStrategy(Strategy):
    """BALD scores sampled without replacement with probability ~ score^power."""

    def __init__(self, power: float = 1.0):
        super().__init__(f"power_bald_p{power:g}")
        self.power = float(power)

    def select(self, state, candidates, budget, seed):
        cands = _ascending(candidates)
        scores = bald_scores(state.mc_probs(cands))
        return cands[select_power(scores, budget, self.power, derive_seed(*seed))]


class KCentersStrategy(Strategy):
    """Farthest-first coverage in feature space, aware of the labeled set."""

    def __init__(self):
        super().__init__("k_centers")

    def select(self, state, candidates, budget, seed):
        cands = _ascending(candidates)
        pool_feats = state.features_of(cands)
        return cands[select_k_centers(pool_feats, state.labeled_features(), budget)]


class BadgeStrategy(Strategy):
    """k-means++ seeding over last-layer loss-gradient embeddings."""

    def __init__(self):
        super().__init__("badge")

    def select(self, state, candidates, budget, seed):
        cands = _ascending(candidates)
        emb = gradient_embeddings(state.mc_probs(cands), state.features_of(cands))
        return cands[select_kmeanspp(emb, budget, derive_seed(*seed))]


class FacilityLocationStrategy(Strategy):
    """Greedy coverage maximization under cosine similarity."""

    def __init__(self):
        super().__init__("facility_location")

    def select(self, state, candidates, budget, seed):
        cands = _ascending(candidates)
        return cands[select_facility_location(state.features_of(cands), budget)]


class DisparityMinStrategy(Strategy):
    """Max-min cosine-distance batch, seeded at the first candidate given."""

    def __init__(self):
        super().__init__("disparity_min")

    def select(self, state, candidates, budget, seed):
        cands = np.asarray(candidates, dtype=np.int64)
        feats = state.features_of(cands)
        return cands[select_disparity_min(feats, budget, seed_index=0)]


class SeriesStrategy(Strategy):
    def __init__(self, stages: list[Strategy], kappas: list[float], name: str):
        super().__init__(name)
        self.spec = SeriesSpec(tuple(s.select for s in stages), tuple(kappas))
        self.stages = stages

    def select(self, state, candidates, budget, seed):
        return series_select(self.spec, _ascending(candidates), budget, state, seed)


class ParallelStrategy(Strategy):
    def __init__(self, first: Strategy, second: Strategy, name: str):
        super().__init__(name)
        self.first = first
        self.second = second

    def select(self, state, candidates, budget, seed):
        return parallel_select(
            self.first.select, self.second.select, _ascending(candidates), budget, state, seed
        )


class ParallelRankedStrategy(Strategy):
    """Rank-sum aggregation of two scorers over one shared MC pass."""

    def __init__(self, first: ScoredStrategy, second: ScoredStrategy, name: str):
        super().__init__(name)
        self.first = first
        self.second = second

    def select(self, state, candidates, budget, seed):
        cands = _ascending(candidates)
        t = state.mc_probs(cands)
        return cands[parallel_ranked_select(self.first.scorer(t), self.second.scorer(t), budget)]


class HybridStrategy(Strategy):
    def __init__(self, spec: HybridSpec, first: Strategy, second: Strategy, name: str):
        super().__init__(name)
        self.spec = spec
        self.first = first
        self.second = second

    def select(self, state, candidates, budget, seed):
        if budget != self.spec.b_first + self.spec.b_second:
            raise ValueError(
                f"hybrid budgets {self.spec.b_first}+{self.spec.b_second} != round budget {budget}"
            )
        return hybrid_select(
            self.spec, self.first.select, self.second.select, _ascending(candidates), state, seed
        )


class _AlternatingStrategy(Strategy):
    """Shared plumbing for structures that run one arm per round."""

    def __init__(self, explore: Strategy, exploit: Strategy, name: str):
        super().__init__(name)
        self.explore = explore
        self.exploit = exploit

    def _tag(self, choice: str) -> str:
        arm = self.explore if choice == EXPLORE else self.exploit
        return f"{choice}:{arm.name}"


class FeedbackStrategy(_AlternatingStrategy):
    """Explore/exploit gate driven by observed batch losses."""

    def __init__(self, explore, exploit, name, lam=0.9, eps=0.1, n_window=5):
        super().__init__(explore, exploit, name)
        self.state = FeedbackState(lam=lam, eps=eps, n_window=n_window)

    def select(self, state, candidates, budget, seed):
        batch, choice = feedback_select(
            self.state, self.explore.select, self.exploit.select,
            _ascending(candidates), budget, state, seed,
        )
        self.last_tag = self._tag(choice)
        return batch

    def observe_loss(self, loss):
        self.state = feedback_update(self.state, loss)


class AnnealingStrategy(_AlternatingStrategy):
    """Explore/exploit gate following a fixed growing-phase schedule."""

    def __init__(self, explore, exploit, name, sched: AnnealingSchedule):
        super().__init__(explore, exploit, name)
        self.sched = sched

    def select(self, state, candidates, budget, seed):
        choice = annealing_phase(self.sched, state.round_index)
        self.last_tag = self._tag(choice)
        arm = self.explore if choice == EXPLORE else self.exploit
        return arm.select(state, _ascending(candidates), budget, seed)


class RandomAlternateStrategy(_AlternatingStrategy):
    """Fair coin per round, keyed on (run seed, round)."""

    def select(self, state, candidates, budget, seed):
        choice = random_alternate(state.run_seed, state.round_index)
        self.last_tag = self._tag(choice)
        arm = self.explore if choice == EXPLORE else self.exploit
        return arm.select(state, _ascending(candidates), budget, seed)


_BASE_KINDS = ("random", "k_centers", "badge", "facility_location", "disparity_min", "power_bald")
_STRUCTURE_KINDS = ("series", "parallel", "parallel_ranked", "hybrid", "feedback", "annealing", "random_alternate")

KNOWN_KINDS = tuple(SCORERS) + _BASE_KINDS + _STRUCTURE_KINDS


def _check_keys(spec: dict, allowed: set[str], where: str) -> None:
    for key in spec:
        if key not in allowed:
            raise ValueError(f"unknown key {key!r} in {where}")


def _params(spec: dict, allowed: set[str], kind: str) -> dict:
    params = spec.get("params", {})
    if not isinstance(params, dict):
        raise ValueError(f"'params' of strategy {kind!r} must be an object")
    _check_keys(params, allowed, f"params of strategy {kind!r}")
    return params


def _constituents(spec: dict, kind: str, count: int | None) -> list[dict]:
    subs = spec.get("constituents", [])
    if not isinstance(subs, list) or not all(isinstance(s, dict) for s in subs):
        raise ValueError(f"'constituents' of strategy {kind!r} must be a list of strategy objects")
    if count is not None and len(subs) != count:
        raise ValueError(f"strategy {kind!r} needs exactly {count} constituents, got {len(subs)}")
    return subs


def build_strategy(spec: dict) -> Strategy:
    """Build a fresh strategy tree from a config dict.

    Shape: {"kind": str, "params": {...}, "constituents": [specs...],
    "name": str}; params and constituents are optional where the kind
    allows, name overrides the derived one. Raises ValueError naming the
    offending key on any schema violation.
    """
    if not isinstance(spec, dict):
        raise ValueError("strategy spec must be an object")
    _check_keys(spec, {"kind", "params", "constituents", "name"}, "strategy spec")
    kind = spec.get("kind")
    if kind not in KNOWN_KINDS:
        raise ValueError(f"unknown strategy kind {kind!r}, expected one of {sorted(KNOWN_KINDS)}")
    override = spec.get("name")
    if override is not None and (not isinstance(override, str) or not override):
        raise ValueError("strategy 'name' must be a nonempty string")

    built: Strategy
    if kind in SCORERS:
        _params(spec, set(), kind)
        _constituents(spec, kind, 0)
        built = ScoredStrategy(kind)
    elif kind == "random":
        _params(spec, set(), kind)
        _constituents(spec, kind, 0)
        built = RandomStrategy()
    elif kind == "power_bald":
        p = _params(spec, {"power"}, kind)
        _constituents(spec, kind, 0)
        built = PowerBaldStrategy(float(p.get("power", 1.0)))
    elif kind == "k_centers":
        _params(spec, set(), kind)
        _constituents(spec, kind, 0)
        built = KCentersStrategy()
    elif kind == "badge":
        _params(spec, set(), kind)
        _constituents(spec, kind, 0)
        built = BadgeStrategy()
    elif kind == "facility_location":
        _params(spec, set(), kind)
        _constituents(spec, kind, 0)
        built = FacilityLocationStrategy()
    elif kind == "disparity_min":
        _params(spec, set(), kind)
        _constituents(spec, kind, 0)
        built = DisparityMinStrategy()
    elif kind == "series":
        p = _params(spec, {"kappas"}, kind)
        if not isinstance(p.get("kappas"), list):
            raise ValueError("series strategy requires params.kappas as a list")
        kappas = [float(k) for k in p["kappas"]]
        stages = [build_strategy(s) for s in _constituents(spec, kind, None)]
        if len(stages) < 1:
            raise ValueError("series strategy needs at least one constituent")
        if len(stages) != len(kappas):
            raise ValueError(f"series has {len(stages)} constituents but {len(kappas)} kappas")
        name = "series_" + "_".join(s.name for s in stages) + "_k" + "x".join(f"{k:g}" for k in kappas)
        built = SeriesStrategy(stages, kappas, name)
    elif kind == "parallel":
        _params(spec, set(), kind)
        a, b = (build_strategy(s) for s in _constituents(spec, kind, 2))
        built = ParallelStrategy(a, b, f"parallel_{a.name}_{b.name}")
    elif kind == "parallel_ranked":
        _params(spec, set(), kind)
        a, b = (build_strategy(s) for s in _constituents(spec, kind, 2))
        if not (isinstance(a, ScoredStrategy) and isinstance(b, ScoredStrategy)):
            raise ValueError(
                f"parallel_ranked constituents must be scorer kinds {sorted(SCORERS)}"
            )
        built = ParallelRankedStrategy(a, b, f"parallel_ranked_{a.name}_{b.name}")
    elif kind == "hybrid":
        p = _params(spec, {"budgets"}, kind)
        if not isinstance(p.get("budgets"), list) or len(p["budgets"]) != 2:
            raise ValueError("hybrid strategy requires params.budgets = [b_first, b_second]")
        b1, b2 = (int(v) for v in p["budgets"])
        a, b = (build_strategy(s) for s in _constituents(spec, kind, 2))
        built = HybridStrategy(HybridSpec(b1, b2), a, b, f"hybrid_{a.name}{b1}_{b.name}{b2}")
    elif kind == "feedback":
        p = _params(spec, {"lambda", "epsilon", "n_window"}, kind)
        a, b = (build_strategy(s) for s in _constituents(spec, kind, 2))
        built = FeedbackStrategy(
            a, b, f"feedback_{a.name}_{b.name}",
            lam=float(p.get("lambda", 0.9)),
            eps=float(p.get("epsilon", 0.1)),
            n_window=int(p.get("n_window", 5)),
        )
    elif kind == "annealing":
        p = _params(spec, {"t_initial", "t_exploit", "t_explore", "rate"}, kind)
        sched = AnnealingSchedule(
            t_initial=int(p.get("t_initial", 5)),
            t_exploit=int(p.get("t_exploit", 5)),
            t_explore=int(p.get("t_explore", 5)),
            rate=float(p.get("rate", 1.5)),
        )
        a, b = (build_strategy(s) for s in _constituents(spec, kind, 2))
        built = AnnealingStrategy(a, b, f"annealing_{a.name}_{b.name}_r{sched.rate:g}", sched)
    else:  # random_alternate
        _params(spec, set(), kind)
        a, b = (build_strategy(s) for s in _constituents(spec, kind, 2))
        built = RandomAlternateStrategy(a, b, f"random_alt_{a.name}_{b.name}")

    if override:
        built.name = override
        built.last_tag = override
    return built

"""Structures that combine two or more acquisition selectors per round.

A selector here is any callable `(model_state, candidates, budget, seed)
-> selected` where `candidates` is an int64 array of dataset indices,
`selected` is an ordered subset of it of length `budget`, and `seed` is an
integer key tuple for `rng.stream`. The structures never inspect the model
state; they only route candidate sets, budgets, and child seed keys.

Six combination schemes are provided: rank aggregation over two score
vectors, disjoint-half parallel selection, multi-stage series filtering,
split-budget hybrid selection, and three explore/exploit alternation rules
(loss-feedback, annealing schedule, fair coin).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .rng import NS_ALTERNATE, stream

SelectorFn = Callable[[object, np.ndarray, int, tuple[int, ...]], np.ndarray]

EXPLORE = "explore"
EXPLOIT = "exploit"


def _check_candidates(candidates: np.ndarray, b: int) -> np.ndarray:
    c = np.asarray(candidates, dtype=np.int64)
    if c.ndim != 1:
        raise ValueError(f"candidates must be 1-D, got shape {c.shape}")
    if len(np.unique(c)) != len(c):
        raise ValueError("duplicate candidate indices")
    if b < 0:
        raise ValueError(f"budget must be >= 0, got {b}")
    if b > len(c):
        raise ValueError(f"budget {b} exceeds {len(c)} candidates")
    return c


# --- rank aggregation -------------------------------------------------------


def parallel_ranked_select(s1: np.ndarray, s2: np.ndarray, b: int) -> np.ndarray:
    """Positions with the b smallest rank sums across two score vectors.

    Each vector is ranked 1 = best by descending score; tied scores give
    the better rank to the lower position. Output is ordered by ascending
    rank sum, then position.
    """
    s1 = np.asarray(s1, dtype=np.float64)
    s2 = np.asarray(s2, dtype=np.float64)
    if s1.shape != s2.shape or s1.ndim != 1:
        raise ValueError(f"score vectors must be equal-length 1-D, got {s1.shape} and {s2.shape}")
    if not (np.all(np.isfinite(s1)) and np.all(np.isfinite(s2))):
        raise ValueError("non-finite scores")
    n = len(s1)
    if not 0 <= b <= n:
        raise ValueError(f"budget {b} out of range for {n} candidates")

    def ranks(s):
        order = np.lexsort((np.arange(n), -s))
        r = np.empty(n, dtype=np.int64)
        r[order] = np.arange(1, n + 1)
        return r

    sums = ranks(s1) + ranks(s2)
    return np.lexsort((np.arange(n), sums))[:b].astype(np.int64)


# --- parallel (disjoint halves) ---------------------------------------------


def parallel_select(
    selector_a: SelectorFn,
    selector_b: SelectorFn,
    pool: np.ndarray,
    b: int,
    state: object,
    seed: tuple[int, ...],
) -> np.ndarray:
    """Split the pool into two seeded disjoint halves, select b/2 from each.

    The split is redrawn from `seed` on every call, so successive rounds
    see fresh halves. Requires an even budget.
    """
    pool = _check_candidates(pool, b)
    if b % 2 != 0:
        raise ValueError(f"parallel selection needs an even budget, got {b}")
    perm = stream(*seed, 0).permutation(len(pool))
    cut = (len(pool) + 1) // 2
    half_a = pool[perm[:cut]]
    half_b = pool[perm[cut:]]
    if b // 2 > min(len(half_a), len(half_b)):
        raise ValueError(f"half budget {b // 2} exceeds a half of size {min(len(half_a), len(half_b))}")
    picked_a = selector_a(state, half_a, b // 2, (*seed, 1))
    picked_b = selector_b(state, half_b, b // 2, (*seed, 2))
    return np.concatenate([picked_a, picked_b]).astype(np.int64)


# --- series (multi-stage filtering) -----------------------------------------


@dataclass(frozen=True)
class SeriesSpec:
    """Ordered stages with shrink factors; stage i keeps kappas[i] * b items.

    Shrink factors must be nonincreasing and end at exactly 1 so the last
    stage emits the round budget.
    """

    stages: tuple[SelectorFn, ...]
    kappas: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "kappas", tuple(float(k) for k in self.kappas))
        if len(self.stages) < 1:
            raise ValueError("series needs at least one stage")
        if len(self.stages) != len(self.kappas):
            raise ValueError(f"{len(self.stages)} stages but {len(self.kappas)} shrink factors")
        if any(k < 1.0 for k in self.kappas):
            raise ValueError(f"shrink factors must be >= 1, got {self.kappas}")
        if any(a < b for a, b in zip(self.kappas, self.kappas[1:])):
            raise ValueError(f"shrink factors must be nonincreasing, got {self.kappas}")
        if self.kappas[-1] != 1.0:
            raise ValueError(f"final shrink factor must be 1, got {self.kappas[-1]}")


def series_select(
    spec: SeriesSpec,
    pool: np.ndarray,
    b: int,
    state: object,
    seed: tuple[int, ...],
) -> np.ndarray:
    """Run stages left to right, each filtering the previous stage's output."""
    pool = _check_candidates(pool, b)
    if b < 1:
        raise ValueError(f"series budget must be >= 1, got {b}")
    first_take = int(round(spec.kappas[0] * b))
    if first_take > len(pool):
        raise ValueError(f"first stage needs {first_take} candidates but pool has {len(pool)}")
    cands = pool
    for i, (selector, kappa) in enumerate(zip(spec.stages, spec.kappas)):
        cands = selector(state, cands, int(round(kappa * b)), (*seed, i))
    return np.asarray(cands, dtype=np.int64)


# --- hybrid (split budget, shared pool) -------------------------------------


@dataclass(frozen=True)
class HybridSpec:
    """Budget split: selector A picks `b_first`, selector B picks `b_second`
    from the pool with A's picks removed."""

    b_first: int
    b_second: int

    def __post_init__(self):
        if self.b_first < 0 or self.b_second < 0:
            raise ValueError(f"budgets must be >= 0, got ({self.b_first}, {self.b_second})")
        if self.b_first + self.b_second < 1:
            raise ValueError("hybrid total budget must be >= 1")


def hybrid_select(
    spec: HybridSpec,
    selector_a: SelectorFn,
    selector_b: SelectorFn,
    pool: np.ndarray,
    state: object,
    seed: tuple[int, ...],
) -> np.ndarray:
    """Selector A takes its share from the full pool, B from the remainder."""
    total = spec.b_first + spec.b_second
    pool = _check_candidates(pool, total)
    picked_a = selector_a(state, pool, spec.b_first, (*seed, 1))
    rest = pool[~np.isin(pool, picked_a)]
    picked_b = selector_b(state, rest, spec.b_second, (*seed, 2))
    return np.concatenate([picked_a, picked_b]).astype(np.int64)


# --- adaptive feedback alternation ------------------------------------------


@dataclass(frozen=True)
class FeedbackState:
    """Explore/exploit balance driven by the loss of past selections.

    `beta` starts at 0.5 and is pushed up by rising recent losses and
    decayed by `lam` otherwise, clipped to [eps, 1 - eps]. Rounds explore
    while beta <= 0.5. `score` is the last min-max-scaled loss trend.
    """

    beta: float = 0.5
    losses: tuple[float, ...] = field(default_factory=tuple)
    score: float = 0.0
    lam: float = 0.9
    eps: float = 0.1
    n_window: int = 5

    def __post_init__(self):
        if not 0.0 < self.eps < 0.5:
            raise ValueError(f"eps must be in (0, 0.5), got {self.eps}")
        if self.lam <= 0.0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.n_window < 1:
            raise ValueError(f"n_window must be >= 1, got {self.n_window}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0, 1), got {self.beta}")


def feedback_update(state: FeedbackState, new_loss: float) -> FeedbackState:
    """Fold one observed batch loss into the state; pure, returns a new state.

    The loss trend is the expanding mean of the trailing `n_window` losses,
    min-max scaled to [0, 1] (0 when the window is flat). The new balance
    is lam * beta * exp(trend) clipped to [eps, 1 - eps].
    """
    if not math.isfinite(new_loss) or new_loss < 0.0:
        raise ValueError(f"loss must be finite and >= 0, got {new_loss}")
    losses = state.losses + (float(new_loss),)
    window = np.asarray(losses[-state.n_window :])
    averaged = np.cumsum(window) / np.arange(1, len(window) + 1)
    spread = averaged.max() - averaged.min()
    score = float((averaged[-1] - averaged.min()) / spread) if spread > 0.0 else 0.0
    beta = max(min(state.lam * state.beta * math.exp(score), 1.0 - state.eps), state.eps)
    return FeedbackState(
        beta=beta, losses=losses, score=score, lam=state.lam, eps=state.eps, n_window=state.n_window
    )


def feedback_choice(state: FeedbackState) -> str:
    """Explore while the balance has not crossed 0.5 (boundary explores)."""
    return EXPLORE if state.beta <= 0.5 else EXPLOIT


def feedback_select(
    state: FeedbackState,
    explore: SelectorFn,
    exploit: SelectorFn,
    pool: np.ndarray,
    b: int,
    model_state: object,
    seed: tuple[int, ...],
) -> tuple[np.ndarray, str]:
    """Run whichever selector the current balance calls for."""
    pool = _check_candidates(pool, b)
    choice = feedback_choice(state)
    selector = explore if choice == EXPLORE else exploit
    return selector(model_state, pool, b, seed), choice


# --- annealing alternation ---------------------------------------------------


@dataclass(frozen=True)
class AnnealingSchedule:
    """Explore/exploit phase plan with geometrically growing exploit phases.

    `t_initial` explore rounds first, then exploit and explore phases
    alternate; each exploit phase length is floor(rate * previous), explore
    phases stay `t_explore` long.
    """

    t_initial: int = 5
    t_exploit: int = 5
    t_explore: int = 5
    rate: float = 1.5

    def __post_init__(self):
        if min(self.t_initial, self.t_exploit, self.t_explore) < 1:
            raise ValueError("phase lengths must be >= 1")
        if self.rate < 1.0:
            raise ValueError(f"rate must be >= 1, got {self.rate}")


def annealing_phase(sched: AnnealingSchedule, t: int) -> str:
    """Phase of 1-based round t under the schedule."""
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t}")
    pos = t
    if pos <= sched.t_initial:
        return EXPLORE
    pos -= sched.t_initial
    exploit_len = sched.t_exploit
    while True:
        if pos <= exploit_len:
            return EXPLOIT
        pos -= exploit_len
        if pos <= sched.t_explore:
            return EXPLORE
        pos -= sched.t_explore
        # tiny epsilon guards floor() against float dust like 1.2 * 5 -> 5.999...
        exploit_len = math.floor(sched.rate * exploit_len + 1e-9)


def exploit_lengths(sched: AnnealingSchedule, n: int) -> list[int]:
    """First n exploit phase lengths implied by the schedule."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    out: list[int] = []
    length = sched.t_exploit
    for _ in range(n):
        out.append(length)
        length = math.floor(sched.rate * length + 1e-9)
    return out


# --- fair-coin alternation ----------------------------------------------------


def random_alternate(seed: int, t: int) -> str:
    """Independent fair coin per round, reproducible from (seed, t) alone."""
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t}")
    return EXPLORE if int(stream(seed, NS_ALTERNATE, t).integers(2)) == 0 else EXPLOIT


def alternate_select(
    choice: str,
    explore: SelectorFn,
    exploit: SelectorFn,
    pool: np.ndarray,
    b: int,
    model_state: object,
    seed: tuple[int, ...],
) -> np.ndarray:
    """Dispatch a round to the explore or exploit selector."""
    pool = _check_candidates(pool, b)
    if choice not in (EXPLORE, EXPLOIT):
        raise ValueError(f"unknown choice {choice!r}")
    selector = explore if choice == EXPLORE else exploit
    return selector(model_state, pool, b, seed)


def check_selection(candidates: np.ndarray, batch: np.ndarray, b: int) -> np.ndarray:
    """Validate that a selector output is b distinct members of candidates."""
    batch = np.asarray(batch, dtype=np.int64)
    if batch.shape != (b,):
        raise ValueError(f"expected batch of {b}, got shape {batch.shape}")
    if len(np.unique(batch)) != len(batch):
        raise ValueError("batch contains duplicates")
    if not np.all(np.isin(batch, candidates)):
        raise ValueError("batch contains indices outside the candidate set")
    return batch

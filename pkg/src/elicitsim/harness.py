"""
Offline new-user elicitation protocol.

Target-domain users are shuffled into k folds. For each fold, the other
folds' target ratings (plus, in the cross-domain scenario, every auxiliary
rating) form the training pool. Each test user's target ratings are split
into an initially empty train profile, a candidate set a strategy may elicit
from, and a fixed test set. Then, for t = 0..max_elicited:

1. train on the pool and measure MAE (test ratings) and Spread (top-N lists);
2. let the strategy pick one candidate per test user and move its rating
   into the user's train profile, which joins the pool for the next round.
"""

from __future__ import annotations

import enum
import hashlib
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import metrics
from .data import AUXILIARY, TARGET, Dataset, Rating, tally
from .errors import ConfigError, InsufficientRatings, MissingSplit, TooFewUsers
from .mf import FactorModel, Hyperparams, top_n_positions, train_indexed
from .strategies import StrategyKind, rank_candidates, score

_log = logging.getLogger(__name__)

TEST_SIZE = 5
MIN_CANDIDATES = 15
WORKERS_ENV = "ELICITSIM_WORKERS"


class Scenario(enum.Enum):
    SINGLE_DOMAIN = "single"
    CROSS_DOMAIN = "cross"

    @classmethod
    def parse(cls, name) -> "Scenario":
        if isinstance(name, Scenario):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ConfigError("scenarios", f"unknown scenario {name!r} (known: single, cross)") from None

    def __str__(self):
        return self.value


def child_seed(master: int, purpose: str, *keys) -> int:
    """Stable 64-bit seed derived from the master seed, a purpose and keys."""
    text = "\x1f".join([str(int(master)), purpose, *map(str, keys)])
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


@dataclass(frozen=True)
class FoldPlan:
    fold_count: int
    assignments: Mapping[object, int]
    seed: int

    def members(self, fold: int) -> list:
        return sorted(u for u, f in self.assignments.items() if f == fold)

    def sizes(self) -> list[int]:
        sizes = [0] * self.fold_count
        for f in self.assignments.values():
            sizes[f] += 1
        return sizes


def plan_folds(users: Iterable, k: int = 5, seed: int = 0) -> FoldPlan:
    """Shuffle `users` and deal them round-robin into `k` folds."""
    users = sorted(set(users))
    if k < 1 or len(users) < k:
        raise TooFewUsers(f"{len(users)} users cannot fill {k} folds")
    rng = np.random.default_rng(child_seed(seed, "folds"))
    perm = rng.permutation(len(users))
    return FoldPlan(k, {users[p]: pos % k for pos, p in enumerate(perm)}, seed)


@dataclass(frozen=True)
class UserSplit:
    """One test user's ratings as (item, value) pairs, sorted by item."""

    user: object
    train: tuple = ()
    candidate: tuple = ()
    test: tuple = ()

    def move(self, item) -> "UserSplit":
        """Move the candidate rating of `item` into the train profile."""
        for k, (i, v) in enumerate(self.candidate):
            if i == item:
                return replace(self, train=self.train + ((i, v),),
                               candidate=self.candidate[:k] + self.candidate[k + 1:])
        raise KeyError(item)


def split_user(user, ratings: Sequence, seed: int = 0, test_size: int = TEST_SIZE,
               min_candidates: int = MIN_CANDIDATES) -> UserSplit:
    """Draw `test_size` ratings uniformly into the test set, rest to candidates.

    `ratings` holds (item, value) pairs or :class:`Rating` records. The draw
    depends only on the seed, the user and the set of ratings.
    """
    pairs = sorted((r.item, int(r.value)) if isinstance(r, Rating) else (r[0], int(r[1]))
                   for r in ratings)
    if len(pairs) < test_size + min_candidates:
        raise InsufficientRatings(user, len(pairs), test_size + min_candidates)
    rng = np.random.default_rng(child_seed(seed, "split", user))
    chosen = set(rng.choice(len(pairs), size=test_size, replace=False).tolist())
    test = tuple(p for k, p in enumerate(pairs) if k in chosen)
    cand = tuple(p for k, p in enumerate(pairs) if k not in chosen)
    return UserSplit(user, (), cand, test)


@dataclass(frozen=True)
class ExperimentResult:
    scenario: Scenario
    strategy: StrategyKind | None
    iteration: int
    mae: float
    spread: float
    improvement_mae: float | None = None
    improvement_spread: float | None = None

    @property
    def strategy_name(self) -> str:
        return "none" if self.strategy is None else self.strategy.value


class Problem:
    """Global index over both domains.

    Users of both domains share one index. Target items take positions
    0..n_target_items-1 and auxiliary items follow, so the two item spaces
    never collide and target positions keep identifier order.
    """

    def __init__(self, target: Dataset, auxiliary: Dataset | None = None):
        self.target = target
        self.auxiliary = auxiliary
        aux_users = auxiliary.users if auxiliary is not None else ()
        self.users = tuple(sorted(set(target.users) | set(aux_users)))
        pos = {u: k for k, u in enumerate(self.users)}
        self.user_pos = pos
        self.n_target_items = target.n_items
        self.n_items = target.n_items + (auxiliary.n_items if auxiliary is not None else 0)

        t_map = np.array([pos[u] for u in target.users], dtype=np.int64)
        self.t_user = t_map[target.user_idx] if len(target) else np.zeros(0, np.int64)
        self.t_item = target.item_idx.astype(np.int64)
        self.t_value = target.values.astype(np.int64)
        if auxiliary is not None and len(auxiliary):
            a_map = np.array([pos[u] for u in auxiliary.users], dtype=np.int64)
            self.a_user = a_map[auxiliary.user_idx]
            self.a_item = auxiliary.item_idx.astype(np.int64) + target.n_items
            self.a_value = auxiliary.values.astype(np.int64)
        else:
            self.a_user = self.a_item = self.a_value = np.zeros(0, np.int64)
        self.target_users = np.array([pos[u] for u in target.users], dtype=np.int64)

    def user_ratings(self, u: int) -> list[tuple[int, int]]:
        lo, hi = np.searchsorted(self.t_user, [u, u + 1])
        return list(zip(self.t_item[lo:hi].tolist(), self.t_value[lo:hi].tolist()))

    def splits_for(self, users: Iterable[int], seed: int) -> dict[int, UserSplit]:
        # seeds use the user identifier, not its index, so splits survive reindexing
        out = {}
        for u in users:
            s = split_user(self.users[u], self.user_ratings(u), seed)
            out[u] = replace(s, user=u)
        return out


@dataclass
class Pool:
    """Training pool as index columns; `aux` flags auxiliary-domain rows."""

    user: np.ndarray
    item: np.ndarray
    value: np.ndarray
    aux: np.ndarray = field(default=None)

    def __len__(self):
        return len(self.value)


def _pool(problem: Problem, test_users: np.ndarray, scenario: Scenario,
          splits: Mapping[int, UserSplit]) -> Pool:
    is_test = np.isin(problem.t_user, test_users)
    parts_u = [problem.t_user[~is_test]]
    parts_i = [problem.t_item[~is_test]]
    parts_v = [problem.t_value[~is_test]]
    for u in test_users.tolist():
        if u not in splits:
            raise MissingSplit(problem.users[u])
        tr = splits[u].train
        if tr:
            parts_u.append(np.full(len(tr), u, np.int64))
            parts_i.append(np.array([i for i, _ in tr], np.int64))
            parts_v.append(np.array([v for _, v in tr], np.int64))
    n_target = sum(len(p) for p in parts_v)
    if scenario is Scenario.CROSS_DOMAIN:
        parts_u.append(problem.a_user)
        parts_i.append(problem.a_item)
        parts_v.append(problem.a_value)
    aux = np.zeros(sum(len(p) for p in parts_v), bool)
    aux[n_target:] = True
    return Pool(np.concatenate(parts_u), np.concatenate(parts_i), np.concatenate(parts_v), aux)


def build_training_pool(fold: FoldPlan, test_fold: int, target: Dataset,
                        auxiliary: Dataset | None, scenario, splits: Mapping) -> set[Rating]:
    """Training ratings for one fold, as :class:`Rating` records.

    `splits` maps user identifiers to :class:`UserSplit` whose items are
    target-domain item identifiers.
    """
    scenario = Scenario.parse(scenario)
    problem = Problem(target, auxiliary)
    test_ids = fold.members(test_fold)
    test_users = np.array([problem.user_pos[u] for u in test_ids], np.int64)
    idx_splits = {}
    for uid, u in zip(test_ids, test_users.tolist()):
        if uid not in splits:
            raise MissingSplit(uid)
        s = splits[uid]
        idx_splits[u] = UserSplit(u, tuple((target.item_pos[i], v) for i, v in s.train))
    pool = _pool(problem, test_users, scenario, idx_splits)
    out = set()
    for u, i, v, a in zip(pool.user.tolist(), pool.item.tolist(), pool.value.tolist(),
                          pool.aux.tolist()):
        if a:
            out.add(Rating(problem.users[u], auxiliary.items[i - problem.n_target_items], v, AUXILIARY))
        else:
            out.add(Rating(problem.users[u], target.items[i], v, TARGET))
    return out


def pool_stats(problem: Problem, pool: Pool):
    """Item statistics over the pool's target ratings.

    The population is every target-domain user in the fold plan, so a test
    user who has not rated an item counts as "unknown" for it.
    """
    rows = ~pool.aux
    return tally(pool.item[rows], pool.value[rows], problem.n_target_items,
                 len(problem.target_users))


def elicit_step(model: FactorModel | None, strategy: StrategyKind, stats,
                splits: Mapping[object, UserSplit]) -> dict:
    """Move each user's top-ranked candidate rating into their train profile.

    Users without candidates are left unchanged. Returns new splits.
    """
    out = {}
    for key, s in splits.items():
        if not s.candidate:
            out[key] = s
            continue
        items = [i for i, _ in s.candidate]
        best = rank_candidates(score(strategy, model, stats, s.user, items))[0]
        out[key] = s.move(best)
    return out


def _spread_counts(model: FactorModel, problem: Problem, pool: Pool,
                   splits: Mapping[int, UserSplit], top_n: int) -> np.ndarray:
    """Occurrences of each target item across the test users' top-N lists.

    Lists draw from target items present in the pool, minus the user's
    train profile.
    """
    n_t = problem.n_target_items
    universe = np.zeros(n_t, bool)
    universe[pool.item[~pool.aux]] = True
    counts = np.zeros(n_t, np.int64)
    for u in sorted(splits):
        scores = model.item_scores(u, n_t)
        allowed = universe.copy()
        allowed[[i for i, _ in splits[u].train]] = False
        counts[top_n_positions(scores, top_n, allowed)] += 1
    return counts


def run_fold(problem: Problem, test_users: np.ndarray, scenario: Scenario,
             strategy: StrategyKind | None, hp: Hyperparams, max_elicited: int,
             top_n: int, seed: int, observer: Callable | None = None) -> list[tuple[float, float]]:
    """(MAE, Spread) for t = 0..max_elicited on one fold."""
    splits = problem.splits_for(test_users.tolist(), seed)
    test_u = np.concatenate([np.full(len(splits[u].test), u) for u in splits]).astype(np.int64)
    test_i = np.array([i for u in splits for i, _ in splits[u].test], np.int64)
    test_v = np.array([v for u in splits for _, v in splits[u].test], np.float64)

    last = max_elicited if strategy is not None else 0
    curve = []
    for t in range(last + 1):
        pool = _pool(problem, test_users, scenario, splits)
        if observer is not None:
            observer(t, pool, splits)
        model = train_indexed(pool.user, pool.item, pool.value, len(problem.users),
                              problem.n_items, hp)
        pred = model.predict_indexed(test_u, test_i)
        fold_mae = metrics.mae(np.column_stack([pred, test_v]))
        fold_spread = metrics.spread_from_counts(
            _spread_counts(model, problem, pool, splits, top_n))
        curve.append((fold_mae, fold_spread))
        if t < last:
            stats = None if strategy.personalized else pool_stats(problem, pool)
            splits = elicit_step(model, strategy, stats, splits)
    return curve


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, int(workers))


def run_experiment(target: Dataset, auxiliary: Dataset | None, scenario,
                   strategy: StrategyKind | str | None, hp: Hyperparams | None = None,
                   k: int = 5, max_elicited: int = 5, seed: int = 0, top_n: int = 10,
                   workers: int | None = None,
                   observer: Callable | None = None) -> list[ExperimentResult]:
    """Run the protocol for one scenario and strategy, averaged over folds.

    ``strategy=None`` is the no-elicitation baseline and reports t = 0 only.
    `observer`, if given, is called as ``observer(fold, t, pool, splits)``
    before each training round.
    """
    scenario = Scenario.parse(scenario)
    if isinstance(strategy, str):
        strategy = None if strategy == "none" else StrategyKind.parse(strategy)
    if scenario is Scenario.CROSS_DOMAIN and auxiliary is None:
        raise ConfigError("auxiliary_csv", "the cross-domain scenario needs auxiliary data")
    hp = hp or Hyperparams()
    problem = Problem(target, auxiliary)
    plan = plan_folds(problem.target_users.tolist(), k, seed)

    def one(f):
        members = np.array(plan.members(f), np.int64)
        obs = None if observer is None else (lambda t, pool, splits: observer(f, t, pool, splits))
        return run_fold(problem, members, scenario, strategy, hp, max_elicited, top_n, seed, obs)

    n = worker_count(workers)
    if n > 1:
        with ThreadPoolExecutor(n) as ex:
            curves = list(ex.map(one, range(k)))
    else:
        curves = [one(f) for f in range(k)]

    arr = np.array(curves)  # (fold, t, metric)
    means = arr.mean(axis=0)
    base_mae, base_spread = means[0]
    results = []
    for t, (m, s) in enumerate(means):
        if strategy is None:
            results.append(ExperimentResult(scenario, None, t, float(m), float(s)))
        else:
            results.append(ExperimentResult(
                scenario, strategy, t, float(m), float(s),
                metrics.improvement(m, base_mae, metrics.LOWER_IS_BETTER),
                metrics.improvement(s, base_spread, metrics.HIGHER_IS_BETTER) if base_spread > 0 else None,
            ))
    _log.info("%s/%s: MAE %.4f -> %.4f, Spread %.4f -> %.4f", scenario,
              "none" if strategy is None else strategy, means[0][0], means[-1][0],
              means[0][1], means[-1][1])
    return results

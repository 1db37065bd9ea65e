"""Item-scoring strategies for rating elicitation and candidate ranking.

Each scorer returns one :class:`ScoredCandidate` per candidate; a higher
score means the item is asked sooner. :func:`rank_candidates` turns scores
into a total order.
"""

from __future__ import annotations

import enum
import math
from typing import Iterable, NamedTuple

import numpy as np

from .data import MAX_RATING, RatingStats
from .errors import ConfigError, EmptyCandidateSet, EmptyPopulation, NonFiniteScore
from .mf import FactorModel


class StrategyKind(enum.Enum):
    HIGHEST_PREDICTED = "highest-predicted"
    LOWEST_PREDICTED = "lowest-predicted"
    ENTROPY0 = "entropy0"
    POPULARITY = "popularity"

    @classmethod
    def parse(cls, name: str) -> "StrategyKind":
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ConfigError("strategies", f"unknown strategy {name!r} (known: {names})") from None

    @property
    def personalized(self) -> bool:
        return self in (StrategyKind.HIGHEST_PREDICTED, StrategyKind.LOWEST_PREDICTED)

    def __str__(self):
        return self.value


class ScoredCandidate(NamedTuple):
    item: object
    score: float


def _need(candidates) -> list:
    candidates = list(candidates)
    if not candidates:
        raise EmptyCandidateSet("no candidate items to score")
    return candidates


def score_highest_predicted(model: FactorModel, user, candidates: Iterable) -> list[ScoredCandidate]:
    candidates = _need(candidates)
    preds = model.predict_items(user, candidates)
    return [ScoredCandidate(i, float(p)) for i, p in zip(candidates, preds)]


def score_lowest_predicted(model: FactorModel, user, candidates: Iterable) -> list[ScoredCandidate]:
    candidates = _need(candidates)
    preds = model.predict_items(user, candidates)
    return [ScoredCandidate(i, float(MAX_RATING - p)) for i, p in zip(candidates, preds)]


def entropy0(histogram: np.ndarray, count: np.ndarray, population_size: int) -> np.ndarray:
    """Base-2 entropy over rating values 1..5 plus 0 for "not rated".

    `histogram` is (n, 5), `count` is (n,); returns n scores.
    """
    if population_size <= 0:
        raise EmptyPopulation("Entropy0 needs a non-empty population")
    h = np.asarray(histogram, dtype=np.float64)
    c = np.asarray(count, dtype=np.float64)
    p = np.column_stack([population_size - c, h]) / population_size
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=1)


def score_entropy0(stats: RatingStats, candidates: Iterable) -> list[ScoredCandidate]:
    candidates = _need(candidates)
    rows = np.array([stats.row(i) for i in candidates], dtype=np.int64)
    known = rows >= 0
    hist = np.zeros((len(rows), stats.histogram.shape[1]))
    hist[known] = stats.histogram[rows[known]]
    count = np.zeros(len(rows))
    count[known] = stats.count[rows[known]]
    scores = entropy0(hist, count, stats.population_size)
    return [ScoredCandidate(i, float(s)) for i, s in zip(candidates, scores)]


def score_popularity(stats: RatingStats, candidates: Iterable) -> list[ScoredCandidate]:
    out = []
    for i in candidates:
        r = stats.row(i)
        out.append(ScoredCandidate(i, float(stats.count[r]) if r >= 0 else 0.0))
    return out


def score(kind: StrategyKind, model: FactorModel | None, stats: RatingStats | None,
          user, candidates: Iterable) -> list[ScoredCandidate]:
    """Dispatch to the scorer for `kind`."""
    if kind is StrategyKind.HIGHEST_PREDICTED:
        return score_highest_predicted(model, user, candidates)
    if kind is StrategyKind.LOWEST_PREDICTED:
        return score_lowest_predicted(model, user, candidates)
    if kind is StrategyKind.ENTROPY0:
        return score_entropy0(stats, candidates)
    return score_popularity(stats, candidates)


def rank_candidates(scored: Iterable[ScoredCandidate]) -> list:
    """Items by descending score, ties by ascending item identifier."""
    scored = list(scored)
    for c in scored:
        if not math.isfinite(c.score):
            raise NonFiniteScore(c.item, c.score)
    return [c.item for c in sorted(scored, key=lambda c: (-c.score, c.item))]

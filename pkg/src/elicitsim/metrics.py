"""Accuracy and diversity metrics, and relative improvement."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, EmptyTestSet, NoRecommendations, ZeroBaseline

LOWER_IS_BETTER = "lower-is-better"
HIGHER_IS_BETTER = "higher-is-better"


def mae(predictions: Iterable[tuple[float, float]]) -> float:
    """Mean absolute error over (predicted, actual) pairs."""
    pairs = np.asarray(list(predictions), dtype=np.float64)
    if pairs.size == 0:
        raise EmptyTestSet("MAE over an empty test set")
    return float(np.abs(pairs[:, 0] - pairs[:, 1]).mean())


def spread(lists: Mapping[object, Sequence] | Iterable[Sequence]) -> float:
    """Shannon entropy (natural log) of item occurrences across all lists.

    Equals 0 when every list holds the same single item, and ln m when the
    occurrences are spread evenly over m items.
    """
    if isinstance(lists, Mapping):
        lists = lists.values()
    counts = Counter()
    for items in lists:
        counts.update(items)
    return spread_from_counts(np.fromiter(counts.values(), dtype=np.float64, count=len(counts)))


def spread_from_counts(counts: np.ndarray) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    counts = counts[counts > 0]
    total = counts.sum()
    if total == 0:
        raise NoRecommendations("no recommended items to compute Spread over")
    p = counts / total
    return float(-(p * np.log(p)).sum()) + 0.0


def improvement(with_al: float, baseline: float, direction: str = LOWER_IS_BETTER) -> float:
    """Percent improvement of `with_al` over `baseline`."""
    if not baseline > 0:
        raise ZeroBaseline(f"baseline must be positive, got {baseline!r}")
    if direction == LOWER_IS_BETTER:
        return 100.0 * (baseline - with_al) / baseline
    if direction == HIGHER_IS_BETTER:
        return 100.0 * (with_al - baseline) / baseline
    raise ConfigError("direction", f"unknown direction {direction!r}")

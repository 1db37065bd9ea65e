"""Rating data model: ratings, per-domain datasets and item statistics.

Datasets are stored column-wise as numpy arrays of dense indices into sorted
user and item identifier tuples, so ascending index order equals ascending
identifier order.
"""

from __future__ import annotations

import numbers
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DomainMismatch, DuplicateRating, EmptyPopulation, ValueOutOfRange

TARGET = "target"
AUXILIARY = "auxiliary"

MIN_RATING = 1
MAX_RATING = 5
N_LEVELS = MAX_RATING - MIN_RATING + 1


class Rating(NamedTuple):
    user: str
    item: str
    value: int
    domain: str = TARGET


def check_value(value, line=None) -> int:
    """Return `value` as an int, or raise ValueOutOfRange.

    Integral floats (4.0) are accepted, true fractions and bools are not.
    """
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ValueOutOfRange(value, line)
    if isinstance(value, numbers.Integral):
        v = int(value)
    else:
        f = float(value)
        if not f.is_integer():
            raise ValueOutOfRange(value, line)
        v = int(f)
    if not MIN_RATING <= v <= MAX_RATING:
        raise ValueOutOfRange(value, line)
    return v


def qualify(domain: str, item: str) -> str:
    """Domain-qualified item key; keeps item spaces of different domains apart."""
    return f"{domain}:{item}"


class Dataset:
    """Immutable, validated set of ratings for one domain.

    Use :func:`build_dataset` to construct one from :class:`Rating` records.
    """

    __slots__ = ("domain", "users", "items", "user_idx", "item_idx", "values",
                 "_user_pos", "_item_pos")

    def __init__(self, domain: str, users: Sequence[str], items: Sequence[str],
                 user_idx: np.ndarray, item_idx: np.ndarray, values: np.ndarray):
        self.domain = domain
        self.users = tuple(users)
        self.items = tuple(items)
        order = np.lexsort((item_idx, user_idx))
        self.user_idx = np.ascontiguousarray(user_idx[order], dtype=np.int64)
        self.item_idx = np.ascontiguousarray(item_idx[order], dtype=np.int64)
        self.values = np.ascontiguousarray(values[order], dtype=np.int8)
        for a in (self.user_idx, self.item_idx, self.values):
            a.flags.writeable = False
        self._user_pos = None
        self._item_pos = None

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_items(self) -> int:
        return len(self.items)

    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self):
        return (f"Dataset(domain={self.domain!r}, ratings={len(self)}, "
                f"users={self.n_users}, items={self.n_items})")

    @property
    def density(self) -> float:
        """|ratings| / (|users|·|items|); 0 for an empty dataset."""
        cells = self.n_users * self.n_items
        return len(self) / cells if cells else 0.0

    @property
    def user_pos(self) -> dict:
        if self._user_pos is None:
            self._user_pos = {u: k for k, u in enumerate(self.users)}
        return self._user_pos

    @property
    def item_pos(self) -> dict:
        if self._item_pos is None:
            self._item_pos = {i: k for k, i in enumerate(self.items)}
        return self._item_pos

    @property
    def item_keys(self) -> tuple:
        return tuple(qualify(self.domain, i) for i in self.items)

    @property
    def ratings(self) -> list[Rating]:
        users, items = self.users, self.items
        return [Rating(users[u], items[i], int(v), self.domain)
                for u, i, v in zip(self.user_idx.tolist(), self.item_idx.tolist(),
                                   self.values.tolist())]

    def user_counts(self) -> np.ndarray:
        return np.bincount(self.user_idx, minlength=self.n_users)

    def item_counts(self) -> np.ndarray:
        return np.bincount(self.item_idx, minlength=self.n_items)

    def ratings_of(self, user: str) -> list[tuple[str, int]]:
        """(item, value) pairs of one user, in item order."""
        u = self.user_pos.get(user)
        if u is None:
            return []
        lo, hi = np.searchsorted(self.user_idx, [u, u + 1])
        return [(self.items[i], int(v)) for i, v in
                zip(self.item_idx[lo:hi].tolist(), self.values[lo:hi].tolist())]

    def restrict_users(self, keep: Iterable[str]) -> "Dataset":
        """Dataset with only the ratings of `keep`; users and items left
        without ratings are dropped from the indices."""
        keep = set(keep)
        mask_u = np.fromiter((u in keep for u in self.users), bool, self.n_users)
        rows = mask_u[self.user_idx] if len(self) else np.zeros(0, bool)
        return _reindex(self.domain, self.users, self.items,
                        self.user_idx[rows], self.item_idx[rows], self.values[rows])


def _reindex(domain, users, items, uidx, iidx, vals) -> Dataset:
    u_used = np.unique(uidx)
    i_used = np.unique(iidx)
    u_map = np.full(len(users), -1, np.int64)
    u_map[u_used] = np.arange(len(u_used))
    i_map = np.full(len(items), -1, np.int64)
    i_map[i_used] = np.arange(len(i_used))
    return Dataset(domain, [users[k] for k in u_used], [items[k] for k in i_used],
                   u_map[uidx], i_map[iidx], vals)


def build_dataset(ratings: Iterable[Rating], domain: str) -> Dataset:
    """Validate `ratings` and index them as a :class:`Dataset` of `domain`.

    Raises DomainMismatch, ValueOutOfRange or DuplicateRating.
    """
    ratings = list(ratings)
    for r in ratings:
        if r.domain != domain:
            raise DomainMismatch(f"rating {r!r} is not in domain {domain!r}")
    values = np.array([check_value(r.value) for r in ratings], dtype=np.int8)
    users = sorted({str(r.user) for r in ratings})
    items = sorted({str(r.item) for r in ratings})
    u_pos = {u: k for k, u in enumerate(users)}
    i_pos = {i: k for k, i in enumerate(items)}
    uidx = np.array([u_pos[str(r.user)] for r in ratings], dtype=np.int64)
    iidx = np.array([i_pos[str(r.item)] for r in ratings], dtype=np.int64)
    if len(ratings):
        keys = uidx * len(items) + iidx
        uniq, first, counts = np.unique(keys, return_index=True, return_counts=True)
        if (counts > 1).any():
            dup = ratings[first[np.argmax(counts > 1)]]
            raise DuplicateRating(dup.user, dup.item)
    return Dataset(domain, users, items, uidx, iidx, values)


class RatingStats:
    """Per-item rating counts and value histograms over a user population.

    ``histogram[i, v - 1]`` counts ratings of value ``v`` for row ``i``.
    ``items`` names the item of each row; None means rows are item indices.
    """

    __slots__ = ("count", "histogram", "population_size", "items", "_pos")

    def __init__(self, count, histogram, population_size, items=None):
        self.count = count
        self.histogram = histogram
        self.population_size = int(population_size)
        self.items = items
        self._pos = None

    def row(self, item) -> int:
        """Row of `item`, or -1 when the item is unknown to these stats."""
        if self.items is None:
            k = int(item)
            return k if 0 <= k < len(self.count) else -1
        if self._pos is None:
            self._pos = {i: k for k, i in enumerate(self.items)}
        return self._pos.get(item, -1)


def tally(item_idx: np.ndarray, values: np.ndarray, n_items: int,
          population_size: int, items=None) -> RatingStats:
    """Stats from already-filtered rating columns."""
    if population_size <= 0:
        raise EmptyPopulation("statistics population is empty")
    hist = np.zeros((n_items, N_LEVELS), dtype=np.int64)
    np.add.at(hist, (item_idx, values.astype(np.int64) - MIN_RATING), 1)
    return RatingStats(hist.sum(axis=1), hist, int(population_size), items)


def compute_stats(dataset: Dataset, population: Iterable[str]) -> RatingStats:
    """Count ratings per item and value, using only ratings by `population`.

    The population size is the denominator for the "unknown" frequency of
    Entropy0; members without any rating still count towards it.
    """
    population = set(population)
    if not population:
        raise EmptyPopulation("statistics population is empty")
    member = np.fromiter((u in population for u in dataset.users), bool, dataset.n_users)
    rows = member[dataset.user_idx] if len(dataset) else np.zeros(0, bool)
    return tally(dataset.item_idx[rows], dataset.values[rows], dataset.n_items,
                 len(population), dataset.items)

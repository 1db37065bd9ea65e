"""Seeded two-domain rating corpora with planted low-rank structure.

Users share identifiers across domains; their auxiliary-domain taste vector
is a mix of the target one and fresh noise, weighted by `correlation`.
Item observation probabilities follow a Zipf-like popularity curve scaled
so that the expected density matches the request.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import AUXILIARY, TARGET, Rating
from .errors import ElicitError


class InvalidSpec(ElicitError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    n_users: int = 100
    n_target_items: int = 200
    n_aux_items: int = 200
    density: float = 0.25
    correlation: float = 0.5
    rank: int = 5
    noise: float = 0.5
    popularity_skew: float = 0.8
    shared_item_factors: bool = False
    min_per_domain: int = 20
    seed: int = 0

    def validate(self):
        for name in ("n_users", "n_target_items", "n_aux_items", "rank"):
            if int(getattr(self, name)) <= 0:
                raise InvalidSpec(f"{name} must be positive")
        if not 0 < self.density <= 1:
            raise InvalidSpec("density must be in (0, 1]")
        if not -1 <= self.correlation <= 1:
            raise InvalidSpec("correlation must be in [-1, 1]")
        if self.noise < 0 or self.popularity_skew < 0:
            raise InvalidSpec("noise and popularity_skew must be non-negative")
        if self.shared_item_factors and self.n_target_items != self.n_aux_items:
            raise InvalidSpec("shared_item_factors needs equal item counts")
        if self.min_per_domain > min(self.n_target_items, self.n_aux_items):
            raise InvalidSpec("min_per_domain exceeds an item count")


def observation_probabilities(n_items, density, skew, rng) -> np.ndarray:
    """Per-item observation probabilities with mean `density`.

    Weights (rank+1)^-skew are assigned to items in random order and scaled
    by bisection so that Σ min(1, c·w) = density·n_items.
    """
    w = (np.arange(n_items) + 1.0) ** -skew
    w = w[rng.permutation(n_items)]
    goal = density * n_items
    lo, hi = 0.0, 1.0 / w.min()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.minimum(1.0, mid * w).sum() < goal:
            lo = mid
        else:
            hi = mid
    return np.minimum(1.0, hi * w)


def _observe(p, n_users, min_count, rng):
    masks = rng.random((n_users, len(p))) < p
    for u in range(n_users):
        tries = 0
        while masks[u].sum() < min_count:
            tries += 1
            if tries > 10_000:
                raise InvalidSpec("density too low to give every user enough ratings")
            masks[u] = rng.random(len(p)) < p
    return masks


def generate(spec: SyntheticSpec) -> tuple[list[Rating], list[Rating]]:
    """(target ratings, auxiliary ratings), deterministic in ``spec.seed``."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    rho = float(spec.correlation)
    mix = np.sqrt(max(0.0, 1.0 - rho * rho))

    taste_t = rng.normal(size=(spec.n_users, spec.rank))
    taste_a = rho * taste_t + mix * rng.normal(size=taste_t.shape)
    ubias_t = rng.normal(scale=0.4, size=spec.n_users)
    ubias_a = rho * ubias_t + mix * rng.normal(scale=0.4, size=spec.n_users)

    items_t = rng.normal(size=(spec.n_target_items, spec.rank)) / np.sqrt(spec.rank)
    ibias_t = rng.normal(scale=0.5, size=spec.n_target_items)
    if spec.shared_item_factors:
        items_a, ibias_a = items_t, ibias_t
    else:
        items_a = rng.normal(size=(spec.n_aux_items, spec.rank)) / np.sqrt(spec.rank)
        ibias_a = rng.normal(scale=0.5, size=spec.n_aux_items)

    width = len(str(max(spec.n_users, spec.n_target_items, spec.n_aux_items)))
    users = [f"u{k:0{width}d}" for k in range(spec.n_users)]

    def domain(taste, ubias, items, ibias, prefix, label):
        p = observation_probabilities(len(items), spec.density, spec.popularity_skew, rng)
        seen = _observe(p, spec.n_users, spec.min_per_domain, rng)
        raw = 3.5 + ubias[:, None] + ibias[None, :] + 0.8 * taste @ items.T
        raw += rng.normal(scale=spec.noise, size=raw.shape) if spec.noise > 0 else 0.0
        values = np.clip(np.rint(raw), 1, 5).astype(int)
        names = [f"{prefix}{k:0{width}d}" for k in range(len(items))]
        uu, ii = np.nonzero(seen)
        return [Rating(users[u], names[i], int(values[u, i]), label)
                for u, i in zip(uu.tolist(), ii.tolist())]

    target = domain(taste_t, ubias_t, items_t, ibias_t, "m", TARGET)
    aux = domain(taste_a, ubias_a, items_a, ibias_a, "s", AUXILIARY)
    return target, aux

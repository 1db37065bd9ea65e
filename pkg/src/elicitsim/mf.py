"""
Biased matrix factorization trained Funk-style: damped-mean baseline biases
first, then one latent factor at a time by stochastic gradient descent.

The model minimizes, over the observed ratings R,

    L = 1/2 Σ_(u,i)∈R (r_ui − μ − b_u − b_i − p_u·q_i)²
        + λ/2 Σ_(u,i)∈R (|p_u|² + |q_i|²)

with the biases held fixed once estimated. Each SGD step on rating (u, i)
while training factor f moves p_uf and q_if against the gradient of that
rating's term of L.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numba
import numpy as np

from .data import MAX_RATING, MIN_RATING, TARGET, Dataset, Rating, check_value, qualify
from .errors import ConfigError, EmptyTrainingSet

_log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Hyperparams:
    factor_count: int = 30
    learning_rate: float = 0.001
    regularization: float = 0.015
    epochs_per_factor: int = 100
    damping: float = 25.0
    init_value: float = 0.1
    rating_min: int = MIN_RATING
    rating_max: int = MAX_RATING
    seed: int = 0

    def __post_init__(self):
        if int(self.factor_count) < 1:
            raise ConfigError("factor_count", "must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate", "must be > 0")
        if not self.regularization >= 0:
            raise ConfigError("regularization", "must be >= 0")
        if int(self.epochs_per_factor) < 1:
            raise ConfigError("epochs_per_factor", "must be >= 1")
        if not self.damping >= 0:
            raise ConfigError("damping", "must be >= 0")
        if self.rating_min >= self.rating_max:
            raise ConfigError("rating_min", "must be below rating_max")


@dataclass(frozen=True, eq=False)
class FactorModel:
    """Trained latent-factor predictor.

    Arrays are indexed by dense user/item positions. ``user_ids`` and
    ``item_ids`` name those positions; when None the positions themselves
    are the identifiers. Users or items without training ratings are marked
    unknown in ``user_known`` / ``item_known`` and predicted from fallbacks.
    """

    global_mean: float
    user_bias: np.ndarray
    item_bias: np.ndarray
    user_factors: np.ndarray
    item_factors: np.ndarray
    user_known: np.ndarray
    item_known: np.ndarray
    rating_min: float = MIN_RATING
    rating_max: float = MAX_RATING
    user_ids: tuple | None = None
    item_ids: tuple | None = None
    loss_trace: np.ndarray | None = None

    def __post_init__(self):
        if self.user_ids is not None:
            object.__setattr__(self, "_upos", {u: k for k, u in enumerate(self.user_ids)})
        if self.item_ids is not None:
            object.__setattr__(self, "_ipos", {i: k for k, i in enumerate(self.item_ids)})

    @property
    def factor_count(self) -> int:
        return self.user_factors.shape[1]

    def user_index(self, user) -> int:
        if self.user_ids is None:
            k = int(user)
            return k if 0 <= k < len(self.user_bias) else -1
        return self._upos.get(user, -1)

    def item_index(self, item) -> int:
        if self.item_ids is None:
            k = int(item)
            return k if 0 <= k < len(self.item_bias) else -1
        return self._ipos.get(item, -1)

    def raw_scores(self, uidx, iidx) -> np.ndarray:
        """Unclamped scores for index arrays; -1 marks an unknown entity."""
        uidx = np.asarray(uidx, dtype=np.int64)
        iidx = np.asarray(iidx, dtype=np.int64)
        uidx, iidx = np.broadcast_arrays(uidx, iidx)
        uk = uidx >= 0
        ik = iidx >= 0
        uk[uk] = self.user_known[uidx[uk]]
        ik[ik] = self.item_known[iidx[ik]]
        est = np.full(uidx.shape, self.global_mean, dtype=np.float64)
        est[uk] += self.user_bias[uidx[uk]]
        est[ik] += self.item_bias[iidx[ik]]
        both = uk & ik
        est[both] += np.einsum("ij,ij->i", self.user_factors[uidx[both]],
                               self.item_factors[iidx[both]])
        return est

    def item_scores(self, u: int, n_items: int | None = None) -> np.ndarray:
        """Unclamped scores of user position `u` for items 0..n_items-1."""
        n = len(self.item_bias) if n_items is None else n_items
        est = np.full(n, self.global_mean)
        ik = self.item_known[:n]
        est[ik] += self.item_bias[:n][ik]
        if 0 <= u < len(self.user_bias) and self.user_known[u]:
            est += self.user_bias[u]
            est[ik] += self.item_factors[:n][ik] @ self.user_factors[u]
        return est

    def predict_indexed(self, uidx, iidx) -> np.ndarray:
        return np.clip(self.raw_scores(uidx, iidx), self.rating_min, self.rating_max)

    def predict_items(self, user, items: Sequence) -> np.ndarray:
        """Clamped predictions for one user over several item identifiers."""
        u = self.user_index(user)
        iidx = np.array([self.item_index(i) for i in items], dtype=np.int64)
        return self.predict_indexed(np.full(len(iidx), u), iidx)


def fit_biases(uidx, iidx, values, n_users, n_items, damping):
    """Global mean plus damped item, then user, mean offsets."""
    values = values.astype(np.float64)
    mu = float(values.mean())
    i_n = np.bincount(iidx, minlength=n_items)
    b_i = np.bincount(iidx, weights=values - mu, minlength=n_items) / (i_n + damping)
    u_n = np.bincount(uidx, minlength=n_users)
    b_u = np.bincount(uidx, weights=values - mu - b_i[iidx], minlength=n_users) / (u_n + damping)
    # 0/0 when damping is 0 and an entity has no ratings
    b_i[i_n == 0] = 0.0
    b_u[u_n == 0] = 0.0
    return mu, b_u, b_i


@numba.njit(cache=True, nogil=True)
def _train_factors(uidx, iidx, target, P, Q, lr, reg, epochs, losses):
    n = len(target)
    k = P.shape[1]
    resid = np.empty(n)
    for f in range(k):
        # other factors stay fixed while f trains
        for j in range(n):
            s = 0.0
            u = uidx[j]
            i = iidx[j]
            for g in range(k):
                if g != f:
                    s += P[u, g] * Q[i, g]
            resid[j] = target[j] - s
        for e in range(epochs):
            for j in range(n):
                u = uidx[j]
                i = iidx[j]
                pu = P[u, f]
                qi = Q[i, f]
                err = resid[j] - pu * qi
                P[u, f] = pu + lr * (err * qi - reg * pu)
                Q[i, f] = qi + lr * (err * pu - reg * qi)
            loss = 0.0
            for j in range(n):
                pu = P[uidx[j], f]
                qi = Q[iidx[j], f]
                err = resid[j] - pu * qi
                loss += 0.5 * err * err + 0.5 * reg * (pu * pu + qi * qi)
            losses[f, e] = loss


def train_indexed(uidx, iidx, values, n_users: int, n_items: int, hp: Hyperparams,
                  user_ids=None, item_ids=None) -> FactorModel:
    """Train on rating columns given as dense indices.

    The sweep order is fixed to ascending (user, item), so the result is a
    deterministic function of the ratings and `hp`.
    """
    uidx = np.asarray(uidx, dtype=np.int64)
    iidx = np.asarray(iidx, dtype=np.int64)
    values = np.asarray(values)
    if len(values) == 0:
        raise EmptyTrainingSet("cannot train on an empty rating set")
    order = np.lexsort((iidx, uidx))
    uidx, iidx, values = uidx[order], iidx[order], values[order].astype(np.float64)

    mu, b_u, b_i = fit_biases(uidx, iidx, values, n_users, n_items, hp.damping)
    k = int(hp.factor_count)
    P = np.full((n_users, k), hp.init_value)
    Q = np.full((n_items, k), hp.init_value)
    losses = np.zeros((k, int(hp.epochs_per_factor)))
    target = values - mu - b_u[uidx] - b_i[iidx]
    _train_factors(uidx, iidx, target, P, Q, float(hp.learning_rate),
                   float(hp.regularization), int(hp.epochs_per_factor), losses)
    _check_losses(losses)

    model = FactorModel(
        global_mean=mu, user_bias=b_u, item_bias=b_i, user_factors=P, item_factors=Q,
        user_known=np.bincount(uidx, minlength=n_users) > 0,
        item_known=np.bincount(iidx, minlength=n_items) > 0,
        rating_min=hp.rating_min, rating_max=hp.rating_max,
        user_ids=None if user_ids is None else tuple(user_ids),
        item_ids=None if item_ids is None else tuple(item_ids),
        loss_trace=losses,
    )
    for a in (b_u, b_i, P, Q, losses):
        a.flags.writeable = False
    if not all(np.isfinite(a).all() for a in (b_u, b_i, P, Q)) or not np.isfinite(mu):
        raise FloatingPointError("training diverged; lower the learning rate")
    return model


def _check_losses(losses, rtol=1e-9):
    rises = losses[:, 1:] > losses[:, :-1] * (1 + rtol) + 1e-12
    if rises.any():
        f, e = np.argwhere(rises)[0]
        _log.warning("training loss rose on factor %d at epoch %d (%.6g -> %.6g)",
                     f, e + 1, losses[f, e], losses[f, e + 1])
    return not rises.any()


def train(ratings: Iterable[Rating] | Dataset, hp: Hyperparams | None = None) -> FactorModel:
    """Train a :class:`FactorModel` on ratings from one or more domains.

    Item identifiers are domain-qualified inside the model (see
    :func:`predict`); users are shared across domains.
    """
    hp = hp or Hyperparams()
    if isinstance(ratings, Dataset):
        ratings = ratings.ratings
    ratings = list(ratings)
    if not ratings:
        raise EmptyTrainingSet("cannot train on an empty rating set")
    users = sorted({r.user for r in ratings})
    items = sorted({qualify(r.domain, r.item) for r in ratings})
    u_pos = {u: k for k, u in enumerate(users)}
    i_pos = {i: k for k, i in enumerate(items)}
    uidx = np.array([u_pos[r.user] for r in ratings], dtype=np.int64)
    iidx = np.array([i_pos[qualify(r.domain, r.item)] for r in ratings], dtype=np.int64)
    values = np.array([check_value(r.value) for r in ratings], dtype=np.float64)
    return train_indexed(uidx, iidx, values, len(users), len(items), hp,
                         user_ids=users, item_ids=items)


def _item_key(model: FactorModel, item, domain):
    return item if model.item_ids is None else qualify(domain, item)


def predict(model: FactorModel, user, item, domain: str = TARGET) -> float:
    """Clamped prediction; unknown users or items fall back to the baseline."""
    u = model.user_index(user)
    i = model.item_index(_item_key(model, item, domain))
    return float(model.predict_indexed(np.array([u]), np.array([i]))[0])


def top_n_positions(scores: np.ndarray, n: int, allowed: np.ndarray | None = None) -> np.ndarray:
    """Positions of the `n` best scores, descending, ties to the lower position."""
    pos = np.arange(len(scores)) if allowed is None else np.flatnonzero(allowed)
    if len(pos) == 0 or n <= 0:
        return pos[:0]
    s = scores[pos]
    if len(pos) > n:
        kth = np.partition(s, len(s) - n)[len(s) - n]
        keep = s >= kth
        pos, s = pos[keep], s[keep]
    order = np.lexsort((pos, -s))
    return pos[order[:n]]


def recommend_top_n(model: FactorModel, user, exclude: Iterable, n: int,
                    universe: Iterable, domain: str = TARGET) -> list:
    """The `n` items of `universe` minus `exclude` with the highest
    predictions, ties broken by ascending item identifier."""
    exclude = set(exclude)
    pool = sorted(i for i in set(universe) if i not in exclude)
    if not pool:
        return []
    scores = model.predict_items(user, [_item_key(model, i, domain) for i in pool])
    return [pool[k] for k in top_n_positions(scores, n)]


def objective(model_P, model_Q, uidx, iidx, target, reg) -> float:
    """Regularized squared error of factor terms against bias residuals."""
    err = target - np.einsum("ij,ij->i", model_P[uidx], model_Q[iidx])
    pen = (model_P[uidx] ** 2).sum() + (model_Q[iidx] ** 2).sum()
    return 0.5 * float(err @ err) + 0.5 * reg * float(pen)


def objective_gradient(model_P, model_Q, uidx, iidx, target, reg):
    """Analytic gradient of :func:`objective` w.r.t. the factor matrices.

    The SGD kernel applies the per-rating summand of this gradient.
    """
    err = target - np.einsum("ij,ij->i", model_P[uidx], model_Q[iidx])
    gP = np.zeros_like(model_P, dtype=np.float64)
    gQ = np.zeros_like(model_Q, dtype=np.float64)
    np.add.at(gP, uidx, -err[:, None] * model_Q[iidx] + reg * model_P[uidx])
    np.add.at(gQ, iidx, -err[:, None] * model_P[uidx] + reg * model_Q[iidx])
    return gP, gQ


def dump_model(model: FactorModel, path) -> None:
    """Write a debugging dump: one header line, then one row per user and item.

    Rows are ``U|I <tab> id <tab> known <tab> bias <tab> factors...``.
    """
    def ident(ids, k):
        return str(k) if ids is None else str(ids[k])

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# users={len(model.user_bias)} items={len(model.item_bias)} "
                 f"factors={model.factor_count} global_mean={model.global_mean!r}\n")
        for tag, ids, known, bias, fac in (
                ("U", model.user_ids, model.user_known, model.user_bias, model.user_factors),
                ("I", model.item_ids, model.item_known, model.item_bias, model.item_factors)):
            for k in range(len(bias)):
                cols = [tag, ident(ids, k), str(int(known[k])), repr(float(bias[k]))]
                cols += [repr(float(x)) for x in fac[k]]
                fh.write("\t".join(cols) + "\n")

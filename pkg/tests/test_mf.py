import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elicitsim.data import TARGET, Rating
from elicitsim.errors import ConfigError, EmptyTrainingSet
from elicitsim.mf import (FactorModel, Hyperparams, _check_losses, _train_factors, dump_model,
                          objective, objective_gradient, predict, recommend_top_n, train,
                          train_indexed)

SMALL = Hyperparams(factor_count=3, epochs_per_factor=20)


def hand_model(item_bias, mu=3.0):
    n = len(item_bias)
    return FactorModel(
        global_mean=mu, user_bias=np.zeros(1), item_bias=np.asarray(item_bias, float),
        user_factors=np.zeros((1, 1)), item_factors=np.zeros((n, 1)),
        user_known=np.ones(1, bool), item_known=np.ones(n, bool),
        user_ids=("u",), item_ids=tuple(f"target:{c}" for c in "abcdefgh"[:n]))


def rank1_problem(seed=0, n=50):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, n)
    b = rng.uniform(-1, 1, n)
    full = 3.0 + 1.5 * np.outer(a, b)
    uu, ii = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    uu, ii, vv = uu.ravel(), ii.ravel(), full.ravel()
    train_mask = rng.random(len(vv)) < 0.8
    return uu, ii, vv, train_mask


def test_hyperparam_defaults():
    hp = Hyperparams()
    assert (hp.factor_count, hp.learning_rate, hp.regularization, hp.epochs_per_factor) == \
        (30, 0.001, 0.015, 100)
    assert hp.damping == 25 and hp.init_value == 0.1


@pytest.mark.parametrize("kw", [dict(factor_count=0), dict(learning_rate=0),
                                dict(epochs_per_factor=0), dict(regularization=-1)])
def test_hyperparam_validation(kw):
    with pytest.raises(ConfigError):
        Hyperparams(**kw)


def test_empty_training_set():
    with pytest.raises(EmptyTrainingSet):
        train([], SMALL)


@pytest.mark.parametrize("hp", [
    Hyperparams(factor_count=1),
    Hyperparams(factor_count=5),
    Hyperparams(factor_count=30, learning_rate=0.05),
    Hyperparams(factor_count=2, regularization=0.0, epochs_per_factor=1),
])
def test_single_rating_fit(hp):
    model = train([Rating("u1", "i1", 4)], hp)
    assert predict(model, "u1", "i1") == pytest.approx(4.0, abs=0.1)


def test_single_rating_default_hp_overshoots():
    # 30 factors initialised at 0.1 add 30 * 0.01 on top of the mean, and
    # lr 0.001 cannot pull that back on one rating
    model = train([Rating("u1", "i1", 4)], Hyperparams())
    assert predict(model, "u1", "i1") > 4.1


def test_rank1_recovery():
    uu, ii, vv, m = rank1_problem()
    hp = Hyperparams(factor_count=2, learning_rate=0.02, regularization=0.005,
                     epochs_per_factor=200)
    model = train_indexed(uu[m], ii[m], vv[m], 50, 50, hp)
    pred = model.predict_indexed(uu[~m], ii[~m])
    rmse = float(np.sqrt(np.mean((pred - vv[~m]) ** 2)))
    baseline = float(np.sqrt(np.mean((vv[m].mean() - vv[~m]) ** 2)))
    assert rmse < 0.25
    assert rmse < baseline / 2


def test_deterministic():
    uu, ii, vv, m = rank1_problem(seed=3, n=20)
    a = train_indexed(uu[m], ii[m], np.rint(vv[m]), 20, 20, SMALL)
    rev = np.arange(m.sum())[::-1]
    b = train_indexed(uu[m][rev], ii[m][rev], np.rint(vv[m])[rev], 20, 20, SMALL)
    for name in ("user_bias", "item_bias", "user_factors", "item_factors"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert a.global_mean == b.global_mean


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    uu, ii = [a.ravel() for a in np.meshgrid(np.arange(3), np.arange(3), indexing="ij")]
    target = rng.normal(size=9)
    P = rng.normal(scale=0.5, size=(3, 2))
    Q = rng.normal(scale=0.5, size=(3, 2))
    reg = 0.05
    gP, gQ = objective_gradient(P, Q, uu, ii, target, reg)
    h = 1e-6
    for M, G in ((P, gP), (Q, gQ)):
        for idx in np.ndindex(M.shape):
            old = M[idx]
            M[idx] = old + h
            up = objective(P, Q, uu, ii, target, reg)
            M[idx] = old - h
            down = objective(P, Q, uu, ii, target, reg)
            M[idx] = old
            num = (up - down) / (2 * h)
            assert abs(G[idx] - num) <= 1e-4 * max(abs(G[idx]), abs(num), 1e-8)


def test_sgd_step_follows_gradient():
    # one epoch on one rating is exactly one gradient step on that term
    P = np.array([[0.3]])
    Q = np.array([[-0.2]])
    u = np.array([0])
    i = np.array([0])
    target = np.array([1.25])
    lr, reg = 0.1, 0.02
    gP, gQ = objective_gradient(P, Q, u, i, target, reg)
    P2, Q2 = P.copy(), Q.copy()
    _train_factors(u, i, target, P2, Q2, lr, reg, 1, np.zeros((1, 1)))
    assert P2[0, 0] == pytest.approx(P[0, 0] - lr * gP[0, 0], rel=1e-12)
    assert Q2[0, 0] == pytest.approx(Q[0, 0] - lr * gQ[0, 0], rel=1e-12)


def test_loss_trace_non_increasing():
    uu, ii, vv, m = rank1_problem(seed=1, n=30)
    model = train_indexed(uu[m], ii[m], vv[m], 30, 30, SMALL)
    assert model.loss_trace.shape == (3, 20)
    assert _check_losses(model.loss_trace)


def test_loss_rise_warns(caplog):
    with caplog.at_level(logging.WARNING, logger="elicitsim.mf"):
        assert not _check_losses(np.array([[3.0, 2.0, 2.5]]))
    assert "rose" in caplog.text


def test_fallbacks():
    model = train([Rating("u1", "i1", 5), Rating("u1", "i2", 3), Rating("u2", "i1", 4)], SMALL)
    mu = model.global_mean
    assert predict(model, "ghost", "nothing") == pytest.approx(mu)
    b_i = model.item_bias[model.item_index("target:i1")]
    assert predict(model, "ghost", "i1") == pytest.approx(mu + b_i)
    b_u = model.user_bias[model.user_index("u1")]
    assert predict(model, "u1", "nothing") == pytest.approx(mu + b_u)


def test_both_unknown_is_global_mean():
    m = hand_model([0.0])
    m = FactorModel(3.7, m.user_bias, m.item_bias, m.user_factors, m.item_factors,
                    m.user_known, m.item_known, user_ids=("u",), item_ids=("target:a",))
    assert predict(m, "x", "y") == pytest.approx(3.7)


def test_clamping():
    m = hand_model([2.9], mu=3.0)
    assert predict(m, "u", "a") == 5.0
    m = hand_model([-2.9], mu=3.0)
    assert predict(m, "u", "a") == 1.0


def test_recommend_exclusion():
    m = hand_model([0.0, 0.0])
    assert recommend_top_n(m, "u", {"a"}, 5, {"a", "b"}) == ["b"]


def test_recommend_ties_ascending():
    m = hand_model([0.0, 0.0, 0.0, 0.0])
    assert recommend_top_n(m, "u", set(), 3, {"d", "b", "c", "a"}) == ["a", "b", "c"]


def test_recommend_bias_order():
    m = hand_model([1.0, 0.0, -1.0])
    assert recommend_top_n(m, "u", set(), 3, {"a", "b", "c"}) == ["a", "b", "c"]


def test_models_are_immutable():
    model = train([Rating("u1", "i1", 4), Rating("u2", "i1", 2)], SMALL)
    before = predict(model, "u1", "i1")
    with pytest.raises(ValueError):
        model.user_factors[0, 0] = 9.0
    train([Rating("u1", "i1", 4), Rating("u2", "i1", 2), Rating("u1", "i2", 5)], SMALL)
    assert predict(model, "u1", "i1") == before


def test_cross_domain_items_do_not_collide():
    rs = [Rating("u1", "x", 5, "target"), Rating("u1", "x", 1, "auxiliary")]
    model = train(rs, SMALL)
    assert len(model.item_ids) == 2
    assert predict(model, "u1", "x", "target") != predict(model, "u1", "x", "auxiliary")


def test_dump(tmp_path):
    model = train([Rating("u1", "i1", 4), Rating("u2", "i2", 2)], SMALL)
    path = tmp_path / "model.txt"
    dump_model(model, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# users=2 items=2 factors=3")
    assert len(lines) == 5
    assert all(len(l.split("\t")) == 4 + 3 for l in lines[1:])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), st.integers(1, 5)),
                min_size=1, max_size=25, unique_by=lambda t: t[:2]),
       st.integers(-1, 6), st.integers(-1, 6))
def test_predictions_clamped(rows, u, i):
    rs = [Rating(f"u{a}", f"i{b}", v, TARGET) for a, b, v in rows]
    model = train(rs, Hyperparams(factor_count=2, learning_rate=0.5, epochs_per_factor=5))
    assert 1.0 <= predict(model, f"u{u}", f"i{i}") <= 5.0

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from feelgood.core import HypercubeD, argmax_action
from feelgood.environments import (
    Constant,
    Dense,
    Deterministic,
    LinearEnv,
    RoundProtocolError,
    Sparse,
    draw_sigma_sq,
    sample_theta_star,
)
from feelgood.rng import ENV, RoundStream


def _env(noise, T=10, d=3, seed=1, run=0):
    return LinearEnv.sampled(d, noise, T, seed, run)


def test_theta_star_d1_is_pm1():
    rng = np.random.default_rng(0)
    vals = np.array([sample_theta_star(rng, 1)[0] for _ in range(2000)])
    assert set(np.unique(vals)) == {-1.0, 1.0}
    assert abs(np.mean(vals > 0) - 0.5) < 0.05


def test_theta_star_unit_and_deterministic():
    a = sample_theta_star(np.random.default_rng(9), 5)
    b = sample_theta_star(np.random.default_rng(9), 5)
    np.testing.assert_array_equal(a, b)
    assert abs(np.linalg.norm(a) - 1.0) < 1e-12


def test_theta_star_symmetric():
    rng = np.random.default_rng(3)
    draws = np.stack([sample_theta_star(rng, 3) for _ in range(10_000)])
    assert np.all(np.abs(draws.mean(axis=0)) < 0.05)


def test_schedule_validation():
    with pytest.raises(ValueError):
        Sparse(1.5)
    with pytest.raises(ValueError):
        Constant(-1.0)


def test_deterministic_and_constant():
    env = _env(Deterministic())
    for t in range(1, 11):
        assert env.begin_round(t)[2] == 0.0
        env.step(t, np.ones(3) / math.sqrt(3))
    env = _env(Constant(1.0))
    assert env.begin_round(1)[2] == 1.0


def test_sparse_fraction():
    gen = np.random.default_rng(5)
    s = draw_sigma_sq(Sparse(0.1), gen, 100_000)
    assert set(np.unique(s)) <= {0.0, 1.0}
    assert abs(s.mean() - 0.1) < 0.01


def test_dense_is_chi_square_one():
    s = draw_sigma_sq(Dense(), np.random.default_rng(6), 200_000)
    assert np.all(s >= 0.0)
    assert abs(s.mean() - 1.0) < 0.02
    assert abs(s.var() - 2.0) < 0.1


def test_exact_reward_without_noise():
    env = _env(Deterministic())
    _, actions, _ = env.begin_round(1)
    _, feat, _ = argmax_action(env.f_star, actions)
    r = env.step(1, feat)
    assert r == float(env.theta_star @ feat)
    assert r == pytest.approx(np.abs(env.theta_star).sum() / math.sqrt(3), abs=1e-15)


def test_noise_moments_and_independence():
    T = 100_000
    env = _env(Constant(1.0), T=T)
    chosen = HypercubeD(3).feature(0)
    mean = float(env.theta_star @ chosen)
    eps = np.empty(T)
    for t in range(1, T + 1):
        env.begin_round(t)
        eps[t - 1] = env.step(t, chosen) - mean
    assert abs(eps.mean()) < 0.02
    assert abs(eps.var() - 1.0) < 0.05
    assert abs(np.corrcoef(eps[:-1], eps[1:])[0, 1]) < 0.02


def test_protocol_order():
    env = _env(Sparse(0.5), T=2)
    with pytest.raises(RoundProtocolError):
        env.begin_round(2)
    env.begin_round(1)
    with pytest.raises(RoundProtocolError):
        env.begin_round(2)
    with pytest.raises(RoundProtocolError):
        env.step(2, np.zeros(3))
    env.step(1, np.zeros(3))
    with pytest.raises(RoundProtocolError):
        env.step(1, np.zeros(3))
    env.begin_round(2)
    env.step(2, np.zeros(3))
    with pytest.raises(RoundProtocolError):
        env.begin_round(3)


def test_unit_theta_required():
    with pytest.raises(ValueError):
        LinearEnv(np.array([0.5, 0.0]), HypercubeD(2), Dense(), 5, RoundStream(0, 0, ENV))


@given(st.integers(0, 2**32), st.integers(0, 50))
def test_realisation_independent_of_actions(seed, run):
    # the sigma and epsilon sequence must not depend on what the agent plays
    a, b = _env(Sparse(0.5), seed=seed, run=run), _env(Sparse(0.5), seed=seed, run=run)
    H = HypercubeD(3)
    for t in range(1, 11):
        sa, sb = a.begin_round(t)[2], b.begin_round(t)[2]
        assert sa == sb
        ra = a.step(t, H.feature(0)) - float(a.theta_star @ H.feature(0))
        rb = b.step(t, H.feature(t % 8)) - float(b.theta_star @ H.feature(t % 8))
        assert ra == pytest.approx(rb, abs=1e-15)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from saboa.core import ConfigurationError, DomainError, InvariantViolation, UnsupportedRegimeError
from saboa.meta import (LeaderSolverConfig, MetaConfig, boaplus_grid, run_boaplus, run_saboa,
                        run_squint, saboa_grid, session_of, sessions, solve_leader,
                        sparsity_levels, threshold_levels)
from saboa.metrics import average_regret
from saboa.squint import Squint, build_ladder
from saboa.streams import (AdversarialStrongStream, QuadraticIIDStream, make_expert_stream,
                           sparse_parameter)


def quadratic(d=5, seed=0, sigma=0.1):
    rng = np.random.default_rng(seed)
    return QuadraticIIDStream(sparse_parameter(d, 2, 0.5, rng), None, sigma=sigma, seed=seed)


def test_session_of_examples():
    assert [session_of(t) for t in (1, 2, 3, 4, 7, 8, 1024)] == [0, 1, 1, 2, 2, 3, 10]
    with pytest.raises(DomainError):
        session_of(0)


@given(st.integers(1, 5000))
def test_sessions_partition(T):
    rounds = []
    for i, start, stop in sessions(T):
        assert start == 2**i and stop <= 2 ** (i + 1)
        assert all(session_of(t) == i for t in (start, stop - 1))
        rounds.extend(range(start, stop))
    assert rounds == list(range(1, T + 1))


def test_solve_leader_examples():
    # min ||theta - c||^2 over the ball, c inside: the answer is c
    c = np.array([0.2, -0.1, 0.3])
    obj = lambda th: (float((th - c) @ (th - c)), 2 * (th - c))
    assert np.allclose(solve_leader(obj, dim=3), c, atol=1e-6)
    # c outside: projection of c
    c2 = np.array([1.0, 1.0, 0.0])
    obj2 = lambda th: (float((th - c2) @ (th - c2)), 2 * (th - c2))
    assert np.allclose(solve_leader(obj2, dim=3), [0.5, 0.5, 0.0], atol=1e-6)
    with pytest.raises(ConfigurationError):
        LeaderSolverConfig(max_iter=0)


def test_solve_leader_against_slow_oracle():
    rng = np.random.default_rng(4)
    M = rng.normal(size=(3, 3))
    Q = M @ M.T + 0.5 * np.eye(3)
    b = rng.normal(size=3) * 3
    f = lambda th: (float(th @ Q @ th - b @ th), 2 * Q @ th - b)
    x = solve_leader(f, LeaderSolverConfig(max_iter=20000, tol=1e-12), dim=3)
    # oracle: plain projected gradient with a tiny fixed rate
    from saboa.geometry import project_l1
    y = np.zeros(3)
    step = 0.1 / np.linalg.eigvalsh(2 * Q).max()
    for _ in range(100_000):
        y = project_l1(y - step * f(y)[1])
    assert np.abs(x - y).max() <= 1e-6


def test_boaplus_grid_examples():
    g = boaplus_grid([0.5, -0.2, 0.0], 3)
    pts = {tuple(p) for p in g.points}
    assert (0.5, 0.0, 0.0) in pts and (0.5, -0.2, 0.0) in pts
    assert (2.0, 0.0, 0.0) in pts and (0.0, 0.0, -2.0) in pts
    # truncations at k=2 and k=3 coincide
    assert g.size == 2 + 6
    assert np.allclose(g.prior, 1 / g.size)
    with pytest.raises(DomainError):
        boaplus_grid([0.8, 0.8, 0.0], 3)


@given(st.integers(1, 12), st.integers(0, 2**31))
def test_boaplus_grid_size(d, seed):
    rng = np.random.default_rng(seed)
    leader = rng.laplace(size=d)
    leader /= np.abs(leader).sum() / rng.uniform(0, 1)
    assert boaplus_grid(leader, d).size <= 3 * d


def test_levels():
    assert threshold_levels(2).tolist() == [1.0, 0.5, 0.25]
    assert sparsity_levels(1) == [1]
    assert sparsity_levels(4) == [1, 2, 4]
    assert sparsity_levels(6) == [1, 2, 4, 6]


def test_saboa_grid_examples():
    g = saboa_grid(np.zeros(3), 0, 3)
    # every shrinkage of the origin is the origin
    assert g.size == 1 + 6
    g = saboa_grid(np.array([0.3, -0.2, 0.1, 0.0]), 1, 4)
    raw = 2 * len(sparsity_levels(4)) + 4 + 8
    assert raw == 18 and g.size <= raw
    assert np.allclose(g.prior, 1 / g.size)
    with pytest.raises(DomainError):
        saboa_grid(np.array([0.9, 0.9]), 1, 2)


@settings(max_examples=50)
@given(st.integers(1, 40), st.integers(0, 12), st.integers(0, 2**31))
def test_saboa_grid_size_and_ball(d, i, seed):
    rng = np.random.default_rng(seed)
    avg = rng.laplace(size=d)
    avg /= np.abs(avg).sum() / rng.uniform(0, 1)
    g = saboa_grid(avg, i, d)
    assert g.size <= (i + 1) * len(sparsity_levels(d)) + 3 * d
    if d & (d - 1) == 0:
        assert g.size <= (i + 1) * (1 + math.log2(d)) + 3 * d
    assert np.all(np.abs(g.points).sum(axis=1) <= 1 + 1e-12)


def test_horizon_one_runs():
    s = quadratic()
    for run in (run_saboa, run_boaplus):
        led = run(s, 1)
        assert led.complete and led.t == 1
        assert np.allclose(led.snapshots[1], 0.0)


def test_boaplus_predictions_in_radius_two_ball():
    s = AdversarialStrongStream(6, seed=2)
    led = run_boaplus(s, 300, MetaConfig(snapshot_predictions=True))
    assert np.abs(led.predictions).sum(axis=1).max() <= 2 + 1e-12


def test_session_average_is_mean_of_predictions():
    s = quadratic()
    led = run_saboa(s, 100, MetaConfig(snapshot_predictions=True))
    avgs = led.extras["session_averages"]
    P = led.predictions
    for i, start, stop in sessions(100):
        assert np.allclose(avgs[i + 1], P[start - 1:stop - 1].mean(axis=0), atol=1e-14)


def test_session_restart_is_isolated():
    s = quadratic(d=4, seed=3)
    T = 200
    led = run_saboa(s, T, MetaConfig(snapshot_predictions=True))
    avgs = led.extras["session_averages"]
    ladder = build_ladder(led.meta["E"], T, 2)
    for i, start, stop in sessions(T):
        sq = Squint(saboa_grid(avgs[i], i, 4), led.meta["E"], ladder=ladder)
        for t in range(start, stop):
            theta = sq.predict()
            assert np.array_equal(theta, led.predictions[t - 1])
            sq.update(s.gradient(t, theta))


def test_invariant_violation_keeps_partial_ledger():
    s = quadratic(sigma=0.5)
    s.G = 1e-3
    with pytest.raises(InvariantViolation) as info:
        run_saboa(s, 64)
    led = info.value.ledger
    assert not led.complete
    assert led.t < 64
    assert "InvariantViolation" in led.error


def test_regime_checks():
    with pytest.raises(UnsupportedRegimeError):
        run_saboa(AdversarialStrongStream(5, seed=0), 8)
    f = np.full((4, 2), 0.5)
    with pytest.raises(UnsupportedRegimeError):
        run_boaplus(make_expert_stream(f, np.zeros(4)), 4)


def test_squint_extras():
    from saboa.core import corners
    s = quadratic(d=3)
    led = run_squint(s, 50, corners(3))
    assert led.extras["weights"].shape == (6,)
    assert led.extras["grid_sizes"] == [6]
    assert led.extras["max_gradient"] <= s.G


@pytest.mark.slow
def test_boaplus_adversarial_regret_decreases():
    s = AdversarialStrongStream(10, mu=1.0, d0=4, seed=0)
    led = run_boaplus(s, 2**15)
    assert average_regret(led, s.center, s, 2**15) < average_regret(led, s.center, s, 2**11)

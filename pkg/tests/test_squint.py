import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import logsumexp

from saboa import _kernels_py
from saboa.core import ConfigurationError, ExpertGrid, StreamError, corners, is_simplex
from saboa.squint import RateLadder, Squint, build_ladder, default_E


def batch_weights(points, prior, rates, grads, thetas):
    """Weights recomputed from the whole history, independently of the kernels."""
    r = np.array([[g @ (th - p) for p in points] for g, th in zip(grads, thetas)])  # (t, K)
    A = np.zeros((len(points), len(rates)))
    for i, eta in enumerate(rates):
        A[:, i] = (eta * r - (eta * r) ** 2).sum(axis=0)
    logw = logsumexp(A + np.log(rates)[None, :], axis=1) + np.log(prior)
    return np.exp(logw - logsumexp(logw)), A


def random_grid(rng, K, d):
    pts = rng.uniform(-1, 1, (K, d))
    pts /= np.abs(pts).sum(axis=1, keepdims=True) / rng.uniform(0.1, 1.0, (K, 1))
    return ExpertGrid.from_points(pts, prior=rng.uniform(0.5, 1.5, K))


def play(sq, rng, T, scale=1.0):
    grads, thetas = [], []
    for _ in range(T):
        thetas.append(sq.predict())
        g = rng.normal(size=sq.dim) * scale
        grads.append(g)
        sq.update(g)
    return grads, thetas


def test_ladder_example():
    lad = build_ladder(4 / 3, 4, 1)
    assert lad.depth == 2
    assert np.allclose(lad.rates, [3 / (4 * math.e), 3 / (4 * math.e**2)], rtol=1e-15)
    assert lad.rates == pytest.approx([0.27591, 0.101501], abs=1e-5)


def test_ladder_clamped():
    assert build_ladder(1.0, 1, 1).depth == 1


@given(st.floats(0.01, 1e3), st.integers(1, 10**6), st.sampled_from([1, 2]))
def test_ladder_ratio(E, T, p):
    lad = build_ladder(E, T, p)
    assert lad.depth == max(1, math.ceil(math.log(E * T**p)))
    assert np.all(np.diff(lad.rates) < 0)
    assert np.allclose(lad.rates[:-1] / lad.rates[1:], math.e, rtol=1e-12)


def test_ladder_rejects():
    with pytest.raises(ConfigurationError):
        build_ladder(0.0, 10)
    with pytest.raises(ConfigurationError):
        build_ladder(1.0, 10, 3)


def test_default_E():
    assert default_E(3.0) == 4.0
    assert default_E(3.0, "slow") == 8.0


def test_predict_examples():
    sq = Squint(corners(3), E=1.0, horizon=10)
    assert np.allclose(sq.predict(), 0.0)
    grid = ExpertGrid(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([0.25, 0.75]))
    assert np.allclose(Squint(grid, E=1.0).predict(), [0.25, 0.75])


def test_dirac_weight():
    grid = ExpertGrid.from_points([[0.3, 0.1], [0.0, -0.5]])
    sq = Squint(grid, E=1.0)
    sq.A[0, :] = 800.0
    sq._refresh()
    assert np.allclose(sq.predict(), [0.3, 0.1])


def test_single_expert():
    sq = Squint(ExpertGrid.from_points([[0.2, 0.2]]), E=2.0, horizon=100)
    rng = np.random.default_rng(0)
    play(sq, rng, 20)
    assert sq.current_weights().tolist() == [1.0]


def test_two_expert_hand_value():
    grid = ExpertGrid(np.array([[0.0], [1.0]]), np.array([0.5, 0.5]))
    ladder = RateLadder(np.array([0.1]), 10.0)
    sq = Squint(grid, E=10.0, ladder=ladder)
    # prediction is 0.5; gradient 2 gives r = 2 * (0.5 - theta_k) = (1, -1)
    r = sq.update(np.array([2.0]))
    assert np.allclose(r, [1.0, -1.0])
    w = sq.current_weights()
    assert w[0] == pytest.approx(1 / (1 + math.exp(-0.2)), abs=1e-12)
    assert w[0] == pytest.approx(0.549834, abs=1e-6)


def test_zero_gradient_keeps_prior():
    grid = ExpertGrid.from_points(np.eye(4), prior=[1, 2, 3, 4])
    sq = Squint(grid, E=2.0, horizon=1000)
    for _ in range(500):
        sq.update(np.zeros(4))
    assert np.allclose(sq.current_weights(), grid.prior, atol=1e-14, rtol=0)


def test_incremental_matches_batch():
    rng = np.random.default_rng(1)
    grid = random_grid(rng, 5, 10)
    sq = Squint(grid, E=3.0, horizon=2000)
    grads, thetas = play(sq, rng, 2000)
    w, A = batch_weights(grid.points, grid.prior, sq.ladder.rates, grads, thetas)
    assert np.abs(sq.A - A).max() <= 1e-10
    assert np.abs(sq.current_weights() - w).max() <= 1e-10


def test_simplex_and_containment_every_round():
    rng = np.random.default_rng(2)
    grid = random_grid(rng, 5, 4)
    radius = np.abs(grid.points).sum(axis=1).max()
    sq = Squint(grid, E=1.0, horizon=1000)
    for _ in range(1000):
        theta = sq.predict()
        assert np.abs(theta).sum() <= radius + 1e-12
        w = sq.current_weights()
        assert is_simplex(w)
        sq.update(rng.normal(size=4))


def test_nonfinite_gradient_leaves_state():
    sq = Squint(corners(2), E=1.0, horizon=10)
    sq.update(np.array([0.3, -0.1]))
    A, t, w = sq.A.copy(), sq.t, sq.current_weights()
    with pytest.raises(StreamError):
        sq.update(np.array([np.nan, 0.0]))
    assert np.array_equal(sq.A, A) and sq.t == t
    assert np.array_equal(sq.current_weights(), w)
    with pytest.raises(ConfigurationError):
        sq.update(np.zeros(3))


def test_gradient_bound_assertion():
    sq = Squint(corners(2), E=1.0, horizon=10, gradient_bound=1.0)
    sq.update(np.array([1.0, -1.0]))
    sq = Squint(corners(2), E=1.0, horizon=10, gradient_bound=0.1)
    with pytest.raises(AssertionError):
        sq.update(np.array([1.0, -1.0]))


def test_underflow_falls_back_to_prior(caplog):
    grid = ExpertGrid.from_points([[0.0], [1.0]])
    sq = Squint(grid, E=1.0)
    sq.A[:] = -np.inf
    sq._refresh()
    assert np.allclose(sq.current_weights(), grid.prior)
    assert "underflowed" in caplog.text


def test_snapshot_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    sq = Squint(random_grid(rng, 6, 3), E=2.0, horizon=500)
    play(sq, rng, 50)
    path = tmp_path / "state.json"
    sq.save(path)
    back = Squint.load(path)
    assert back.t == sq.t
    assert np.array_equal(back.A, sq.A)
    assert np.array_equal(back.predict(), sq.predict())
    g = rng.normal(size=3)
    sq.update(g)
    back.update(g)
    assert np.array_equal(back.predict(), sq.predict())


def test_snapshot_rejects_bad_header():
    d = Squint(corners(1), E=1.0).to_dict()
    with pytest.raises(ConfigurationError):
        Squint.from_dict({**d, "magic": "nope"})
    with pytest.raises(ConfigurationError):
        Squint.from_dict({**d, "version": 99})


def _replay(mod, pts, grads, eta):
    K, d = pts.shape
    A = np.zeros((K, eta.size))
    r, w, theta, out = np.zeros(K), np.zeros(K), np.zeros(d), np.zeros(d)
    lp = np.full(K, -math.log(K))
    for g in grads:
        mod.squint_step(pts, g, theta, eta, lp, np.log(eta), A, r, w, out)
        theta = out.copy()
    return A, w, theta


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.integers(1, 6), st.integers(1, 8), st.integers(0, 2**31))
def test_active_kernel_matches_numpy(K, d, depth, seed):
    from saboa._backend import kernels
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, (K, d))
    eta = np.exp(-np.arange(1, depth + 1)) / rng.uniform(0.5, 5)
    grads = list(rng.normal(size=(20, d)))
    A0, w0, t0 = _replay(_kernels_py, pts, grads, eta)
    A1, w1, t1 = _replay(kernels, pts, grads, eta)
    assert np.allclose(A1, A0, rtol=1e-12, atol=1e-12)
    assert np.allclose(w1, w0, rtol=1e-10, atol=1e-14)
    assert np.allclose(t1, t0, rtol=1e-10, atol=1e-13)

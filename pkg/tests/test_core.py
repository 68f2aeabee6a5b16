import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from saboa.core import (ConfigurationError, DomainError, ExperimentConfig, ExpertGrid,
                        as_vector, corners, default_checkpoints, dot, is_simplex, l0, l1,
                        simplex, support, validate_checkpoints)


def test_dot_examples():
    assert dot([1, 0], [0, 1]) == 0.0
    assert dot([1, 2], [3, 4]) == 11.0


def test_dot_mismatch():
    with pytest.raises(ConfigurationError):
        dot([1, 2], [1, 2, 3])


@given(arrays(np.float64, 7, elements=st.floats(-10, 10)))
def test_dot_self_is_squared_norm(v):
    assert dot(v, v) == pytest.approx(np.linalg.norm(v) ** 2, rel=1e-12, abs=1e-12)


def test_vector_rejects_nonfinite():
    with pytest.raises(DomainError):
        as_vector([1.0, np.nan])
    with pytest.raises(DomainError):
        as_vector([1.0, np.inf])
    with pytest.raises(ConfigurationError):
        as_vector([1.0, 2.0], d=3)


def test_norm_helpers():
    x = [0.5, 0.0, -0.25]
    assert l0(x) == 2
    assert l1(x) == 0.75
    assert list(support(x)) == [0, 2]


def test_corners_examples():
    g = corners(2, 1.0)
    assert g.points.tolist() == [[1, 0], [-1, 0], [0, 1], [0, -1]]
    assert np.allclose(g.prior, 0.25)
    assert corners(1, 2.0).points.tolist() == [[2.0], [-2.0]]


@given(st.integers(1, 40), st.floats(0.1, 5.0))
def test_corners_shape(d, radius):
    g = corners(d, radius)
    assert g.size == 2 * d
    assert np.all((g.points != 0).sum(axis=1) == 1)
    assert np.allclose(np.abs(g.points).sum(axis=1), radius)
    assert np.allclose(g.prior, 1 / (2 * d))


def test_grid_dedupes_and_merges_prior():
    g = ExpertGrid.from_points([[0.0, 1.0], [1.0, 0.0], [0.0, 1.0], [-0.0, 1.0]],
                               prior=[1, 2, 3, 4])
    assert g.points.tolist() == [[0.0, 1.0], [1.0, 0.0]]
    assert np.allclose(g.prior, [0.8, 0.2])


def test_grid_rejects_bad_input():
    with pytest.raises(ConfigurationError):
        ExpertGrid.from_points(np.zeros((0, 2)))
    with pytest.raises(ConfigurationError):
        ExpertGrid.from_points([[1.0], [2.0]], prior=[1.0, 0.0])
    with pytest.raises(ConfigurationError):
        ExpertGrid(np.eye(2), np.array([0.6, 0.6]))


def test_grid_is_immutable():
    g = corners(2)
    with pytest.raises(ValueError):
        g.points[0, 0] = 5.0


@settings(max_examples=50)
@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(1e-6, 1e6)))
def test_grid_renormalizes_positive_prior(p):
    g = ExpertGrid.from_points(np.arange(p.size, dtype=float)[:, None], prior=p)
    assert abs(g.prior.sum() - 1.0) <= 1e-12
    assert np.all(g.prior > 0)


@given(arrays(np.float64, st.integers(1, 20), elements=st.floats(-1, 10)))
def test_simplex_clamps(w):
    if np.all(w <= 0):
        with pytest.raises(DomainError):
            simplex(w)
        return
    s = simplex(w)
    assert np.all(s >= 0)
    assert is_simplex(s)


def test_checkpoints():
    assert default_checkpoints(10) == (1, 2, 4, 8, 10)
    assert default_checkpoints(8) == (1, 2, 4, 8)
    assert validate_checkpoints([7, 8, 1, 10], 10) == (1, 7, 8, 10)
    with pytest.raises(ConfigurationError):
        validate_checkpoints([6], 10)
    with pytest.raises(ConfigurationError):
        validate_checkpoints([16], 10)


def test_experiment_config():
    cfg = ExperimentConfig("saboa", {"kind": "quadratic"}, horizon=5)
    assert cfg.checkpoints == (1, 2, 4, 5)
    with pytest.raises(ConfigurationError):
        ExperimentConfig("saboa", {}, horizon=0)

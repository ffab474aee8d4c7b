import numpy as np
import pytest

import trendfit as tf
from trendfit.errors import EstimationError, GridMismatchError, InvalidGridError


def test_default_grid_p100():
    g = tf.default_grid(100)
    assert g.size == 99
    np.testing.assert_allclose(g.probs, np.arange(1, 100) / 100)
    np.testing.assert_allclose(g.quad_weights, np.full(99, 0.01))


@pytest.mark.parametrize("P", [3, 4, 7, 100])
def test_default_grid_uniform_weights(P):
    g = tf.default_grid(P)
    np.testing.assert_allclose(g.probs, np.arange(1, P) / P)
    np.testing.assert_allclose(g.quad_weights, np.full(P - 1, 1.0 / P))


def test_default_grid_small_examples():
    g4 = tf.default_grid(4)
    np.testing.assert_allclose(g4.probs, [0.25, 0.5, 0.75])
    np.testing.assert_allclose(g4.quad_weights, [0.25, 0.25, 0.25])
    g3 = tf.default_grid(3)
    np.testing.assert_allclose(g3.probs, [1 / 3, 2 / 3])
    np.testing.assert_allclose(g3.quad_weights, [1 / 3, 1 / 3])


def test_default_grid_rejects_small_order():
    with pytest.raises(InvalidGridError):
        tf.default_grid(2)


def test_from_probs_midpoint_weights():
    probs = np.array([0.1, 0.2, 0.5, 0.9])
    g = tf.QuantileGrid.from_probs(probs)
    # phantom endpoints p0 = 2*0.1 - 0.2 = 0, pP = 2*0.9 - 0.5 = 1.3
    np.testing.assert_allclose(g.quad_weights, [(0.2 - 0.0) / 2, (0.5 - 0.1) / 2,
                                                (0.9 - 0.2) / 2, (1.3 - 0.5) / 2])
    assert np.all(g.quad_weights > 0)


def test_grid_validation():
    with pytest.raises(InvalidGridError):
        tf.QuantileGrid.from_probs([0.5, 0.4])
    with pytest.raises(InvalidGridError):
        tf.QuantileGrid.from_probs([0.0, 0.5])
    with pytest.raises(InvalidGridError):
        tf.QuantileGrid.from_probs([0.5, 1.0])
    with pytest.raises(InvalidGridError):
        tf.QuantileGrid(np.array([0.2, 0.4]), np.array([0.1, -0.1]))


def test_type7_interpolation():
    g = tf.QuantileGrid.from_probs([0.25, 0.5, 0.75])
    qf = tf.estimate_quantiles([1, 2, 3, 4], g, "type7")
    np.testing.assert_allclose(qf.values, [1.75, 2.5, 3.25])


def test_ecdf_inf_order_statistic():
    g = tf.QuantileGrid.from_probs([0.25, 0.5, 0.75])
    qf = tf.estimate_quantiles([1, 2, 3, 4], g, "ecdf_inf")
    np.testing.assert_allclose(qf.values, [1.0, 2.0, 3.0])


def test_single_sample_degenerate():
    g = tf.default_grid(10)
    for method in ("type7", "ecdf_inf"):
        qf = tf.estimate_quantiles([7.0], g, method)
        np.testing.assert_allclose(qf.values, 7.0)


def test_estimate_errors():
    g = tf.default_grid(5)
    with pytest.raises(EstimationError):
        tf.estimate_quantiles([], g)
    with pytest.raises(EstimationError):
        tf.estimate_quantiles([1.0, np.nan], g)
    with pytest.raises(EstimationError):
        tf.estimate_quantiles([1.0, 2.0], g, method="type9")


def test_validate_qf():
    assert tf.validate_qf([1, 1, 2])
    assert not tf.validate_qf([1, 0])
    with pytest.raises(ValueError):
        tf.validate_qf([])


def test_estimates_monotone_property():
    rng = np.random.default_rng(42)
    g = tf.default_grid(25)
    for _ in range(50):
        samples = rng.normal(0, rng.uniform(0.1, 5), rng.integers(1, 200))
        for method in ("type7", "ecdf_inf"):
            qf = tf.estimate_quantiles(samples, g, method)
            assert np.all(np.diff(qf.values) >= 0)


def test_shift_scale_equivariance():
    rng = np.random.default_rng(7)
    g = tf.default_grid(20)
    for _ in range(25):
        samples = rng.normal(0, 1, 80)
        a = rng.uniform(0.1, 3)
        b = rng.normal()
        for method in ("type7", "ecdf_inf"):
            base = tf.estimate_quantiles(samples, g, method).values
            moved = tf.estimate_quantiles(a * samples + b, g, method).values
            np.testing.assert_allclose(moved, a * base + b, atol=1e-12)


def test_ecdf_inf_values_are_sample_members():
    rng = np.random.default_rng(3)
    P = 10
    g = tf.default_grid(P)
    for _ in range(25):
        samples = rng.normal(0, 1, rng.integers(P, 100))
        qf = tf.estimate_quantiles(samples, g, "ecdf_inf")
        assert np.all(np.isin(qf.values, samples))


def test_quantile_function_validation():
    g = tf.default_grid(4)
    with pytest.raises(ValueError):
        tf.QuantileFunction(g, [1.0, 0.5, 2.0])
    with pytest.raises(ValueError):
        tf.QuantileFunction(g, [0.0, np.nan, 1.0])
    with pytest.raises(GridMismatchError):
        tf.QuantileFunction(g, [1.0, 2.0])
    qf = tf.QuantileFunction(g, [0.0, 0.0, 1.0])  # flat runs are fine
    assert not qf.values.flags.writeable


def test_batch_observation_validation():
    g = tf.default_grid(4)
    with pytest.raises(ValueError):
        tf.BatchObservation.from_samples(0, [1.0], g)
    with pytest.raises(ValueError):
        tf.BatchObservation.from_samples(1, [1.0], g, weight=0.0)
    with pytest.raises(EstimationError):
        tf.BatchObservation.from_samples(1, [], g)
    b = tf.BatchObservation.from_samples(2, [3.0, 1.0, 2.0], g, weight=1.5)
    assert b.level == 2 and b.weight == 1.5
    assert np.all(np.diff(b.empirical_qf.values) >= 0)

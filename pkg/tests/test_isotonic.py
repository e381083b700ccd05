import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crcs.isotonic import CumSumDiagram, InfeasibleBoundsError, gcm_left_slopes, pava, weighted_isotonic
from oracles import bounded_isotonic_slsqp, isotonic_by_blocks


def test_collinear_diagram():
    d = CumSumDiagram(np.array([0.0, 1.0, 2.0]), np.array([0.0, 1.0, 2.0]))
    assert np.allclose(gcm_left_slopes(d), [1.0, 1.0])


def test_gcm_example_from_block_oracle():
    d = CumSumDiagram.from_weights(np.ones(4), np.array([1.0, 0.0, 0.0, 1.0]))
    assert np.allclose(gcm_left_slopes(d), [1 / 3, 1 / 3, 1 / 3, 1.0], atol=1e-15)


def test_single_point_diagram():
    d = CumSumDiagram(np.array([0.0, 1.0]), np.array([0.0, 0.7]))
    assert np.allclose(gcm_left_slopes(d), [0.7])


def test_diagram_validation():
    with pytest.raises(ValueError):
        CumSumDiagram(np.array([1.0, 2.0]), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        CumSumDiagram(np.array([0.0, 0.0]), np.array([0.0, 1.0]))


def test_isotonic_examples():
    y = np.array([0.1, 0.4, 0.4, 0.9])
    assert np.array_equal(weighted_isotonic(y, np.ones(4)), y)
    assert np.allclose(weighted_isotonic([1.0, 0.0], [1.0, 1.0]), [0.5, 0.5])
    x = weighted_isotonic([0.9, 0.9], [1.0, 1.0], upper=[0.5, 1.0])
    assert np.allclose(x, [0.5, 0.9], atol=1e-12)


def test_degenerate_lengths():
    assert weighted_isotonic([], []).size == 0
    assert np.allclose(weighted_isotonic([2.0], [1.0], lower=[0.0], upper=[1.0]), [1.0])
    assert np.allclose(weighted_isotonic([-2.0], [1.0], lower=[0.0], upper=[1.0]), [0.0])


def test_infeasible_bounds_witness():
    with pytest.raises(InfeasibleBoundsError) as info:
        weighted_isotonic([0.0, 0.0, 0.0], [1, 1, 1], lower=[0.0, 0.8, 0.0], upper=[1.0, 1.0, 0.5])
    assert info.value.indices == (1, 2)


def test_bad_weights():
    with pytest.raises(ValueError):
        weighted_isotonic([1.0, 2.0], [1.0, 0.0])


small = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=8)


@settings(max_examples=200)
@given(small, st.data())
def test_pava_matches_block_enumeration(y, data):
    w = data.draw(st.lists(st.floats(0.1, 10), min_size=len(y), max_size=len(y)))
    assert np.allclose(pava(y, w), isotonic_by_blocks(y, w), atol=1e-9)


@settings(max_examples=200)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=50), st.data())
def test_unbounded_equals_gcm_slopes(y, data):
    w = np.array(data.draw(st.lists(st.floats(0.1, 10), min_size=len(y), max_size=len(y))))
    y = np.array(y)
    slopes = gcm_left_slopes(CumSumDiagram.from_weights(w, y))
    assert np.allclose(weighted_isotonic(y, w), slopes, atol=1e-9)


def _random_bounded(rng, n):
    y = rng.normal(size=n)
    w = rng.uniform(0.2, 3.0, n)
    lower = np.minimum.accumulate(rng.uniform(-1, 0.5, n)[::-1])[::-1] - 0.3
    upper = np.maximum.accumulate(rng.uniform(-0.5, 1, n)) + 0.3
    upper = np.maximum(upper, np.maximum.accumulate(lower) + 0.01)
    return y, w, lower, upper


@pytest.mark.parametrize("seed", range(30))
def test_bounded_matches_generic_optimizer(seed):
    rng = np.random.default_rng(seed)
    y, w, lower, upper = _random_bounded(rng, int(rng.integers(2, 12)))
    x = weighted_isotonic(y, w, lower, upper)
    ref = bounded_isotonic_slsqp(y, w, lower, upper)
    obj = lambda v: np.sum(w * (v - y) ** 2)
    assert obj(x) <= obj(ref) + 1e-10
    assert np.allclose(x, ref, atol=1e-5)


@pytest.mark.parametrize("seed", range(20))
def test_projection_property_and_structure(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(2, 30))
    y, w, lower, upper = _random_bounded(rng, n)
    x = weighted_isotonic(y, w, lower, upper)
    assert np.all(np.diff(x) >= 0)
    assert np.all(x >= lower - 1e-12) and np.all(x <= upper + 1e-12)
    obj = np.sum(w * (x - y) ** 2)
    for _ in range(50):
        z = np.clip(np.sort(rng.uniform(lower.min(), upper.max(), n)), lower, upper)
        z = np.maximum.accumulate(z)
        if np.all(z <= upper):
            assert obj <= np.sum(w * (z - y) ** 2) + 1e-12
    # free runs equal weighted means of y
    edges = np.nonzero(np.diff(x) > 1e-12)[0] + 1
    for run in np.split(np.arange(n), edges):
        if np.any(np.isclose(x[run], lower[run], atol=1e-12)) or np.any(np.isclose(x[run], upper[run], atol=1e-12)):
            continue
        assert x[run[0]] == pytest.approx(np.sum(w[run] * y[run]) / np.sum(w[run]), abs=1e-10)
    # idempotence
    assert np.allclose(weighted_isotonic(x, w, lower, upper), x, atol=1e-12)

import math

import numpy as np
import pytest

from crcs import metrics
from crcs.metrics import hellinger, lr_distance, total_variation
from crcs.model import StepFn, SubDistSystem
from crcs.simulation import minimax_perturbation
from crcs.truth import Exponential, TruthModel, Uniform, Weibull
from helpers import random_system, random_triple


class Unbounded:
    support = (0.0, math.inf)

    def pdf(self, t):
        return np.exp(-np.asarray(t))


def const(v):
    return SubDistSystem((StepFn(baseline=v),))


def test_identity_is_zero():
    rng = np.random.default_rng(0)
    F = random_system(rng, np.sort(rng.uniform(0, 2, 10)), 2)
    G = Uniform(0, 2)
    assert hellinger(F, F, G).value == 0.0
    assert total_variation(F, F, G).value == 0.0
    assert lr_distance(F, F, G, 2).value == 0.0


def test_hand_values():
    G = Uniform(0.0, 1.0)
    h = hellinger(const(0.25), const(0.0), G)
    assert h.value == pytest.approx(math.sqrt(0.5 * (0.25 + (1 - math.sqrt(0.75)) ** 2)), abs=1e-14)
    assert h.value == pytest.approx(0.366026, abs=1e-6)
    assert total_variation(const(0.25), const(0.0), G).value == pytest.approx(0.25, abs=1e-15)


def test_unbounded_support_rejected():
    with pytest.raises(ValueError, match="bounded"):
        hellinger(const(0.1), const(0.2), Unbounded())


def test_bad_r():
    with pytest.raises(ValueError):
        lr_distance(const(0.1), const(0.2), Uniform(0, 1), 0)


def test_k_mismatch():
    two = SubDistSystem((StepFn(), StepFn()))
    with pytest.raises(ValueError):
        hellinger(const(0.1), two, Uniform(0, 1))


@pytest.mark.parametrize("seed", range(40))
def test_identities_and_symmetry(seed):
    rng = np.random.default_rng(seed)
    F, F0, G = random_triple(rng)
    h = hellinger(F, F0, G)
    tv = total_variation(F, F0, G)
    l1 = lr_distance(F, F0, G, 1)
    l2 = lr_distance(F, F0, G, 2)
    slack = 1e-9 + h.quadrature_error_bound + tv.quadrature_error_bound + l1.quadrature_error_bound
    assert abs(l1.value - 2 * tv.value) <= 1e-9 + l1.quadrature_error_bound + 2 * tv.quadrature_error_bound
    assert tv.value <= math.sqrt(2) * h.value + slack
    assert l2.value**2 <= 8 * h.value**2 + 1e-9 + 2 * l2.quadrature_error_bound + 16 * h.quadrature_error_bound
    assert hellinger(F0, F, G).value == pytest.approx(h.value, abs=1e-12)
    assert 0 <= h.value <= 1


@pytest.mark.parametrize("seed", range(20))
def test_knot_doubling_on_steps(seed):
    rng = np.random.default_rng(500 + seed)
    G = Uniform(0, 2)
    F = random_system(rng, np.sort(rng.uniform(0, 2, 20)), 2)
    F0 = random_system(rng, np.sort(rng.uniform(0, 2, 20)), 2)
    for fn in (hellinger, total_variation, lambda a, b, g: lr_distance(a, b, g, 2)):
        assert fn(F, F0, G).quadrature_error_bound < 1e-10


def test_knot_doubling_against_smooth_truth():
    rng = np.random.default_rng(7)
    tm = TruthModel((0.5, 0.5), (Exponential(1.0), Weibull(2.0, 1.0)), Uniform(0, 2))
    F = random_system(rng, np.sort(rng.uniform(0, 2, 200)), 2)
    for fn in (hellinger, total_variation, lambda a, b, g: lr_distance(a, b, g, 1)):
        assert fn(F, tm, tm.G).quadrature_error_bound < 1e-10


def test_naive_style_excess_is_reported():
    F = SubDistSystem((StepFn([0.5], [0.7]), StepFn([0.5], [0.6])), sum_tolerance=None)
    F0 = SubDistSystem((StepFn(), StepFn()))
    h = hellinger(F, F0, Uniform(0, 1))
    assert h.max_sum_excess == pytest.approx(0.3)
    assert math.isfinite(h.value)


def test_perturbed_truth_distance_is_small():
    tm = TruthModel((0.5, 0.5), (Exponential(1.0), Exponential(1.0)), Uniform(0, 2))
    p = minimax_perturbation(tm, 1, 1.0, 1000, 1.0)
    assert 0 < hellinger(p, tm, tm.G).value < 0.05


def test_default_knots():
    assert metrics.KNOTS == 64 and metrics.NODES == 16

import math

import numpy as np
import pytest
from hypothesis import given, strategies

from subsketch import losses, numkit, synth
from subsketch.losses import LossKind

N = 12
SMOOTH = [LossKind.Quadratic, LossKind.Logistic, LossKind.ReluType]
NONSMOOTH = [LossKind.L1, LossKind.Linf, LossKind.Hinge]


def _labels(seed=0):
    return synth.synth_labels(N, numkit.SeededRng(seed))


def _point(seed):
    return numkit.SeededRng(seed).generator().normal(0., 2., N)


@pytest.mark.parametrize('kind', SMOOTH)
@given(seed=strategies.integers(0, 2**32))
def test_gradient_matches_central_differences(kind, seed):
    loss = losses.make(kind, _labels())
    w = _point(seed)
    h = 1e-6
    fd = np.array([(loss.value(w+h*e)-loss.value(w-h*e))/(2*h) for e in np.eye(N)])
    g = loss.gradient(w)
    assert np.linalg.norm(fd-g) <= 1e-5*np.linalg.norm(g)


@pytest.mark.parametrize('kind', SMOOTH)
@given(seed=strategies.integers(0, 2**32))
def test_fenchel_young_at_gradient(kind, seed):
    loss = losses.make(kind, _labels())
    w = _point(seed)
    g = loss.gradient(w)
    lhs = loss.value(w) + loss.conjugate_value(g)
    assert lhs == pytest.approx(float(w @ g), rel=1e-8, abs=1e-8)


@pytest.mark.parametrize('kind', NONSMOOTH)
@given(seed=strategies.integers(0, 2**32))
def test_fenchel_young_at_subgradient(kind, seed):
    loss = losses.make(kind, _labels())
    w = _point(seed)
    g = loss.arbitrary_subgradient(w)
    lhs = loss.value(w) + loss.conjugate_value(g)
    assert math.isfinite(lhs)
    assert lhs == pytest.approx(float(w @ g), rel=1e-8, abs=1e-8)


@pytest.mark.parametrize('kind', SMOOTH)
def test_smoothness_constant(kind):
    loss = losses.make(kind, _labels())
    gen = numkit.SeededRng(1).generator()
    for _ in range(200):
        w, v = gen.normal(0., 2., N), gen.normal(0., 2., N)
        assert np.linalg.norm(loss.gradient(w)-loss.gradient(v)) <= loss.smoothness*np.linalg.norm(w-v)*(1+1e-9)


@pytest.mark.parametrize('kind', NONSMOOTH)
def test_lipschitz_constant(kind):
    loss = losses.make(kind, _labels())
    gen = numkit.SeededRng(2).generator()
    for _ in range(200):
        w, v = gen.normal(0., 2., N), gen.normal(0., 2., N)
        assert abs(loss.value(w)-loss.value(v)) <= loss.lipschitz*np.linalg.norm(w-v)*(1+1e-9)


def test_conjugate_outside_domain():
    y = _labels()
    assert losses.make(LossKind.L1, y).conjugate_value(2*np.ones(N))==math.inf
    assert losses.make(LossKind.Linf, y).conjugate_value(np.ones(N))==math.inf
    assert losses.make(LossKind.Hinge, y).conjugate_value(y)==math.inf
    assert losses.make(LossKind.Logistic, y).conjugate_value(y)==math.inf


def test_labels_checked():
    with pytest.raises(ValueError):
        losses.make(LossKind.Logistic, np.array([1., 0.5]))
    with pytest.raises(ValueError):
        losses.make(LossKind.Hinge, np.array([2., -1.]))
    with pytest.raises(ValueError):
        losses.make(LossKind.Quadratic, np.zeros((2, 2)))
    assert losses.make('l1', np.array([0.5, 3.])).kind==LossKind.L1


def test_quadratic_constants():
    loss = losses.make(LossKind.Quadratic, np.zeros(3))
    assert loss.smoothness==1. and loss.strong_convexity==1.
    np.testing.assert_array_equal(loss.hessian_diag(np.ones(3)), np.ones(3))


def test_l1_partition():
    loss = losses.L1(np.array([0., 1., 2.]))
    part = loss.subgradient_partition(np.array([1., 1., 0.]), 1e-9)
    assert part.fixed=={0: 1., 2: -1.}
    assert part.free=={1: (-1., 1.)}
    box = loss.restricted_feasible_set(part)
    np.testing.assert_array_equal(box.lows, [1., -1., -1.])
    np.testing.assert_array_equal(box.highs, [1., 1., -1.])


def test_hinge_partition():
    loss = losses.Hinge(np.array([1., -1., 1.]))
    part = loss.subgradient_partition(np.array([0., 3., 1.]), 1e-9)
    # slack 1 > 0, slack 4 > 0, slack 0 at the kink
    assert part.fixed=={0: -1., 1: 1.}
    assert part.free=={2: (-1., 0.)}


def test_linf_partition():
    loss = losses.Linf(np.zeros(4))
    part = loss.subgradient_partition(np.array([3., -3., 1., 0.]), 1e-9)
    assert part.active_signs=={0: 1., 1: -1.}
    feasible = loss.restricted_feasible_set(part)
    assert isinstance(feasible, losses.SignedSimplex)
    assert loss.subgradient_partition(np.zeros(4)).whole_l1_ball
    assert isinstance(loss.restricted_feasible_set(loss.subgradient_partition(np.zeros(4))), losses.L1Ball)


def test_dual_feasible_sets():
    y = _labels()
    assert isinstance(losses.make(LossKind.L1, y).dual_feasible_set(), losses.Box)
    assert isinstance(losses.make(LossKind.Linf, y).dual_feasible_set(), losses.L1Ball)
    lows, highs = losses.make(LossKind.Hinge, y).domain_bounds()
    np.testing.assert_array_equal(lows, np.minimum(0., -y))
    np.testing.assert_array_equal(highs, np.maximum(0., -y))


def test_feasible_set_validation():
    with pytest.raises(ValueError):
        losses.Box(np.ones(2), np.zeros(2))
    with pytest.raises(ValueError):
        losses.SignedSimplex(3, [0], [0.5])
    with pytest.raises(ValueError):
        losses.L1Ball(3, radius=0.)

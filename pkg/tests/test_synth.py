import math

import numpy as np
import pytest
import scipy.linalg

from subsketch import numkit, synth
from subsketch.synth import Decay, SpectrumSpec


def test_polynomial_and_exponential_spectra():
    poly = SpectrumSpec(Decay.Polynomial, nu=1.).singular_values(16, 20)
    np.testing.assert_allclose(poly, 4.*np.arange(1., 17.)**-1.)
    expo = SpectrumSpec('exp', nu=0.5).singular_values(9, 4)
    np.testing.assert_allclose(expo, 3.*np.exp(-0.25*np.arange(1., 5.)))


def test_geometric_and_explicit_spectra():
    np.testing.assert_allclose(SpectrumSpec(Decay.Geometric, ratio=0.5).singular_values(3, 5), [0.5, 0.25, 0.125])
    explicit = SpectrumSpec(Decay.Explicit, values=(3, 2, 1), scale=2.)
    np.testing.assert_array_equal(explicit.singular_values(5, 5), [6., 4., 2.])
    with pytest.raises(ValueError):
        explicit.singular_values(2, 5)


@pytest.mark.parametrize('kwargs', [
    dict(kind=Decay.Polynomial, nu=0.),
    dict(kind=Decay.Geometric, ratio=1.),
    dict(kind=Decay.Explicit),
    dict(kind=Decay.Explicit, values=(1., 2.)),
    dict(kind=Decay.Exponential, scale=-1.),
])
def test_spectrum_validation(kwargs):
    with pytest.raises(ValueError):
        SpectrumSpec(**kwargs)


def test_spectrum_underflow_reported():
    with pytest.raises(ValueError, match='underflows'):
        SpectrumSpec(Decay.Geometric, ratio=1e-3).singular_values(200, 200)


def test_synth_matrix_has_prescribed_spectrum():
    spec = SpectrumSpec(Decay.Polynomial, nu=0.5)
    A, summary = synth.synth_matrix(20, 35, spec, numkit.SeededRng(3))
    assert A.shape==(20, 35)
    assert (summary.n, summary.d)==(20, 35)
    np.testing.assert_allclose(scipy.linalg.svdvals(A), summary.singular_values, rtol=1e-10)
    B, _ = synth.synth_matrix(20, 35, spec, numkit.SeededRng(3))
    np.testing.assert_array_equal(A, B)
    with pytest.raises(ValueError):
        synth.synth_matrix(0, 3, spec, numkit.SeededRng())


def test_labels():
    y = synth.synth_labels(500, numkit.SeededRng(1))
    assert set(np.unique(y))=={-1., 1.}
    assert abs(y.mean()) < 0.2
    with pytest.raises(ValueError):
        synth.synth_labels(0, numkit.SeededRng())


def test_observation():
    A = numkit.SeededRng(2).generator().standard_normal((400, 5))
    x_pl = np.array([0.6, 0.8, 0., 0., 0.])
    np.testing.assert_allclose(synth.synth_observation(A, x_pl, 0., numkit.SeededRng()), A @ x_pl)
    noise = synth.synth_observation(A, x_pl, 4., numkit.SeededRng(5)) - A @ x_pl
    assert np.var(noise) == pytest.approx(4./400, rel=0.2)
    with pytest.raises(ValueError, match='unit ball'):
        synth.synth_observation(A, 2*x_pl, 1., numkit.SeededRng())
    with pytest.raises(ValueError):
        synth.synth_observation(A, x_pl, -1., numkit.SeededRng())
    with pytest.raises(ValueError):
        synth.synth_observation(A, x_pl[:3], 1., numkit.SeededRng())


def test_top_right_singular_vector():
    A, _ = synth.synth_matrix(10, 12, SpectrumSpec(Decay.Geometric, ratio=0.5), numkit.SeededRng(4))
    v = synth.top_right_singular_vector(A)
    assert np.linalg.norm(v) == pytest.approx(1.)
    assert np.linalg.norm(A @ v) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        synth.top_right_singular_vector(np.zeros((3, 3)))
    assert math.isclose(np.linalg.norm(A, 2), 0.5)

import numpy as np
import pytest

from subsketch import embeddings, estimators, kernelize, losses, numkit, solvers, synth
from subsketch.embeddings import EmbeddingKind, EmbeddingSpec

TIGHT = solvers.SolveOptions(grad_tolerance=1e-12)


def _instance(n=30, d=50, seed=0):
    A, _ = synth.synth_matrix(n, d, synth.SpectrumSpec(synth.Decay.Exponential, nu=0.2), numkit.SeededRng(seed))
    return A, synth.synth_labels(n, numkit.SeededRng(seed, 1))


def test_gram_validation():
    with pytest.raises(ValueError, match='square'):
        kernelize.GramMatrix(np.ones((2, 3)))
    with pytest.raises(ValueError, match='symmetric'):
        kernelize.GramMatrix(np.array([[1., 2.], [0., 1.]]))
    with pytest.raises(ValueError, match='PSD'):
        kernelize.GramMatrix(np.diag([1., -1.])).square_root()
    with pytest.raises(ValueError):
        kernelize.gram_gaussian_kernel(np.eye(3), 0.)


def test_gaussian_kernel_and_square_root():
    X = numkit.SeededRng(1).generator().standard_normal((25, 4))
    K = kernelize.gram_gaussian_kernel(X, 0.5)
    np.testing.assert_allclose(np.diag(K.k), 1.)
    np.testing.assert_array_equal(K.k, K.k.T)
    K_h = kernelize.kernel_square_root(K)
    np.testing.assert_allclose(K_h @ K_h.T, K.k, atol=1e-10)


@pytest.mark.parametrize('kind', [losses.LossKind.Quadratic, losses.LossKind.Logistic])
def test_kernel_and_feature_pipelines_agree(kind):
    A, y = _instance()
    loss = losses.make(kind, y)
    lam = 1e-2
    spec = EmbeddingSpec(EmbeddingKind.AdaptiveGaussian, 6, rng=numkit.SeededRng(4))
    K = kernelize.gram_from_features(A)
    s_tilde = embeddings.draw_s_tilde(A.shape[0], spec)
    alpha, res = kernelize.solve_sketched_kernel(K, s_tilde, loss, lam, TIGHT)
    assert res.converged
    report = estimators.recover_adaptive(A, loss, lam, spec, TIGHT)
    scale = np.linalg.norm(report.x1)
    np.testing.assert_allclose(A.T @ kernelize.kernel_zero_order(s_tilde, alpha), report.x0, atol=1e-7*scale)
    np.testing.assert_allclose(A.T @ kernelize.kernel_first_order(K, s_tilde, alpha, loss, lam), report.x1, atol=1e-7*scale)


def test_kernel_reference_matches_primal():
    A, y = _instance(seed=2)
    loss = losses.Logistic(y)
    w_star, res = kernelize.solve_kernel_reference(kernelize.gram_from_features(A), loss, 1e-2, TIGHT)
    assert res.converged
    x_star = estimators.reference_solution(A, loss, 1e-2, TIGHT).x
    np.testing.assert_allclose(A.T @ w_star, x_star, atol=1e-7*np.linalg.norm(x_star))


def test_rkhs_distance_is_feature_distance():
    A, _ = _instance(seed=3)
    gen = numkit.SeededRng(5).generator()
    w, v = gen.standard_normal(30), gen.standard_normal(30)
    K = kernelize.gram_from_features(A)
    assert kernelize.rkhs_distance(K, w, v) == pytest.approx(np.linalg.norm(A.T @ (w-v)), rel=1e-9)
    assert kernelize.rkhs_distance(K, w, w)==0.


def test_kernel_first_order_checks_lambda():
    K = kernelize.GramMatrix(np.eye(3))
    with pytest.raises(ValueError):
        kernelize.kernel_first_order(K, np.eye(3)[:, :1], [1.], losses.Quadratic(np.zeros(3)), 0.)
    with pytest.raises(ValueError):
        kernelize.solve_sketched_kernel(K, np.ones((4, 1)), losses.Quadratic(np.zeros(3)), 1.)


def test_random_fourier_features_approximate_kernel():
    X = numkit.SeededRng(6).generator().standard_normal((30, 3))
    psi = kernelize.rff_features(X, 20000, 0.5, numkit.SeededRng(7))
    assert psi.shape==(30, 20000)
    exact = kernelize.gram_gaussian_kernel(X, 0.5).k
    assert np.max(np.abs(psi @ psi.T - exact)) <= 0.05
    np.testing.assert_array_equal(psi, kernelize.rff_features(X, 20000, 0.5, numkit.SeededRng(7)))
    with pytest.raises(ValueError):
        kernelize.rff_features(X, 0, 0.5, numkit.SeededRng())

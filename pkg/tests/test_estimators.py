import numpy as np
import pytest

from subsketch import analysis, embeddings, estimators, losses, numkit, solvers, synth
from subsketch.embeddings import EmbeddingKind, EmbeddingSpec
from subsketch.losses import LossKind

TIGHT = solvers.SolveOptions(grad_tolerance=1e-12)


def _instance(n=30, d=50, seed=0, spectrum=None):
    spectrum = spectrum or synth.SpectrumSpec(synth.Decay.Exponential, nu=0.2)
    A, summary = synth.synth_matrix(n, d, spectrum, numkit.SeededRng(seed))
    return A, summary, synth.synth_labels(n, numkit.SeededRng(seed, 1))


def _spec(kind, m, seed=1):
    return EmbeddingSpec(kind, m, rng=numkit.SeededRng(seed))


@pytest.mark.parametrize('kind', [LossKind.Quadratic, LossKind.Logistic, LossKind.ReluType])
def test_full_rank_sketch_is_exact(kind):
    A, _, y = _instance()
    rep = estimators.recover_adaptive(A, losses.make(kind, y), 1e-2, _spec(EmbeddingKind.AdaptiveGaussian, 30), TIGHT)
    assert rep.rel_err_x0 <= 1e-6
    assert rep.rel_err_x1 <= 1e-6
    assert rep.residual_norm <= 1e-8*np.linalg.norm(A, 2)


def test_relative_error_falls_back_to_absolute():
    assert estimators.relative_error(np.array([3., 4.]), np.zeros(2))==pytest.approx(5.)
    assert estimators.relative_error(np.array([1., 1.]), np.array([1., 0.]))==pytest.approx(1.)


def test_zero_order_checks_length():
    with pytest.raises(ValueError):
        estimators.zero_order(np.eye(3), np.ones(2))
    np.testing.assert_array_equal(estimators.zero_order(np.eye(3)[:, :2], [1., 2.]), [1., 2., 0.])


def test_first_order_is_dual_map():
    A, _, y = _instance(seed=2)
    loss = losses.Quadratic(y)
    lam = 0.3
    v = numkit.SeededRng(3).generator().standard_normal(A.shape[1])
    grad_F = A.T @ loss.gradient(A @ v) + lam*v
    np.testing.assert_allclose(estimators.first_order(A, loss, lam, v), v - grad_F/lam, atol=1e-10)
    x_star = estimators.reference_solution(A, loss, lam, TIGHT).x
    np.testing.assert_allclose(estimators.first_order(A, loss, lam, x_star), x_star, atol=1e-8)


def test_reference_provenance():
    A, _, y = _instance()
    loss = losses.Logistic(y)
    a = estimators.reference_solution(A, loss, 1e-2)
    b = estimators.reference_solution(A, loss, 1e-2)
    c = estimators.reference_solution(A, loss, 2e-2)
    assert a.provenance_id==b.provenance_id!=c.provenance_id
    assert a.converged


def test_first_order_certificate_on_report():
    A, _, y = _instance(n=40, d=80, seed=4)
    loss = losses.Quadratic(y)
    lam = 2.02*np.linalg.norm(A, 2)**2
    rep = estimators.recover_adaptive(A, loss, lam, _spec(EmbeddingKind.AdaptiveGaussian, 8), TIGHT)
    assert rep.condition_ok
    assert rep.bound_rhs==pytest.approx(analysis.first_order_bound(1., lam, rep.residual_norm, rep.rel_err_x0))
    assert analysis.first_order_certificate(rep.rel_err_x1, rep.rel_err_x0, rep.residual_norm, 1., lam)


def test_embedding_family_checks():
    A, _, y = _instance()
    loss = losses.Quadratic(y)
    with pytest.raises(ValueError):
        estimators.recover_adaptive(A, loss, 1., _spec(EmbeddingKind.ObliviousGaussian, 4))
    with pytest.raises(ValueError):
        estimators.recover_oblivious(A, loss, 1., _spec(EmbeddingKind.AdaptiveSRHT, 4))
    with pytest.raises(ValueError):
        estimators.recover_iterative(A, loss, 1., _spec(EmbeddingKind.AdaptiveGaussian, 4), T=0)


def test_whitening_equivalence():
    A, _, y = _instance(n=40, d=60, seed=5)
    loss = losses.Logistic(y)
    reference = estimators.reference_solution(A, loss, 1e-2, TIGHT)
    spec = _spec(EmbeddingKind.AdaptiveGaussian, 8, seed=6)
    whitened = estimators.recover_adaptive(A, loss, 1e-2, spec, TIGHT, reference)
    direct = estimators.recover_sketched_direct(A, loss, 1e-2, spec, TIGHT, reference)
    scale = np.linalg.norm(reference.x)
    assert np.linalg.norm(whitened.x0-direct.x0) <= 1e-6*scale
    assert np.linalg.norm(whitened.x1-direct.x1) <= 1e-6*scale


def test_oblivious_baselines():
    A, _, y = _instance(n=40, d=60, seed=7)
    loss = losses.Logistic(y)
    reference = estimators.reference_solution(A, loss, 1e-3)
    for report in (estimators.recover_oblivious(A, loss, 1e-3, _spec(EmbeddingKind.ObliviousSRHT, 16), reference=reference),
                   estimators.recover_oblivious_dagger(A, loss, 1e-3, 16, numkit.SeededRng(2), reference=reference),
                   estimators.recover_nystrom(A, loss, 1e-3, 16, numkit.SeededRng(3), reference=reference)):
        assert report.reference_id==reference.provenance_id
        assert report.x0.shape==report.x1.shape==(60,)
        assert np.isfinite(report.rel_err_x1)
        assert report.residual_norm <= np.linalg.norm(A, 2)*(1+1e-9)


def test_adaptive_beats_oblivious_on_decaying_spectrum():
    A, _, y = _instance(n=100, d=200, seed=8, spectrum=synth.SpectrumSpec(synth.Decay.Exponential, nu=0.5))
    loss = losses.Logistic(y)
    reference = estimators.reference_solution(A, loss, 1e-4)
    adaptive = estimators.recover_adaptive(A, loss, 1e-4, _spec(EmbeddingKind.AdaptiveGaussian, 40), reference=reference)
    oblivious = estimators.recover_oblivious(A, loss, 1e-4, _spec(EmbeddingKind.ObliviousGaussian, 40), reference=reference)
    assert adaptive.rel_err_x1 < oblivious.rel_err_x1
    assert adaptive.residual_norm < oblivious.residual_norm


def test_iterative_contracts():
    A, _, y = _instance(n=40, d=80, seed=9)
    loss = losses.Quadratic(y)
    lam = 2.02*np.linalg.norm(A, 2)**2
    reports = estimators.recover_iterative(A, loss, lam, _spec(EmbeddingKind.AdaptiveGaussian, 8), 4, TIGHT)
    assert [r.t for r in reports]==list(range(1, len(reports)+1))
    rate = np.sqrt(lam**-1/2.)*reports[0].residual_norm
    for r in reports:
        assert r.cumulative_bound==pytest.approx(rate**r.t)
    errs = [r.rel_err_x1 for r in reports]
    assert analysis.contraction_certificate(errs, 1., lam, reports[0].residual_norm)
    assert errs[-1] <= errs[0]


def test_iterative_single_step_matches_adaptive():
    A, _, y = _instance(seed=10)
    loss = losses.Logistic(y)
    spec = _spec(EmbeddingKind.AdaptiveGaussian, 10)
    one = estimators.recover_iterative(A, loss, 1e-2, spec, 1, TIGHT)[0]
    plain = estimators.recover_adaptive(A, loss, 1e-2, spec, TIGHT)
    np.testing.assert_allclose(one.x1, plain.x1, atol=1e-8*np.linalg.norm(plain.x1))


@pytest.mark.parametrize('kind', [LossKind.L1, LossKind.Linf, LossKind.Hinge])
def test_nonsmooth_recovery(kind):
    A, _, y = _instance(n=30, d=50, seed=11, spectrum=synth.SpectrumSpec(synth.Decay.Geometric, ratio=0.9))
    loss = losses.make(kind, y)
    lam = 0.05
    opts = solvers.SolveOptions(grad_tolerance=1e-10, max_iters=20000)
    reference = estimators.reference_solution(A, loss, lam, opts)
    assert reference.dual is not None
    spec = _spec(EmbeddingKind.AdaptiveGaussian, 10)
    restricted = estimators.recover_nonsmooth(A, loss, lam, spec, estimators.DualRoute.RestrictedDual, opts, reference)
    plain = estimators.recover_nonsmooth(A, loss, lam, spec, estimators.DualRoute.PlainSketchedDual, opts, reference)
    err = np.linalg.norm(restricted.x1-reference.x)
    assert analysis.nonsmooth_certificate(err, loss.lipschitz, lam, restricted.residual_norm)
    assert abs(restricted.dual_objective-plain.dual_objective) <= 1e-6*max(1., abs(plain.dual_objective))
    np.testing.assert_allclose(restricted.x0, plain.x0)
    assert restricted.rel_err_arbitrary is not None


@pytest.mark.parametrize('kind', [LossKind.L1, LossKind.Linf, LossKind.Hinge])
def test_restricted_dual_keeps_fixed_coordinates(kind):
    # default options leave the plain dual unconverged; pinned coordinates must still hold
    A, _, y = _instance(n=60, d=100, seed=4, spectrum=synth.SpectrumSpec(synth.Decay.Geometric, ratio=0.98))
    loss = losses.make(kind, y)
    lam = 0.01
    opts = solvers.SolveOptions()
    spec = _spec(EmbeddingKind.AdaptiveGaussian, 16)
    reference = estimators.reference_solution(A, loss, lam, opts)
    rep = estimators.recover_nonsmooth(A, loss, lam, spec, estimators.DualRoute.RestrictedDual, opts, reference)

    w = embeddings.build_sketch(A, spec).a_qs @ rep.alpha
    partition = loss.subgradient_partition(w, estimators.PARTITION_TIE_FACTOR*(1.+np.max(np.abs(w))))
    for i, v in partition.fixed.items():
        assert rep.dual[i]==v
    for i, (lo, hi) in partition.free.items():
        assert lo-1e-12 <= rep.dual[i] <= hi+1e-12
    if partition.active_signs:
        assert np.sum(np.abs(rep.dual)) == pytest.approx(1.)
        assert all(s*rep.dual[i] >= 0 for i, s in partition.active_signs.items())

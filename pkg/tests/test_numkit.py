import pickle

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies

from subsketch import numkit


def test_seeded_rng_reproducible():
    a = numkit.SeededRng(7, 3).generator().standard_normal(10)
    b = numkit.SeededRng(7, 3).generator().standard_normal(10)
    c = numkit.SeededRng(7, 4).generator().standard_normal(10)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_seeded_rng_spawn():
    rng = numkit.SeededRng(1, 2)
    assert rng.spawn('a', 3)==rng.spawn('a', 3)
    assert rng.spawn('a', 3)!=rng.spawn('a', 4)
    assert rng.spawn('a').seed==1


@pytest.mark.parametrize('seed', [-1, 2**64, True, 1.5])
def test_seeded_rng_rejects_bad_seed(seed):
    with pytest.raises(ValueError):
        numkit.SeededRng(seed)


@given(strategies.integers(1, 40), strategies.integers(1, 40), strategies.integers(0, 2**32))
def test_thin_svd_reconstructs(rows, cols, seed):
    M = numkit.SeededRng(seed).generator().standard_normal((rows, cols))
    svd = numkit.thin_svd(M)
    assert svd.rank==min(rows, cols)
    assert np.all(np.diff(svd.singular_values) <= 0)
    assert np.max(np.abs(svd.reconstruct()-M)) <= 1e-8*svd.singular_values[0]
    np.testing.assert_allclose(svd.u.T @ svd.u, np.eye(svd.rank), atol=1e-10)


def test_thin_svd_truncates_rank():
    gen = numkit.SeededRng(5).generator()
    M = gen.standard_normal((20, 3)) @ gen.standard_normal((3, 15))
    assert numkit.thin_svd(M).rank==3


def test_thin_svd_zero_and_empty():
    svd = numkit.thin_svd(np.zeros((4, 3)))
    assert svd.rank==0
    assert svd.u.shape==(4, 0) and svd.vt.shape==(0, 3)
    with pytest.raises(ValueError):
        numkit.thin_svd(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        numkit.thin_svd(np.array([[1., np.nan]]))


def test_spectral_norm_matches_lapack():
    M = numkit.SeededRng(11).generator().standard_normal((30, 12))
    expected = scipy.linalg.svdvals(M)[0]
    assert numkit.spectral_norm(M) == pytest.approx(expected, rel=1e-4)
    assert numkit.spectral_norm(M.T) == pytest.approx(expected, rel=1e-4)
    assert numkit.spectral_norm(np.zeros((3, 4)))==0.


def test_spectral_norm_iteration_cap():
    M = numkit.SeededRng(2).generator().standard_normal((6, 6))
    with pytest.raises(numkit.ConvergenceError) as info:
        numkit.spectral_norm(M, max_iters=1)
    assert info.value.iterations==1


def test_operator_norm_falls_back_to_lapack():
    M = numkit.SeededRng(3).generator().standard_normal((8, 5))
    assert numkit.operator_norm(M, max_iters=1) == pytest.approx(scipy.linalg.svdvals(M)[0], rel=1e-12)
    # round-off sized input with a flat spectrum
    Q = numkit.sample_haar_frame(10, 4, numkit.SeededRng(4))
    assert numkit.operator_norm(1e-15*Q) == pytest.approx(1e-15, rel=1e-6)


def test_convergence_error_pickles():
    err = numkit.ConvergenceError('no luck', 12, np.arange(3.))
    back = pickle.loads(pickle.dumps(err))
    assert str(back)=='no luck'
    assert back.iterations==12
    np.testing.assert_array_equal(back.last_iterate, np.arange(3.))


def test_haar_frame_orthonormal():
    Q = numkit.sample_haar_frame(12, 5, numkit.SeededRng(9))
    np.testing.assert_allclose(Q.T @ Q, np.eye(5), atol=1e-12)
    with pytest.raises(ValueError):
        numkit.sample_haar_frame(3, 4, numkit.SeededRng())


def test_gaussian_matrix_variance():
    G = numkit.sample_gaussian_matrix(400, 50, 0.25, numkit.SeededRng(1))
    assert np.var(G) == pytest.approx(0.25, rel=0.05)
    with pytest.raises(ValueError):
        numkit.sample_gaussian_matrix(2, 2, 0., numkit.SeededRng())


def test_project_onto_range():
    Q = numkit.sample_haar_frame(6, 2, numkit.SeededRng(2))
    v = np.arange(6.)
    p = numkit.project_onto_range(Q, v)
    np.testing.assert_allclose(numkit.project_onto_range(Q, p), p, atol=1e-12)
    with pytest.raises(ValueError):
        numkit.project_onto_range(Q, np.ones(5))


def test_dense_matrix_file(tmp_path):
    M = numkit.SeededRng(8).generator().standard_normal((3, 4))
    path = tmp_path / 'A.txt'
    numkit.write_dense_matrix(path, M)
    assert path.read_text().splitlines()[0]=='3 4'
    np.testing.assert_array_equal(numkit.read_dense_matrix(path), M)


def test_dense_matrix_file_mismatch(tmp_path):
    path = tmp_path / 'bad.txt'
    path.write_text('2 2\n1 2 3\n')
    with pytest.raises(ValueError, match='header'):
        numkit.read_dense_matrix(path)

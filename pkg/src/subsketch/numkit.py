"""Dense linear-algebra kernels: thin SVD, spectral norms, projections, seeded sampling and
the dense matrix text format."""

import dataclasses
import pathlib
import typing

import numpy as np
import scipy.linalg

from . import utils

DenseMatrix = np.ndarray    # 2-D, float64, finite

DEFAULT_RANK_TOLERANCE = 1e-10
SPECTRAL_NORM_MAX_ITERS = 10_000
_SVD_DRIVERS = ('gesdd', 'gesvd')


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, iterations: int, last_iterate: typing.Any = None):
        super().__init__(message)
        self.iterations     = iterations
        self.last_iterate   = last_iterate

    def __reduce__(self):
        # trial failures travel back from pool workers pickled
        return type(self), (str(self), self.iterations, self.last_iterate)


def as_dense(M, name: str = 'M', allow_vector: bool = False) -> np.ndarray:
    arr = np.asarray(M, dtype=np.float64)
    if arr.ndim==1 and allow_vector:
        pass
    elif arr.ndim!=2:
        raise ValueError(f'{name} must be a 2-D matrix, got an array with shape {arr.shape}')
    if not np.all(np.isfinite(arr)):
        raise ValueError(f'{name} contains non-finite entries')
    return arr


@dataclasses.dataclass(frozen=True)
class SeededRng:
    """Counter-based random stream. Identical (seed, stream_id) pairs reproduce identical
    draws on every platform: numpy's Philox generator keyed with seed | stream_id<<64.

    Each call to generator() restarts the stream; callers draw everything they need from
    a single generator."""
    seed        : int = 0
    stream_id   : int = 0

    def __post_init__(self):
        for field in ('seed', 'stream_id'):
            v = getattr(self, field)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or not 0 <= v < 2**64:
                raise ValueError(f'SeededRng.{field} must be an integer in [0, 2**64), got {v!r}')
            object.__setattr__(self, field, int(v))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.seed | (self.stream_id << 64)))

    def spawn(self, *labels: typing.Any) -> 'SeededRng':
        return SeededRng(self.seed, utils.hash64(self.seed, self.stream_id, *labels))


class ThinSvd(typing.NamedTuple):
    u               : np.ndarray    # p×r
    singular_values : np.ndarray    # r, nonincreasing, positive
    vt              : np.ndarray    # r×q
    rank_tolerance  : float

    @property
    def rank(self) -> int:
        return self.singular_values.size

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.singular_values) @ self.vt


def thin_svd(M, rank_tolerance: float = DEFAULT_RANK_TOLERANCE) -> ThinSvd:
    """Thin SVD keeping singular values above rank_tolerance·σ₁.

    A zero matrix gives rank 0 with empty factors. LAPACK's divide-and-conquer driver is
    tried first, then the QR-iteration driver; if both fail to converge a ConvergenceError
    is raised carrying the number of driver attempts."""
    M = as_dense(M)
    if M.size==0:
        raise ValueError(f'thin_svd requires a nonempty matrix, got shape {M.shape}')
    if not 0 <= rank_tolerance < 1:
        raise ValueError(f'rank_tolerance must lie in [0, 1), got {rank_tolerance}')

    p, q = M.shape
    for attempt, driver in enumerate(_SVD_DRIVERS, start=1):
        try:
            u, s, vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver=driver, check_finite=False)
            break
        except np.linalg.LinAlgError as exc:
            last_exc = exc
    else:
        raise ConvergenceError(f'SVD of a {p}x{q} matrix did not converge with drivers {_SVD_DRIVERS}: {last_exc}', len(_SVD_DRIVERS))

    if s.size==0 or s[0]==0.:
        return ThinSvd(np.zeros((p, 0)), np.zeros(0), np.zeros((0, q)), rank_tolerance)
    r = int(np.count_nonzero(s > rank_tolerance*s[0]))
    return ThinSvd(u[:, :r], s[:r], vt[:r, :], rank_tolerance)


def spectral_norm(M, tol: float = 1e-9, max_iters: int = SPECTRAL_NORM_MAX_ITERS, rng: SeededRng | None = None) -> float:
    """σ₁(M) by power iteration on the smaller of MᵀM and MMᵀ. Stops once successive
    Rayleigh quotients differ by less than tol times the current value."""
    M = as_dense(M)
    if tol <= 0:
        raise ValueError(f'tol must be positive, got {tol}')
    if max_iters < 1:
        raise ValueError(f'max_iters must be at least 1, got {max_iters}')
    if M.size==0 or not np.any(M):
        return 0.
    if M.shape[0] < M.shape[1]:
        M = M.T

    gen = (rng or SeededRng()).generator()
    v = gen.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    rayleigh = 0.
    for it in range(1, max_iters+1):
        w = M.T @ (M @ v)
        new_rayleigh = float(v @ w)
        norm_w = np.linalg.norm(w)
        if norm_w==0.:
            # start vector in the null space, restart from a fresh direction
            v = gen.standard_normal(M.shape[1])
            v /= np.linalg.norm(v)
            continue
        v = w/norm_w
        if abs(new_rayleigh-rayleigh) < tol*new_rayleigh:
            return float(np.sqrt(max(new_rayleigh, 0.)))
        rayleigh = new_rayleigh
    raise ConvergenceError(f'Power iteration did not stabilize within {max_iters} iterations (last Rayleigh quotient {rayleigh:.6g})', max_iters, v)


def sample_gaussian_matrix(rows: int, cols: int, variance: float, rng: SeededRng) -> np.ndarray:
    if variance <= 0:
        raise ValueError(f'variance must be positive, got {variance}')
    if rows < 0 or cols < 0:
        raise ValueError(f'Matrix dimensions must be nonnegative, got {rows}x{cols}')
    return rng.generator().normal(0., np.sqrt(variance), size=(rows, cols))


def sample_haar_frame(p: int, r: int, rng: SeededRng) -> np.ndarray:
    """p×r matrix with orthonormal columns, uniformly distributed (QR of a Gaussian matrix
    with the signs of R's diagonal folded into Q)."""
    if r > p:
        raise ValueError(f'Cannot draw {r} orthonormal columns in dimension {p}')
    if r==0:
        return np.zeros((p, 0))
    q, R = scipy.linalg.qr(sample_gaussian_matrix(p, r, 1., rng), mode='economic')
    signs = np.sign(np.diag(R))
    signs[signs==0] = 1.
    return q*signs


def project_onto_range(Q, M) -> np.ndarray:
    Q = as_dense(Q, 'Q')
    M = as_dense(M, 'M', allow_vector=True)
    if M.shape[0]!=Q.shape[0]:
        raise ValueError(f'Q has {Q.shape[0]} rows but M has {M.shape[0]}')
    return Q @ (Q.T @ M)


def write_dense_matrix(path: str | pathlib.Path, M) -> None:
    M = as_dense(M)
    with utils.atomic_write(path) as f:
        f.write(f'{M.shape[0]} {M.shape[1]}\n')
        for row in M:
            f.write(' '.join(f'{v:.17g}' for v in row))
            f.write('\n')


def read_dense_matrix(path: str | pathlib.Path) -> np.ndarray:
    path = pathlib.Path(path)
    with open(path, 'r') as f:
        header = f.readline().split()
        if len(header)!=2:
            raise ValueError(f'{path}: first line must be "rows cols", got {" ".join(header)!r}')
        rows, cols = (int(h) for h in header)
        values = np.array(f.read().split(), dtype=np.float64)
    if values.size!=rows*cols:
        raise ValueError(f'{path}: header announces {rows}x{cols} entries but {values.size} values were found')
    return as_dense(values.reshape(rows, cols), str(path))


def operator_norm(M, tol: float = 1e-9, max_iters: int = 500) -> float:
    """σ₁(M) by power iteration, or from LAPACK singular values when the iteration does not
    settle within max_iters (clustered top of the spectrum, e.g. pure round-off residuals)."""
    try:
        return spectral_norm(M, tol, max_iters)
    except ConvergenceError:
        return float(scipy.linalg.svdvals(as_dense(M), check_finite=False)[0])

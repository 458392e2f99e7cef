"""Sketch families: oblivious Gaussian and SRHT, column subsampling, adaptive sketches with
optional power iterations, whitening and the projection residual."""

import dataclasses
import enum
import math

import numpy as np

from . import numkit


class DegenerateSketch(ValueError):
    pass


class EmbeddingKind(enum.Enum):
    ObliviousGaussian   = 'gaussian'
    ObliviousSRHT       = 'srht'
    ColumnSubsample     = 'nystrom'
    AdaptiveGaussian    = 'adaptive-gaussian'
    AdaptiveSRHT        = 'adaptive-srht'

    @property
    def displayable_name(self):
        return self.value.replace('-', ' ')

    @property
    def is_adaptive(self) -> bool:
        # column subsampling is used as the adaptive Nyström sketch S = AᵀS̃
        return self in (EmbeddingKind.ColumnSubsample, EmbeddingKind.AdaptiveGaussian, EmbeddingKind.AdaptiveSRHT)


@dataclasses.dataclass(frozen=True)
class EmbeddingSpec:
    kind        : EmbeddingKind
    sketch_size : int
    power       : int                   = 0
    rng         : numkit.SeededRng      = numkit.SeededRng()

    def __post_init__(self):
        if not isinstance(self.kind, EmbeddingKind):
            object.__setattr__(self, 'kind', EmbeddingKind(self.kind))
        if self.sketch_size < 1:
            raise ValueError(f'sketch_size must be at least 1, got {self.sketch_size}')
        if self.power < 0:
            raise ValueError(f'power must be nonnegative, got {self.power}')
        if self.power and not self.kind.is_adaptive:
            raise ValueError(f'power iterations (power={self.power}) only apply to adaptive sketches, not {self.kind.value}')
        object.__setattr__(self, 'sketch_size', int(self.sketch_size))
        object.__setattr__(self, 'power', int(self.power))


@dataclasses.dataclass(frozen=True)
class Sketch:
    s       : np.ndarray            # d×m embedding S
    q_s     : np.ndarray            # d×r, whitened, orthonormal columns
    a_qs    : np.ndarray            # n×r, A·Q_S
    spec    : EmbeddingSpec
    s_tilde : np.ndarray|None = None    # n×m oblivious factor of an adaptive sketch, when materialized

    @property
    def rank(self) -> int:
        return self.q_s.shape[1]


def next_power_of_two(p: int) -> int:
    return 1 if p <= 1 else 1 << (p-1).bit_length()


def fwht(M) -> np.ndarray:
    """Orthonormal fast Walsh–Hadamard transform along the last axis (Sylvester ordering).
    The length of that axis must be a power of two."""
    x = np.array(M, dtype=np.float64)
    p = x.shape[-1]
    if p!=next_power_of_two(p):
        raise ValueError(f'fwht needs a power-of-two length, got {p}')
    lead = x.shape[:-1]
    h = 1
    while h < p:
        x = x.reshape(*lead, p//(2*h), 2, h)
        a = x[..., 0, :]
        b = x[..., 1, :]
        x = np.stack((a+b, a-b), axis=-2)
        h *= 2
    return x.reshape(*lead, p)/math.sqrt(p)


def apply_srht(M, m: int, rng: numkit.SeededRng) -> np.ndarray:
    """M·S for S = √(p̃/m)·D·H·R acting on the zero-padded columns of M (p̃ the next power of
    two ≥ p). D random signs, H orthonormal Hadamard, R selects m columns without
    replacement. The implied S satisfies SᵀS = (p̃/m)I."""
    M = numkit.as_dense(M)
    p = M.shape[1]
    p_pad = next_power_of_two(p)
    if m > p_pad:
        raise ValueError(f'SRHT sketch size m={m} exceeds the padded dimension {p_pad} (p={p})')
    if m < 1:
        raise ValueError(f'SRHT sketch size must be at least 1, got {m}')
    gen = rng.generator()
    signs = gen.choice(np.array([-1., 1.]), size=p_pad)
    cols = gen.choice(p_pad, size=m, replace=False)

    padded = np.zeros((M.shape[0], p_pad))
    padded[:, :p] = M
    return math.sqrt(p_pad/m) * fwht(padded*signs)[:, cols]


def build_oblivious_gaussian(d: int, spec: EmbeddingSpec) -> np.ndarray:
    if spec.kind!=EmbeddingKind.ObliviousGaussian:
        raise ValueError(f'build_oblivious_gaussian expects a {EmbeddingKind.ObliviousGaussian.value} spec, got {spec.kind.value}')
    return numkit.sample_gaussian_matrix(d, spec.sketch_size, 1./spec.sketch_size, spec.rng)


def build_oblivious_srht(d: int, spec: EmbeddingSpec) -> np.ndarray:
    if spec.kind!=EmbeddingKind.ObliviousSRHT:
        raise ValueError(f'build_oblivious_srht expects a {EmbeddingKind.ObliviousSRHT.value} spec, got {spec.kind.value}')
    return apply_srht(np.eye(d), spec.sketch_size, spec.rng)


def build_column_subsample(n: int, m: int, rng: numkit.SeededRng) -> np.ndarray:
    if m > n:
        raise ValueError(f'Cannot subsample {m} distinct columns out of {n}')
    rows = rng.generator().choice(n, size=m, replace=False)
    selector = np.zeros((n, m))
    selector[rows, np.arange(m)] = 1.
    return selector


def draw_s_tilde(n: int, spec: EmbeddingSpec) -> np.ndarray:
    """Materialized oblivious factor S̃ (n×m) of an adaptive spec. Draws are identical to the
    ones build_adaptive makes internally for the same spec."""
    match spec.kind:
        case EmbeddingKind.AdaptiveGaussian:
            return numkit.sample_gaussian_matrix(n, spec.sketch_size, 1./spec.sketch_size, spec.rng)
        case EmbeddingKind.AdaptiveSRHT:
            return apply_srht(np.eye(n), spec.sketch_size, spec.rng)
        case EmbeddingKind.ColumnSubsample:
            return build_column_subsample(n, spec.sketch_size, spec.rng)
        case _:
            raise ValueError(f'{spec.kind.value} is not an adaptive embedding')


def build_adaptive(A, spec: EmbeddingSpec, s_tilde=None) -> np.ndarray:
    """S = (AᵀA)^q Aᵀ S̃, computed as AᵀS̃ followed by q alternating products with A and Aᵀ."""
    A = numkit.as_dense(A, 'A')
    if not spec.kind.is_adaptive:
        raise ValueError(f'build_adaptive expects an adaptive spec, got {spec.kind.value}')
    n = A.shape[0]
    if s_tilde is not None:
        s_tilde = numkit.as_dense(s_tilde, 's_tilde')
        if s_tilde.shape[0]!=n:
            raise ValueError(f's_tilde has {s_tilde.shape[0]} rows, A has {n}')
        S = A.T @ s_tilde
    else:
        match spec.kind:
            case EmbeddingKind.AdaptiveGaussian:
                S = A.T @ draw_s_tilde(n, spec)
            case EmbeddingKind.AdaptiveSRHT:
                S = apply_srht(A.T, spec.sketch_size, spec.rng)
            case EmbeddingKind.ColumnSubsample:
                if spec.sketch_size > n:
                    raise ValueError(f'Cannot subsample {spec.sketch_size} distinct columns out of {n}')
                rows = spec.rng.generator().choice(n, size=spec.sketch_size, replace=False)
                S = A.T[:, rows]
            case _:
                raise NotImplementedError(f'Logic is not implemented for embedding kind {spec.kind}')
    for _ in range(spec.power):
        S = A.T @ (A @ S)
    return S


def whiten(S, rank_tolerance: float = numkit.DEFAULT_RANK_TOLERANCE) -> np.ndarray:
    """Whitened sketch Q_S = U_S V_Sᵀ. When S is rank deficient (r < m) only the r
    retained left singular vectors are kept, so Q_S always has orthonormal columns."""
    S = numkit.as_dense(S, 'S')
    if S.shape[1]==0:
        raise ValueError('Cannot whiten a sketch without columns')
    svd = numkit.thin_svd(S, rank_tolerance)
    if svd.rank==0:
        raise DegenerateSketch(f'Sketch of shape {S.shape} is zero, nothing to whiten')
    if svd.rank==S.shape[1]:
        return svd.u @ svd.vt
    return svd.u


def unwhiten_coordinates(S, alpha_dagger, rank_tolerance: float = numkit.DEFAULT_RANK_TOLERANCE) -> np.ndarray:
    """Map coordinates α† of the whitened program back to α with Sα = Q_Sα†.
    Minimum-norm solution when S is rank deficient."""
    S = numkit.as_dense(S, 'S')
    alpha_dagger = np.asarray(alpha_dagger, dtype=np.float64)
    svd = numkit.thin_svd(S, rank_tolerance)
    if svd.rank==S.shape[1]:
        return svd.vt.T @ ((svd.vt @ alpha_dagger)/svd.singular_values)
    if alpha_dagger.shape[0]!=svd.rank:
        raise ValueError(f'alpha_dagger has length {alpha_dagger.shape[0]}, the sketch has rank {svd.rank}')
    return svd.vt.T @ (alpha_dagger/svd.singular_values)


def projection_residual_norm(A, q_s, tol: float = 1e-6) -> float:
    """‖(I − Q_SQ_Sᵀ)Aᵀ‖₂."""
    A = numkit.as_dense(A, 'A')
    q_s = numkit.as_dense(q_s, 'q_s')
    if q_s.shape[0]!=A.shape[1]:
        raise ValueError(f'q_s has {q_s.shape[0]} rows, A has {A.shape[1]} columns')
    residual = A.T - q_s @ (q_s.T @ A.T)
    return numkit.operator_norm(residual, tol=tol)


def srht_sketch_size(k: int, n: int) -> int:
    """Sketch size ⌈19(√k + 4√log n)²·log(kn)⌉ for the SRHT residual guarantee, clamped to n
    (the guarantee is vacuous once clamped)."""
    if k < 1 or n < 2:
        raise ValueError(f'srht_sketch_size needs k >= 1 and n >= 2, got k={k}, n={n}')
    m = math.ceil(19*(math.sqrt(k) + 4*math.sqrt(math.log(n)))**2 * math.log(k*n))
    return min(m, n)


def build_embedding(d: int, spec: EmbeddingSpec, A=None, s_tilde=None) -> np.ndarray:
    match spec.kind:
        case EmbeddingKind.ObliviousGaussian:
            return build_oblivious_gaussian(d, spec)
        case EmbeddingKind.ObliviousSRHT:
            return build_oblivious_srht(d, spec)
        case EmbeddingKind.ColumnSubsample | EmbeddingKind.AdaptiveGaussian | EmbeddingKind.AdaptiveSRHT:
            if A is None:
                raise ValueError(f'An adaptive embedding ({spec.kind.value}) needs the data matrix')
            return build_adaptive(A, spec, s_tilde)
        case _:
            raise NotImplementedError(f'Logic is not implemented for embedding kind {spec.kind}')


def build_sketch(A, spec: EmbeddingSpec, rank_tolerance: float = numkit.DEFAULT_RANK_TOLERANCE, s_tilde=None) -> Sketch:
    A = numkit.as_dense(A, 'A')
    if s_tilde is None and spec.kind.is_adaptive and spec.kind!=EmbeddingKind.AdaptiveSRHT:
        # cheap to materialize, and kernel pipelines reuse it
        s_tilde = draw_s_tilde(A.shape[0], spec)
    S = build_embedding(A.shape[1], spec, A, s_tilde)
    q_s = whiten(S, rank_tolerance)
    return Sketch(S, q_s, A @ q_s, spec, s_tilde)

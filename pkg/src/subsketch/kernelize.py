"""Kernel-space formulation: Gram matrices, the sketched kernel program, weight-space
estimators, the RKHS distance and random Fourier features."""

import dataclasses
import math

import numpy as np
import scipy.linalg
import scipy.spatial.distance

from . import embeddings, losses, numkit, solvers

PSD_TOLERANCE = 1e-10


@dataclasses.dataclass(frozen=True, eq=False)
class GramMatrix:
    k               : np.ndarray
    psd_tolerance   : float = PSD_TOLERANCE

    def __post_init__(self):
        k = numkit.as_dense(self.k, 'k')
        if k.shape[0]!=k.shape[1]:
            raise ValueError(f'A Gram matrix must be square, got shape {k.shape}')
        scale = max(1., float(np.max(np.abs(k), initial=0.)))
        if np.max(np.abs(k-k.T), initial=0.) > 1e-10*scale:
            raise ValueError('Gram matrix is not symmetric')
        k = 0.5*(k+k.T)
        k.flags.writeable = False
        object.__setattr__(self, 'k', k)

    @property
    def n(self) -> int:
        return self.k.shape[0]

    def square_root(self) -> np.ndarray:
        """K_h with K = K_hK_hᵀ, from the symmetric eigendecomposition with eigenvalues
        clamped at zero. Raises ValueError when K is not PSD within tolerance."""
        evals, evecs = scipy.linalg.eigh(self.k)
        top = float(np.max(np.abs(evals), initial=0.))
        if evals.size and evals[0] < -self.psd_tolerance*top:
            raise ValueError(f'Gram matrix is not PSD: smallest eigenvalue {evals[0]:.3g} vs σ₁ {top:.3g}')
        return evecs*np.sqrt(np.clip(evals, 0., None))


def gram_from_features(A) -> GramMatrix:
    A = numkit.as_dense(A, 'A')
    if A.size==0:
        raise ValueError('gram_from_features needs a nonempty matrix')
    K = A @ A.T
    return GramMatrix(0.5*(K+K.T))


def gram_gaussian_kernel(X, gamma: float) -> GramMatrix:
    """K_ij = exp(−γ‖x_i − x_j‖²) for the rows x_i of X."""
    X = numkit.as_dense(X, 'X')
    if not gamma > 0:
        raise ValueError(f'gamma must be positive, got {gamma}')
    sq = scipy.spatial.distance.cdist(X, X, 'sqeuclidean')
    return GramMatrix(np.exp(-gamma*sq))


def kernel_square_root(K: GramMatrix) -> np.ndarray:
    return K.square_root()


def _whitened_factor(K: GramMatrix, s_tilde: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s_tilde = numkit.as_dense(s_tilde, 's_tilde')
    if s_tilde.shape[0]!=K.n:
        raise ValueError(f's_tilde has {s_tilde.shape[0]} rows, K is {K.n}x{K.n}')
    K_h = K.square_root()
    return K_h, K_h.T @ s_tilde


def solve_sketched_kernel(K: GramMatrix, s_tilde, loss: losses.SmoothLossModel, lam: float, opts: solvers.SolveOptions = solvers.SolveOptions()) -> tuple[np.ndarray, solvers.SolveResult]:
    """α*_K = argmin f(KS̃α) + (λ/2)αᵀS̃ᵀKS̃α.

    Solved in whitened coordinates: with F = K_hᵀS̃ the program reads
    f(K_hFα) + (λ/2)‖Fα‖², so whitening F gives a standard sketched program in α† and
    α*_K is the minimum-norm preimage with Fα*_K = Q_Fα*†."""
    K_h, F = _whitened_factor(K, s_tilde)
    q_f = embeddings.whiten(F)
    res = solvers.solve_sketched(K_h @ q_f, loss, lam, opts)
    return embeddings.unwhiten_coordinates(F, res.minimizer), res


def kernel_zero_order(s_tilde, alpha) -> np.ndarray:
    """ŵ⁰ = S̃α."""
    s_tilde = numkit.as_dense(s_tilde, 's_tilde')
    return s_tilde @ np.asarray(alpha, dtype=np.float64)


def kernel_first_order(K: GramMatrix, s_tilde, alpha, loss: losses.SmoothLossModel, lam: float) -> np.ndarray:
    """ŵ¹ = −∇f(KS̃α)/λ."""
    if not lam > 0:
        raise ValueError(f'λ must be positive, got {lam}')
    return -loss.gradient(K.k @ kernel_zero_order(s_tilde, alpha))/lam


def solve_kernel_reference(K: GramMatrix, loss: losses.SmoothLossModel, lam: float, opts: solvers.SolveOptions = solvers.SolveOptions()) -> tuple[np.ndarray, solvers.SolveResult]:
    """w* of the unsketched kernel program min f(Kw) + (λ/2)wᵀKw, as w* = −∇f(K_hx*)/λ
    where x* solves the primal program with data matrix K_h."""
    K_h = K.square_root()
    res = solvers.solve_primal_reference(K_h, loss, lam, opts)
    return -loss.gradient(K_h @ res.minimizer)/lam, res


def rkhs_distance(K: GramMatrix, w, v) -> float:
    diff = np.asarray(w, dtype=np.float64) - np.asarray(v, dtype=np.float64)
    return math.sqrt(max(float(diff @ (K.k @ diff)), 0.))


def rff_features(X, feature_count: int, gamma: float, rng: numkit.SeededRng) -> np.ndarray:
    """ψ(x) = √(2/D)·cos(Wx + u), W rows i.i.d. N(0, 2γI), u uniform on [0, 2π], so that
    ⟨ψ(x), ψ(x′)⟩ ≈ exp(−γ‖x − x′‖²)."""
    X = numkit.as_dense(X, 'X')
    if feature_count < 1:
        raise ValueError(f'feature_count must be at least 1, got {feature_count}')
    if not gamma > 0:
        raise ValueError(f'gamma must be positive, got {gamma}')
    gen = rng.generator()
    W = gen.normal(0., math.sqrt(2.*gamma), size=(feature_count, X.shape[1]))
    u = gen.uniform(0., 2.*math.pi, size=feature_count)
    return math.sqrt(2./feature_count)*np.cos(X @ W.T + u)

"""Spectral and statistical diagnostics (spectral residual, effective and statistical
dimensions, condition numbers), bound certificates, Monte-Carlo risk and lower-bound
checks, and scaling-law fits."""

import dataclasses
import math
import typing

import numpy as np
import scipy.linalg

from . import embeddings, losses, numkit, solvers

GAUSSIAN_RESIDUAL_CONSTANT  = 26.
SRHT_RESIDUAL_CONSTANT      = 5.
CERTIFICATE_SLACK           = 1e-9


@dataclasses.dataclass(frozen=True, eq=False)
class SpectralSummary:
    singular_values : np.ndarray    # nonincreasing, positive
    n               : int
    d               : int

    def __post_init__(self):
        s = np.asarray(self.singular_values, dtype=np.float64)
        if s.ndim!=1:
            raise ValueError(f'singular_values must be a vector, got shape {s.shape}')
        if np.any(s <= 0) or np.any(np.diff(s) > 0):
            raise ValueError('singular_values must be positive and nonincreasing')
        if s.size > min(self.n, self.d):
            raise ValueError(f'{s.size} singular values do not fit a {self.n}x{self.d} matrix')
        object.__setattr__(self, 'singular_values', s)

    @property
    def rank(self) -> int:
        return self.singular_values.size

    def sigma(self, j: int) -> float:
        """σⱼ (1-based), zero beyond the rank."""
        return float(self.singular_values[j-1]) if 1 <= j <= self.rank else 0.

    @classmethod
    def from_matrix(cls, A, rank_tolerance: float = numkit.DEFAULT_RANK_TOLERANCE) -> 'SpectralSummary':
        A = numkit.as_dense(A, 'A')
        return cls(numkit.thin_svd(A, rank_tolerance).singular_values, *A.shape)


def spectral_residual(summary: SpectralSummary, delta: float) -> float:
    """R_δ = σ_{k+1} + √(Σ_{j>k} σⱼ²/k) with k = ⌊δ⌋."""
    k = math.floor(delta)
    if k < 1:
        raise ValueError(f'spectral_residual needs ⌊δ⌋ ≥ 1, got δ={delta}')
    tail = summary.singular_values[k:]
    return summary.sigma(k+1) + math.sqrt(float(np.sum(tail**2))/k)


def effective_dimension(summary: SpectralSummary, c: float) -> float:
    if not c > 0:
        raise ValueError(f'effective_dimension needs c > 0, got {c}')
    s2 = summary.singular_values**2
    ratios = s2/(c+s2)
    return float(np.sum(ratios)/ratios[0])


def statistical_dimension(summary: SpectralSummary, noise_variance: float, n: int) -> int:
    """Smallest k ≥ 1 with σ²k/n ≥ σ²_{k+1}."""
    if not noise_variance > 0:
        raise ValueError(f'noise_variance must be positive, got {noise_variance}')
    level = noise_variance/n
    for k in range(1, summary.rank+1):
        if level*k >= summary.sigma(k+1)**2:
            return k
    return max(summary.rank, 1)


def condition_numbers(A, q_s, lam: float) -> tuple[float, float]:
    """κ and κ† of the quadratic primal and whitened sketched programs."""
    A = numkit.as_dense(A, 'A')
    q_s = numkit.as_dense(q_s, 'q_s')
    if not lam > 0:
        raise ValueError(f'λ must be positive, got {lam}')
    n, d = A.shape
    r = q_s.shape[1]

    def kappa(M: np.ndarray, dim: int) -> float:
        s = scipy.linalg.svdvals(M) if M.size else np.zeros(0)
        top = float(s[0])**2 if s.size else 0.
        bottom = float(s[dim-1])**2 if dim <= s.size else 0.
        return (lam+top)/(lam+bottom)

    return kappa(A, d), kappa(A @ q_s, r)


def range_residual_norm(A, a_qs) -> float:
    """‖P_{AS}^⊥A‖₂, with range(AS) = range(AQ_S)."""
    A = numkit.as_dense(A, 'A')
    a_qs = numkit.as_dense(a_qs, 'a_qs')
    basis = numkit.thin_svd(a_qs).u if a_qs.size else np.zeros((A.shape[0], 0))
    return numkit.operator_norm(A - basis @ (basis.T @ A))


def minimax_event(summary: SpectralSummary, range_residual: float, d_s: int) -> bool:
    """‖P_{AS}^⊥A‖₂² ≤ σ²_{d_s+1}/2, the conditioning event of the minimax risk bound."""
    return range_residual**2 <= 0.5*summary.sigma(d_s+1)**2


class RiskEstimate(typing.NamedTuple):
    mc_risk         : float
    analytic_limit  : float


def risk_zero_order(A, spec: embeddings.EmbeddingSpec, noise_variance: float, lam: float, trials: int, rng: numkit.SeededRng, random_directions: int = 5) -> RiskEstimate:
    """Monte-Carlo risk E‖A(x̂⁰ − x_pl)‖² of the zero-order estimator on the quadratic loss
    with b = Ax_pl + w, w ~ N(0, σ²/n·I), maximized over a set of unit directions x_pl:
    the top-3 right singular vectors of A, the top right singular vector of P_{AS}^⊥A and
    random_directions random unit vectors. All directions share the same noise draws.

    analytic_limit = σ²r/n + ‖P_{AS}^⊥A‖₂² with r = rank(AQ_S), the small-λ limit."""
    A = numkit.as_dense(A, 'A')
    if trials < 2:
        raise ValueError(f'risk_zero_order needs at least 2 trials, got {trials}')
    if not noise_variance > 0:
        raise ValueError(f'noise_variance must be positive, got {noise_variance}')
    n, d = A.shape
    sketch = embeddings.build_sketch(A, spec)
    m_svd = numkit.thin_svd(sketch.a_qs)
    shrink = m_svd.singular_values**2/(m_svd.singular_values**2 + lam)
    hat = lambda M: m_svd.u @ (shrink[:, None]*(m_svd.u.T @ M))

    residual = A - m_svd.u @ (m_svd.u.T @ A)
    directions = [numkit.thin_svd(A).vt[:3]]
    res_svd = numkit.thin_svd(residual) if np.any(residual) else None
    if res_svd is not None and res_svd.rank:
        directions.append(res_svd.vt[:1])
    if random_directions:
        G = rng.spawn('directions').generator().standard_normal((random_directions, d))
        directions.append(G/np.linalg.norm(G, axis=1, keepdims=True))
    X = np.vstack(directions).T                                     # d×k unit columns

    W = rng.spawn('noise').generator().normal(0., math.sqrt(noise_variance/n), size=(n, trials))
    HW = hat(W)
    AX = A @ X
    bias = hat(AX) - AX
    risk = np.sum(bias**2, axis=0) + 2.*np.mean(bias.T @ HW, axis=1) + np.mean(np.sum(HW**2, axis=0))
    analytic = noise_variance*m_svd.rank/n + numkit.operator_norm(residual)**2
    return RiskEstimate(float(np.max(risk)), float(analytic))


class MonteCarloCheck(typing.NamedTuple):
    passed  : bool
    mean    : float
    bound   : float
    se      : float


def _closed_form_first_order(A: np.ndarray, b: np.ndarray, q_s: np.ndarray, lam: float) -> tuple[np.ndarray, np.ndarray]:
    # quadratic loss: α = (MᵀM + λI)⁻¹Mᵀb, x̂⁰ = Qα, x̂¹ = −Aᵀ(Mα − b)/λ
    M = A @ q_s
    H = M.T @ M
    H[np.diag_indices_from(H)] += lam
    alpha = scipy.linalg.solve(H, M.T @ b, assume_a='pos')
    return q_s @ alpha, -(A.T @ (M @ alpha - b))/lam


def aligned_instance_check(A, lam: float, m: int, trials: int, rng: numkit.SeededRng, gamma: float = 1.) -> MonteCarloCheck:
    """One-sided Monte-Carlo check of the first-order lower bound for oblivious Gaussian
    sketches on the aligned quadratic instance b = u₁ (so x* ∝ v₁):
    mean rel_err_x1² ≥ (1 − m/d)³σ₁⁴/(σ₁² + 2λ/γ)² − 3·SE."""
    A = numkit.as_dense(A, 'A')
    d = A.shape[1]
    if not 1 <= m <= d:
        raise ValueError(f'm must lie in [1, {d}], got {m}')
    if trials < 2:
        raise ValueError(f'aligned_instance_check needs at least 2 trials, got {trials}')
    svd = numkit.thin_svd(A)
    s1 = float(svd.singular_values[0])
    b = svd.u[:, 0]
    x_star = s1/(s1**2+lam)*svd.vt[0]
    errs = np.empty(trials)
    for t in range(trials):
        spec = embeddings.EmbeddingSpec(embeddings.EmbeddingKind.ObliviousGaussian, m, rng=rng.spawn(t))
        q_s = embeddings.whiten(embeddings.build_oblivious_gaussian(d, spec))
        _, x1 = _closed_form_first_order(A, b, q_s, lam)
        errs[t] = np.sum((x1-x_star)**2)/np.sum(x_star**2)
    bound = (1.-m/d)**3 * s1**4/(s1**2 + 2.*lam/gamma)**2
    mean = float(np.mean(errs))
    se = float(np.std(errs, ddof=1)/math.sqrt(trials))
    return MonteCarloCheck(mean >= bound-3.*se, mean, bound, se)


def zero_order_floor_check(A, loss: losses.SmoothLossModel, lam: float, kind: embeddings.EmbeddingKind, m: int, trials: int, rng: numkit.SeededRng,
                           opts: solvers.SolveOptions = solvers.SolveOptions()) -> MonteCarloCheck:
    """For oblivious sketches, mean rel_err_x0² over trials ≥ (1 − m/d) − 3·SE."""
    A = numkit.as_dense(A, 'A')
    kind = embeddings.EmbeddingKind(kind)
    if kind not in (embeddings.EmbeddingKind.ObliviousGaussian, embeddings.EmbeddingKind.ObliviousSRHT):
        raise ValueError(f'zero_order_floor_check applies to oblivious sketches, got {kind.value}')
    if trials < 2:
        raise ValueError(f'zero_order_floor_check needs at least 2 trials, got {trials}')
    d = A.shape[1]
    x_star = solvers.solve_primal_reference(A, loss, lam, opts).minimizer
    errs = np.empty(trials)
    for t in range(trials):
        sketch = embeddings.build_sketch(A, embeddings.EmbeddingSpec(kind, m, rng=rng.spawn(t)))
        alpha = solvers.solve_sketched(sketch.a_qs, loss, lam, opts).minimizer
        errs[t] = np.sum((sketch.q_s @ alpha - x_star)**2)/np.sum(x_star**2)
    bound = 1.-m/d
    mean = float(np.mean(errs))
    se = float(np.std(errs, ddof=1)/math.sqrt(trials))
    return MonteCarloCheck(mean >= bound-3.*se, mean, bound, se)


class SlopeFit(typing.NamedTuple):
    slope       : float
    intercept   : float
    r_squared   : float


def loglog_slope_fit(ms, errors) -> SlopeFit:
    x = np.asarray(ms, dtype=np.float64)
    y = np.asarray(errors, dtype=np.float64)
    if x.shape!=y.shape or x.ndim!=1 or x.size < 3:
        raise ValueError(f'loglog_slope_fit needs at least 3 paired points, got {x.shape} and {y.shape}')
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError('loglog_slope_fit needs positive inputs')
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    ss_tot = float(np.sum((ly-ly.mean())**2))
    ss_res = float(np.sum((ly - (slope*lx+intercept))**2))
    r2 = 1. if ss_tot==0. else 1.-ss_res/ss_tot
    return SlopeFit(float(slope), float(intercept), r2)


def first_order_bound(mu: float, lam: float, residual_norm: float, rel_err_x0: float) -> float:
    return math.sqrt(mu/(2.*lam))*residual_norm*min(1., rel_err_x0)


def first_order_condition(mu: float, lam: float, residual_norm: float) -> bool:
    return lam >= 2.*mu*residual_norm**2


def first_order_certificate(rel_err_x1: float, rel_err_x0: float, residual_norm: float, mu: float, lam: float) -> bool|None:
    """None when λ ≥ 2μẐ² fails and the bound does not apply."""
    if not first_order_condition(mu, lam, residual_norm):
        return None
    return rel_err_x1 <= first_order_bound(mu, lam, residual_norm, rel_err_x0) + CERTIFICATE_SLACK


def residual_certificate(residual_norm: float, summary: SpectralSummary, k: int, constant: float = GAUSSIAN_RESIDUAL_CONSTANT) -> bool:
    return residual_norm <= constant*spectral_residual(summary, k)*(1.+CERTIFICATE_SLACK)


def contraction_certificate(rel_errors: typing.Sequence[float], mu: float, lam: float, residual_norm: float,
                            slack: float = 0.05, floor: float = 1e-10) -> bool:
    """Per-step ratios rel_err(t+1)/rel_err(t) ≤ √(μẐ²/2λ) + slack before the error floor,
    and the cumulative bound rel_err(t) ≤ max{(μẐ²/2λ)^(t/2), floor} at every t ≥ 1."""
    rate = math.sqrt(mu*residual_norm**2/(2.*lam))
    errs = list(rel_errors)
    for prev, cur in zip(errs, errs[1:]):
        if prev < floor:
            break
        if cur/prev > rate+slack:
            return False
    return all(e <= max(rate**t, floor) + CERTIFICATE_SLACK for t, e in enumerate(errs, start=1))


def nonsmooth_bound(lipschitz: float, lam: float, residual_norm: float) -> float:
    return math.sqrt(6.)*lipschitz/lam*residual_norm


def nonsmooth_certificate(abs_err_x1: float, lipschitz: float, lam: float, residual_norm: float) -> bool:
    return abs_err_x1 <= nonsmooth_bound(lipschitz, lam, residual_norm) + CERTIFICATE_SLACK


def unbiased_sketch_threshold(summary: SpectralSummary, lam: float, mu: float, delta: float) -> float:
    """32·d_{λ/μ}·log(2d/δ), the sketch size above which the unbiased oblivious
    estimator's guarantee applies. Reported only."""
    if not 0 < delta < 1:
        raise ValueError(f'delta must lie in (0, 1), got {delta}')
    return 32.*effective_dimension(summary, lam/mu)*math.log(2.*summary.d/delta)


class HighProbabilityBound(typing.NamedTuple):
    value       : float
    condition_ok: bool


def adaptive_high_probability_bound(summary: SpectralSummary, k: int, mu: float, lam: float, rel_err_x0: float,
                                    kind: embeddings.EmbeddingKind = embeddings.EmbeddingKind.AdaptiveGaussian) -> HighProbabilityBound:
    """√(c²μ/2λ)·R_k·min{1, rel_err_x0}, c = 26 (Gaussian) or 5 (SRHT), valid when
    λ ≥ 2μc²R_k²."""
    match embeddings.EmbeddingKind(kind):
        case embeddings.EmbeddingKind.AdaptiveGaussian:
            c = GAUSSIAN_RESIDUAL_CONSTANT
        case embeddings.EmbeddingKind.AdaptiveSRHT:
            c = SRHT_RESIDUAL_CONSTANT
        case _:
            raise ValueError(f'No high-probability bound for {embeddings.EmbeddingKind(kind).value} sketches')
    r_k = spectral_residual(summary, k)
    return HighProbabilityBound(math.sqrt(c*c*mu/(2.*lam))*r_k*min(1., rel_err_x0), lam >= 2.*mu*(c*r_k)**2)

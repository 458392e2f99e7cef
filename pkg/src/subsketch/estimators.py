"""Recovery maps from a sketched solution back to the full space: zero-order x̂⁰ = Q_Sα,
first-order x̂¹ = −Aᵀ∇f(AQ_Sα)/λ, the adaptive pipeline and its iterative refinement,
the oblivious and Nyström baselines, and non-smooth recovery through the sketched dual."""

import dataclasses
import enum
import hashlib
import math
import time
import typing

import numpy as np

from . import analysis, embeddings, losses, numkit, solvers

ITERATIVE_ERROR_FLOOR = 1e-12
PARTITION_TIE_FACTOR = 1e-6


class DualRoute(enum.Enum):
    RestrictedDual      = 'restricted'
    PlainSketchedDual   = 'plain'


class Reference(typing.NamedTuple):
    x               : np.ndarray
    objective       : float
    converged       : bool
    provenance_id   : str
    dual            : np.ndarray|None = None    # z* for non-smooth losses


@dataclasses.dataclass
class RecoveryReport:
    alpha           : np.ndarray
    x0              : np.ndarray
    x1              : np.ndarray
    rel_err_x0      : float
    rel_err_x1      : float
    residual_norm   : float         # ‖P_S^⊥Aᵀ‖₂
    bound_rhs       : float
    condition_ok    : bool
    runtime_ms      : float
    seed            : int
    reference_id    : str
    objective       : float         # sketched program (dual objective for non-smooth losses)
    converged       : bool
    iterations      : int
    t               : int                   = 0
    cumulative_bound: float|None            = None
    rel_err_arbitrary: float|None           = None
    dual            : np.ndarray|None       = None
    dual_objective  : float|None            = None


def _provenance_id(A: np.ndarray, loss: losses.LossModel, lam: float, opts: solvers.SolveOptions) -> str:
    h = hashlib.blake2b(digest_size=8)
    h.update(repr(A.shape).encode())
    h.update(np.ascontiguousarray(A).tobytes())
    h.update(loss.fingerprint())
    h.update(repr(float(lam)).encode())
    h.update(opts.fingerprint().encode())
    return h.hexdigest()


def primal_objective(A, loss: losses.LossModel, lam: float, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return loss.value(A @ x) + 0.5*lam*float(x @ x)


def reference_solution(A, loss: losses.LossModel, lam: float, opts: solvers.SolveOptions = solvers.SolveOptions()) -> Reference:
    """x* of f(Ax) + (λ/2)‖x‖², tagged with a digest of (A, loss, λ, options)."""
    A = numkit.as_dense(A, 'A')
    pid = _provenance_id(A, loss, lam, opts)
    if isinstance(loss, losses.NonSmoothLossModel):
        pair = solvers.solve_nonsmooth_primal_reference(A, loss, lam, opts)
        return Reference(pair.x, primal_objective(A, loss, lam, pair.x), pair.result.converged, pid, pair.z)
    res = solvers.solve_primal_reference(A, loss, lam, opts)
    return Reference(res.minimizer, res.objective, res.converged, pid)


def relative_error(x, x_star) -> float:
    """‖x − x*‖/‖x*‖, or the absolute error when x* = 0."""
    err = float(np.linalg.norm(np.asarray(x)-x_star))
    scale = float(np.linalg.norm(x_star))
    return err/scale if scale > 0 else err


def zero_order(q_s, alpha) -> np.ndarray:
    q_s = numkit.as_dense(q_s, 'q_s')
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape!=(q_s.shape[1],):
        raise ValueError(f'alpha must have length {q_s.shape[1]}, got shape {alpha.shape}')
    return q_s @ alpha


def first_order(A, loss: losses.SmoothLossModel, lam: float, v) -> np.ndarray:
    """G_λ(v) = −Aᵀ∇f(Av)/λ, which equals v − ∇F(v)/λ."""
    A = numkit.as_dense(A, 'A')
    if not lam > 0:
        raise ValueError(f'λ must be positive, got {lam}')
    return _dual_map(A, loss, lam, A @ np.asarray(v, dtype=np.float64))


def _dual_map(A: np.ndarray, loss: losses.SmoothLossModel, lam: float, image: np.ndarray) -> np.ndarray:
    return -(A.T @ loss.gradient(image))/lam


def _elapsed_ms(started: float) -> float:
    return 1000.*(time.perf_counter()-started)


def _ensure_reference(A, loss, lam, opts, reference: Reference|None) -> Reference:
    return reference if reference is not None else reference_solution(A, loss, lam, opts)


def _smooth_report(A: np.ndarray, loss: losses.SmoothLossModel, lam: float, q_s: np.ndarray, a_q: np.ndarray, opts: solvers.SolveOptions,
                   reference: Reference, seed: int, started: float, residual_norm: float|None = None) -> RecoveryReport:
    res = solvers.solve_sketched(a_q, loss, lam, opts)
    x0 = q_s @ res.minimizer
    x1 = _dual_map(A, loss, lam, a_q @ res.minimizer)
    if residual_norm is None:
        residual_norm = embeddings.projection_residual_norm(A, q_s)
    rel0 = relative_error(x0, reference.x)
    mu = loss.smoothness
    return RecoveryReport(
        alpha=res.minimizer, x0=x0, x1=x1,
        rel_err_x0=rel0, rel_err_x1=relative_error(x1, reference.x),
        residual_norm=residual_norm,
        bound_rhs=analysis.first_order_bound(mu, lam, residual_norm, rel0),
        condition_ok=analysis.first_order_condition(mu, lam, residual_norm),
        runtime_ms=_elapsed_ms(started), seed=seed, reference_id=reference.provenance_id,
        objective=res.objective, converged=res.converged and reference.converged, iterations=res.iterations,
    )


def recover_adaptive(A, loss: losses.SmoothLossModel, lam: float, spec: embeddings.EmbeddingSpec, opts: solvers.SolveOptions = solvers.SolveOptions(),
                     reference: Reference|None = None) -> RecoveryReport:
    """Adaptive pipeline: build S = (AᵀA)^q AᵀS̃, whiten, solve the sketched program and
    map back. Certificate fields use Ẑ = ‖P_S^⊥Aᵀ‖₂."""
    started = time.perf_counter()
    A = numkit.as_dense(A, 'A')
    if not spec.kind.is_adaptive:
        raise ValueError(f'recover_adaptive needs an adaptive embedding, got {spec.kind.value}')
    reference = _ensure_reference(A, loss, lam, opts, reference)
    sketch = embeddings.build_sketch(A, spec)
    return _smooth_report(A, loss, lam, sketch.q_s, sketch.a_qs, opts, reference, spec.rng.seed, started)


def recover_oblivious(A, loss: losses.SmoothLossModel, lam: float, spec: embeddings.EmbeddingSpec, opts: solvers.SolveOptions = solvers.SolveOptions(),
                      reference: Reference|None = None) -> RecoveryReport:
    """Whitened oblivious Gaussian or SRHT sketch, otherwise as recover_adaptive."""
    started = time.perf_counter()
    A = numkit.as_dense(A, 'A')
    if spec.kind.is_adaptive:
        raise ValueError(f'recover_oblivious needs an oblivious embedding, got {spec.kind.value}')
    reference = _ensure_reference(A, loss, lam, opts, reference)
    sketch = embeddings.build_sketch(A, spec)
    return _smooth_report(A, loss, lam, sketch.q_s, sketch.a_qs, opts, reference, spec.rng.seed, started)


def recover_nystrom(A, loss: losses.SmoothLossModel, lam: float, m: int, rng: numkit.SeededRng, opts: solvers.SolveOptions = solvers.SolveOptions(),
                    reference: Reference|None = None, q: int = 0) -> RecoveryReport:
    """Nyström baseline: S̃ samples m coordinates uniformly without replacement."""
    spec = embeddings.EmbeddingSpec(embeddings.EmbeddingKind.ColumnSubsample, m, q, rng)
    return recover_adaptive(A, loss, lam, spec, opts, reference)


def recover_oblivious_dagger(A, loss: losses.SmoothLossModel, lam: float, m: int, rng: numkit.SeededRng, opts: solvers.SolveOptions = solvers.SolveOptions(),
                             reference: Reference|None = None) -> RecoveryReport:
    """Unbiased oblivious baseline: Q with i.i.d. N(0, 1/m) entries, used without whitening,
    α*† = argmin f(AQα) + (λ/2)‖α‖² and x̂¹† = −Aᵀ∇f(AQα*†)/λ."""
    started = time.perf_counter()
    A = numkit.as_dense(A, 'A')
    reference = _ensure_reference(A, loss, lam, opts, reference)
    spec = embeddings.EmbeddingSpec(embeddings.EmbeddingKind.ObliviousGaussian, m, rng=rng)
    Q = embeddings.build_oblivious_gaussian(A.shape[1], spec)
    residual = embeddings.projection_residual_norm(A, embeddings.whiten(Q))
    return _smooth_report(A, loss, lam, Q, A @ Q, opts, reference, rng.seed, started, residual)


def recover_sketched_direct(A, loss: losses.SmoothLossModel, lam: float, spec: embeddings.EmbeddingSpec, opts: solvers.SolveOptions = solvers.SolveOptions(),
                            reference: Reference|None = None) -> RecoveryReport:
    """The sketched program with S itself and regularizer (λ/2)‖Sα‖², before whitening.
    Yields the same x̂⁰ and x̂¹ as the whitened pipeline."""
    started = time.perf_counter()
    A = numkit.as_dense(A, 'A')
    reference = _ensure_reference(A, loss, lam, opts, reference)
    sketch = embeddings.build_sketch(A, spec)
    res = solvers.solve_sketched_direct(A, sketch.s, loss, lam, opts)
    x0 = sketch.s @ res.minimizer
    x1 = first_order(A, loss, lam, x0)
    residual_norm = embeddings.projection_residual_norm(A, sketch.q_s)
    rel0 = relative_error(x0, reference.x)
    mu = loss.smoothness
    return RecoveryReport(
        alpha=res.minimizer, x0=x0, x1=x1,
        rel_err_x0=rel0, rel_err_x1=relative_error(x1, reference.x),
        residual_norm=residual_norm,
        bound_rhs=analysis.first_order_bound(mu, lam, residual_norm, rel0),
        condition_ok=analysis.first_order_condition(mu, lam, residual_norm),
        runtime_ms=_elapsed_ms(started), seed=spec.rng.seed, reference_id=reference.provenance_id,
        objective=res.objective, converged=res.converged and reference.converged, iterations=res.iterations,
    )


def recover_iterative(A, loss: losses.SmoothLossModel, lam: float, spec: embeddings.EmbeddingSpec, T: int, opts: solvers.SolveOptions = solvers.SolveOptions(),
                      reference: Reference|None = None) -> list[RecoveryReport]:
    """Iterative refinement on a single sketch: x̂₀ = 0 and
    x̂ₜ = −Aᵀ∇f(AQ_Sαₜ + Ax̂ₜ₋₁)/λ, αₜ minimizing f(AQ_Sα + Ax̂ₜ₋₁) + (λ/2)‖α + Q_Sᵀx̂ₜ₋₁‖².

    Report t carries the per-step bound √(μ/2λ)·Ẑ·rel_err(t−1) (rel_err(0) = 1) as
    bound_rhs and (μẐ²/2λ)^(t/2) as cumulative_bound. Stops early once the error drops
    below 1e-12 or a sketched solve fails to converge."""
    started = time.perf_counter()
    if T < 1:
        raise ValueError(f'T must be at least 1, got {T}')
    A = numkit.as_dense(A, 'A')
    if not spec.kind.is_adaptive:
        raise ValueError(f'recover_iterative needs an adaptive embedding, got {spec.kind.value}')
    reference = _ensure_reference(A, loss, lam, opts, reference)
    sketch = embeddings.build_sketch(A, spec)
    residual_norm = embeddings.projection_residual_norm(A, sketch.q_s)
    mu = loss.smoothness
    rate = math.sqrt(mu/(2.*lam))*residual_norm
    condition_ok = analysis.first_order_condition(mu, lam, residual_norm)

    reports: list[RecoveryReport] = []
    x_prev = np.zeros(A.shape[1])
    prev_err = 1.
    for t in range(1, T+1):
        image = A @ x_prev
        res = solvers.solve_sketched_shifted(sketch.a_qs, image, sketch.q_s.T @ x_prev, loss, lam, opts)
        x0 = sketch.q_s @ res.minimizer + x_prev
        x1 = _dual_map(A, loss, lam, sketch.a_qs @ res.minimizer + image)
        err = relative_error(x1, reference.x)
        reports.append(RecoveryReport(
            alpha=res.minimizer, x0=x0, x1=x1,
            rel_err_x0=relative_error(x0, reference.x), rel_err_x1=err,
            residual_norm=residual_norm, bound_rhs=rate*prev_err, condition_ok=condition_ok,
            runtime_ms=_elapsed_ms(started), seed=spec.rng.seed, reference_id=reference.provenance_id,
            objective=res.objective, converged=res.converged and reference.converged, iterations=res.iterations,
            t=t, cumulative_bound=rate**t,
        ))
        if err < ITERATIVE_ERROR_FLOOR or not res.converged:
            break
        x_prev = x1
        prev_err = err
    return reports


def _dual_objective(B: np.ndarray, c: np.ndarray, lam: float, y: np.ndarray) -> float:
    By = B @ y
    return float(c @ y) + 0.5*float(By @ By)/lam


def recover_nonsmooth(A, loss: losses.NonSmoothLossModel, lam: float, spec: embeddings.EmbeddingSpec, route: DualRoute = DualRoute.RestrictedDual,
                      opts: solvers.SolveOptions = solvers.SolveOptions(), reference: Reference|None = None) -> RecoveryReport:
    """Non-smooth recovery through the sketched dual min f*(y) + (1/2λ)‖Q_SᵀAᵀy‖².

    The plain route solves it over dom f* and sets α*† = −Q_SᵀAᵀy*/λ. The restricted route
    then re-solves over ∂f(AQ_Sα*†) as described by its subgradient partition: fixed
    coordinates are pinned, tied coordinates range over their interval (or, for L∞, the
    signed simplex of the active set). It is warm-started from the plain solution
    projected onto that set. Both return x̂¹ = −Aᵀy*/λ. The report also carries the error of the
    arbitrary-subgradient estimator −Aᵀg/λ, g ∈ ∂f(AQ_Sα*†), and the absolute bound
    √6·(L/λ)·Ẑ as bound_rhs."""
    started = time.perf_counter()
    A = numkit.as_dense(A, 'A')
    route = DualRoute(route)
    if not spec.kind.is_adaptive:
        raise ValueError(f'recover_nonsmooth needs an adaptive embedding, got {spec.kind.value}')
    reference = _ensure_reference(A, loss, lam, opts, reference)
    sketch = embeddings.build_sketch(A, spec)
    B = sketch.a_qs.T
    c = loss.conjugate_linear_term

    plain = solvers.solve_dual_projected(loss, B, c, lam, loss.dual_feasible_set(), opts)
    alpha = -(B @ plain.minimizer)/lam
    w = sketch.a_qs @ alpha
    y, dual_objective, converged, iterations = plain.minimizer, plain.objective, plain.converged, plain.iterations

    if route==DualRoute.RestrictedDual:
        tie = PARTITION_TIE_FACTOR*(1.+float(np.max(np.abs(w), initial=0.)))
        partition = loss.subgradient_partition(w, tie)
        feasible = loss.restricted_feasible_set(partition)
        if isinstance(feasible, losses.Box) and np.array_equal(feasible.lows, feasible.highs):
            # singleton subdifferential, nothing to optimize
            y = feasible.lows.copy()
            dual_objective = _dual_objective(B, c, lam, y)
            iterations = 0
        else:
            y0 = solvers.project(plain.minimizer, feasible)
            restricted = solvers.solve_dual_projected(loss, B, c, lam, feasible, opts, y0=y0)
            y, dual_objective, iterations = restricted.minimizer, restricted.objective, plain.iterations+restricted.iterations
            converged = converged and restricted.converged

    x0 = sketch.q_s @ alpha
    x1 = -(A.T @ y)/lam
    x_arbitrary = -(A.T @ loss.arbitrary_subgradient(w))/lam
    residual_norm = embeddings.projection_residual_norm(A, sketch.q_s)
    return RecoveryReport(
        alpha=alpha, x0=x0, x1=x1,
        rel_err_x0=relative_error(x0, reference.x), rel_err_x1=relative_error(x1, reference.x),
        residual_norm=residual_norm,
        bound_rhs=analysis.nonsmooth_bound(loss.lipschitz, lam, residual_norm),
        condition_ok=True,
        runtime_ms=_elapsed_ms(started), seed=spec.rng.seed, reference_id=reference.provenance_id,
        objective=dual_objective, converged=converged and reference.converged, iterations=iterations,
        rel_err_arbitrary=relative_error(x_arbitrary, reference.x),
        dual=y, dual_objective=dual_objective,
    )

"""Certificate suites: each one runs a desk-scale protocol and checks that the guarantee it
names holds on every checked case. Suites use their own fixed instance sizes and trial
counts, seeded from the configured seed."""

import dataclasses
import json
import math
import pathlib
import typing

import numpy as np

from .. import analysis, embeddings, estimators, kernelize, losses, numkit, solvers, synth, utils
from ..config import CertifySuite, EmbeddingChoice, Experiment, ExperimentConfig
from . import printer

# fixed desk-scale protocol constants
FULL_RANK_TOLERANCE     = 1e-6
EQUIVALENCE_TOLERANCE   = 1e-6
KERNEL_TOLERANCE        = 1e-8
ROUTE_TOLERANCE         = 1e-6
RISK_TOLERANCE          = 0.05
RISK_EVENT_RATE         = 0.9
SRHT_PASS_RATE          = 0.94
FD_TOLERANCE            = 1e-5
FENCHEL_YOUNG_TOLERANCE = 1e-8
LAMBDA_MARGIN           = 1.01

_tight = solvers.SolveOptions(grad_tolerance=1e-12, max_iters=200)


@dataclasses.dataclass
class CertificateResult:
    name    : str
    passed  : bool
    checked : int
    skipped : int
    failures: list[str]                 = dataclasses.field(default_factory=list)
    details : dict[str, typing.Any]     = dataclasses.field(default_factory=dict)


class _Tally:
    def __init__(self, name: str):
        self.name       = name
        self.checked    = 0
        self.skipped    = 0
        self.failures: list[str] = []
        self.details: dict[str, typing.Any] = {}

    def check(self, ok: bool|None, label: str):
        # None: the guarantee does not apply to this case
        if ok is None:
            self.skipped += 1
            return
        self.checked += 1
        if not ok:
            self.failures.append(label)

    def result(self, passed: bool|None = None) -> CertificateResult:
        if passed is None:
            passed = not self.failures
        return CertificateResult(self.name, passed, self.checked, self.skipped, self.failures, self.details)


def _instance(n: int, d: int, spec: synth.SpectrumSpec, rng: numkit.SeededRng) -> tuple[np.ndarray, analysis.SpectralSummary, np.ndarray]:
    A, summary = synth.synth_matrix(n, d, spec, rng.spawn('matrix'))
    return A, summary, synth.synth_labels(n, rng.spawn('labels'))


def _exp_decay(nu: float = 0.2) -> synth.SpectrumSpec:
    return synth.SpectrumSpec(synth.Decay.Exponential, nu=nu)


_SMOOTH = (losses.LossKind.Quadratic, losses.LossKind.Logistic, losses.LossKind.ReluType)
_NONSMOOTH = (losses.LossKind.L1, losses.LossKind.Linf, losses.LossKind.Hinge)


def full_rank(rng: numkit.SeededRng) -> CertificateResult:
    """A sketch spanning the row space recovers x* exactly: both errors at the solver floor."""
    tally = _Tally(CertifySuite.FullRank.value)
    n, d, lam = 30, 50, 1e-2
    A, _, target = _instance(n, d, _exp_decay(), rng)
    for kind in _SMOOTH:
        loss = losses.make(kind, target)
        spec = embeddings.EmbeddingSpec(embeddings.EmbeddingKind.AdaptiveGaussian, n, rng=rng.spawn('sketch', kind.value))
        rep = estimators.recover_adaptive(A, loss, lam, spec, _tight)
        tally.check(rep.rel_err_x0 <= FULL_RANK_TOLERANCE and rep.rel_err_x1 <= FULL_RANK_TOLERANCE,
                    f'{kind.value}: rel_err_x0={rep.rel_err_x0:.3g}, rel_err_x1={rep.rel_err_x1:.3g}')
    return tally.result()


def _certified_lambda(loss: losses.SmoothLossModel, summary: analysis.SpectralSummary, k: int) -> float:
    return 2.*loss.smoothness*(analysis.GAUSSIAN_RESIDUAL_CONSTANT*analysis.spectral_residual(summary, k))**2*LAMBDA_MARGIN


def first_order(rng: numkit.SeededRng, seeds: int = 10, ks: typing.Sequence[int] = (8, 16, 32)) -> CertificateResult:
    """rel_err_x1 ≤ √(μ/2λ)·Ẑ·min{1, rel_err_x0} with λ just above 2μ(26R_k)², adaptive
    Gaussian sketches of size 2k. Cases where λ ≥ 2μẐ² fails are skipped."""
    tally = _Tally(CertifySuite.FirstOrder.value)
    n, d = 200, 400
    for s in range(seeds):
        A, summary, target = _instance(n, d, _exp_decay(), rng.spawn(s))
        for kind in _SMOOTH:
            loss = losses.make(kind, target)
            for k in ks:
                lam = _certified_lambda(loss, summary, k)
                spec = embeddings.EmbeddingSpec(embeddings.EmbeddingKind.AdaptiveGaussian, 2*k, rng=rng.spawn(s, 'sketch', k))
                rep = estimators.recover_adaptive(A, loss, lam, spec)
                ok = analysis.first_order_certificate(rep.rel_err_x1, rep.rel_err_x0, rep.residual_norm, loss.smoothness, lam)
                tally.check(ok, f'seed {s}, {kind.value}, k={k}: rel_err_x1={rep.rel_err_x1:.3g} > bound {rep.bound_rhs:.3g}')
    return tally.result()


def residual_gaussian(rng: numkit.SeededRng, seeds: int = 20, ks: typing.Sequence[int] = (8, 16, 32)) -> CertificateResult:
    """‖P_S^⊥Aᵀ‖₂ ≤ 26·R_k for adaptive Gaussian sketches of size 2k."""
    tally = _Tally(CertifySuite.ResidualGaussian.value)
    n, d = 200, 400
    for s in range(seeds):
        A, summary, _ = _instance(n, d, _exp_decay(), rng.spawn(s))
        for k in ks:
            spec = embeddings.EmbeddingSpec(embeddings.EmbeddingKind.AdaptiveGaussian, 2*k, rng=rng.spawn(s, 'sketch', k))
            residual = embeddings.projection_residual_norm(A, embeddings.build_sketch(A, spec).q_s)
            tally.check(analysis.residual_certificate(residual, summary, k),
                        f'seed {s}, k={k}: residual {residual:.4g} > 26·R_k = {26.*analysis.spectral_residual(summary, k):.4g}')
    return tally.result()


def residual_srht(rng: numkit.SeededRng, seeds: int = 10, k: int = 8) -> CertificateResult:
    """‖P_S^⊥Aᵀ‖₂ ≤ 5·R_k for adaptive SRHT sketches at the guaranteed sketch size, in at
    least 94% of draws."""
    tally = _Tally(CertifySuite.ResidualSRHT.value)
    n, d = 1024, 512
    m = embeddings.srht_sketch_size(k, n)
    A, summary, _ = _instance(n, d, _exp_decay(), rng.spawn('instance'))
    for s in range(seeds):
        spec = embeddings.EmbeddingSpec(embeddings.EmbeddingKind.AdaptiveSRHT, m, rng=rng.spawn(s, 'sketch'))
        residual = embeddings.projection_residual_norm(A, embeddings.build_sketch(A, spec).q_s)
        tally.check(analysis.residual_certificate(residual, summary, k, analysis.SRHT_RESIDUAL_CONSTANT),
                    f'seed {s}: residual {residual:.4g}')
    tally.details.update(m=m, required=math.ceil(SRHT_PASS_RATE*seeds))
    return tally.result(tally.checked-len(tally.failures) >= math.ceil(SRHT_PASS_RATE*seeds))


def iterative(rng: numkit.SeededRng, seeds: int = 10, k: int = 16, T: int = 5) -> CertificateResult:
    """Per-step contraction and the cumulative bound of the iterative method, λ as in the
    first-order suite."""
    tally = _Tally(CertifySuite.Iterative.value)
    n, d = 200, 400
    for s in range(seeds):
        A, summary, target = _instance(n, d, _exp_decay(), rng.spawn(s))
        for kind in _SMOOTH:
            loss = losses.make(kind, target)
            lam = _certified_lambda(loss, summary, k)
            spec = embeddings.EmbeddingSpec(embeddings.EmbeddingKind.AdaptiveGaussian, 2*k, rng=rng.spawn(s, 'sketch'))
            reports = estimators.recover_iterative(A, loss, lam, spec, T)
            errs = [r.rel_err_x1 for r in reports]
            tally.check(analysis.contraction_certificate(errs, loss.smoothness, lam, reports[0].residual_norm),
                        f'seed {s}, {kind.value}: errors {", ".join(f"{e:.3g}" for e in errs)}')
    return tally.result()


def conditioning(rng: numkit.SeededRng, instances: int = 20) -> CertificateResult:
    """κ† ≤ κ for whitened sketches of the quadratic program."""
    tally = _Tally(CertifySuite.Conditioning.value)
    n, d, m, lam = 80, 120, 20, 1e-3
    for s in range(instances):
        A, _, _ = _instance(n, d, _exp_decay(), rng.spawn(s))
        for kind in (embeddings.EmbeddingKind.AdaptiveGaussian, embeddings.EmbeddingKind.ObliviousGaussian):
            q_s = embeddings.build_sketch(A, embeddings.EmbeddingSpec(kind, m, rng=rng.spawn(s, kind.value))).q_s
            kappa, kappa_dagger = analysis.condition_numbers(A, q_s, lam)
            tally.check(kappa_dagger <= kappa*(1.+1e-9), f'instance {s}, {kind.value}: κ†={kappa_dagger:.6g} > κ={kappa:.6g}')
    return tally.result()


def whitening(rng: numkit.SeededRng, instances: int = 10) -> CertificateResult:
    """The sketched program with S and with Q_S give the same x̂⁰ and x̂¹."""
    tally = _Tally(CertifySuite.Whitening.value)
    n, d, m, lam = 60, 100, 10, 1e-2
    for s in range(instances):
        A, _, target = _instance(n, d, _exp_decay(), rng.spawn(s))
        kind = _SMOOTH[s % len(_SMOOTH)]
        loss = losses.make(kind, target)
        reference = estimators.reference_solution(A, loss, lam, _tight)
        spec = embeddings.EmbeddingSpec(embeddings.EmbeddingKind.AdaptiveGaussian, m, rng=rng.spawn(s, 'sketch'))
        whitened = estimators.recover_adaptive(A, loss, lam, spec, _tight, reference)
        direct = estimators.recover_sketched_direct(A, loss, lam, spec, _tight, reference)
        scale = max(float(np.linalg.norm(reference.x)), np.finfo(float).tiny)
        gap0 = float(np.linalg.norm(whitened.x0-direct.x0))/scale
        gap1 = float(np.linalg.norm(whitened.x1-direct.x1))/scale
        tally.check(gap0 <= EQUIVALENCE_TOLERANCE and gap1 <= EQUIVALENCE_TOLERANCE,
                    f'instance {s}, {kind.value}: x̂⁰ gap {gap0:.3g}, x̂¹ gap {gap1:.3g}')
    return tally.result()


def zero_order_floor(rng: numkit.SeededRng, trials: int = 100) -> CertificateResult:
    """Mean rel_err_x0² ≥ (1 − m/d) − 3·SE for whitened oblivious sketches."""
    tally = _Tally(CertifySuite.ZeroOrderFloor.value)
    n, d, lam = 60, 200, 1e-3
    A, _, target = _instance(n, d, _exp_decay(), rng.spawn('instance'))
    loss = losses.make(losses.LossKind.Quadratic, target)
    for kind in (embeddings.EmbeddingKind.ObliviousGaussian, embeddings.EmbeddingKind.ObliviousSRHT):
        for m in (20, 50, 100):
            res = analysis.zero_order_floor_check(A, loss, lam, kind, m, trials, rng.spawn(kind.value, m))
            tally.check(res.passed, f'{kind.value}, m={m}: mean {res.mean:.4g} < {res.bound:.4g} − 3·{res.se:.3g}')
            tally.details[f'{kind.value}/m={m}'] = res._asdict()
    return tally.result()


def first_order_floor(rng: numkit.SeededRng, trials: int = 100) -> CertificateResult:
    """The first-order lower bound for oblivious Gaussian sketches on the aligned instance."""
    tally = _Tally(CertifySuite.FirstOrderFloor.value)
    n = d = 60
    A, _, _ = _instance(n, d, _exp_decay(), rng.spawn('instance'))
    res = analysis.aligned_instance_check(A, 1e-3, 15, trials, rng.spawn('sketches'))
    tally.check(res.passed, f'mean {res.mean:.4g} < {res.bound:.4g} − 3·{res.se:.3g}')
    tally.details.update(res._asdict())
    return tally.result()


def nonsmooth(rng: numkit.SeededRng, seeds: int = 3, ms: typing.Sequence[int] = (32, 64)) -> CertificateResult:
    """‖x̂¹ − x*‖ ≤ √6·(L/λ)·Ẑ on every run, and the restricted and plain sketched duals
    reaching the same objective."""
    tally = _Tally(CertifySuite.Nonsmooth.value)
    n, d, lam = 100, 200, 0.01
    opts = solvers.SolveOptions(grad_tolerance=1e-10, max_iters=20000)
    spectrum = synth.SpectrumSpec(synth.Decay.Geometric, ratio=0.98)
    for s in range(seeds):
        A, _, target = _instance(n, d, spectrum, rng.spawn(s))
        for kind in _NONSMOOTH:
            loss = losses.make(kind, target)
            reference = estimators.reference_solution(A, loss, lam, opts)
            for m in ms:
                spec = embeddings.EmbeddingSpec(embeddings.EmbeddingKind.AdaptiveGaussian, m, rng=rng.spawn(s, 'sketch', m))
                restricted = estimators.recover_nonsmooth(A, loss, lam, spec, estimators.DualRoute.RestrictedDual, opts, reference)
                plain = estimators.recover_nonsmooth(A, loss, lam, spec, estimators.DualRoute.PlainSketchedDual, opts, reference)
                err = float(np.linalg.norm(restricted.x1-reference.x))
                tally.check(analysis.nonsmooth_certificate(err, loss.lipschitz, lam, restricted.residual_norm),
                            f'seed {s}, {kind.value}, m={m}: error {err:.4g} > bound {restricted.bound_rhs:.4g}')
                gap = abs(restricted.dual_objective-plain.dual_objective)
                tally.check(gap <= ROUTE_TOLERANCE*max(1., abs(plain.dual_objective)),
                            f'seed {s}, {kind.value}, m={m}: restricted and plain dual objectives differ by {gap:.3g}')
    return tally.result()


def kernel(rng: numkit.SeededRng, instances: int = 10) -> CertificateResult:
    """The feature pipeline and the kernel pipeline with K = AAᵀ and a shared S̃ give the
    same first-order estimate, and the RKHS error equals the Euclidean error."""
    tally = _Tally(CertifySuite.Kernel.value)
    n, d, m, lam = 60, 100, 10, 1e-2
    for s in range(instances):
        A, _, target = _instance(n, d, _exp_decay(), rng.spawn(s))
        kind = (losses.LossKind.Quadratic, losses.LossKind.Logistic)[s % 2]
        loss = losses.make(kind, target)
        K = kernelize.gram_from_features(A)
        spec = embeddings.EmbeddingSpec(embeddings.EmbeddingKind.AdaptiveGaussian, m, rng=rng.spawn(s, 'sketch'))
        s_tilde = embeddings.draw_s_tilde(n, spec)

        sketch = embeddings.build_sketch(A, spec, s_tilde=s_tilde)
        alpha = solvers.solve_sketched(sketch.a_qs, loss, lam, _tight).minimizer
        x1 = estimators.first_order(A, loss, lam, sketch.q_s @ alpha)
        alpha_k, _ = kernelize.solve_sketched_kernel(K, s_tilde, loss, lam, _tight)
        w1 = kernelize.kernel_first_order(K, s_tilde, alpha_k, loss, lam)
        gap = estimators.relative_error(A.T @ w1, x1)
        tally.check(gap <= KERNEL_TOLERANCE, f'instance {s}, {kind.value}: feature and kernel estimates differ by {gap:.3g}')

        x_star = estimators.reference_solution(A, loss, lam, _tight).x
        w_star, _ = kernelize.solve_kernel_reference(K, loss, lam, _tight)
        rkhs = kernelize.rkhs_distance(K, w1, w_star)/kernelize.rkhs_distance(K, w_star, np.zeros(n))
        euclid = estimators.relative_error(A.T @ w1, x_star)
        tally.check(abs(rkhs-euclid) <= EQUIVALENCE_TOLERANCE, f'instance {s}, {kind.value}: RKHS {rkhs:.6g} vs Euclidean {euclid:.6g}')
    return tally.result()


def risk(rng: numkit.SeededRng, draws: int = 10, noise_draws: int = 200) -> CertificateResult:
    """Monte-Carlo risk of the zero-order estimator within 5% of σ²m/n + ‖P_{AS}^⊥A‖₂² at
    m = 4·d_s, and the conditioning event ‖P_{AS}^⊥A‖₂² ≤ σ²_{d_s+1}/2 in at least 90%
    of sketch draws."""
    tally = _Tally(CertifySuite.Risk.value)
    n, d, lam, sigma2 = 200, 400, 1e-8, 1.
    A, summary, _ = _instance(n, d, _exp_decay(), rng.spawn('instance'))
    d_s = analysis.statistical_dimension(summary, sigma2, n)
    m = min(4*d_s, d)
    events = 0
    for s in range(draws):
        spec = embeddings.EmbeddingSpec(embeddings.EmbeddingKind.AdaptiveGaussian, m, rng=rng.spawn(s, 'sketch'))
        est = analysis.risk_zero_order(A, spec, sigma2, lam, noise_draws, rng.spawn(s, 'noise'))
        gap = abs(est.mc_risk-est.analytic_limit)/est.analytic_limit
        tally.check(gap <= RISK_TOLERANCE, f'draw {s}: Monte-Carlo risk {est.mc_risk:.4g} vs limit {est.analytic_limit:.4g}')
        residual = analysis.range_residual_norm(A, embeddings.build_sketch(A, spec).a_qs)
        events += analysis.minimax_event(summary, residual, d_s)
    tally.details.update(statistical_dimension=d_s, m=m, event_rate=events/draws)
    if events < math.ceil(RISK_EVENT_RATE*draws):
        tally.failures.append(f'event held in {events}/{draws} sketch draws')
    return tally.result()


def _central_difference(f: typing.Callable[[np.ndarray], float], w: np.ndarray, h: float = 1e-6) -> np.ndarray:
    g = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (f(w+e)-f(w-e))/(2.*h)
    return g


def loss_numerics(rng: numkit.SeededRng, n: int = 20, points: int = 100, pairs: int = 1000) -> CertificateResult:
    """Gradients against central differences, the Fenchel–Young equality at (sub)gradient
    pairs, and the smoothness and Lipschitz constants on random pairs."""
    tally = _Tally(CertifySuite.Losses.value)
    gen = rng.generator()
    target = synth.synth_labels(n, rng.spawn('labels'))
    for kind in _SMOOTH+_NONSMOOTH:
        loss = losses.make(kind, target)
        for p in range(points):
            w = gen.normal(0., 2., n)
            if kind.is_smooth:
                g = loss.gradient(w)
                fd = _central_difference(loss.value, w)
                rel = float(np.linalg.norm(fd-g))/max(float(np.linalg.norm(g)), 1e-12)
                tally.check(rel <= FD_TOLERANCE, f'{kind.value}, point {p}: gradient off by {rel:.3g} relative')
            else:
                g = loss.arbitrary_subgradient(w)
            lhs = loss.value(w) + loss.conjugate_value(g)
            rhs = float(w @ g)
            tally.check(abs(lhs-rhs) <= FENCHEL_YOUNG_TOLERANCE*max(1., abs(lhs), abs(rhs)),
                        f'{kind.value}, point {p}: f(w) + f*(g) = {lhs:.12g} but ⟨w, g⟩ = {rhs:.12g}')

        violations = 0
        for _ in range(pairs):
            w, v = gen.normal(0., 2., n), gen.normal(0., 2., n)
            dist = float(np.linalg.norm(w-v))
            if kind.is_smooth:
                ok = float(np.linalg.norm(loss.gradient(w)-loss.gradient(v))) <= loss.smoothness*dist*(1.+1e-9) + 1e-15
            else:
                ok = abs(loss.value(w)-loss.value(v)) <= loss.lipschitz*dist*(1.+1e-9) + 1e-12
            violations += not ok
        tally.check(violations==0, f'{kind.value}: {violations}/{pairs} pairs violate the {"smoothness" if kind.is_smooth else "Lipschitz"} constant')
    return tally.result()


def _comparable(rows) -> list[dict[str, typing.Any]]:
    # runtime_ms is the only wall-clock column
    return [{k: v for k, v in dataclasses.asdict(r).items() if k!='runtime_ms'} for r in rows]


def infrastructure(rng: numkit.SeededRng, shapes: int = 20) -> CertificateResult:
    """SRHT orthogonality, whitening invariants, run determinism and SVD reconstruction."""
    from .recover import run_trial
    tally = _Tally(CertifySuite.Infrastructure.value)
    gen = rng.generator()

    p = 128
    for m in (8, 32, 128):
        S = embeddings.build_oblivious_srht(p, embeddings.EmbeddingSpec(embeddings.EmbeddingKind.ObliviousSRHT, m, rng=rng.spawn('srht', m)))
        dev = float(np.max(np.abs(S.T @ S - (p/m)*np.eye(m))))
        tally.check(dev <= 1e-10*max(1., p/m), f'SRHT m={m}: SᵀS deviates from (p/m)I by {dev:.3g}')

    for i in range(shapes):
        rows, cols = (int(v) for v in gen.integers(1, 60, size=2))
        M = gen.standard_normal((rows, cols))*gen.uniform(0.1, 10.)
        svd = numkit.thin_svd(M)
        dev = float(np.max(np.abs(svd.reconstruct()-M)))
        tally.check(dev <= 1e-8*svd.singular_values[0], f'thin_svd {rows}x{cols}: reconstruction off by {dev:.3g}')

        S = gen.standard_normal((max(rows, cols), min(rows, cols)))
        Q = embeddings.whiten(S)
        ortho = float(np.max(np.abs(Q.T @ Q - np.eye(Q.shape[1]))))
        span = float(np.linalg.norm(S - Q @ (Q.T @ S)))/float(np.linalg.norm(S))
        tally.check(ortho <= 1e-10 and span <= 1e-10, f'whiten {S.shape}: orthogonality {ortho:.3g}, range {span:.3g}')

    cfg = ExperimentConfig(experiment=Experiment.Recover, n=40, d=60, loss=losses.LossKind.Logistic, lam=1e-3,
                           embedding=[EmbeddingChoice.AdaptiveGaussian, EmbeddingChoice.Gaussian, EmbeddingChoice.ObliviousDagger],
                           m=[8, 16], trials=2, seed=rng.seed, quiet=True)
    first = [r for t in range(cfg.trials) for r in run_trial(cfg, t)]
    second = [r for t in range(cfg.trials) for r in run_trial(cfg, t)]
    tally.check(_comparable(first)==_comparable(second), 'recover runs with an identical config and seed differ')
    return tally.result()


_SUITES: dict[CertifySuite, typing.Callable[[numkit.SeededRng], CertificateResult]] = {
    CertifySuite.FullRank:          full_rank,
    CertifySuite.FirstOrder:        first_order,
    CertifySuite.ResidualGaussian:  residual_gaussian,
    CertifySuite.ResidualSRHT:      residual_srht,
    CertifySuite.Iterative:         iterative,
    CertifySuite.Conditioning:      conditioning,
    CertifySuite.Whitening:         whitening,
    CertifySuite.ZeroOrderFloor:    zero_order_floor,
    CertifySuite.FirstOrderFloor:   first_order_floor,
    CertifySuite.Nonsmooth:         nonsmooth,
    CertifySuite.Kernel:            kernel,
    CertifySuite.Risk:              risk,
    CertifySuite.Losses:            loss_numerics,
    CertifySuite.Infrastructure:    infrastructure,
}


def suite_rng(seed: int, suite: CertifySuite) -> numkit.SeededRng:
    return numkit.SeededRng(seed, utils.hash64('certify', suite.value))


def run(cfg: ExperimentConfig) -> list[CertificateResult]:
    """Runs cfg.suite, or every suite for the default one. A suite that raises is reported
    as a failed certificate."""
    suites = list(_SUITES) if cfg.suite==CertifySuite.Default else [cfg.suite]
    progress = printer(cfg.quiet)
    results: list[CertificateResult] = []
    for i, suite in enumerate(suites):
        progress(f'processing: certificate {suite.value} ({i+1}/{len(suites)})')
        try:
            results.append(_SUITES[suite](suite_rng(cfg.seed, suite)))
        except (ValueError, ArithmeticError, numkit.ConvergenceError, np.linalg.LinAlgError) as exc:
            results.append(CertificateResult(suite.value, False, 0, 0, [f'{type(exc).__name__}: {exc}']))
    return results


def format_table(results: typing.Sequence[CertificateResult]) -> str:
    width = max((len(r.name) for r in results), default=0)
    lines = []
    for r in results:
        lines.append(f'{r.name:<{width}}  {"PASS" if r.passed else "FAIL"}  {r.checked} checked, {r.skipped} skipped')
        lines.extend(f'{"":<{width}}    {f}' for f in r.failures[:5])
        if len(r.failures) > 5:
            lines.append(f'{"":<{width}}    ... and {len(r.failures)-5} more')
    return '\n'.join(lines)


def write_results(path: str|pathlib.Path, results: typing.Sequence[CertificateResult]) -> None:
    with utils.atomic_write(path) as f:
        json.dump([dataclasses.asdict(r) for r in results], f, cls=utils.CustomTypeEncoder, indent=2)

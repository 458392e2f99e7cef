"""Kernel ridge programs with the Gram matrix taken from the features (K = AAᵀ), from a
Gaussian kernel on the rows of A, or from random Fourier features of those rows. Errors
are measured in the RKHS norm."""

import dataclasses
import math
import time

import numpy as np

from .. import analysis, embeddings, kernelize, losses, numkit
from ..config import ExperimentConfig
from . import _utils, records


def default_gamma(X: np.ndarray) -> float:
    # 1/(d·Var(X)), the usual "scale" heuristic
    var = float(np.var(X))
    return 1./(X.shape[1]*var) if var > 0 else 1.


def gram_source(cfg: ExperimentConfig, A: np.ndarray, rng: numkit.SeededRng) -> tuple[np.ndarray, kernelize.GramMatrix]:
    """Feature matrix Φ with K = ΦΦᵀ, and K itself."""
    gamma = cfg.kernel['gamma'] if cfg.kernel['gamma'] is not None else default_gamma(A)
    match cfg.kernel['gram']:
        case 'features':
            return A, kernelize.gram_from_features(A)
        case 'gaussian-kernel':
            K = kernelize.gram_gaussian_kernel(A, gamma)
            return kernelize.kernel_square_root(K), K
        case 'rff':
            phi = kernelize.rff_features(A, cfg.kernel['rff_features'], gamma, rng)
            return phi, kernelize.gram_from_features(phi)
        case _:
            raise NotImplementedError(f'Logic is not implemented for gram source {cfg.kernel["gram"]}')


def _rkhs_relative(K: kernelize.GramMatrix, w, w_star) -> float:
    scale = kernelize.rkhs_distance(K, w_star, np.zeros_like(w_star))
    err = kernelize.rkhs_distance(K, w, w_star)
    return err/scale if scale > 0 else err


def run_trial(cfg: ExperimentConfig, trial: int) -> list[records.RunRecord]:
    inst = _utils.build_instance(cfg, trial)
    loss = losses.make(cfg.loss, inst.target)
    opts = cfg.solve_options()
    phi, K = gram_source(cfg, inst.A, inst.rng.spawn('rff'))
    w_star, ref = kernelize.solve_kernel_reference(K, loss, cfg.lam, opts)
    mu = loss.smoothness

    rows: list[records.RunRecord] = []
    for m_index, m in enumerate(cfg.m_grid()):
        rng = _utils.sketch_rng(cfg, trial, m_index)
        for choice in cfg.embedding:
            base = records.base_record(cfg, trial, choice.value, m)
            started = time.perf_counter()
            try:
                spec = embeddings.EmbeddingSpec(choice.embedding_kind, m, rng=rng)
                s_tilde = embeddings.draw_s_tilde(cfg.n, spec)
                alpha, res = kernelize.solve_sketched_kernel(K, s_tilde, loss, cfg.lam, opts)
                w0 = kernelize.kernel_zero_order(s_tilde, alpha)
                w1 = kernelize.kernel_first_order(K, s_tilde, alpha, loss, cfg.lam)
                sketch = embeddings.build_sketch(phi, spec, s_tilde=s_tilde)
                residual = embeddings.projection_residual_norm(phi, sketch.q_s)
            except _utils.CELL_ERRORS as exc:
                rows.append(_utils.report_cell_failure(base, exc))
                continue
            rel0 = _rkhs_relative(K, w0, w_star)
            rows.append(dataclasses.replace(
                base,
                rel_err_x0=rel0, rel_err_x1=_rkhs_relative(K, w1, w_star),
                residual_norm=residual, spectral_residual_k=None,
                bound_rhs=analysis.first_order_bound(mu, cfg.lam, residual, rel0),
                condition_ok=analysis.first_order_condition(mu, cfg.lam, residual),
                objective=res.objective if math.isfinite(res.objective) else None,
                runtime_ms=1000.*(time.perf_counter()-started),
                converged=bool(res.converged and ref.converged), iterations=res.iterations,
            ))
    return rows

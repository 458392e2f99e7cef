"""Prediction risk of the zero-order estimator on noisy linear observations, Monte-Carlo
against its small-λ limit, with the conditioning event on the sketch residual. One fixed
instance; every trial is a fresh sketch draw."""

import dataclasses
import time
import typing

from .. import analysis, embeddings, losses
from ..config import ExperimentConfig
from . import _utils, records

SKETCH_SIZE_FACTOR = 4      # default m = 4·d_s


def statistical_dimension(cfg: ExperimentConfig) -> int:
    summary = analysis.SpectralSummary(cfg.spectrum_spec().singular_values(cfg.n, cfg.d), cfg.n, cfg.d)
    return analysis.statistical_dimension(summary, cfg.risk['noise_variance'], cfg.n)


def sketch_sizes(cfg: ExperimentConfig) -> list[int]:
    return cfg.m_grid() or [min(SKETCH_SIZE_FACTOR*statistical_dimension(cfg), cfg.d)]


def run_trial(cfg: ExperimentConfig, trial: int) -> list[records.RunRecord]:
    inst = _utils.build_instance(cfg, 0)
    sigma2 = cfg.risk['noise_variance']
    d_s = analysis.statistical_dimension(inst.summary, sigma2, cfg.n)

    rows: list[records.RunRecord] = []
    for m_index, m in enumerate(sketch_sizes(cfg)):
        rng = _utils.sketch_rng(cfg, trial, m_index)
        r_k = analysis.spectral_residual(inst.summary, _utils.residual_k(cfg, m))
        for choice in cfg.embedding:
            base = records.base_record(cfg, trial, choice.value, m, loss=losses.LossKind.Quadratic.value)
            started = time.perf_counter()
            try:
                spec = embeddings.EmbeddingSpec(choice.embedding_kind, m, cfg.q, rng)
                est = analysis.risk_zero_order(inst.A, spec, sigma2, cfg.lam, cfg.risk['noise_draws'], rng.spawn('risk'),
                                               cfg.risk['random_directions'])
                sketch = embeddings.build_sketch(inst.A, spec)
                range_residual = analysis.range_residual_norm(inst.A, sketch.a_qs)
            except _utils.CELL_ERRORS as exc:
                rows.append(_utils.report_cell_failure(base, exc))
                continue
            rows.append(dataclasses.replace(
                base,
                residual_norm=range_residual, spectral_residual_k=r_k,
                mc_risk=est.mc_risk, analytic_risk=est.analytic_limit,
                event_ok=analysis.minimax_event(inst.summary, range_residual, d_s),
                runtime_ms=1000.*(time.perf_counter()-started), converged=True,
            ))
    return rows


def summary_extras(cfg: ExperimentConfig, rows: typing.Sequence[records.RunRecord]) -> dict[str, typing.Any]:
    return {'statistical_dimension': statistical_dimension(cfg), 'noise_variance': cfg.risk['noise_variance']}

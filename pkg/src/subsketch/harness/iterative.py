from .. import analysis, embeddings, estimators, losses
from ..config import ExperimentConfig
from . import _utils, records


def run_trial(cfg: ExperimentConfig, trial: int) -> list[records.RunRecord]:
    """Iterative refinement on one adaptive sketch per cell, one row per step t = 1…T
    (fewer when the error reaches the floor early). Power iterations q apply to the sketch."""
    inst = _utils.build_instance(cfg, trial)
    loss = losses.make(cfg.loss, inst.target)
    opts = cfg.solve_options()
    reference = estimators.reference_solution(inst.A, loss, cfg.lam, opts)

    rows: list[records.RunRecord] = []
    for m_index, m in enumerate(cfg.m_grid()):
        rng = _utils.sketch_rng(cfg, trial, m_index)
        r_k = analysis.spectral_residual(inst.summary, _utils.residual_k(cfg, m))
        for choice in cfg.embedding:
            base = records.base_record(cfg, trial, choice.value, m, T=cfg.T)
            spec = embeddings.EmbeddingSpec(choice.embedding_kind, m, cfg.q, rng)
            try:
                reports = estimators.recover_iterative(inst.A, loss, cfg.lam, spec, cfg.T, opts, reference)
            except _utils.CELL_ERRORS as exc:
                rows.append(_utils.report_cell_failure(base, exc))
                continue
            rows.extend(records.from_report(base, report, r_k) for report in reports)
    return rows

from .. import analysis, estimators, losses
from ..config import ExperimentConfig
from . import _utils, records


def run_trial(cfg: ExperimentConfig, trial: int) -> list[records.RunRecord]:
    """One instance, one reference solve, then a recovery per (m, embedding) cell. Every
    embedding of a cell draws from the same sketch stream."""
    inst = _utils.build_instance(cfg, trial)
    loss = losses.make(cfg.loss, inst.target)
    opts = cfg.solve_options()
    reference = estimators.reference_solution(inst.A, loss, cfg.lam, opts)

    rows: list[records.RunRecord] = []
    for m_index, m in enumerate(cfg.m_grid()):
        rng = _utils.sketch_rng(cfg, trial, m_index)
        r_k = analysis.spectral_residual(inst.summary, _utils.residual_k(cfg, m))
        for choice in cfg.embedding:
            base = records.base_record(cfg, trial, choice.value, m)
            try:
                report = _utils.recover_cell(choice, inst.A, loss, cfg.lam, m, cfg.q, rng, opts, reference)
            except _utils.CELL_ERRORS as exc:
                rows.append(_utils.report_cell_failure(base, exc))
                continue
            rows.append(records.from_report(base, report, r_k))
    return rows

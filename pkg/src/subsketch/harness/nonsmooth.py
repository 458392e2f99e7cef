"""Non-smooth losses (l1, linf, hinge): recovery through the sketched dual over an m-grid,
against the estimator built from an arbitrary subgradient."""

import typing

from .. import analysis, embeddings, estimators, losses
from ..config import ExperimentConfig
from . import _utils, records

# the dual-route estimator should beat the arbitrary-subgradient one from this m on
COMPARISON_MIN_M = 64


def run_trial(cfg: ExperimentConfig, trial: int) -> list[records.RunRecord]:
    inst = _utils.build_instance(cfg, trial)
    loss = losses.make(cfg.loss, inst.target)
    opts = cfg.solve_options(dual=True)
    reference = estimators.reference_solution(inst.A, loss, cfg.lam, opts)

    rows: list[records.RunRecord] = []
    for m_index, m in enumerate(cfg.m_grid()):
        rng = _utils.sketch_rng(cfg, trial, m_index)
        r_k = analysis.spectral_residual(inst.summary, _utils.residual_k(cfg, m))
        for choice in cfg.embedding:
            base = records.base_record(cfg, trial, choice.value, m)
            spec = embeddings.EmbeddingSpec(choice.embedding_kind, m, cfg.q, rng)
            try:
                report = estimators.recover_nonsmooth(inst.A, loss, cfg.lam, spec, cfg.route, opts, reference)
            except _utils.CELL_ERRORS as exc:
                rows.append(_utils.report_cell_failure(base, exc))
                continue
            rows.append(records.from_report(base, report, r_k))
    return rows


def summary_extras(cfg: ExperimentConfig, rows: typing.Sequence[records.RunRecord]) -> dict[str, typing.Any]:
    """Per (embedding, m): whether the mean x̂¹ error is at most the mean error of the
    arbitrary-subgradient estimator."""
    frame = records.to_frame(rows)
    comparison: dict[str, dict[str, typing.Any]] = {}
    for (embedding, m), group in frame.groupby(['embedding', 'm'], sort=True):
        x1 = group['rel_err_x1'].dropna().astype(float)
        arb = group['rel_err_arbitrary'].dropna().astype(float)
        if x1.empty or arb.empty:
            continue
        comparison.setdefault(embedding, {})[str(int(m))] = {
            'rel_err_x1': float(x1.mean()),
            'rel_err_arbitrary': float(arb.mean()),
            'x1_not_worse': bool(x1.mean() <= arb.mean()),
        }
    checked = [c['x1_not_worse'] for e in comparison.values() for m, c in e.items() if int(m) >= COMPARISON_MIN_M]
    return {
        'route': cfg.route.value,
        'subgradient_comparison': comparison,
        'x1_not_worse_from_m64': all(checked) if checked else None,
    }

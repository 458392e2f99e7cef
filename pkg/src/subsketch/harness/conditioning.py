import dataclasses
import time

from .. import analysis, embeddings, losses
from ..config import EmbeddingChoice, ExperimentConfig
from . import _utils, records

KAPPA_SLACK = 1e-9


def run_trial(cfg: ExperimentConfig, trial: int) -> list[records.RunRecord]:
    """Condition numbers κ of the ridge-regularized quadratic primal and κ† of the sketched
    program per (m, embedding). condition_ok reports κ† ≤ κ. The oblivious-dagger cell uses
    the unwhitened Gaussian Q."""
    inst = _utils.build_instance(cfg, trial)

    rows: list[records.RunRecord] = []
    for m_index, m in enumerate(cfg.m_grid()):
        rng = _utils.sketch_rng(cfg, trial, m_index)
        for choice in cfg.embedding:
            base = records.base_record(cfg, trial, choice.value, m, loss=losses.LossKind.Quadratic.value)
            started = time.perf_counter()
            try:
                if choice==EmbeddingChoice.ObliviousDagger:
                    spec = embeddings.EmbeddingSpec(embeddings.EmbeddingKind.ObliviousGaussian, m, rng=rng)
                    q_s = embeddings.build_oblivious_gaussian(cfg.d, spec)
                else:
                    q_s = embeddings.build_sketch(inst.A, embeddings.EmbeddingSpec(choice.embedding_kind, m, cfg.q, rng)).q_s
                kappa, kappa_dagger = analysis.condition_numbers(inst.A, q_s, cfg.lam)
            except _utils.CELL_ERRORS as exc:
                rows.append(_utils.report_cell_failure(base, exc))
                continue
            rows.append(dataclasses.replace(
                base,
                kappa=kappa, kappa_dagger=kappa_dagger,
                condition_ok=kappa_dagger <= kappa*(1.+KAPPA_SLACK),
                runtime_ms=1000.*(time.perf_counter()-started), converged=True,
            ))
    return rows

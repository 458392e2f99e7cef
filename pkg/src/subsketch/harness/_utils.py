import pathlib
import typing

import numpy as np

from .. import analysis, embeddings, estimators, losses, naming, numkit, solvers, synth, utils
from ..config import EmbeddingChoice, ExperimentConfig
from . import records


class Instance(typing.NamedTuple):
    A       : np.ndarray
    summary : analysis.SpectralSummary
    target  : np.ndarray
    rng     : numkit.SeededRng


def instance_rng(cfg: ExperimentConfig, trial: int) -> numkit.SeededRng:
    return numkit.SeededRng(cfg.seed, utils.hash64(trial, 'instance'))


def sketch_rng(cfg: ExperimentConfig, trial: int, m_index: int) -> numkit.SeededRng:
    # shared by all embeddings of a cell
    return numkit.SeededRng(cfg.seed, records.stream_id(cfg.seed, trial, m_index))


def build_instance(cfg: ExperimentConfig, trial: int) -> Instance:
    """Synthetic data matrix with the configured spectrum and a ±1 label vector, both drawn
    from the trial's instance stream. Persisted when save_instance is set."""
    rng = instance_rng(cfg, trial)
    A, summary = synth.synth_matrix(cfg.n, cfg.d, cfg.spectrum_spec(), rng.spawn('matrix'))
    target = synth.synth_labels(cfg.n, rng.spawn('labels'))
    if cfg.save_instance is not None:
        numkit.write_dense_matrix(instance_path(cfg.save_instance, trial), A)
    return Instance(A, summary, target, rng)


def instance_path(where: str|pathlib.Path, trial: int) -> pathlib.Path:
    return pathlib.Path(where) / f'{naming.instance_prefix}{trial}{naming.instance_suffix}'


def residual_k(cfg: ExperimentConfig, m: int) -> int:
    # sketch size m = 2k unless k is given
    return cfg.k if cfg.k is not None else max(m//2, 1)


def recover_cell(choice: EmbeddingChoice, A: np.ndarray, loss: losses.SmoothLossModel, lam: float, m: int, q: int,
                 rng: numkit.SeededRng, opts: solvers.SolveOptions, reference: estimators.Reference) -> estimators.RecoveryReport:
    match choice:
        case EmbeddingChoice.ObliviousDagger:
            return estimators.recover_oblivious_dagger(A, loss, lam, m, rng, opts, reference)
        case EmbeddingChoice.Gaussian | EmbeddingChoice.SRHT:
            spec = embeddings.EmbeddingSpec(choice.embedding_kind, m, rng=rng)
            return estimators.recover_oblivious(A, loss, lam, spec, opts, reference)
        case EmbeddingChoice.Nystrom:
            return estimators.recover_nystrom(A, loss, lam, m, rng, opts, reference, q)
        case EmbeddingChoice.AdaptiveGaussian | EmbeddingChoice.AdaptiveSRHT:
            spec = embeddings.EmbeddingSpec(choice.embedding_kind, m, q, rng)
            return estimators.recover_adaptive(A, loss, lam, spec, opts, reference)
        case _:
            raise NotImplementedError(f'Logic is not implemented for embedding {choice}')


CELL_ERRORS = (ValueError, ArithmeticError, numkit.ConvergenceError, np.linalg.LinAlgError)

def report_cell_failure(base: records.RunRecord, exc: BaseException) -> records.RunRecord:
    print(f'cell m={base.m}, {base.embedding} of trial {base.trial+1} failed: {type(exc).__name__}: {exc}')
    return records.failed_record(base)

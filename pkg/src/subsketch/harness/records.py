"""One CSV row per (trial, m, embedding) cell, the JSON summary of a run and the output
paths both are written to."""

import dataclasses
import json
import math
import pathlib
import typing

import numpy as np
import pandas as pd

from .. import estimators, naming, synth, utils
from ..config import Experiment, ExperimentConfig


@dataclasses.dataclass
class RunRecord:
    experiment          : str
    trial               : int
    seed                : int
    n                   : int|None
    d                   : int|None
    decay               : str
    nu                  : float|None    # decay parameter: ν, or the ratio for geometric decay
    loss                : str
    lam                 : float         # CSV column "lambda"
    embedding           : str
    q                   : int
    m                   : int|None
    T                   : int                   = 0
    rel_err_x0          : float|None            = None
    rel_err_x1          : float|None            = None
    residual_norm       : float|None            = None
    spectral_residual_k : float|None            = None
    bound_rhs           : float|None            = None
    condition_ok        : bool|None             = None
    kappa               : float|None            = None
    kappa_dagger        : float|None            = None
    objective           : float|None            = None
    runtime_ms          : float|None            = None
    converged           : bool|None             = None
    iterations          : int|None              = None
    rel_err_arbitrary   : float|None            = None
    dual_objective      : float|None            = None
    mc_risk             : float|None            = None
    analytic_risk       : float|None            = None
    event_ok            : bool|None             = None
    reference_id        : str|None              = None

_column_names = {'lam': 'lambda'}
COLUMNS = [_column_names.get(f.name, f.name) for f in dataclasses.fields(RunRecord)]

SUMMARY_METRICS = ['rel_err_x0', 'rel_err_x1', 'residual_norm', 'spectral_residual_k', 'bound_rhs', 'kappa', 'kappa_dagger',
                   'objective', 'runtime_ms', 'iterations', 'rel_err_arbitrary', 'dual_objective', 'mc_risk', 'analytic_risk']
SUMMARY_RATES = ['condition_ok', 'converged', 'event_ok']
CELL_KEYS = ['m', 'embedding', 'T']


def stream_id(seed: int, trial: int, m_index: int) -> int:
    return utils.hash64(seed, trial, m_index)


def _finite(v) -> float|None:
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def decay_parameter(cfg: ExperimentConfig) -> float|None:
    match cfg.decay:
        case synth.Decay.Polynomial | synth.Decay.Exponential:
            return cfg.nu
        case synth.Decay.Geometric:
            return cfg.ratio
        case _:
            return None


def base_record(cfg: ExperimentConfig, trial: int, embedding: str, m: int|None, loss: str|None = None, T: int = 0) -> RunRecord:
    return RunRecord(
        experiment=cfg.experiment.value, trial=trial, seed=cfg.seed, n=cfg.n, d=cfg.d,
        decay=cfg.decay.value, nu=decay_parameter(cfg), loss=loss or cfg.loss.value, lam=cfg.lam,
        embedding=embedding, q=cfg.q, m=m, T=T,
    )


def from_report(base: RunRecord, report: estimators.RecoveryReport, spectral_residual_k: float|None = None) -> RunRecord:
    return dataclasses.replace(
        base,
        T=report.t or base.T,
        rel_err_x0=_finite(report.rel_err_x0), rel_err_x1=_finite(report.rel_err_x1),
        residual_norm=_finite(report.residual_norm), spectral_residual_k=_finite(spectral_residual_k),
        bound_rhs=_finite(report.bound_rhs), condition_ok=bool(report.condition_ok),
        objective=_finite(report.objective), runtime_ms=_finite(report.runtime_ms),
        converged=bool(report.converged), iterations=int(report.iterations),
        rel_err_arbitrary=_finite(report.rel_err_arbitrary), dual_objective=_finite(report.dual_objective),
        reference_id=report.reference_id,
    )


def failed_record(base: RunRecord) -> RunRecord:
    return dataclasses.replace(base, converged=False)


def failed_records(cfg: ExperimentConfig, trial: int) -> list[RunRecord]:
    """Placeholder rows for a trial that raised: one per configured cell, numerics empty."""
    ms = cfg.m_grid() or [None]
    return [failed_record(base_record(cfg, trial, e.value, m, T=cfg.T if cfg.experiment==Experiment.Iterative else 0))
            for m in ms for e in cfg.embedding]


def to_frame(rows: typing.Sequence[RunRecord]) -> pd.DataFrame:
    return pd.DataFrame([dataclasses.astuple(r) for r in rows], columns=COLUMNS)


def write_records(path: str|pathlib.Path, rows: typing.Sequence[RunRecord]):
    with utils.atomic_write(path, newline='') as f:
        to_frame(rows).to_csv(f, index=False)


def read_records(path: str|pathlib.Path) -> pd.DataFrame:
    return pd.read_csv(path)


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def summarize(rows: typing.Sequence[RunRecord], cfg: ExperimentConfig, extras: dict[str, typing.Any]|None = None) -> dict[str, typing.Any]:
    """Mean and twice the sample standard deviation of every metric per (m, embedding, T)
    cell, plus the fraction of rows with condition_ok, converged and event_ok set."""
    frame = to_frame(rows)
    cells = []
    for key, group in frame.groupby(CELL_KEYS, dropna=False, sort=True):
        cell: dict[str, typing.Any] = {k: _json_value(v) for k, v in zip(CELL_KEYS, key)}
        cell['rows'] = len(group)
        for col in SUMMARY_METRICS:
            vals = pd.to_numeric(group[col], errors='coerce').dropna()
            if vals.empty:
                continue
            # a single row has no spread: two_std becomes null
            cell[col] = {'mean': _json_value(vals.mean()), 'two_std': _json_value(2.*vals.std(ddof=1))}
        for col in SUMMARY_RATES:
            vals = group[col].dropna()
            if not vals.empty:
                cell[f'{col}_rate'] = float(vals.astype(bool).mean())
        cells.append(cell)
    return {
        'experiment': cfg.experiment.value,
        'seed': cfg.seed,
        'trials': cfg.trials,
        'config': cfg.as_dict(include_defaults=True),
        'cells': cells,
        **(extras or {}),
    }


def write_summary(path: str|pathlib.Path, summary: dict[str, typing.Any]):
    with utils.atomic_write(path) as f:
        json.dump(summary, f, cls=utils.CustomTypeEncoder, indent=2, allow_nan=False)


class OutputPaths(typing.NamedTuple):
    records     : pathlib.Path
    summary     : pathlib.Path
    certificates: pathlib.Path


def output_paths(out: str|pathlib.Path) -> OutputPaths:
    """A .csv path gets its summary next to it (X.csv -> X.summary.json); anything else is
    a directory receiving records.csv, summary.json and certificates.json."""
    out = pathlib.Path(out)
    if out.suffix.lower()=='.csv':
        stem = out.with_suffix('')
        return OutputPaths(out, stem.with_name(stem.name+naming.summary_suffix), stem.with_name(stem.name+'.'+naming.certificate_file))
    return OutputPaths(out/naming.records_file, out/naming.summary_file, out/naming.certificate_file)

"""Recovery error against sketch size: the recover cells over an m-grid, summarized with
log-log slopes of the mean errors per embedding."""

import typing

import numpy as np

from .. import analysis
from ..config import ExperimentConfig
from . import records
from .recover import run_trial

__all__ = ['run_trial', 'summary_extras']

MIN_FIT_POINTS = 3


def summary_extras(cfg: ExperimentConfig, rows: typing.Sequence[records.RunRecord]) -> dict[str, typing.Any]:
    frame = records.to_frame(rows)
    slopes: dict[str, dict[str, typing.Any]] = {}
    for embedding, group in frame.groupby('embedding', sort=True):
        fits = {}
        for col in ('rel_err_x0', 'rel_err_x1'):
            means = group.groupby('m')[col].apply(lambda s: s.dropna().astype(float).mean()).dropna()
            means = means[means > 0]
            if means.size < MIN_FIT_POINTS:
                continue
            fit = analysis.loglog_slope_fit(np.asarray(means.index, dtype=np.float64), means.to_numpy(dtype=np.float64))
            fits[col] = fit._asdict()
        if fits:
            slopes[embedding] = fits
    return {'loglog_slopes': slopes}

import enum
import os
import typing

from ..config import Experiment, ExperimentConfig

THREADS_ENV_VAR = 'SUBSKETCH_THREADS'


class State(enum.IntEnum):
    Pending     = enum.auto()
    Completed   = enum.auto()
    Canceled    = enum.auto()
    Failed      = enum.auto()
    @property
    def displayable_name(self):
        return self.name.replace("_", " ")


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, '').strip()
    if not raw:
        return 1
    try:
        count = int(raw)
    except ValueError:
        raise ValueError(f'{THREADS_ENV_VAR} must be a positive integer, got {raw!r}') from None
    if count < 1:
        raise ValueError(f'{THREADS_ENV_VAR} must be a positive integer, got {count}')
    return count


def printer(quiet: bool) -> typing.Callable[[str], None]:
    return (lambda _: None) if quiet else print


def experiment_to_func(experiment: Experiment) -> typing.Callable[[ExperimentConfig, int], list['records.RunRecord']]|None:
    # Returns the per-trial function of the provided experiment. NB: not for Experiment.Certify,
    # which reports certificates instead of records and is handled by certify()
    from .recover import run_trial as recover
    from .sweep import run_trial as sweep
    from .iterative import run_trial as iterative
    from .nonsmooth import run_trial as nonsmooth
    from .kernel import run_trial as kernel
    from .risk import run_trial as risk
    from .conditioning import run_trial as conditioning

    match experiment:
        case Experiment.Recover:
            return recover
        case Experiment.Sweep:
            return sweep
        case Experiment.Iterative:
            return iterative
        case Experiment.Nonsmooth:
            return nonsmooth
        case Experiment.Kernel:
            return kernel
        case Experiment.Risk:
            return risk
        case Experiment.Conditioning:
            return conditioning
        case Experiment.Certify:
            return None # Needs a special case handled by the caller
        case _:
            raise NotImplementedError(f'Logic is not implemented for {experiment.displayable_name} ({experiment}), major developer oversight!')


def _summary_extras(cfg: ExperimentConfig, rows: list['records.RunRecord']) -> dict[str, typing.Any]:
    match cfg.experiment:
        case Experiment.Sweep:
            from .sweep import summary_extras
        case Experiment.Nonsmooth:
            from .nonsmooth import summary_extras
        case Experiment.Risk:
            from .risk import summary_extras
        case _:
            return {}
    return summary_extras(cfg, rows)


def run_experiment(cfg: ExperimentConfig) -> list['records.RunRecord']:
    """Runs all trials of the experiment (in a process pool when SUBSKETCH_THREADS > 1),
    and writes records and summary when cfg.out_path is set. A trial that raises is
    recorded as converged=False rows and the run continues."""
    from . import process_pool, records

    fn = experiment_to_func(cfg.experiment)
    if fn is None:
        raise ValueError(f'The {cfg.experiment.value} experiment reports certificates, run it with harness.certify()')
    progress = printer(cfg.quiet)
    progress(f'processing: {cfg.experiment.value}, {cfg.trials} trial(s), seed {cfg.seed}')

    results = process_pool.run_trials(fn, cfg, range(cfg.trials), worker_count(), progress)
    rows: list[records.RunRecord] = []
    for trial in range(cfg.trials):
        res = results[trial]
        if isinstance(res, BaseException):
            print(f'trial {trial+1}/{cfg.trials} of {cfg.experiment.value} failed: {type(res).__name__}: {res}')
            rows.extend(records.failed_records(cfg, trial))
        else:
            rows.extend(res)

    if cfg.out_path is not None:
        paths = records.output_paths(cfg.out_path)
        records.write_records(paths.records, rows)
        records.write_summary(paths.summary, records.summarize(rows, cfg, _summary_extras(cfg, rows)))
        progress(f'wrote {len(rows)} record(s) to {paths.records}')
    return rows


def certify(cfg: ExperimentConfig) -> int:
    """Runs the configured certificate suite. Returns the exit status: 0 when every
    certificate passes, 1 otherwise."""
    from . import certificates, records

    results = certificates.run(cfg)
    print(certificates.format_table(results))
    if cfg.out_path is not None:
        path = records.output_paths(cfg.out_path).certificates
        certificates.write_results(path, results)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f'FAILED certificates: {", ".join(failed)}')
        return 1
    return 0

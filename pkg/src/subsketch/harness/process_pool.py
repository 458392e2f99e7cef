import multiprocessing
import threading
import typing

import pebble
ProcessFuture = pebble.ProcessFuture

from .. import harness
from ..config import ExperimentConfig

TrialFn = typing.Callable[[ExperimentConfig, int], list]
TrialResult = typing.Union[list, BaseException]
_DoneCallback = typing.Callable[[int, 'harness.State'], None]


class _TrialWaiter:
    """Routes completion of a trial's future through to the pool."""
    def __init__(self, trial: int, done_callback: _DoneCallback):
        self.trial          = trial
        self.done_callback  = done_callback

    def add_result(self, future: ProcessFuture):
        self.done_callback(self.trial, harness.State.Completed)

    def add_exception(self, future: ProcessFuture):
        self.done_callback(self.trial, harness.State.Failed)

    def add_cancelled(self, future: ProcessFuture):
        self.done_callback(self.trial, harness.State.Canceled)


class TrialPool:
    """pebble process pool running one experiment's trials, keyed by trial index."""
    def __init__(self, fn: TrialFn, cfg: ExperimentConfig, num_workers: int = 2, progress: typing.Callable[[str], None] = print):
        self.fn             = fn
        self.cfg            = cfg
        self.num_workers    = num_workers
        self.progress       = progress

        # NB: pool is only started in submit() once needed
        self._pool      : pebble.ProcessPool|None       = None
        self._futures   : dict[int, ProcessFuture]      = {}
        self._states    : dict[int, harness.State]      = {}
        self._lock      : threading.Lock                = threading.Lock()

    def submit(self, trials: typing.Iterable[int]):
        with self._lock:
            if self._pool is None or not self._pool.active:
                context = multiprocessing.get_context("spawn")  # same behavior on every platform, workers import the package afresh
                self._pool = pebble.ProcessPool(max_workers=self.num_workers, context=context)
            for trial in trials:
                future = self._pool.schedule(self.fn, args=(self.cfg, trial))
                future._waiters.append(_TrialWaiter(trial, self._trial_done))
                self._futures[trial] = future
                self._states[trial] = harness.State.Pending

    def _trial_done(self, trial: int, state: 'harness.State'):
        with self._lock:
            self._states[trial] = state
        self.progress(f'processing: {self.cfg.experiment.value}, trial {trial+1}/{self.cfg.trials} {state.displayable_name.lower()}')

    def states(self) -> dict[int, 'harness.State']:
        with self._lock:
            return dict(self._states)

    def collect(self) -> dict[int, TrialResult]:
        """Waits for every submitted trial. A trial that raised yields its exception."""
        results: dict[int, TrialResult] = {}
        for trial, future in self._futures.items():
            try:
                results[trial] = future.result()
            except Exception as exc:
                results[trial] = exc
        return results

    def cleanup(self):
        with self._lock:
            # reversed so that later pending trials don't start executing when an earlier one gets cancelled
            for future in reversed(list(self._futures.values())):
                if not future.done():
                    future.cancel()
            if self._pool and self._pool.active:
                self._pool.stop()
                self._pool.join()
            self._pool = None


def run_trials(fn: TrialFn, cfg: ExperimentConfig, trials: typing.Iterable[int],
               num_workers: int, progress: typing.Callable[[str], None] = print) -> dict[int, TrialResult]:
    """fn(cfg, trial) for every trial, inline for a single worker, otherwise on a process
    pool. Exceptions are returned in place of the trial's result."""
    trials = list(trials)
    if num_workers <= 1 or len(trials) <= 1:
        results: dict[int, TrialResult] = {}
        for trial in trials:
            progress(f'processing: {cfg.experiment.value}, trial {trial+1}/{len(trials)}')
            try:
                results[trial] = fn(cfg, trial)
            except Exception as exc:
                results[trial] = exc
        return results

    pool = TrialPool(fn, cfg, min(num_workers, len(trials)), progress)
    try:
        pool.submit(trials)
        return pool.collect()
    finally:
        pool.cleanup()

import copy
import enum
import inspect
import json
import pathlib
import typing
from typing import Any, Literal

import typeguard

from . import embeddings, estimators, losses, synth, typed_dict_defaults, type_utils, utils


class Experiment(enum.Enum):
    Recover         = 'recover'
    Sweep           = 'sweep'
    Iterative       = 'iterative'
    Nonsmooth       = 'nonsmooth'
    Kernel          = 'kernel'
    Risk            = 'risk'
    Certify         = 'certify'
    Conditioning    = 'conditioning'

    @property
    def displayable_name(self):
        return self.value.title()


class EmbeddingChoice(enum.Enum):
    """Sketch families selectable per experiment cell: every embedding kind plus the
    unwhitened oblivious Gaussian baseline."""
    Gaussian            = 'gaussian'
    SRHT                = 'srht'
    Nystrom             = 'nystrom'
    AdaptiveGaussian    = 'adaptive-gaussian'
    AdaptiveSRHT        = 'adaptive-srht'
    ObliviousDagger     = 'oblivious-dagger'

    @property
    def embedding_kind(self) -> embeddings.EmbeddingKind|None:
        return None if self==EmbeddingChoice.ObliviousDagger else embeddings.EmbeddingKind(self.value)

    @property
    def is_adaptive(self) -> bool:
        return self.embedding_kind is not None and self.embedding_kind.is_adaptive


class CertifySuite(enum.Enum):
    FullRank            = 'full-rank'
    FirstOrder          = 'first-order'
    ResidualGaussian    = 'residual-gaussian'
    ResidualSRHT        = 'residual-srht'
    Iterative           = 'iterative'
    Conditioning        = 'conditioning'
    Whitening           = 'whitening'
    ZeroOrderFloor      = 'zero-order-floor'
    FirstOrderFloor     = 'first-order-floor'
    Nonsmooth           = 'nonsmooth'
    Kernel              = 'kernel'
    Risk                = 'risk'
    Losses              = 'losses'
    Infrastructure      = 'infrastructure'
    Default             = 'default'


class SolverSettings(typed_dict_defaults.TypedDictDefault, total=False):
    tol             : float                             = 1e-10
    max_iters       : int                               = 200
    method          : Literal['newton', 'gradient']     = 'newton'
    line_search     : Literal['armijo', 'none']         = 'armijo'
    dual_max_iters  : int                               = 20000
    accelerated     : bool                              = True

class KernelSettings(typed_dict_defaults.TypedDictDefault, total=False):
    gram            : Literal['features', 'gaussian-kernel', 'rff'] = 'features'
    gamma           : float|None                        = None      # None: 1/(d·var(X))
    rff_features    : int                               = 1000

class RiskSettings(typed_dict_defaults.TypedDictDefault, total=False):
    noise_variance  : float                             = 1.
    noise_draws     : int                               = 200
    random_directions: int                              = 5


_NEEDS_SMOOTH_LOSS = {Experiment.Recover, Experiment.Sweep, Experiment.Iterative, Experiment.Kernel}
_NEEDS_ADAPTIVE = {Experiment.Iterative, Experiment.Nonsmooth, Experiment.Kernel}

DEFAULT_M_GRIDS = {
    Experiment.Sweep:       [2**k for k in range(3, 10)],
    Experiment.Nonsmooth:   [2**k for k in range(5, 10)],
}
DEFAULT_M = 64


class ExperimentConfig:
    default_json_file_name = 'experiment.json'

    @typeguard.typechecked(collection_check_strategy=typeguard.CollectionCheckStrategy.ALL_ITEMS)
    def __init__(self,
                 experiment     : Experiment                        = Experiment.Recover,
                 n              : int|None                          = None,
                 d              : int|None                          = None,
                 decay          : synth.Decay                       = synth.Decay.Exponential,
                 nu             : float                             = 0.1,
                 ratio          : float                             = 0.98,
                 spectrum       : list[float]|None                  = None,
                 scale          : float|None                        = None,
                 loss           : losses.LossKind                   = losses.LossKind.Logistic,
                 lam            : float                             = 1e-4,
                 embedding      : list[EmbeddingChoice]             = [EmbeddingChoice.AdaptiveGaussian],
                 m              : list[int]|None                    = None,
                 q              : int                               = 0,
                 T              : int                               = 1,
                 k              : int|None                          = None,
                 trials         : int                               = 10,
                 seed           : int                               = 0,
                 route          : estimators.DualRoute              = estimators.DualRoute.RestrictedDual,
                 suite          : CertifySuite                      = CertifySuite.Default,
                 solver         : SolverSettings                    = SolverSettings(),
                 kernel         : KernelSettings                    = KernelSettings(),
                 risk           : RiskSettings                      = RiskSettings(),
                 out_path       : str|pathlib.Path|None             = None,
                 save_instance  : str|pathlib.Path|None             = None,
                 quiet          : bool                              = False,

                 strict_check   : bool                              = True):
        self.experiment     = experiment
        self.n              = n
        self.d              = d
        self.decay          = decay
        self.nu             = nu
        self.ratio          = ratio
        self.spectrum       = spectrum
        self.scale          = scale
        self.loss           = loss
        self.lam            = lam
        self.embedding      = list(embedding)
        self.m              = m
        self.q              = q
        self.T              = T
        self.k              = k
        self.trials         = trials
        self.seed           = seed
        self.route          = route
        self.suite          = suite
        self.solver         = copy.deepcopy(solver)
        self.kernel         = copy.deepcopy(kernel)
        self.risk           = copy.deepcopy(risk)
        self.out_path       = out_path
        self.save_instance  = save_instance
        self.quiet          = quiet

        self.check_valid(strict_check=strict_check)

    def check_valid(self, strict_check=True) -> type_utils.ProblemDict:
        # ensure option groups are of the right class, and apply defaults
        self.solver = SolverSettings(self.solver)
        self.kernel = KernelSettings(self.kernel)
        self.risk   = RiskSettings(self.risk)

        problems: type_utils.ProblemDict = {}
        for check in (self._check_instance, self._check_sketch, self._check_run, self._check_groups):
            type_utils.merge_problem_dicts(problems, check(strict_check))
        return problems

    def _report(self, problems: type_utils.ProblemDict, key: str, msg: str, strict_check: bool):
        if strict_check:
            raise ValueError(f'{_json_key(key)}: {msg}')
        type_utils.merge_problem_dicts(problems, {_json_key(key): msg})

    def _check_instance(self, strict_check) -> type_utils.ProblemDict:
        problems: type_utils.ProblemDict = {}
        for key in ('n', 'd'):
            v = getattr(self, key)
            if v is None and self.experiment!=Experiment.Certify:
                self._report(problems, key, f'required for the {self.experiment.value} experiment', strict_check)
            elif v is not None and v < 1:
                self._report(problems, key, f'must be a positive integer, got {v}', strict_check)
        if self.decay in (synth.Decay.Polynomial, synth.Decay.Exponential) and not self.nu > 0:
            self._report(problems, 'nu', f'must be positive, got {self.nu}', strict_check)
        if self.decay==synth.Decay.Geometric and not 0 < self.ratio < 1:
            self._report(problems, 'ratio', f'must lie in (0, 1), got {self.ratio}', strict_check)
        if self.decay==synth.Decay.Explicit:
            if not self.spectrum:
                self._report(problems, 'spectrum', 'required for an explicit spectrum', strict_check)
            elif any(v <= 0 for v in self.spectrum) or any(a < b for a, b in zip(self.spectrum, self.spectrum[1:])):
                self._report(problems, 'spectrum', 'must be positive and nonincreasing', strict_check)
        if self.scale is not None and not self.scale > 0:
            self._report(problems, 'scale', f'must be positive, got {self.scale}', strict_check)
        if not self.lam > 0:
            self._report(problems, 'lam', f'must be positive, got {self.lam}', strict_check)
        if self.experiment in _NEEDS_SMOOTH_LOSS and not self.loss.is_smooth:
            self._report(problems, 'loss', f'the {self.experiment.value} experiment needs a smooth loss, got {self.loss.value}', strict_check)
        if self.experiment==Experiment.Nonsmooth and self.loss.is_smooth:
            self._report(problems, 'loss', f'the nonsmooth experiment needs l1, linf or hinge, got {self.loss.value}', strict_check)
        return problems

    def _check_sketch(self, strict_check) -> type_utils.ProblemDict:
        problems: type_utils.ProblemDict = {}
        if not self.embedding:
            self._report(problems, 'embedding', 'at least one embedding is required', strict_check)
        if self.experiment in _NEEDS_ADAPTIVE:
            if bad := [e.value for e in self.embedding if not e.is_adaptive]:
                self._report(problems, 'embedding', f'the {self.experiment.value} experiment needs adaptive embeddings, got {bad}', strict_check)
        if self.m is not None:
            if not self.m or any(v < 1 for v in self.m):
                self._report(problems, 'm', f'sketch sizes must be positive integers, got {self.m}', strict_check)
            elif any(a >= b for a, b in zip(self.m, self.m[1:])):
                self._report(problems, 'm', f'the m-list must be sorted ascending without repeats, got {self.m}', strict_check)
        if self.q < 0:
            self._report(problems, 'q', f'must be nonnegative, got {self.q}', strict_check)
        if self.q and (bad := [e.value for e in self.embedding if not e.is_adaptive]):
            self._report(problems, 'q', f'power iterations only apply to adaptive embeddings, got {bad}', strict_check)
        if self.experiment==Experiment.Risk and EmbeddingChoice.ObliviousDagger in self.embedding:
            self._report(problems, 'embedding', 'the risk experiment needs whitened embeddings, oblivious-dagger is not one', strict_check)
        if self.q and self.experiment==Experiment.Kernel:
            self._report(problems, 'q', 'power iterations are not available for kernel programs', strict_check)
        if self.T < 1:
            self._report(problems, 'T', f'must be at least 1, got {self.T}', strict_check)
        if self.k is not None and self.k < 1:
            self._report(problems, 'k', f'must be at least 1, got {self.k}', strict_check)
        return problems

    def _check_run(self, strict_check) -> type_utils.ProblemDict:
        problems: type_utils.ProblemDict = {}
        if self.trials < 1:
            self._report(problems, 'trials', f'must be at least 1, got {self.trials}', strict_check)
        if not 0 <= self.seed < 2**64:
            self._report(problems, 'seed', f'must lie in [0, 2**64), got {self.seed}', strict_check)
        return problems

    def _check_groups(self, strict_check) -> type_utils.ProblemDict:
        problems: type_utils.ProblemDict = {}
        if not self.solver['tol'] > 0:
            self._report(problems, 'solver', f'tol must be positive, got {self.solver["tol"]}', strict_check)
        if self.solver['max_iters'] < 1 or self.solver['dual_max_iters'] < 1:
            self._report(problems, 'solver', 'max_iters and dual_max_iters must be at least 1', strict_check)
        if self.kernel['gamma'] is not None and not self.kernel['gamma'] > 0:
            self._report(problems, 'kernel', f'gamma must be positive, got {self.kernel["gamma"]}', strict_check)
        if self.kernel['rff_features'] < 1:
            self._report(problems, 'kernel', f'rff_features must be at least 1, got {self.kernel["rff_features"]}', strict_check)
        if not self.risk['noise_variance'] > 0:
            self._report(problems, 'risk', f'noise_variance must be positive, got {self.risk["noise_variance"]}', strict_check)
        if self.risk['noise_draws'] < 2:
            self._report(problems, 'risk', f'noise_draws must be at least 2, got {self.risk["noise_draws"]}', strict_check)
        if self.risk['random_directions'] < 0:
            self._report(problems, 'risk', 'random_directions must be nonnegative', strict_check)
        return problems

    def field_problems(self) -> type_utils.ProblemDict:
        return self.check_valid(strict_check=False)

    def m_grid(self) -> list[int]|None:
        """Sketch sizes of the run. None for the risk experiment without an explicit list,
        whose default 4·d_s depends on the generated spectrum."""
        if self.m is not None:
            return list(self.m)
        if self.experiment==Experiment.Risk:
            return None
        return list(DEFAULT_M_GRIDS.get(self.experiment, [DEFAULT_M]))

    def solve_options(self, dual: bool = False):
        from . import solvers
        return solvers.SolveOptions(
            grad_tolerance=self.solver['tol'],
            max_iters=self.solver['dual_max_iters'] if dual else self.solver['max_iters'],
            line_search=solvers.LineSearch(self.solver['line_search']),
            method=solvers.Method(self.solver['method']),
            accelerated=self.solver['accelerated'],
        )

    def spectrum_spec(self) -> synth.SpectrumSpec:
        return synth.SpectrumSpec(self.decay, nu=self.nu, ratio=self.ratio,
                                  values=tuple(self.spectrum) if self.spectrum else None, scale=self.scale)

    def as_dict(self, include_defaults: bool = False) -> dict[str, Any]:
        out = {}
        for key in config_parameter_types:
            val = getattr(self, key)
            if typed_dict_defaults.is_typeddictdefault(type(val)) and not include_defaults:
                val = val.non_default_items()
                if not val:
                    continue
            elif not include_defaults and key in config_defaults and config_defaults[key]==val:
                continue
            out[_json_key(key)] = val
        return out

    def store_as_json(self, path: str | pathlib.Path):
        path = pathlib.Path(path)
        if path.is_dir():
            path /= self.default_json_file_name
        with utils.atomic_write(path) as f:
            json.dump(self.as_dict(), f, cls=utils.CustomTypeEncoder, indent=2)

    @staticmethod
    def load_from_json(path: str | pathlib.Path, strict_check: bool = True) -> 'ExperimentConfig':
        path = pathlib.Path(path)
        if path.is_dir():
            path /= ExperimentConfig.default_json_file_name
        with open(path, 'r') as f:
            kwds = json.load(f)
        return ExperimentConfig(**_fix_typing(_attribute_keys(kwds)), strict_check=strict_check)


_params = inspect.signature(ExperimentConfig.__init__).parameters
config_defaults = {k: d for k in _params if (d:=_params[k].default)!=inspect.Parameter.empty}
config_parameter_types = {k: _params[k].annotation for k in _params if k not in ('self', 'strict_check')}

# config file keys that differ from the attribute names
_json_aliases = {'lam': 'lambda', 'out_path': 'out'}
_attribute_aliases = {v: k for k, v in _json_aliases.items()}

def _json_key(attr: str) -> str:
    return _json_aliases.get(attr, attr)

def _attribute_keys(kwds: dict[str, Any]) -> dict[str, Any]:
    return {_attribute_aliases.get(k, k): v for k, v in kwds.items()}


def _fix_typing(kwds: dict[str, Any], fill_groups: bool = True) -> dict[str, Any]:
    # JSON holds enum values and plain dicts; turn them back into the declared types.
    # Overrides keep option groups partial so unset keys are not reset to defaults
    enum_fields: dict[str, type[enum.Enum]] = {
        'experiment': Experiment, 'decay': synth.Decay, 'loss': losses.LossKind,
        'route': estimators.DualRoute, 'suite': CertifySuite,
    }
    for key, enum_type in enum_fields.items():
        if isinstance(kwds.get(key), str):
            try:
                kwds[key] = enum_type(kwds[key])
            except ValueError:
                allowed = ', '.join(e.value for e in enum_type)
                raise ValueError(f'{_json_key(key)}: {kwds[key]!r} is not one of {allowed}') from None
    if 'embedding' in kwds:
        emb = kwds['embedding']
        if isinstance(emb, str):
            emb = [emb]
        try:
            kwds['embedding'] = [EmbeddingChoice(e) if isinstance(e, str) else e for e in emb]
        except ValueError:
            allowed = ', '.join(e.value for e in EmbeddingChoice)
            raise ValueError(f'embedding: {emb!r} contains a value that is not one of {allowed}') from None
    for key, group in (('solver', SolverSettings), ('kernel', KernelSettings), ('risk', RiskSettings)):
        if fill_groups and isinstance(kwds.get(key), dict) and not typed_dict_defaults.is_typeddictdefault(type(kwds[key])):
            kwds[key] = group(**kwds[key])
    for key in ('nu', 'ratio', 'lam', 'scale'):
        if isinstance(kwds.get(key), int) and not isinstance(kwds[key], bool):
            kwds[key] = float(kwds[key])
    if isinstance(kwds.get('spectrum'), list):
        kwds['spectrum'] = [float(v) for v in kwds['spectrum']]
    return kwds


def _apply_impl(obj, overrides: dict[str, Any]):
    for key, val in overrides.items():
        current = obj[key] if isinstance(obj, dict) else getattr(obj, key)
        if isinstance(val, dict) and isinstance(current, dict):
            val = _apply_impl(current, val)
        if isinstance(obj, dict):
            obj[key] = val
        else:
            setattr(obj, key, val)
    return obj


def apply_overrides(config: ExperimentConfig, provenance: typing.Callable[[str], None]|None = None, strict_check: bool = True, **kwargs) -> ExperimentConfig:
    """New config with the given keys (config file names, e.g. "lambda") overridden.
    Unknown keys and wrongly typed values are rejected; provenance receives one line per
    key whose value changes."""
    if not kwargs:
        return config
    kwargs = _fix_typing(_attribute_keys(kwargs), fill_groups=False)

    def typecheck_exception_handler(exc: typeguard.TypeCheckError, key: str):
        e = typeguard.TypeCheckError(*exc.args)
        e.append_path_element(f'override "{_json_key(key)}"')
        raise e from None

    for key, val in kwargs.items():
        if key not in config_parameter_types:
            raise ValueError(f'Got an unknown parameter "{_json_key(key)}"')
        check_val = val
        if isinstance(val, dict):
            # partial option groups are allowed
            check_val = {k: v for k, v in val.items() if v is not None}
        typeguard.check_type(check_val, config_parameter_types[key], typecheck_fail_callback=lambda x, _, key=key: typecheck_exception_handler(x, key),
                             collection_check_strategy=typeguard.CollectionCheckStrategy.ALL_ITEMS)

    new = copy.deepcopy(config)
    for key, val in kwargs.items():
        old = getattr(new, key)
        if provenance is not None and old!=val:
            if isinstance(val, dict):
                for k, v in val.items():
                    if old.get(k)!=v:
                        provenance(f'override: {_json_key(key)}.{k} = {v!r} (was {old.get(k)!r})')
            else:
                provenance(f'override: {_json_key(key)} = {_display(val)} (was {_display(old)})')
    new = _apply_impl(new, kwargs)
    try:
        new.check_valid(strict_check)
    except ValueError as exc:
        raise ValueError(f'Experiment setup became invalid after applying overrides: {exc}') from None
    return new


def _display(val) -> str:
    if isinstance(val, enum.Enum):
        return val.value
    if isinstance(val, list):
        return ','.join(_display(v) for v in val)
    return repr(val)


def read_config_with_overrides(config_path: str|pathlib.Path|None, provenance: typing.Callable[[str], None]|None = None, strict_check=True, **kwargs) -> ExperimentConfig:
    if config_path is None:
        # defaults plus overrides, validated once everything is in place
        base = ExperimentConfig(strict_check=False)
    else:
        base = ExperimentConfig.load_from_json(config_path, strict_check=False)
    return apply_overrides(base, provenance, strict_check, **kwargs) if kwargs else _validated(base, strict_check)


def _validated(config: ExperimentConfig, strict_check: bool) -> ExperimentConfig:
    config.check_valid(strict_check)
    return config

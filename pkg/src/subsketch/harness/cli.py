import argparse
import math
import pathlib
import sys
import typing

import typeguard

from .. import config, version
from ..config import Experiment


def parse_m_list(text: str) -> list[int]:
    """Comma separated sketch sizes. "a,b,...,z" continues the progression set by a and b
    (geometric when b/a is an integer > 1, else arithmetic) up to and including z."""
    parts = [p.strip() for p in text.split(',') if p.strip()]
    if '...' not in parts:
        try:
            return [int(p) for p in parts]
        except ValueError:
            raise argparse.ArgumentTypeError(f'sketch sizes must be integers, got {text!r}') from None
    idx = parts.index('...')
    if idx!=2 or len(parts)!=4:
        raise argparse.ArgumentTypeError(f'an elided m-list reads "a,b,...,z", got {text!r}')
    try:
        a, b, z = int(parts[0]), int(parts[1]), int(parts[3])
    except ValueError:
        raise argparse.ArgumentTypeError(f'sketch sizes must be integers, got {text!r}') from None
    if not 0 < a < b <= z:
        raise argparse.ArgumentTypeError(f'an elided m-list needs 0 < a < b <= z, got {text!r}')
    out = [a]
    if b % a==0 and b//a > 1:
        ratio = b//a
        while out[-1]*ratio <= z:
            out.append(out[-1]*ratio)
    else:
        out.extend(range(b, z+1, b-a))
    if out[-1]!=z:
        raise argparse.ArgumentTypeError(f'{z} does not lie on the progression {a},{b},... of {text!r}')
    return out


def _csv_list(text: str) -> list[str]:
    return [p.strip() for p in text.split(',') if p.strip()]


def _float_list(text: str) -> list[float]:
    try:
        return [float(p) for p in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected comma separated numbers, got {text!r}') from None


def _positive_float(text: str) -> float:
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f'expected a positive number, got {text!r}')
    return v


def _shared_options() -> argparse.ArgumentParser:
    # flags default to SUPPRESS so that only flags given on the command line override the config file
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    inst = p.add_argument_group('instance')
    inst.add_argument('--n', type=int, help='number of rows of A')
    inst.add_argument('--d', type=int, help='number of columns of A')
    inst.add_argument('--decay', choices=['poly', 'exp', 'geom', 'explicit'], help='spectral decay of A')
    inst.add_argument('--nu', type=_positive_float, help='decay parameter of poly and exp spectra')
    inst.add_argument('--ratio', type=float, help='ratio of a geom spectrum')
    inst.add_argument('--spectrum', type=_float_list, help='comma separated singular values of an explicit spectrum')
    inst.add_argument('--loss', choices=['quadratic', 'logistic', 'relu', 'l1', 'linf', 'hinge'])
    inst.add_argument('--lambda', dest='lam', type=_positive_float, help='ridge parameter λ')

    sk = p.add_argument_group('sketch')
    sk.add_argument('--embedding', type=_csv_list, help='comma separated list of: '+', '.join(e.value for e in config.EmbeddingChoice))
    sk.add_argument('--m', type=parse_m_list, help='sketch sizes, e.g. 64 or 8,16,...,512')
    sk.add_argument('--q', type=int, help='power iterations of adaptive sketches')
    sk.add_argument('--T', type=int, help='iterations of the iterative method')
    sk.add_argument('--k', type=int, help='target rank of the spectral residual (default m/2)')
    sk.add_argument('--route', choices=[r.value for r in config.estimators.DualRoute], help='sketched dual of non-smooth losses')

    run = p.add_argument_group('run')
    run.add_argument('--trials', type=int)
    run.add_argument('--seed', type=int)
    run.add_argument('--tol', type=_positive_float, help='solver gradient tolerance')
    run.add_argument('--max-iters', dest='max_iters', type=int, help='solver iteration cap')
    run.add_argument('--method', choices=['newton', 'gradient'])
    run.add_argument('--gram', choices=['features', 'gaussian-kernel', 'rff'], help='Gram matrix of the kernel experiment')
    run.add_argument('--gamma', type=_positive_float, help='bandwidth of the Gaussian kernel and of random Fourier features')
    run.add_argument('--rff-features', dest='rff_features', type=int)
    run.add_argument('--noise-variance', dest='noise_variance', type=_positive_float)
    run.add_argument('--noise-draws', dest='noise_draws', type=int)
    run.add_argument('--suite', choices=[s.value for s in config.CertifySuite], help='certificate suite (certify only)')

    out = p.add_argument_group('output')
    out.add_argument('--out', help='output directory, or a .csv file')
    out.add_argument('--config', help='JSON experiment file, flags override its values')
    out.add_argument('--save-instance', dest='save_instance', help='directory to write generated matrices to')
    out.add_argument('--quiet', action='store_true', help='no progress output')
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='subsketch', description=version.__description__)
    parser.add_argument('--version', action='version', version=f'%(prog)s {version.__version__}')
    shared = _shared_options()
    sub = parser.add_subparsers(dest='experiment', required=True, metavar='experiment')
    for e in Experiment:
        sub.add_parser(e.value, parents=[shared], help=e.displayable_name)
    return parser


_GROUPS = {
    'solver': ('tol', 'max_iters', 'method'),
    'kernel': ('gram', 'gamma', 'rff_features'),
    'risk':   ('noise_variance', 'noise_draws'),
}
_ALIASES = {'lam': 'lambda'}


def overrides_from_args(args: argparse.Namespace) -> dict[str, typing.Any]:
    given = dict(vars(args))
    given.pop('config', None)
    overrides: dict[str, typing.Any] = {}
    for group, keys in _GROUPS.items():
        if sub := {k: given.pop(k) for k in keys if k in given}:
            overrides[group] = sub
    for key, val in given.items():
        overrides[_ALIASES.get(key, key)] = val
    return overrides


def parse_config(argv: typing.Sequence[str]|None = None) -> config.ExperimentConfig:
    parser = build_parser()
    args = parser.parse_args(argv)
    config_path = getattr(args, 'config', None)
    provenance = print if config_path is not None else None
    try:
        return config.read_config_with_overrides(config_path, provenance, **overrides_from_args(args))
    except (ValueError, typeguard.TypeCheckError) as exc:
        parser.error(str(exc))
    except OSError as exc:
        parser.error(f'cannot read {config_path}: {exc}')


def main(argv: typing.Sequence[str]|None = None) -> int:
    from . import certify, run_experiment

    cfg = parse_config(argv)
    if cfg.save_instance is not None:
        pathlib.Path(cfg.save_instance).mkdir(parents=True, exist_ok=True)
    if cfg.experiment==Experiment.Certify:
        return certify(cfg)
    run_experiment(cfg)
    return 0


if __name__=='__main__':
    sys.exit(main())

import json
import pathlib

import pytest
import typeguard

from subsketch import config, losses, synth
from subsketch.config import EmbeddingChoice, Experiment, ExperimentConfig


def _cfg(**kwargs):
    return ExperimentConfig(**{'n': 20, 'd': 30, **kwargs})


def test_defaults():
    cfg = _cfg()
    assert cfg.experiment==Experiment.Recover
    assert cfg.loss==losses.LossKind.Logistic
    assert cfg.embedding==[EmbeddingChoice.AdaptiveGaussian]
    assert cfg.solver['tol']==1e-10 and cfg.solver['method']=='newton'
    assert cfg.m_grid()==[config.DEFAULT_M]
    assert _cfg(experiment=Experiment.Sweep).m_grid()==[8, 16, 32, 64, 128, 256, 512]
    assert _cfg(experiment=Experiment.Risk).m_grid() is None
    assert _cfg(m=[4, 8]).m_grid()==[4, 8]


@pytest.mark.parametrize('kwargs, key', [
    (dict(n=None), 'n'),
    (dict(d=0), 'd'),
    (dict(lam=0.), 'lambda'),
    (dict(decay=synth.Decay.Geometric, ratio=1.5), 'ratio'),
    (dict(decay=synth.Decay.Explicit), 'spectrum'),
    (dict(decay=synth.Decay.Explicit, spectrum=[1., 2.]), 'spectrum'),
    (dict(m=[8, 8]), 'm'),
    (dict(m=[0]), 'm'),
    (dict(q=1, embedding=[EmbeddingChoice.Gaussian]), 'q'),
    (dict(experiment=Experiment.Sweep, loss=losses.LossKind.L1), 'loss'),
    (dict(experiment=Experiment.Nonsmooth, loss=losses.LossKind.Logistic), 'loss'),
    (dict(experiment=Experiment.Iterative, embedding=[EmbeddingChoice.SRHT]), 'embedding'),
    (dict(experiment=Experiment.Risk, embedding=[EmbeddingChoice.ObliviousDagger]), 'embedding'),
    (dict(T=0), 'T'),
    (dict(trials=0), 'trials'),
    (dict(seed=-1), 'seed'),
    (dict(solver=config.SolverSettings(tol=0.)), 'solver'),
    (dict(risk=config.RiskSettings(noise_draws=1)), 'risk'),
])
def test_invalid_setups(kwargs, key):
    with pytest.raises(ValueError, match=f'^{key}:'):
        _cfg(**kwargs)
    problems = _cfg(**kwargs, strict_check=False).field_problems()
    assert key in problems


def test_certify_needs_no_dimensions():
    cfg = ExperimentConfig(experiment=Experiment.Certify)
    assert cfg.n is None and cfg.field_problems()=={}


def test_type_errors():
    with pytest.raises(typeguard.TypeCheckError):
        ExperimentConfig(n='20', d=30)
    with pytest.raises(typeguard.TypeCheckError):
        ExperimentConfig(n=20, d=30, embedding=['gaussian'])


def test_json_round_trip(tmp_path):
    cfg = _cfg(experiment=Experiment.Sweep, lam=1e-3, decay=synth.Decay.Polynomial, nu=0.5,
               embedding=[EmbeddingChoice.Gaussian, EmbeddingChoice.AdaptiveSRHT], m=[8, 16],
               solver=config.SolverSettings(tol=1e-8))
    cfg.store_as_json(tmp_path)
    stored = json.loads((tmp_path/'experiment.json').read_text())
    assert stored['lambda']==1e-3
    assert stored['solver']=={'tol': 1e-8}
    assert 'quiet' not in stored
    back = ExperimentConfig.load_from_json(tmp_path)
    assert back.as_dict(include_defaults=True)==cfg.as_dict(include_defaults=True)
    assert back.solver['max_iters']==200


def test_load_rejects_unknown_enum(tmp_path):
    path = tmp_path/'bad.json'
    path.write_text(json.dumps({'n': 5, 'd': 5, 'loss': 'squared'}))
    with pytest.raises(ValueError, match='loss'):
        ExperimentConfig.load_from_json(path)


def test_overrides_and_provenance():
    lines = []
    cfg = _cfg(solver=config.SolverSettings(max_iters=50))
    new = config.apply_overrides(cfg, lines.append, **{'lambda': 0.5, 'embedding': ['srht'], 'solver': {'tol': 1e-6}})
    assert new.lam==0.5
    assert new.embedding==[EmbeddingChoice.SRHT]
    # partial groups keep their other keys
    assert new.solver['tol']==1e-6 and new.solver['max_iters']==50
    assert cfg.lam==1e-4
    assert 'override: lambda = 0.5 (was 0.0001)' in lines
    assert 'override: embedding = srht (was adaptive-gaussian)' in lines
    assert 'override: solver.tol = 1e-06 (was 1e-10)' in lines


def test_override_errors():
    cfg = _cfg()
    with pytest.raises(ValueError, match='unknown parameter "speed"'):
        config.apply_overrides(cfg, speed=2)
    with pytest.raises(typeguard.TypeCheckError):
        config.apply_overrides(cfg, trials='many')
    with pytest.raises(ValueError, match='invalid after applying overrides'):
        config.apply_overrides(cfg, trials=0)
    assert config.apply_overrides(cfg) is cfg


def test_read_config_with_overrides(tmp_path):
    _cfg(trials=3).store_as_json(tmp_path)
    lines = []
    cfg = config.read_config_with_overrides(tmp_path/'experiment.json', lines.append, seed=9)
    assert (cfg.trials, cfg.seed)==(3, 9)
    assert lines==['override: seed = 9 (was 0)']
    with pytest.raises(ValueError):
        config.read_config_with_overrides(None)


def test_solve_options_and_spectrum():
    cfg = _cfg(solver=config.SolverSettings(tol=1e-7, method='gradient'), decay=synth.Decay.Explicit, spectrum=[3., 1.])
    opts = cfg.solve_options()
    assert opts.grad_tolerance==1e-7
    assert opts.method.value=='gradient'
    assert cfg.solve_options(dual=True).max_iters==cfg.solver['dual_max_iters']
    assert cfg.spectrum_spec().singular_values(5, 5).tolist()==[3., 1.]


@pytest.mark.parametrize('path', sorted((pathlib.Path(__file__).parents[1]/'example_data').glob('*/experiment.json')), ids=lambda p: p.parent.name)
def test_example_configs_load(path):
    cfg = ExperimentConfig.load_from_json(path)
    assert cfg.field_problems()=={}

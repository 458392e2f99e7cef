import argparse
import dataclasses
import json

import pytest

from subsketch import config, harness, losses
from subsketch.config import CertifySuite, EmbeddingChoice, Experiment, ExperimentConfig
from subsketch.harness import certificates, cli, process_pool, records, recover


@pytest.fixture(autouse=True)
def _single_worker(monkeypatch):
    monkeypatch.delenv(harness.THREADS_ENV_VAR, raising=False)


@pytest.mark.parametrize('text, expected', [
    ('64', [64]),
    ('4, 8,16', [4, 8, 16]),
    ('8,16,...,128', [8, 16, 32, 64, 128]),
    ('10,15,...,30', [10, 15, 20, 25, 30]),
])
def test_parse_m_list(text, expected):
    assert cli.parse_m_list(text)==expected


@pytest.mark.parametrize('text', ['8,...,16', '8,16,...,100', '16,8,...,4', 'eight', '8,16,...,x'])
def test_parse_m_list_errors(text):
    with pytest.raises(argparse.ArgumentTypeError):
        cli.parse_m_list(text)


def test_overrides_from_args():
    args = argparse.Namespace(experiment='recover', lam=0.1, tol=1e-6, gamma=2., config='x.json')
    assert cli.overrides_from_args(args)=={
        'solver': {'tol': 1e-6}, 'kernel': {'gamma': 2.}, 'experiment': 'recover', 'lambda': 0.1,
    }


def test_parse_config_from_flags():
    cfg = cli.parse_config(['sweep', '--n', '20', '--d', '30', '--m', '8,16', '--lambda', '1e-3', '--tol', '1e-8',
                            '--embedding', 'gaussian,adaptive-srht', '--quiet'])
    assert cfg.experiment==Experiment.Sweep
    assert (cfg.n, cfg.d, cfg.m, cfg.lam) == (20, 30, [8, 16], 1e-3)
    assert cfg.embedding==[EmbeddingChoice.Gaussian, EmbeddingChoice.AdaptiveSRHT]
    assert cfg.solver['tol']==1e-8 and cfg.solver['max_iters']==200
    assert cfg.quiet


def test_flags_override_config_file(tmp_path, capsys):
    ExperimentConfig(n=20, d=30, trials=3).store_as_json(tmp_path)
    cfg = cli.parse_config(['recover', '--config', str(tmp_path/'experiment.json'), '--trials', '5'])
    assert (cfg.n, cfg.trials)==(20, 5)
    assert 'override: trials = 5 (was 3)' in capsys.readouterr().out


@pytest.mark.parametrize('argv', [
    ['recover'],
    ['recover', '--n', '10', '--d', '10', '--m', '8,...,16'],
    ['recover', '--n', '10', '--d', '10', '--lambda', '-1'],
    ['nonsmooth', '--n', '10', '--d', '10', '--loss', 'logistic'],
    ['bogus'],
    ['recover', '--config', '/nonexistent/experiment.json'],
])
def test_parse_config_errors(argv):
    with pytest.raises(SystemExit) as info:
        cli.parse_config(argv)
    assert info.value.code==2


def test_worker_count(monkeypatch):
    assert harness.worker_count()==1
    monkeypatch.setenv(harness.THREADS_ENV_VAR, '3')
    assert harness.worker_count()==3
    for bad in ('0', 'x'):
        monkeypatch.setenv(harness.THREADS_ENV_VAR, bad)
        with pytest.raises(ValueError):
            harness.worker_count()


def test_record_columns():
    assert 'lambda' in records.COLUMNS and 'lam' not in records.COLUMNS
    assert records.COLUMNS[:3]==['experiment', 'trial', 'seed']


def test_output_paths(tmp_path):
    paths = records.output_paths(tmp_path/'run.csv')
    assert paths.summary==tmp_path/'run.summary.json'
    assert paths.certificates==tmp_path/'run.certificates.json'
    paths = records.output_paths(tmp_path)
    assert (paths.records.name, paths.summary.name, paths.certificates.name)==('records.csv', 'summary.json', 'certificates.json')


def _small(**kwargs):
    return ExperimentConfig(**{'n': 20, 'd': 30, 'lam': 1e-2, 'm': [4, 8], 'trials': 2, 'quiet': True,
                               'embedding': [EmbeddingChoice.AdaptiveGaussian, EmbeddingChoice.Gaussian], **kwargs})


def test_recover_trial_is_deterministic():
    cfg = _small()

    def comparable(rows):
        return [{k: v for k, v in dataclasses.asdict(r).items() if k!='runtime_ms'} for r in rows]

    first = recover.run_trial(cfg, 0)
    assert len(first)==4
    assert comparable(first)==comparable(recover.run_trial(cfg, 0))
    assert comparable(first)!=comparable(recover.run_trial(cfg, 1))


_ADAPTIVE = [EmbeddingChoice.AdaptiveGaussian, EmbeddingChoice.AdaptiveSRHT]

@pytest.mark.parametrize('experiment, kwargs, filled', [
    (Experiment.Sweep, dict(embedding=[EmbeddingChoice.AdaptiveGaussian, EmbeddingChoice.Nystrom, EmbeddingChoice.ObliviousDagger]),
     ['rel_err_x0', 'rel_err_x1', 'residual_norm', 'spectral_residual_k', 'objective']),
    (Experiment.Iterative, dict(embedding=_ADAPTIVE, T=3, lam=1.),
     ['rel_err_x0', 'rel_err_x1', 'residual_norm', 'objective']),
    (Experiment.Nonsmooth, dict(embedding=_ADAPTIVE, loss=losses.LossKind.Hinge, lam=0.05),
     ['rel_err_x1', 'rel_err_arbitrary', 'dual_objective', 'bound_rhs']),
    (Experiment.Kernel, dict(embedding=[EmbeddingChoice.AdaptiveGaussian, EmbeddingChoice.Nystrom], kernel=config.KernelSettings(gram='gaussian-kernel')),
     ['rel_err_x0', 'rel_err_x1', 'residual_norm', 'objective']),
    (Experiment.Risk, dict(embedding=_ADAPTIVE, lam=1e-8, risk=config.RiskSettings(noise_draws=20)),
     ['mc_risk', 'analytic_risk', 'event_ok', 'residual_norm']),
    (Experiment.Conditioning, dict(embedding=[EmbeddingChoice.AdaptiveGaussian, EmbeddingChoice.Gaussian, EmbeddingChoice.ObliviousDagger]),
     ['kappa', 'kappa_dagger', 'condition_ok']),
])
def test_experiment_trials(experiment, kwargs, filled):
    cfg = _small(**{'experiment': experiment, **kwargs})
    rows = harness.experiment_to_func(experiment)(cfg, 0)
    cells = {(r.m, r.embedding) for r in rows}
    assert cells=={(m, e.value) for m in cfg.m for e in cfg.embedding}
    for row in rows:
        assert row.experiment==experiment.value
        if experiment!=Experiment.Nonsmooth:
            assert row.converged is not False, row
        for column in filled:
            assert getattr(row, column) is not None, (column, row)
    if experiment==Experiment.Iterative:
        assert max(r.T for r in rows)<=3


def test_trial_pool_matches_inline():
    cfg = _small()

    def comparable(results):
        return {t: [{k: v for k, v in dataclasses.asdict(r).items() if k!='runtime_ms'} for r in rows] for t, rows in results.items()}

    inline = process_pool.run_trials(recover.run_trial, cfg, range(2), 1, lambda _: None)
    pool = process_pool.TrialPool(recover.run_trial, cfg, 2, lambda _: None)
    try:
        pool.submit(range(2))
        pooled = pool.collect()
    finally:
        pool.cleanup()
    assert comparable(pooled)==comparable(inline)
    assert pool.states()=={0: harness.State.Completed, 1: harness.State.Completed}


def test_run_experiment_writes_outputs(tmp_path):
    cfg = _small(out_path=tmp_path)
    rows = harness.run_experiment(cfg)
    assert len(rows)==8
    frame = records.read_records(tmp_path/'records.csv')
    assert list(frame.columns)==records.COLUMNS
    assert len(frame)==8
    assert frame['lambda'].eq(1e-2).all()
    summary = json.loads((tmp_path/'summary.json').read_text())
    assert summary['experiment']=='recover'
    assert len(summary['cells'])==4
    assert all(cell['rows']==2 for cell in summary['cells'])
    assert summary['config']['lambda']==1e-2


def test_certify_refuses_run_experiment():
    with pytest.raises(ValueError):
        harness.run_experiment(ExperimentConfig(experiment=Experiment.Certify))


@pytest.mark.parametrize('suite', [CertifySuite.FullRank, CertifySuite.Conditioning, CertifySuite.Losses])
def test_cheap_certificates_pass(suite):
    [result] = certificates.run(ExperimentConfig(experiment=Experiment.Certify, suite=suite, quiet=True))
    assert result.name==suite.value
    assert result.passed, result.failures
    assert result.checked > 0


def test_format_table():
    table = certificates.format_table([
        certificates.CertificateResult('a', True, 3, 1),
        certificates.CertificateResult('longer', False, 7, 0, [f'case {i}' for i in range(7)]),
    ])
    lines = table.splitlines()
    assert lines[0].startswith('a       PASS  3 checked, 1 skipped')
    assert 'FAIL' in lines[1]
    assert lines[-1].strip()=='... and 2 more'


def test_main_certify(tmp_path):
    assert cli.main(['certify', '--suite', 'full-rank', '--quiet', '--out', str(tmp_path)])==0
    stored = json.loads((tmp_path/'certificates.json').read_text())
    assert stored[0]['name']=='full-rank' and stored[0]['passed']


def test_main_recover(tmp_path):
    argv = ['recover', '--n', '12', '--d', '16', '--m', '4', '--trials', '1', '--quiet',
            '--out', str(tmp_path/'r.csv'), '--save-instance', str(tmp_path/'inst')]
    assert cli.main(argv)==0
    assert (tmp_path/'r.csv').exists()
    assert (tmp_path/'r.summary.json').exists()
    assert (tmp_path/'inst'/'instance_0.txt').exists()


@pytest.mark.slow
@pytest.mark.parametrize('suite', [
    CertifySuite.FirstOrder, CertifySuite.Iterative, CertifySuite.Whitening, CertifySuite.Kernel,
    CertifySuite.ResidualGaussian, CertifySuite.ResidualSRHT, CertifySuite.Nonsmooth, CertifySuite.Risk,
    CertifySuite.ZeroOrderFloor, CertifySuite.FirstOrderFloor,
])
def test_certificate_suites_pass(suite):
    [result] = certificates.run(ExperimentConfig(experiment=Experiment.Certify, suite=suite, quiet=True))
    assert result.passed, result.failures

import json

import pytest

from cpc.bandits.cli import main


def _run(tmp_path, *argv):
    return main(list(argv) + ['--out', str(tmp_path), '--experiments', '2', '--horizon', '100'])


def test_compare_writes_two_runs_and_a_summary(tmp_path):
    code = _run(tmp_path, 'compare', '--policies', 'ucb,sbts-essr', '--arms', '8', '--seed', '42')
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ['compare_sbts-essr-20.csv', 'compare_summary.json', 'compare_ucb.csv']
    summary = json.loads((tmp_path / 'compare_summary.json').read_text())
    assert summary['config']['seed'] == 42
    assert summary['config']['env'] == 'random:8:0'


def test_run_with_bin_count(tmp_path):
    assert _run(tmp_path, 'run', '--policy', 'sbts-es', '--beta-bins', '10', '--env', 'mu2') == 0
    assert (tmp_path / 'run_sbts-es-10.csv').exists()


def test_sweep_wl_writes_one_run_per_precision(tmp_path):
    code = _run(tmp_path, 'sweep-wl', '--policy', 'sbts-essr', '--precision',
                'f32,fixed:27:26,fixed:11:10,fixed:6:5', '--env', 'mu1')
    assert code == 0
    assert len(list(tmp_path.glob('sweep-wl_*.csv'))) == 4


def test_rimab_with_baselines(tmp_path):
    code = _run(tmp_path, 'rimab', '--env', 'mu3', '--reward', 'gaussian:0.05', '--nlearn', '20',
                '--baselines', '--format', 'json')
    assert code == 0
    summary = json.loads((tmp_path / 'rimab_summary.json').read_text())
    labels = [run['label'] for run in summary['runs']]
    assert labels == ['rimab[ucb,sbts-essr:20]', 'ucb', 'sbts-essr:20', 'velcro-approx']


def test_config_file_with_flag_override(tmp_path):
    config = tmp_path / 'settings.json'
    config.write_text(json.dumps({'policy': 'ucb', 'env': 'mu1', 'seed': 3}))
    out = tmp_path / 'out'
    code = main(['run', '--config', str(config), '--env', 'mu4', '--out', str(out),
                 '--experiments', '1', '--horizon', '50'])
    assert code == 0
    summary = json.loads((out / 'run_summary.json').read_text())
    assert summary['config']['env'] == 'mu4'
    assert summary['config']['seed'] == 3


def test_identical_commands_give_identical_files(tmp_path):
    for name in ('a', 'b'):
        assert _run(tmp_path / name, 'run', '--policy', 'sbts', '--env', 'mu1') == 0
    for name in ('run_sbts.csv', 'run_summary.json'):
        assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()


@pytest.mark.parametrize('argv', [
    [],
    ['explode'],
    ['run', '--horizon', 'many'],
    ['run', '--format', 'xml'],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 1
    assert 'error' in capsys.readouterr().err


@pytest.mark.parametrize('argv', [
    ['run', '--policy', 'thompson'],
    ['run', '--precision', 'fixed:6:9'],
    ['rimab', '--nlearn', '0'],
    ['rimab', '--nlearn', '100', '--horizon', '100'],
])
def test_config_errors(argv, tmp_path, capsys):
    assert main(argv + ['--out', str(tmp_path), '--experiments', '1', '--horizon', '100']) == 1
    assert 'error' in capsys.readouterr().err


def test_validate_reports_checks(monkeypatch, capsys):
    from cpc.bandits import cli
    from cpc.bandits.validation import CheckResult
    monkeypatch.setattr(cli, 'run_checks', lambda **kwargs: [CheckResult('a', True, 'ok')])
    assert main(['validate']) == 0
    monkeypatch.setattr(cli, 'run_checks', lambda **kwargs: [CheckResult('a', False, 'bad')])
    assert main(['validate']) == 2
    assert 'FAIL a' in capsys.readouterr().out

import subprocess
import sys

import pytest

from fdscdc import cli
from fdscdc.harness import load_config


def run(*args):
    return subprocess.run([sys.executable, '-m', 'fdscdc', *args],
                          capture_output=True, text=True)


def test_selftest():
    p = run('selftest')
    assert p.returncode == 0
    assert 'FAIL' not in p.stdout and p.stdout.count('PASS') == 7


def test_trial_prints_outcome():
    p = run('trial', '--scheme', 'scdc', '--set', 'N=32', '--seed', '7')
    assert p.returncode == 0
    body = [ln for ln in p.stdout.splitlines() if not ln.startswith('#')]
    keys = [ln.split(' = ')[0] for ln in body]
    assert keys == ['scheme', 'taps', 'rate_bits_per_use', 'tau_dl_sq',
                    'feasible', 'alpha', 'streams']
    assert 'taps = 32' in body
    # the resolved configuration is echoed alongside
    echoed = '\n'.join(ln[2:] for ln in p.stdout.splitlines()
                       if ln.startswith('# '))
    cfg = load_config(echoed)
    assert cfg.taps == 32 and cfg.seed == 7


def test_sweep_deterministic(tmp_path):
    cfg = tmp_path / 'fig3.cfg'
    cfg.write_text('[run]\nruns = 4\nschemes = scdc-8, hd\n'
                   '[sweep]\nvalues = 20, 40\n')
    outs = []
    for name in ('a.csv', 'b.csv'):
        out = tmp_path / name
        assert cli.main(['sweep', '--config', str(cfg), '--out', str(out),
                         '--seed', '42']) == 0
        assert (tmp_path / (name + '.cfg')).exists()
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].decode().splitlines()[1].endswith(',4,42')


def test_trial_out_writes_sidecar(tmp_path):
    out = tmp_path / 't.txt'
    assert cli.main(['trial', '--scheme', 'hd', '--out', str(out)]) == 0
    assert out.exists() and (tmp_path / 't.txt.cfg').exists()


@pytest.mark.parametrize('argv', [
    ['sweep'], ['frobnicate'], ['trial'], ['sweep', '--out', 'x',
                                           '--workers', 'two'],
    ['trial', '--scheme', 'hd', '--seed', '-3'],
])
def test_bad_flags_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    assert exc.value.code == 1
    assert 'usage' in capsys.readouterr().err


def test_validation_errors_exit_1(tmp_path, capsys):
    assert cli.main(['trial', '--scheme', 'warp']) == 1
    assert cli.main(['sweep', '--out', str(tmp_path / 'x.csv'),
                     '--set', 'runs=0']) == 1
    assert 'runs' in capsys.readouterr().err
    assert cli.main(['sweep', '--out', str(tmp_path / 'x.csv'),
                     '--config', str(tmp_path / 'missing.cfg')]) == 1


def test_runtime_errors_exit_2(monkeypatch, tmp_path):
    def boom(*a, **k):
        raise ArithmeticError('boom')
    monkeypatch.setattr('fdscdc.harness.run_trial', boom)
    assert cli.main(['trial', '--scheme', 'hd']) == 2

import filecmp
import os

import pandas as pd
import pytest

from adsbench.cli import COVERAGE_RATES, main
from adsbench.config import CONFIG_ENV, load_config


@pytest.fixture(autouse=True)
def no_user_config(monkeypatch):
  monkeypatch.delenv(CONFIG_ENV, raising=False)


def test_rates_per_billion_miles(capsys):
  assert main(['rates', '--count', '1', '--miles-billions', '0.01']) == 0
  out = capsys.readouterr().out
  assert '100 IPBM' in out
  assert '557' in out


def test_rates_zero_one_sided(capsys):
  assert main(['rates', '--count', '0', '--miles-millions', '0.0467',
               '--one-sided-zero']) == 0
  assert '64.1' in capsys.readouterr().out


def test_rates_requires_miles():
  assert main(['rates', '--count', '3']) == 7


def test_pipeline_stages(tmp_path):
  out = str(tmp_path)
  assert main(['--out', out, 'ingest']) == 0
  records = os.path.join(out, 'records.csv')
  assert len(pd.read_csv(records)) == 73

  assert main(['--out', out, 'classify', '--records', records]) == 0
  classified = os.path.join(out, 'classified.csv')
  frame = pd.read_csv(classified)
  assert int(frame['sgo_reported'].sum()) == 73
  assert int(frame['police_reported'].sum()) == 15

  assert main(['--out', out, '--format', 'csv', 'rates', '--classified',
               classified]) == 0
  rates = pd.read_csv(os.path.join(out, 'rates.csv'))
  assert rates['count'].tolist()[:5] == [38, 33, 17, 12, 3]

  assert main(['--out', out, '--format', 'csv', 'blend']) == 0
  assert len(pd.read_csv(os.path.join(out, 'blends.csv'))) == 4

  assert main(['--out', out, 'report', '--classified', classified]) == 0
  for name in ('report.md', 'report.json', 'comparisons.csv',
               'reductions.csv'):
    assert os.path.exists(os.path.join(out, name))


def test_report_deterministic(tmp_path):
  a, b = str(tmp_path / 'a'), str(tmp_path / 'b')
  assert main(['--out', a, 'report']) == 0
  assert main(['--out', b, 'report']) == 0
  names = sorted(os.listdir(a))
  assert names == sorted(os.listdir(b))
  _, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
  assert mismatch == [] and errors == []


def test_compare(tmp_path, capsys):
  assert main(['--out', str(tmp_path), '--format', 'json', 'compare',
               '--category', 'sgo_reported', '--scope', 'SFO', '--source',
               'ridehail-nds', '--outcome-group',
               'AnyPropertyDamageOrInjury']) == 0
  out = capsys.readouterr().out
  assert 'ratio 0.30*' in out
  assert os.path.exists(os.path.join(str(tmp_path), 'compare.json'))


def test_compare_missing_benchmark(tmp_path, capsys):
  code = main(['--out', str(tmp_path), 'compare', '--category',
               'sgo_reported', '--scope', 'PHX', '--source', 'ridehail-nds',
               '--outcome-group', 'AnyPropertyDamageOrInjury'])
  assert code == 5
  assert 'ridehail-nds' in capsys.readouterr().err


def test_missing_input_file(tmp_path):
  missing = str(tmp_path / 'nope.csv')
  assert main(['--out', str(tmp_path), 'rates', '--classified', missing]) == 3
  assert main(['--config', missing, 'blend']) == 3


def test_schema_error_exit_code(tmp_path):
  config = tmp_path / 'run.yaml'
  config.write_text('alpha: 0.05\nunknown_key: 1\n')
  assert main(['--config', str(config), 'blend']) == 4


def test_config_layering(tmp_path, monkeypatch):
  config = tmp_path / 'run.yaml'
  config.write_text('alpha: 0.1\nseed: 5\nout_dir: here\n')
  monkeypatch.setenv(CONFIG_ENV, str(config))
  loaded = load_config(overrides={'seed': 9, 'alpha': None})
  assert loaded.alpha == 0.1
  assert loaded.seed == 9
  assert loaded.out_dir == os.path.join(str(tmp_path), 'here')
  assert loaded.ratio_alpha == 0.025


def test_deltav(capsys):
  assert main(['deltav', '--m1', '1500', '--m2', '1500', '--v1', '1.5,0',
               '--v2', '0,0']) == 0
  out = capsys.readouterr().out
  assert 'delta-V vehicle 1: 0.750 mph' in out
  assert 'yes, excluded' in out
  assert main(['deltav', '--m1', '1500', '--m2', '1500', '--v1', '10',
               '--v2', '0', '--restitution', '0.2']) == 0
  assert 'low delta-V (< 1 mph): no' in capsys.readouterr().out


def test_validate_coverage_only(capsys):
  assert main(['validate', '--trials', '2000', '--skip-bootstrap']) == 0
  out = capsys.readouterr().out
  assert out.count('pass') == len(COVERAGE_RATES)


def test_validate_loose_level(capsys):
  assert main(['--alpha', '0.5', 'validate', '--trials', '1000',
               '--skip-bootstrap']) == 0


def test_validate_bootstrap(tmp_path, capsys):
  config = tmp_path / 'run.yaml'
  config.write_text('bootstrap_trials: 5000\n')
  assert main(['--config', str(config), 'validate', '--trials', '1000']) == 0
  out = capsys.readouterr().out
  assert 'bootstrap PHX police' in out
  assert '95% (' in out and 'within 97.5% exact (' in out


def test_validate_ten_seeds(capsys):
  assert main(['validate', '--seeds', '10']) == 0
  out = capsys.readouterr().out
  assert out.count('pass') == 10 * (len(COVERAGE_RATES) + 1)
  assert 'FAIL' not in out


def test_unknown_format_rejected():
  with pytest.raises(SystemExit):
    main(['--format', 'html', 'blend'])

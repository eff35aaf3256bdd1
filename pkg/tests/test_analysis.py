import filecmp
import json
import os

import pandas as pd
import pytest

from adsbench.analysis import (ComparisonRow, build_report, compare,
                               compute_rate_table, default_comparison_plan,
                               percent_reduction_series, read_report_json,
                               render_report, write_plot_data)
from adsbench.benchmarks import OutcomeGroup
from adsbench.errors import DomainError, MissingBenchmarkError, SchemaError
from adsbench.ingest import BLENDED, NATIONAL, Category, Location
from adsbench.intervals import RateRatioResult


@pytest.fixture(scope='module')
def report(classified, ledger, registry, config):
  return build_report(classified, ledger, registry, config)


def test_rate_table(classified, ledger):
  rows = compute_rate_table(classified, ledger)
  assert len(rows) == 15
  first = rows[0]
  assert (first.location, first.category) == (Location.PHX,
                                              Category.SGO_REPORTED)
  assert first.estimate.count == 38
  assert first.estimate.point == pytest.approx(38 / 5.34)
  la = [r for r in rows if r.location == Location.LA]
  assert [r.estimate.count for r in la] == [1, 1, 1, 0, 0]
  empty = la[-1].estimate
  assert (empty.point, empty.lower) == (0., 0.)
  assert 0. < empty.upper < float('inf')


def test_compare_single_market(classified, ledger, registry):
  row = compare(Category.SGO_REPORTED, Location.SFO,
                ('ridehail-nds', OutcomeGroup.ANY_PROPERTY), classified,
                ledger, registry)
  assert row.ads_count == 34
  assert row.ratio.point == pytest.approx(0.30, abs=0.01)
  assert row.significant
  assert row.location_label == 'San Francisco'


def test_compare_blend_counts_all_markets(classified, ledger, registry):
  row = compare('any_injury', 'blend',
                ('human-blincoe-adjusted', 'AnyInjuryReported'), classified,
                ledger, registry)
  assert row.ads_count == 4
  assert row.ads_miles == pytest.approx(ledger.total)
  assert row.scope == BLENDED
  assert row.location_label == 'Total - Mileage Blend'
  assert row.ratio.point == pytest.approx(0.20, abs=0.01)


def test_compare_missing_benchmark(classified, ledger, registry):
  with pytest.raises(MissingBenchmarkError) as excinfo:
    compare(Category.SGO_REPORTED, Location.PHX,
            ('ridehail-nds', OutcomeGroup.ANY_PROPERTY), classified, ledger,
            registry)
  assert 'ridehail-nds' in str(excinfo.value)


def test_noncomparable_benchmark(classified, ledger, registry):
  key = ('human-observed', OutcomeGroup.FATAL)
  with pytest.raises(DomainError):
    compare(Category.ANY_INJURY, NATIONAL, key, classified, ledger, registry)
  row = compare(Category.ANY_INJURY, NATIONAL, key, classified, ledger,
                registry, allow_noncomparable=True)
  assert row.benchmark.ipmm == 0.0223


def test_comparison_invariants(report):
  assert len(report.comparisons) == len(default_comparison_plan())
  for row in report.comparisons:
    assert row.ratio.point == pytest.approx(
        (row.ads_count / row.ads_miles) / row.benchmark.ipmm, rel=1e-12)
    assert row.significant == (row.ratio.lower > 1. or row.ratio.upper < 1.)
    assert row.ratio.alpha == 0.025
    assert row.bootstrap is None
    if row.scope in (BLENDED, NATIONAL):
      parts = [r for r in report.comparisons
               if r.table == row.table and r.ads_selection ==
               row.ads_selection and isinstance(r.scope, Location)
               and r.benchmark.source == row.benchmark.source]
      if len(parts) == 3:
        assert row.ads_count == sum(r.ads_count for r in parts)


def test_plan_without_la():
  plan = default_comparison_plan(include_la=False)
  assert len(plan) == len(default_comparison_plan()) - 5
  assert all(entry.scope != Location.LA for entry in plan)


def _row(registry, point, lower, upper):
  benchmark = registry.lookup('human-observed', OutcomeGroup.POLICE_REPORTED,
                              Location.PHX)
  return ComparisonRow(benchmark=benchmark, scope=Location.PHX,
                       location_label='Phoenix',
                       ads_selection=Category.POLICE_REPORTED, ads_count=1,
                       ads_miles=1., ads_ipmm=1.,
                       ratio=RateRatioResult(point, lower, upper, 0.05,
                                             point - 1.),
                       significant=False)


def test_reduction_of_unit_ratio(registry):
  (point,) = percent_reduction_series([_row(registry, 1., 0.5, 1.5)])
  assert point.y == 0.
  assert point.lo == pytest.approx(-50.)
  assert point.hi == pytest.approx(50.)


def test_reduction_series(report):
  series = {(p.location, p.outcome_group, p.benchmark): p
            for p in report.reductions}
  police = series[('Total - Mileage Blend', 'Police-Reported', 'Observed')]
  assert police.y == pytest.approx(55., abs=1.)
  injury = series[('Total - Mileage Blend', 'Any-Injury-Reported',
                   'Blincoe-adjusted')]
  assert injury.y == pytest.approx(80., abs=1.)
  assert injury.lo < injury.y < injury.hi
  assert not any(p.location in ('Los Angeles', 'Total - National Average')
                 for p in report.reductions)
  assert len(report.reductions) == 9
  with_la = percent_reduction_series(report.comparisons, include_la=True)
  assert len(with_la) == 12


def test_bootstrap_column(classified, ledger, registry, config):
  config = config.replace(bootstrap_column=True, bootstrap_trials=2000,
                          include_la=False)
  report = build_report(classified, ledger, registry, config)
  row = report.comparisons[0]
  assert row.bootstrap is not None
  assert row.bootstrap.point == pytest.approx(row.ratio.point, rel=1e-4)
  assert report.meta['bootstrap_trials'] == 2000


def test_render_all_formats(report, tmp_path):
  paths = render_report(report, out_dir=str(tmp_path))
  names = [os.path.basename(p) for p in paths]
  assert names == ['report.md', 'rates.csv', 'blends.csv', 'comparisons.csv',
                   'reductions.csv', 'report.json']
  markdown = (tmp_path / 'report.md').read_text()
  assert '0.30*' in markdown
  assert '97.5% CI' in markdown and '95% CI' in markdown
  assert '| Phoenix ' in markdown
  rates = pd.read_csv(tmp_path / 'rates.csv')
  assert rates['count'].tolist()[:5] == [38, 33, 17, 12, 3]
  blends = pd.read_csv(tmp_path / 'blends.csv')
  assert blends['ipmm'].round(2).tolist() == [9.67, 4.69, 1.92, 2.80]


def test_render_is_deterministic(report, tmp_path):
  first = render_report(report, out_dir=str(tmp_path / 'a'))
  second = render_report(report, out_dir=str(tmp_path / 'b'))
  for a, b in zip(first, second):
    assert filecmp.cmp(a, b, shallow=False), a


def test_unknown_format(report, tmp_path):
  with pytest.raises(SchemaError):
    render_report(report, ['html'], str(tmp_path))


def test_json_schema(report, tmp_path):
  (path,) = render_report(report, ['json'], str(tmp_path))
  content = read_report_json(path)
  assert len(content['comparisons']) == len(report.comparisons)
  assert content['meta']['ratio_alpha'] == 0.025

  del content['comparisons'][0]['ratio']
  with open(path, 'w') as f:
    json.dump(content, f)
  with pytest.raises(SchemaError) as excinfo:
    read_report_json(path)
  assert excinfo.value.column == 'ratio'


def test_plot_data(report, tmp_path):
  path = write_plot_data(report.reductions, str(tmp_path / 'plot' / 'x.csv'))
  frame = pd.read_csv(path)
  assert list(frame.columns) == ['location', 'outcome_group', 'benchmark',
                                 'y', 'lo', 'hi']
  assert len(frame) == 9

"""
Result tables: fleet rates per market and category, mileage blended
benchmarks, fleet-to-human rate ratios and percent reductions, rendered as
Markdown, CSV and JSON.
"""
import dataclasses
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Union

import pandas as pd
from tabulate import tabulate

import adsbench
from adsbench.benchmarks import (Benchmark, OutcomeGroup, blend_registry,
                                 mileage_blend, parse_scope)
from adsbench.config import FORMATS, default_config
from adsbench.errors import DomainError, SchemaError
from adsbench.ingest import BLENDED, NATIONAL, Category, Location
from adsbench.intervals import (RateEstimate, RateRatioResult, ExposureMiles,
                                bootstrap_ratio_ci, poisson_exact_ci,
                                rate_ratio_ci)
from adsbench.utils import fmt_interval, fmt_value

__all__ = ['RateRow', 'ComparisonRow', 'PlanEntry', 'ReductionPoint',
           'Report', 'TABLES', 'category_count', 'compute_rate_table',
           'compare', 'default_comparison_plan', 'percent_reduction_series',
           'build_report', 'render_report', 'read_report_json',
           'write_plot_data', 'confidence_label']

logger = logging.getLogger(__name__)

TABLES = {
    'any_property_all':
        'Any property damage or injury: all SGO-reported crashes',
    'any_property_excl_low_dv':
        'Any property damage or injury: excluding low delta-V crashes',
    'police_injury':
        'Police-reported and any-injury-reported crashes',
}

_SCOPE_LABELS = {
    BLENDED: 'Total - Mileage Blend',
    NATIONAL: 'Total - National Average',
}


class RateRow(NamedTuple):
  location: Location
  category: Category
  estimate: RateEstimate


@dataclass(frozen=True)
class ComparisonRow:
  """ Fleet rate of one category against one human benchmark """
  benchmark: Benchmark
  scope: Union[Location, str]
  location_label: str
  ads_selection: Category
  ads_count: int
  ads_miles: float
  ads_ipmm: float
  ratio: RateRatioResult
  significant: bool
  table: str = ''
  bootstrap: Optional[RateRatioResult] = None


class PlanEntry(NamedTuple):
  table: str
  category: Category
  scope: Union[Location, str]
  source: str
  outcome_group: OutcomeGroup
  label: Optional[str] = None


class ReductionPoint(NamedTuple):
  location: str
  outcome_group: str
  benchmark: str
  y: float
  lo: float
  hi: float


@dataclass
class Report:
  rates: List[RateRow]
  blends: List[Benchmark]
  comparisons: List[ComparisonRow]
  reductions: List[ReductionPoint]
  meta: Dict[str, object] = field(default_factory=dict)


def category_count(events, category, location=None):
  """ Number of events in a category, optionally in one market only """
  category = Category.parse(category)
  return sum(1 for e in events if e.in_category(category) and
             (location is None or e.location == location))


def compute_rate_table(classified, ledger, alpha=0.05):
  """
  Exact Poisson rates per market and category
  Parameters:
  -----------
  classified: list of ClassifiedEvent
  ledger: ExposureLedger
  alpha: float
  Returns:
  --------
  rows: list of RateRow
    Markets in ledger order, categories from broadest to narrowest
  """
  rows = []
  for location in ledger.locations:
    exposure = ledger.exposure(location)
    for category in Category:
      n = category_count(classified, category, location)
      rows.append(RateRow(location, category,
                          poisson_exact_ci(n, exposure, alpha)))
  return rows


def _resolve_benchmark(registry, ledger, source, outcome_group, scope):
  if scope == BLENDED:
    return mileage_blend(registry.per_location(source, outcome_group), ledger)
  return registry.lookup(source, outcome_group, scope)


def compare(category, scope, benchmark_key, classified, ledger, registry,
            alpha=0.025, allow_noncomparable=False, location_label=None,
            table=''):
  """
  Rate ratio of the fleet to a human benchmark

  Parameters:
  -----------
  category: Category
    Fleet events counted
  scope: Location, BLENDED or NATIONAL
    A single market compares that market with its benchmark cell; BLENDED
    and NATIONAL compare all markets together with the mileage blend or the
    national cell
  benchmark_key: (source, outcome_group)
  classified: list of ClassifiedEvent
  ledger: ExposureLedger
  registry: Registry
  alpha: float
    Significance level of the ratio interval
  allow_noncomparable: bool
    Permit benchmarks flagged as not comparable
  Returns:
  --------
  row: ComparisonRow
  """
  category = Category.parse(category)
  scope = parse_scope(scope)
  source, outcome_group = benchmark_key
  benchmark = _resolve_benchmark(registry, ledger, source,
                                 OutcomeGroup.parse(outcome_group), scope)
  if not benchmark.comparable and not allow_noncomparable:
    raise DomainError("benchmark %s/%s is not comparable" %
                      (benchmark.source, benchmark.outcome_group.value))

  if isinstance(scope, Location):
    count = category_count(classified, category, scope)
    miles = ledger.miles(scope)
  else:
    count = sum(category_count(classified, category, l)
                for l in ledger.locations)
    miles = ledger.total

  ratio = rate_ratio_ci(count, ExposureMiles(miles), benchmark.count,
                        benchmark.exposure, alpha)
  # the reconstructed count rounds the rate; the point uses the rate itself
  point = (count / miles) / benchmark.ipmm
  ratio = ratio._replace(point=point, reduction=point - 1.)
  return ComparisonRow(
      benchmark=benchmark,
      scope=scope,
      location_label=location_label or _SCOPE_LABELS.get(scope) or
      scope.label,
      ads_selection=category,
      ads_count=count,
      ads_miles=miles,
      ads_ipmm=count / miles,
      ratio=ratio,
      significant=ratio.lower > 1. or ratio.upper < 1.,
      table=table)


def default_comparison_plan(include_la=True):
  """
  Pairings of fleet categories with human benchmarks

  Any property damage or injury: in-transport (or, with the low delta-V
  crashes removed, the reduced group) against the Blincoe-adjusted rates,
  all reported crashes against the naturalistic driving studies. Police and
  injury reported crashes against their observed and adjusted rates.
  """
  markets = [Location.PHX, Location.SFO] + ([Location.LA]
                                            if include_la else [])
  scopes = markets + [BLENDED, NATIONAL]
  any_property = OutcomeGroup.ANY_PROPERTY
  plan = []
  for table, broad, transport in (
      ('any_property_all', Category.SGO_REPORTED, Category.IN_TRANSPORT),
      ('any_property_excl_low_dv', Category.EXCLUDE_LOW_DV,
       Category.EXCLUDE_LOW_DV)):
    plan += [PlanEntry(table, transport, scope, 'human-blincoe-adjusted',
                       any_property) for scope in scopes]
    plan.append(PlanEntry(table, broad, Location.SFO, 'ridehail-nds',
                          any_property))
    plan.append(PlanEntry(table, broad, NATIONAL, 'shrp2-nds', any_property,
                          'All Locations'))
  for category, source, group in (
      (Category.POLICE_REPORTED, 'human-observed',
       OutcomeGroup.POLICE_REPORTED),
      (Category.ANY_INJURY, 'human-observed', OutcomeGroup.ANY_INJURY),
      (Category.ANY_INJURY, 'human-blincoe-adjusted',
       OutcomeGroup.ANY_INJURY)):
    plan += [PlanEntry('police_injury', category, scope, source, group)
             for scope in scopes]
  return plan


def percent_reduction_series(rows, include_la=False):
  """
  Percent reduction of the fleet rate for police and injury reported rows

  The reduction is -100 (ratio - 1); the interval maps the ratio bounds
  the same way, so the upper ratio bound gives the lower reduction bound.
  National rows are left out, as is Los Angeles unless `include_la`.
  """
  series = []
  for row in rows:
    if row.ads_selection not in (Category.POLICE_REPORTED,
                                 Category.ANY_INJURY):
      continue
    if row.scope == NATIONAL or (row.scope == Location.LA and
                                 not include_la):
      continue
    series.append(
        ReductionPoint(location=row.location_label,
                       outcome_group=row.benchmark.outcome_group.label,
                       benchmark=row.benchmark.display_name,
                       y=-100. * row.ratio.reduction,
                       lo=100. * (1. - row.ratio.upper),
                       hi=100. * (1. - row.ratio.lower)))
  return series


def build_report(classified, ledger, registry, config=None):
  """
  Computes every result table of a run
  Parameters:
  -----------
  classified: list of ClassifiedEvent
  ledger: ExposureLedger
  registry: Registry
  config: RunConfig
  Returns:
  --------
  report: Report
  """
  config = config or default_config()
  rates = compute_rate_table(classified, ledger, config.alpha)
  blends = blend_registry(registry, ledger)

  comparisons = []
  for entry in default_comparison_plan(config.include_la):
    if isinstance(entry.scope, Location) and \
        entry.scope not in ledger.miles_by_location:
      continue
    row = compare(entry.category, entry.scope,
                  (entry.source, entry.outcome_group), classified, ledger,
                  registry, alpha=config.ratio_alpha,
                  location_label=entry.label, table=entry.table)
    if config.bootstrap_column:
      x = row.benchmark.count
      boot = bootstrap_ratio_ci(
          row.ads_count, ExposureMiles(row.ads_miles), x,
          math.sqrt(x) * config.bootstrap_design_effect,
          row.benchmark.exposure, alpha=config.ratio_alpha,
          trials=config.bootstrap_trials, seed=config.seed)
      row = dataclasses.replace(row, bootstrap=boot)
    comparisons.append(row)
  logger.info("computed %d rate rows and %d comparison rows", len(rates),
              len(comparisons))

  meta = {
      'version': adsbench.__version__,
      'alpha': config.alpha,
      'ratio_alpha': config.ratio_alpha,
      'seed': config.seed,
      'events': len(classified),
      'miles_millions': {l.value: ledger.miles(l) for l in ledger.locations},
      'total_miles_millions': ledger.total,
      'bootstrap_trials': (config.bootstrap_trials
                           if config.bootstrap_column else None),
  }
  return Report(rates, blends, comparisons,
                percent_reduction_series(comparisons), meta)


# ---------------------------------------------------------------------------
# Rendering

RATE_COLUMNS = ('location', 'category', 'count', 'miles_millions', 'ipmm',
                'lower', 'upper', 'alpha')
BLEND_COLUMNS = ('source', 'label', 'outcome_group', 'ipmm', 'vmt_millions')
COMPARISON_COLUMNS = ('table', 'category', 'scope', 'location',
                      'benchmark_source', 'benchmark_label', 'outcome_group',
                      'human_ipmm', 'benchmark_vmt_millions',
                      'benchmark_count', 'ads_count', 'ads_miles_millions',
                      'ads_ipmm', 'ratio', 'lower', 'upper', 'alpha',
                      'reduction_pct', 'significant', 'bootstrap_lower',
                      'bootstrap_upper')
PLOT_COLUMNS = ('location', 'outcome_group', 'benchmark', 'y', 'lo', 'hi')
REPORT_SECTIONS = {
    'rates': RATE_COLUMNS,
    'blends': BLEND_COLUMNS,
    'comparisons': COMPARISON_COLUMNS,
    'reductions': PLOT_COLUMNS,
}


def _scope_value(scope):
  return scope.value if isinstance(scope, Location) else scope


def _rate_records(report):
  return [{
      'location': r.location.value,
      'category': r.category.value,
      'count': r.estimate.count,
      'miles_millions': r.estimate.exposure.millions,
      'ipmm': r.estimate.point,
      'lower': r.estimate.lower,
      'upper': r.estimate.upper,
      'alpha': r.estimate.alpha,
  } for r in report.rates]


def _blend_records(report):
  return [{
      'source': b.source,
      'label': b.label,
      'outcome_group': b.outcome_group.value,
      'ipmm': b.ipmm,
      'vmt_millions': b.vmt_millions,
  } for b in report.blends]


def _comparison_records(report):
  records = []
  for row in report.comparisons:
    records.append({
        'table': row.table,
        'category': row.ads_selection.value,
        'scope': _scope_value(row.scope),
        'location': row.location_label,
        'benchmark_source': row.benchmark.source,
        'benchmark_label': row.benchmark.label,
        'outcome_group': row.benchmark.outcome_group.value,
        'human_ipmm': row.benchmark.ipmm,
        'benchmark_vmt_millions': row.benchmark.vmt_millions,
        'benchmark_count': row.benchmark.count,
        'ads_count': row.ads_count,
        'ads_miles_millions': row.ads_miles,
        'ads_ipmm': row.ads_ipmm,
        'ratio': row.ratio.point,
        'lower': row.ratio.lower,
        'upper': row.ratio.upper,
        'alpha': row.ratio.alpha,
        'reduction_pct': -100. * row.ratio.reduction,
        'significant': row.significant,
        'bootstrap_lower': row.bootstrap.lower if row.bootstrap else None,
        'bootstrap_upper': row.bootstrap.upper if row.bootstrap else None,
    })
  return records


def _plot_records(series):
  return [dict(p._asdict()) for p in series]


def confidence_label(alpha):
  """ "95%" for alpha = 0.05 """
  return '%g%%' % round(100. * (1. - alpha), 6)


def _fmt_ratio(x):
  if x == 0. or x >= 0.01:
    return '%.2f' % x
  return fmt_value(x, 1)


def _markdown(report):
  meta = report.meta
  lines = ['# Fleet crash rates against human benchmarks', '']
  if meta.get('miles_millions'):
    miles = ', '.join('%s %g' % kv for kv in meta['miles_millions'].items())
    lines += ['Rider-only miles (millions): %s; total %.4g.' %
              (miles, meta['total_miles_millions']), '']

  if report.rates:
    lines += ['## Number and incidents per million miles (IPMM)', '']
    lines.append(
        tabulate([[r.location.label, r.category.label, r.estimate.count,
                   fmt_value(r.estimate.point, decimals=1),
                   fmt_interval(r.estimate.lower, r.estimate.upper,
                                floor=0.1, decimals=1)]
                  for r in report.rates],
                 headers=['Location', 'Measure', 'n', 'IPMM', '%s CI' %
                          confidence_label(report.rates[0].estimate.alpha)],
                 tablefmt='github', disable_numparse=True))
    lines.append('')

  if report.blends:
    lines += ['## Mileage blended human benchmarks', '']
    lines.append(
        tabulate([[b.outcome_group.label, b.display_name,
                   '%.2f' % b.ipmm, '%.0f' % b.vmt_millions]
                  for b in report.blends],
                 headers=['Outcome group', 'Human benchmark', 'Human IPMM',
                          'Effective VMT (millions)'],
                 tablefmt='github', disable_numparse=True))
    lines.append('')

  titles = dict(TABLES)
  for row in report.comparisons:
    titles.setdefault(row.table, row.table or 'Rate ratios')
  for table, title in titles.items():
    rows = [r for r in report.comparisons if r.table == table]
    if not rows:
      continue
    level = confidence_label(rows[0].ratio.alpha)
    headers = ['Fleet events', 'Human benchmark', 'Location', 'Human IPMM',
               'Fleet IPMM', 'Rate ratio', '%s CI' % level]
    with_bootstrap = any(r.bootstrap for r in rows)
    if with_bootstrap:
      headers.append('Bootstrap %s CI' % level)
    body = []
    for r in rows:
      line = [r.ads_selection.label, r.benchmark.display_name,
              r.location_label, fmt_value(r.benchmark.ipmm, 3),
              fmt_value(r.ads_ipmm, decimals=1),
              _fmt_ratio(r.ratio.point) + ('*' if r.significant else ''),
              '(%s, %s)' % (_fmt_ratio(r.ratio.lower),
                            _fmt_ratio(r.ratio.upper))]
      if with_bootstrap:
        line.append('(%s, %s)' % (_fmt_ratio(r.bootstrap.lower),
                                  _fmt_ratio(r.bootstrap.upper))
                    if r.bootstrap else '')
      body.append(line)
    lines += ['## %s' % title, '']
    lines.append(tabulate(body, headers=headers, tablefmt='github',
                          disable_numparse=True))
    lines += ['', '\\* statistically significant: the interval excludes 1.',
              '']

  if report.reductions:
    lines += ['## Percent reduction of the fleet rate', '']
    lines.append(
        tabulate([[p.location, p.outcome_group, p.benchmark, '%.0f' % p.y,
                   '(%.0f, %.0f)' % (p.lo, p.hi)] for p in report.reductions],
                 headers=['Location', 'Outcome group', 'Human benchmark',
                          'Reduction (%)', 'CI (%)'],
                 tablefmt='github', disable_numparse=True))
    lines.append('')
  return '\n'.join(lines)


def _write_csv(records, columns, path):
  pd.DataFrame(records, columns=list(columns)).to_csv(path, index=False,
                                                      float_format='%.10g')
  logger.info("wrote %s", path)
  return path


def write_plot_data(series, path):
  """ Percent reduction series as CSV: location, group, benchmark, y, lo, hi """
  os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
  return _write_csv(_plot_records(series), PLOT_COLUMNS, path)


def report_json(report):
  return {
      'meta': report.meta,
      'rates': _rate_records(report),
      'blends': _blend_records(report),
      'comparisons': _comparison_records(report),
      'reductions': _plot_records(report.reductions),
  }


def render_report(report, formats=FORMATS, out_dir='.', stem='report'):
  """
  Writes the report files
  Parameters:
  -----------
  report: Report
  formats: iterable of str
    Any of 'markdown', 'csv' and 'json'
  out_dir: str
  stem: str
    Base name of the Markdown and JSON files
  Returns:
  --------
  paths: list of str
    Files written, in a fixed order. CSV files are written for the
    non-empty sections only.
  """
  formats = list(formats)
  unknown = [f for f in formats if f not in FORMATS]
  if unknown:
    raise SchemaError("unknown report format %r" % unknown[0],
                      column='formats')
  os.makedirs(out_dir, exist_ok=True)
  paths = []
  if 'markdown' in formats:
    path = os.path.join(out_dir, stem + '.md')
    with open(path, 'w') as f:
      f.write(_markdown(report))
    logger.info("wrote %s", path)
    paths.append(path)
  if 'csv' in formats:
    sections = (('rates', report.rates, _rate_records),
                ('blends', report.blends, _blend_records),
                ('comparisons', report.comparisons, _comparison_records))
    for name, rows, records in sections:
      if rows:
        paths.append(_write_csv(records(report), REPORT_SECTIONS[name],
                                os.path.join(out_dir, name + '.csv')))
    if report.reductions:
      paths.append(write_plot_data(report.reductions,
                                   os.path.join(out_dir, 'reductions.csv')))
  if 'json' in formats:
    path = os.path.join(out_dir, stem + '.json')
    with open(path, 'w') as f:
      json.dump(report_json(report), f, indent=2, sort_keys=True)
      f.write('\n')
    logger.info("wrote %s", path)
    paths.append(path)
  return paths


def read_report_json(path):
  """ Loads a JSON report and checks its sections and row fields """
  with open(path) as f:
    content = json.load(f)
  if not isinstance(content, dict):
    raise SchemaError("%s: report must be a JSON object" % path)
  expected = set(REPORT_SECTIONS) | {'meta'}
  if set(content) != expected:
    raise SchemaError("%s: report sections %s, expected %s" %
                      (path, sorted(content), sorted(expected)))
  for section, columns in REPORT_SECTIONS.items():
    for index, row in enumerate(content[section], start=1):
      missing = [c for c in columns if c not in row]
      if missing:
        raise SchemaError("%s: %s row %d lacks %s" %
                          (path, section, index, ', '.join(missing)),
                          column=missing[0], row=index)
  return content

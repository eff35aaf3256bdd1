"""
Command line front end.

    adsbench [global flags] <command> [command flags]

Stages write their artifact into the output directory and can start from
the previous stage's file: `ingest` writes records.csv, `classify` writes
classified.csv, `rates`, `compare`, `blend` and `report` read a classified
file when given one and run the pipeline from the configured inputs
otherwise.
"""
import argparse
import logging
import math
import os
import sys

from tabulate import tabulate

import adsbench
from adsbench import analysis
from adsbench.benchmarks import (blend_registry, load_benchmarks, load_ledger,
                                 parse_scope)
from adsbench.collision import BodyState, classify_low_delta_v, delta_v_two_body
from adsbench.config import FORMATS, load_config
from adsbench.errors import (AdsBenchError, ConvergenceError, DomainError,
                             MissingBenchmarkError, SchemaError,
                             ValidationError)
from adsbench.ingest import (Category, Location, classify, load_column_map,
                             load_roster, prepare_records, read_classified,
                             read_records, write_classified, write_records)
from adsbench.intervals import (ExposureMiles, bootstrap_ratio_ci,
                                coverage_threshold, poisson_exact_ci,
                                simulate_coverage)
from adsbench.utils import BILLION, MILLION, fmt_interval, fmt_value

__all__ = ['main', 'build_parser', 'EXIT_CODES']

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

# most specific class first
EXIT_CODES = (
    (FileNotFoundError, 3),
    (SchemaError, 4),
    (MissingBenchmarkError, 5),
    (ValidationError, 6),
    (DomainError, 7),
    (ConvergenceError, 8),
    (AdsBenchError, 1),
)

COVERAGE_RATES = (0.2, 1., 5., 20.)
COVERAGE_MILES = 10.


def exit_code(exc):
  for kind, code in EXIT_CODES:
    if isinstance(exc, kind):
      return code
  return 1


# ---------------------------------------------------------------------------
# Shared stage helpers

def _records(args, config):
  if getattr(args, 'records', None):
    return read_records(args.records)
  column_map = load_column_map(config.column_map)
  return prepare_records(config, column_map)


def _classified(args, config):
  if getattr(args, 'classified', None):
    return read_classified(args.classified)
  result = classify(_records(args, config), load_roster(config.roster),
                    config)
  return result.events


def _inputs(args, config):
  classified = _classified(args, config)
  ledger = load_ledger(config.ledger)
  registry = load_benchmarks(config.benchmarks)
  return classified, ledger, registry


def _meta(config, ledger, classified):
  return {
      'version': adsbench.__version__,
      'alpha': config.alpha,
      'ratio_alpha': config.ratio_alpha,
      'seed': config.seed,
      'events': len(classified),
      'miles_millions': {l.value: ledger.miles(l) for l in ledger.locations},
      'total_miles_millions': ledger.total,
  }


def _emit(report, config, stem):
  paths = analysis.render_report(report, config.formats, config.out_dir, stem)
  for path in paths:
    print(path)


# ---------------------------------------------------------------------------
# Commands

def cmd_ingest(args, config):
  if args.sgo_csv:
    config = config.replace(sgo_csv=args.sgo_csv)
  if args.column_map:
    config = config.replace(column_map=args.column_map)
  records = _records(args, config)
  path = args.output or os.path.join(config.out_dir, 'records.csv')
  os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
  write_records(records, path)
  logger.info("wrote %d records to %s", len(records), path)
  print(path)
  return 0


def cmd_classify(args, config):
  records = _records(args, config)
  roster = None if args.rules_only else load_roster(config.roster)
  result = classify(records, roster, config)
  path = args.output or os.path.join(config.out_dir, 'classified.csv')
  os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
  write_classified(result.events, path)
  logger.info("wrote %d classified events to %s", len(result.events), path)
  print(path)
  return 0


def cmd_rates(args, config):
  if args.count is not None:
    return _single_rate(args, config)
  classified = _classified(args, config)
  ledger = load_ledger(config.ledger)
  rows = analysis.compute_rate_table(classified, ledger, config.alpha)
  report = analysis.Report(rows, [], [], [],
                           _meta(config, ledger, classified))
  _emit(report, config, 'rates')
  return 0


def _single_rate(args, config):
  if args.miles_millions is not None:
    miles = ExposureMiles(args.miles_millions, MILLION)
  elif args.miles_billions is not None:
    miles = ExposureMiles(args.miles_billions, BILLION)
  else:
    raise DomainError("--count needs --miles-millions or --miles-billions")
  estimate = poisson_exact_ci(args.count, miles, config.alpha,
                              one_sided_zero=args.one_sided_zero)
  unit = 'IPMM' if miles.unit == MILLION else 'IPBM'
  print("%d events over %g %s miles: %s %s, %s%% CI %s" %
        (estimate.count, miles.miles, miles.unit, fmt_value(estimate.point, 3),
         unit, '%g' % (100. * (1. - config.alpha)),
         fmt_interval(estimate.lower, estimate.upper, 3)))
  return 0


def cmd_compare(args, config):
  classified, ledger, registry = _inputs(args, config)
  row = analysis.compare(args.category, args.scope,
                         (args.source, args.outcome_group), classified,
                         ledger, registry, alpha=config.ratio_alpha,
                         allow_noncomparable=args.allow_noncomparable,
                         table='compare')
  print("%s vs %s (%s): %s / %s IPMM, ratio %s%s %s%% CI %s" %
        (row.ads_selection.label, row.benchmark.display_name,
         row.location_label, fmt_value(row.ads_ipmm, decimals=1),
         fmt_value(row.benchmark.ipmm, 3), '%.2f' % row.ratio.point,
         '*' if row.significant else '',
         '%g' % (100. * (1. - row.ratio.alpha)),
         fmt_interval(row.ratio.lower, row.ratio.upper, decimals=2)))
  report = analysis.Report([], [], [row], [],
                           _meta(config, ledger, classified))
  _emit(report, config, 'compare')
  return 0


def cmd_blend(args, config):
  ledger = load_ledger(config.ledger)
  registry = load_benchmarks(config.benchmarks)
  blends = blend_registry(registry, ledger)
  report = analysis.Report([], blends, [], [], {
      'miles_millions': {l.value: ledger.miles(l) for l in ledger.locations},
      'total_miles_millions': ledger.total,
  })
  _emit(report, config, 'blends')
  return 0


def cmd_report(args, config):
  if args.bootstrap:
    config = config.replace(bootstrap_column=True)
  if args.no_la:
    config = config.replace(include_la=False)
  classified, ledger, registry = _inputs(args, config)
  report = analysis.build_report(classified, ledger, registry, config)
  _emit(report, config, 'report')
  return 0


def _coverage_checks(config, seeds, trials):
  threshold = coverage_threshold(config.alpha, trials)
  rows = []
  for rate in COVERAGE_RATES:
    for offset in range(seeds):
      seed = config.seed + offset
      coverage = simulate_coverage(rate, ExposureMiles(COVERAGE_MILES),
                                   config.alpha, trials, seed)
      passed = coverage >= threshold
      log = logger.info if passed else logger.error
      log("coverage at %g IPMM, seed %d: %.4f (threshold %.4f) %s", rate,
          seed, coverage, threshold, 'pass' if passed else 'FAIL')
      rows.append(['coverage %g IPMM' % rate, seed, '%.4f' % coverage,
                   '>= %.4f' % threshold, 'pass' if passed else 'FAIL'])
  return rows


def _bootstrap_check(config, classified, ledger, registry, seeds):
  nelson = analysis.compare(Category.POLICE_REPORTED, Location.PHX,
                            ('human-observed', 'PoliceReported'), classified,
                            ledger, registry, alpha=config.ratio_alpha)
  x = nelson.benchmark.count
  rows = []
  for offset in range(seeds):
    seed = config.seed + offset
    boot = bootstrap_ratio_ci(
        nelson.ads_count, ExposureMiles(nelson.ads_miles), x,
        math.sqrt(x) * config.bootstrap_design_effect,
        nelson.benchmark.exposure, alpha=config.alpha,
        trials=config.bootstrap_trials, seed=seed)
    passed = (boot.lower >= 0.98 * nelson.ratio.lower and
              boot.upper <= 1.02 * nelson.ratio.upper)
    log = logger.info if passed else logger.error
    log("bootstrap at alpha %g %s against exact at alpha %g %s, seed %d: %s",
        config.alpha, fmt_interval(boot.lower, boot.upper, 3),
        config.ratio_alpha,
        fmt_interval(nelson.ratio.lower, nelson.ratio.upper, 3), seed,
        'pass' if passed else 'FAIL')
    value = '%s %s' % (analysis.confidence_label(config.alpha),
                       fmt_interval(boot.lower, boot.upper, decimals=3))
    criterion = 'within %s exact %s' % (
        analysis.confidence_label(config.ratio_alpha),
        fmt_interval(nelson.ratio.lower, nelson.ratio.upper, decimals=3))
    rows.append(['bootstrap PHX police', seed, value, criterion,
                 'pass' if passed else 'FAIL'])
  return rows


def cmd_validate(args, config):
  if args.trials:
    config = config.replace(coverage_trials=args.trials)
  if args.seeds < 1:
    raise DomainError("--seeds must be positive, got %d" % args.seeds)
  rows = _coverage_checks(config, args.seeds, config.coverage_trials)
  if not args.skip_bootstrap:
    rows += _bootstrap_check(config, *_inputs(args, config), args.seeds)
  print(tabulate(rows, headers=['check', 'seed', 'value', 'criterion',
                                'result'],
                 tablefmt='github', disable_numparse=True))
  failed = [r for r in rows if r[-1] != 'pass']
  if failed:
    raise ValidationError("%d of %d validation checks failed" %
                          (len(failed), len(rows)))
  return 0


def _vector(text):
  try:
    values = tuple(float(v) for v in text.split(','))
  except ValueError:
    raise argparse.ArgumentTypeError("expected vx,vy, got %r" % text)
  if len(values) == 1:
    values = (values[0], 0.)
  if len(values) != 2:
    raise argparse.ArgumentTypeError("expected vx,vy, got %r" % text)
  return values


def cmd_deltav(args, config):
  threshold = args.threshold or config.delta_v_threshold_mph
  dv = delta_v_two_body(BodyState(args.m1, args.v1),
                        BodyState(args.m2, args.v2), args.restitution)
  low = classify_low_delta_v(dv, threshold)
  print("delta-V vehicle 1: %.3f mph" % dv.dv1)
  print("delta-V vehicle 2: %.3f mph" % dv.dv2)
  print("low delta-V (< %g mph): %s" % (threshold,
                                        'yes, excluded' if low else 'no'))
  return 0


# ---------------------------------------------------------------------------
# Parser

def _add_input_flags(parser, classified=True):
  parser.add_argument('--records', help='records file written by ingest')
  if classified:
    parser.add_argument('--classified',
                        help='classified events file written by classify')


def build_parser():
  parser = argparse.ArgumentParser(
      prog='adsbench',
      description='Crash rates of a rider-only fleet against human driving '
      'benchmarks')
  parser.add_argument('--version', action='version',
                      version='%(prog)s ' + adsbench.__version__)
  parser.add_argument('--config', help='YAML run configuration '
                      '(default: $ADSBENCH_CONFIG)')
  parser.add_argument('--out', dest='out_dir', help='output directory')
  parser.add_argument('-v', '--verbose', action='count', default=0,
                      help='INFO logging, twice for DEBUG')
  parser.add_argument('--quiet', action='store_true',
                      help='only warnings and errors')
  parser.add_argument('--alpha', type=float,
                      help='significance level of rate intervals')
  parser.add_argument('--ratio-alpha', type=float,
                      help='significance level of rate ratio intervals')
  parser.add_argument('--seed', type=int)
  parser.add_argument('--format', dest='formats', action='append',
                      choices=FORMATS, help='report format, repeatable')
  commands = parser.add_subparsers(dest='command', metavar='command')
  commands.required = True

  p = commands.add_parser('ingest', help='parse, filter and deduplicate an '
                          'SGO export')
  p.add_argument('--sgo-csv', help='SGO export CSV; the roster when absent')
  p.add_argument('--column-map', help='YAML column map')
  p.add_argument('-o', '--output', help='records file (.csv or .json)')
  p.set_defaults(func=cmd_ingest, records=None)

  p = commands.add_parser('classify', help='assign records to categories')
  _add_input_flags(p, classified=False)
  p.add_argument('--rules-only', action='store_true',
                 help='do not apply the roster flags')
  p.add_argument('-o', '--output', help='classified file (.csv or .json)')
  p.set_defaults(func=cmd_classify)

  p = commands.add_parser('rates', help='exact Poisson rates')
  _add_input_flags(p)
  p.add_argument('--count', type=int, help='single event count')
  miles = p.add_mutually_exclusive_group()
  miles.add_argument('--miles-millions', type=float)
  miles.add_argument('--miles-billions', type=float)
  p.add_argument('--one-sided-zero', action='store_true',
                 help='one-sided upper bound when the count is 0')
  p.set_defaults(func=cmd_rates)

  p = commands.add_parser('compare', help='one fleet-to-human rate ratio')
  _add_input_flags(p)
  p.add_argument('--category', required=True, type=Category.parse)
  p.add_argument('--scope', required=True, type=parse_scope,
                 help='PHX, SFO, LA, blend or national')
  p.add_argument('--source', required=True, help='benchmark source')
  p.add_argument('--outcome-group', required=True)
  p.add_argument('--allow-noncomparable', action='store_true')
  p.set_defaults(func=cmd_compare)

  p = commands.add_parser('blend', help='mileage blended benchmarks')
  p.set_defaults(func=cmd_blend)

  p = commands.add_parser('report', help='all result tables')
  _add_input_flags(p)
  p.add_argument('--bootstrap', action='store_true',
                 help='add a bootstrap interval column')
  p.add_argument('--no-la', action='store_true',
                 help='leave out the Los Angeles rows')
  p.set_defaults(func=cmd_report)

  p = commands.add_parser('validate', help='coverage and bootstrap checks')
  _add_input_flags(p)
  p.add_argument('--seeds', type=int, default=1,
                 help='number of consecutive seeds to run')
  p.add_argument('--trials', type=int, help='coverage trials per rate')
  p.add_argument('--skip-bootstrap', action='store_true')
  p.set_defaults(func=cmd_validate)

  p = commands.add_parser('deltav', help='delta-V of a two-vehicle impact')
  p.add_argument('--m1', type=float, required=True, help='mass, kg')
  p.add_argument('--m2', type=float, required=True, help='mass, kg')
  p.add_argument('--v1', type=_vector, required=True, help='vx,vy in mph')
  p.add_argument('--v2', type=_vector, required=True, help='vx,vy in mph')
  p.add_argument('--restitution', type=float, default=0.)
  p.add_argument('--threshold', type=float,
                 help='low delta-V threshold, mph')
  p.set_defaults(func=cmd_deltav)
  return parser


def _log_level(args):
  if args.quiet:
    return logging.WARNING
  if args.verbose >= 2:
    return logging.DEBUG
  if args.verbose == 1:
    return logging.INFO
  return logging.WARNING


def main(argv=None):
  parser = build_parser()
  args = parser.parse_args(argv)
  logging.basicConfig(level=_log_level(args), format=LOG_FORMAT)
  logging.getLogger('adsbench').setLevel(_log_level(args))

  try:
    config = load_config(args.config, {
        'out_dir': args.out_dir,
        'alpha': args.alpha,
        'ratio_alpha': args.ratio_alpha,
        'seed': args.seed,
        'formats': args.formats,
    })
    return args.func(args, config)
  except (AdsBenchError, FileNotFoundError) as exc:
    code = exit_code(exc)
    logger.error("%s (exit %d)", exc, code)
    print("adsbench: error: %s" % exc, file=sys.stderr)
    return code


if __name__ == '__main__':
  sys.exit(main())

import pytest

from adsbench.benchmarks import (Benchmark, ExposureLedger, OutcomeGroup,
                                 Registry, blend_registry,
                                 effective_blend_vmt, load_benchmarks,
                                 mileage_blend, parse_scope)
from adsbench.errors import (DomainError, DuplicateKeyError,
                             MissingBenchmarkError, SchemaError)
from adsbench.ingest import BLENDED, NATIONAL, Location

ANY = OutcomeGroup.ANY_PROPERTY


def test_shipped_registry(registry):
  assert len(registry) == 19
  cell = registry.lookup('human-blincoe-adjusted', ANY, Location.PHX)
  assert cell.ipmm == 9.43
  assert cell.count == 234477
  assert registry.lookup('human-blincoe-adjusted', 'AnyPropertyDamageOrInjury',
                         'national').ipmm == 8.94
  fatal = registry.lookup('human-observed', OutcomeGroup.FATAL, NATIONAL)
  assert not fatal.comparable
  assert fatal not in registry.comparable()


def test_missing_cell(registry):
  with pytest.raises(MissingBenchmarkError) as excinfo:
    registry.lookup('ridehail-nds', ANY, Location.PHX)
  assert excinfo.value.key == ('ridehail-nds', ANY, Location.PHX)
  assert 'ridehail-nds' in str(excinfo.value)
  assert ('ridehail-nds', ANY, 'SFO') in registry
  assert ('ridehail-nds', ANY, 'PHX') not in registry


def test_duplicate_keys():
  cell = Benchmark('s', ANY, Location.PHX, 1., 10.)
  with pytest.raises(DuplicateKeyError):
    Registry([cell, cell])


@pytest.mark.parametrize('ipmm,vmt', [(0., 10.), (-1., 10.), (2., 0.)])
def test_nonpositive_values(ipmm, vmt):
  with pytest.raises(SchemaError):
    Benchmark('s', ANY, Location.PHX, ipmm, vmt)


def test_registry_file_errors(tmp_path):
  path = tmp_path / 'benchmarks.yaml'
  path.write_text('benchmarks:\n  - source: s\n    outcome_group: Bogus\n'
                  '    location: PHX\n    ipmm: 1\n    vmt_millions: 2\n')
  with pytest.raises(SchemaError):
    load_benchmarks(str(path))
  path.write_text('benchmarks:\n  - source: s\n    outcome_group: PoliceReported'
                  '\n    location: PHX\n    ipmm: 1\n')
  with pytest.raises(SchemaError) as excinfo:
    load_benchmarks(str(path))
  assert excinfo.value.column == 'vmt_millions'


def test_ledger(ledger):
  assert ledger.locations == [Location.PHX, Location.SFO, Location.LA]
  assert ledger.total == pytest.approx(7.1467)
  assert ledger.exposure().millions == pytest.approx(7.1467)
  with pytest.raises(SchemaError):
    ExposureLedger({Location.PHX: 0.})


def test_parse_scope():
  assert parse_scope('blend') == BLENDED
  assert parse_scope('All') == NATIONAL
  assert parse_scope('sf') == Location.SFO
  with pytest.raises(ValueError):
    parse_scope('Austin')


@pytest.mark.parametrize('source,group,expected', [
    ('human-blincoe-adjusted', ANY, 9.67),
    ('human-observed', OutcomeGroup.POLICE_REPORTED, 4.68),
    ('human-observed', OutcomeGroup.ANY_INJURY, 1.92),
    ('human-blincoe-adjusted', OutcomeGroup.ANY_INJURY, 2.80),
])
def test_mileage_blends(registry, ledger, source, group, expected):
  blend = mileage_blend(registry.per_location(source, group), ledger)
  assert blend.ipmm == pytest.approx(expected, abs=0.01)
  assert blend.location == BLENDED
  assert blend.vmt_millions == pytest.approx(19002., rel=0.005)


def test_blend_of_equal_rates_is_that_rate(ledger):
  cells = [Benchmark('s', ANY, l, 3.3, 100. * (i + 1))
           for i, l in enumerate(ledger.locations)]
  assert mileage_blend(cells, ledger).ipmm == pytest.approx(3.3)
  assert effective_blend_vmt(cells, ledger) == pytest.approx(
      (100. * 5.34 + 200. * 1.76 + 300. * 0.0467) / 7.1467)


@pytest.mark.parametrize('factor', [0.001, 3.7, 1e4])
def test_blend_invariant_to_ledger_scale(registry, ledger, factor):
  cells = registry.per_location('human-observed',
                                OutcomeGroup.POLICE_REPORTED)
  scaled = ledger.scaled(factor)
  assert scaled.total == pytest.approx(factor * ledger.total)
  blend = mileage_blend(cells, ledger)
  again = mileage_blend(cells, scaled)
  assert again.ipmm == pytest.approx(blend.ipmm, rel=1e-12)
  assert again.vmt_millions == pytest.approx(blend.vmt_millions, rel=1e-12)


def test_blend_errors(registry, ledger):
  with pytest.raises(MissingBenchmarkError):
    mileage_blend(registry.per_location('ridehail-nds', ANY), ledger)
  mixed = [Benchmark('a', ANY, Location.PHX, 1., 1.),
           Benchmark('b', ANY, Location.SFO, 1., 1.),
           Benchmark('b', ANY, Location.LA, 1., 1.)]
  with pytest.raises(DomainError):
    mileage_blend(mixed, ledger)


def test_blend_registry(registry, ledger):
  blends = blend_registry(registry, ledger)
  assert [(b.source, b.outcome_group) for b in blends] == [
      ('human-blincoe-adjusted', ANY),
      ('human-observed', OutcomeGroup.POLICE_REPORTED),
      ('human-observed', OutcomeGroup.ANY_INJURY),
      ('human-blincoe-adjusted', OutcomeGroup.ANY_INJURY),
  ]
  two_markets = ExposureLedger({Location.PHX: 5.34, Location.SFO: 1.76})
  assert blend_registry(registry, two_markets)[0].ipmm == pytest.approx(
      (9.43 * 5.34 + 10.49 * 1.76) / 7.10)

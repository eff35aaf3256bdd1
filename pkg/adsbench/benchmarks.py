"""
Human benchmark registry, exposure ledger and mileage blending.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Union

from adsbench.config import load_yaml
from adsbench.errors import (DomainError, DuplicateKeyError,
                             MissingBenchmarkError, SchemaError)
from adsbench.ingest import BLENDED, NATIONAL, Location
from adsbench.intervals import ExposureMiles, reconstruct_count
from adsbench.utils import data_path

__all__ = ['OutcomeGroup', 'Benchmark', 'Registry', 'ExposureLedger',
           'load_benchmarks', 'load_ledger', 'mileage_blend',
           'effective_blend_vmt', 'blend_registry', 'parse_scope']

logger = logging.getLogger(__name__)


class OutcomeGroup(str, Enum):
  ANY_PROPERTY = 'AnyPropertyDamageOrInjury'
  POLICE_REPORTED = 'PoliceReported'
  ANY_INJURY = 'AnyInjuryReported'
  # reference only, not compared
  FATAL = 'Fatal'
  SERIOUS_INJURY = 'SeriousInjuryOrWorse'
  AIRBAG = 'AirbagDeployment'
  TOW_AWAY = 'TowAway'
  BLANCO_PDO = 'BlancoAdjustedPropertyDamage'

  @property
  def label(self):
    return _GROUP_LABELS.get(self, self.value)

  @property
  def comparable(self):
    return self in (OutcomeGroup.ANY_PROPERTY, OutcomeGroup.POLICE_REPORTED,
                    OutcomeGroup.ANY_INJURY)

  @classmethod
  def parse(cls, value):
    if isinstance(value, cls):
      return value
    key = str(value).strip().casefold().replace('-', '').replace('_', '')
    for member in cls:
      if key in (member.value.casefold(), member.name.casefold().replace(
          '_', '')):
        return member
    raise ValueError("unknown outcome group %r" % (value,))


_GROUP_LABELS = {
    OutcomeGroup.ANY_PROPERTY: 'Any Property Damage or Injury',
    OutcomeGroup.POLICE_REPORTED: 'Police-Reported',
    OutcomeGroup.ANY_INJURY: 'Any-Injury-Reported',
}


def parse_scope(value):
  """ A Location, NATIONAL or BLENDED """
  if value in (NATIONAL, BLENDED) or isinstance(value, Location):
    return value
  key = str(value).strip().casefold()
  if key in ('national', 'all'):
    return NATIONAL
  if key in ('blend', 'blended', BLENDED.casefold()):
    return BLENDED
  return Location.parse(value)


@dataclass(frozen=True)
class Benchmark:
  """
  Human crashed vehicle rate in incidents per million miles, estimated over
  `vmt_millions` million vehicle miles.
  """
  source: str
  outcome_group: OutcomeGroup
  location: Union[Location, str]
  ipmm: float
  vmt_millions: float
  label: str = ''
  comparable: bool = True
  note: str = ''

  def __post_init__(self):
    for name in ('ipmm', 'vmt_millions'):
      value = getattr(self, name)
      if not (isinstance(value, (int, float)) and math.isfinite(value)
              and value > 0):
        raise SchemaError("benchmark %s/%s/%s: %s must be positive, got %r" %
                          (self.source, self.outcome_group.value,
                           getattr(self.location, 'value', self.location),
                           name, value), column=name)

  @property
  def key(self):
    return (self.source, self.outcome_group, self.location)

  @property
  def count(self):
    """ Benchmark event count implied by the rate and VMT """
    return reconstruct_count(self.ipmm, self.vmt_millions)

  @property
  def exposure(self):
    return ExposureMiles(self.vmt_millions)

  @property
  def display_name(self):
    return self.label or self.source


class Registry:
  """
  Benchmarks keyed by (source, outcome group, location)

  Cells a source does not provide are absent; looking them up raises
  MissingBenchmarkError.
  """

  def __init__(self, benchmarks):
    self._entries = {}
    for benchmark in benchmarks:
      if benchmark.key in self._entries:
        raise DuplicateKeyError("duplicate benchmark %s" % (_fmt_key(
            benchmark.key),))
      self._entries[benchmark.key] = benchmark

  def __iter__(self):
    return iter(self._entries.values())

  def __len__(self):
    return len(self._entries)

  def __contains__(self, key):
    try:
      self.lookup(*key)
    except MissingBenchmarkError:
      return False
    return True

  def lookup(self, source, outcome_group, location):
    key = (source, OutcomeGroup.parse(outcome_group), parse_scope(location))
    try:
      return self._entries[key]
    except KeyError:
      raise MissingBenchmarkError(key, "no benchmark for %s" % _fmt_key(key))

  def comparable(self):
    return [b for b in self if b.comparable]

  def select(self, source=None, outcome_group=None):
    group = OutcomeGroup.parse(outcome_group) if outcome_group else None
    return [
        b for b in self
        if (source is None or b.source == source) and
        (group is None or b.outcome_group == group)
    ]

  def per_location(self, source, outcome_group):
    """ Location -> benchmark for the market-level cells of a source """
    return {
        b.location: b
        for b in self.select(source, outcome_group)
        if isinstance(b.location, Location)
    }


def _fmt_key(key):
  source, group, location = key
  return "(%s, %s, %s)" % (source, getattr(group, 'value', group),
                           getattr(location, 'value', location))


_BENCHMARK_KEYS = {'source', 'label', 'outcome_group', 'location', 'ipmm',
                   'vmt_millions', 'comparable', 'note'}
_REQUIRED_KEYS = ('source', 'outcome_group', 'location', 'ipmm',
                  'vmt_millions')


def load_benchmarks(config_path=None):
  """
  Reads the benchmark registry
  Parameters:
  -----------
  config_path: str
    YAML file with a `benchmarks` list; the shipped table when None
  Returns:
  --------
  registry: Registry
  """
  path = config_path or data_path('benchmarks.yaml')
  content = load_yaml(path)
  entries = content.get('benchmarks')
  if not isinstance(entries, list):
    raise SchemaError("%s: expected a `benchmarks` list" % path)
  benchmarks = []
  for index, entry in enumerate(entries, start=1):
    if not isinstance(entry, dict):
      raise SchemaError("%s: entry %d is not a mapping" % (path, index),
                        row=index)
    unknown = set(entry) - _BENCHMARK_KEYS
    if unknown:
      raise SchemaError("%s: entry %d has unknown keys %s" %
                        (path, index, sorted(unknown)), row=index)
    for key in _REQUIRED_KEYS:
      if key not in entry:
        raise SchemaError("%s: entry %d lacks %r" % (path, index, key),
                          column=key, row=index)
    try:
      group = OutcomeGroup.parse(entry['outcome_group'])
      location = parse_scope(entry['location'])
    except ValueError as exc:
      raise SchemaError("%s: entry %d: %s" % (path, index, exc), row=index)
    if location == BLENDED:
      raise SchemaError("%s: entry %d: blends are computed, not configured" %
                        (path, index), row=index)
    benchmarks.append(
        Benchmark(source=str(entry['source']),
                  outcome_group=group,
                  location=location,
                  ipmm=entry['ipmm'],
                  vmt_millions=entry['vmt_millions'],
                  label=str(entry.get('label') or ''),
                  comparable=bool(entry.get('comparable', True))
                  and group.comparable,
                  note=str(entry.get('note') or '')))
  registry = Registry(benchmarks)
  logger.info("loaded %d benchmarks from %s", len(registry), path)
  return registry


@dataclass(frozen=True)
class ExposureLedger:
  """ Rider-only miles per market, in millions """
  miles_by_location: Dict[Location, float]

  def __post_init__(self):
    if not self.miles_by_location:
      raise SchemaError("exposure ledger is empty")
    for location, miles in self.miles_by_location.items():
      if not (isinstance(location, Location) and math.isfinite(miles)
              and miles > 0):
        raise SchemaError("ledger entry %s=%r must be positive miles" %
                          (location, miles), column=str(location))

  @property
  def locations(self):
    return [l for l in Location if l in self.miles_by_location]

  @property
  def total(self):
    return sum(self.miles_by_location[l] for l in self.locations)

  def miles(self, location):
    try:
      return self.miles_by_location[location]
    except KeyError:
      raise MissingBenchmarkError(location, "no miles recorded for %s" %
                                  location.value)

  def exposure(self, location=None):
    """ Miles of one market, or of all of them """
    if location is None:
      return ExposureMiles(self.total)
    return ExposureMiles(self.miles(location))

  def scaled(self, factor):
    return ExposureLedger({l: m * factor
                           for l, m in self.miles_by_location.items()})


def load_ledger(path=None):
  path = path or data_path('exposure.yaml')
  content = load_yaml(path)
  unknown = set(content) - {'miles_millions'}
  if unknown or not isinstance(content.get('miles_millions'), dict):
    raise SchemaError("%s: expected only a `miles_millions` mapping" % path)
  try:
    miles = {Location.parse(k): float(v)
             for k, v in content['miles_millions'].items()}
  except (TypeError, ValueError) as exc:
    raise SchemaError("%s: %s" % (path, exc))
  return ExposureLedger(miles)


def _constituents(per_location_benchmarks, ledger):
  if not isinstance(per_location_benchmarks, dict):
    per_location_benchmarks = {b.location: b for b in per_location_benchmarks}
  pairs = []
  for location in ledger.locations:
    if location not in per_location_benchmarks:
      raise MissingBenchmarkError(location, "blend needs a benchmark for %s" %
                                  location.value)
    pairs.append((per_location_benchmarks[location], ledger.miles(location)))
  kinds = {(b.source, b.outcome_group) for b, _ in pairs}
  if len(kinds) > 1:
    raise DomainError("blend constituents mix sources or outcome groups: %s" %
                      sorted((s, g.value) for s, g in kinds))
  return pairs


def mileage_blend(per_location_benchmarks, ledger):
  """
  Benchmark blended in proportion to the miles driven in each market

  Parameters:
  -----------
  per_location_benchmarks: dict or iterable of Benchmark
    One benchmark per market of the ledger, same source and outcome group
  ledger: ExposureLedger
  Returns:
  --------
  benchmark: Benchmark
    Located at BLENDED, with the mileage-weighted rate and VMT
  """
  pairs = _constituents(per_location_benchmarks, ledger)
  total = sum(miles for _, miles in pairs)
  ipmm = sum(b.ipmm * miles for b, miles in pairs) / total
  vmt = sum(b.vmt_millions * miles for b, miles in pairs) / total
  first = pairs[0][0]
  return Benchmark(source=first.source, outcome_group=first.outcome_group,
                   location=BLENDED, ipmm=ipmm, vmt_millions=vmt,
                   label=first.label,
                   comparable=all(b.comparable for b, _ in pairs))


def effective_blend_vmt(per_location_benchmarks, ledger):
  """ Mileage-weighted mean of the constituent benchmark VMTs """
  return mileage_blend(per_location_benchmarks, ledger).vmt_millions


def blend_registry(registry, ledger):
  """ Blends of every comparable source covering all markets of the ledger """
  blends = []
  seen = set()
  for benchmark in registry.comparable():
    kind = (benchmark.source, benchmark.outcome_group)
    if kind in seen:
      continue
    seen.add(kind)
    cells = registry.per_location(*kind)
    if all(location in cells for location in ledger.locations):
      blends.append(mileage_blend(cells, ledger))
  return blends

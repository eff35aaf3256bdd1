"""
Crash record ingestion and classification.

Reads SGO-style crash exports, keeps rider-only reports of the operator,
removes resubmitted duplicates, adds the pre-SGO events and assigns every
event to the nested analysis categories

  sgo_reported > in_transport > {exclude_low_dv_member, police_reported,
                                 any_injury}

A rule cascade derives the categories from the report fields; a roster of
per-event flags, when given, takes precedence field by field.
"""
import json
import logging
import math
import os
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, NamedTuple, Optional

import pandas as pd

from adsbench.collision import DeltaVPair, classify_low_delta_v
from adsbench.config import default_config, load_yaml
from adsbench.errors import DuplicateKeyError, SchemaError
from adsbench.utils import data_path, parse_bool

__all__ = [
    'Location', 'NATIONAL', 'BLENDED', 'LawEnforcement', 'Severity',
    'GearState', 'Provenance', 'Category', 'SgoRecord', 'ClassifiedEvent',
    'ClassificationResult', 'RosterEntry', 'ColumnMap', 'load_column_map',
    'parse_sgo_csv', 'filter_waymo_ro', 'dedup_updated_reports',
    'load_roster', 'records_from_roster', 'merge_pre_sgo', 'classify',
    'prepare_records', 'write_records', 'read_records', 'write_classified',
    'read_classified'
]

logger = logging.getLogger(__name__)

NATIONAL = 'National'
BLENDED = 'Mileage blend'


class Location(str, Enum):
  PHX = 'PHX'
  SFO = 'SFO'
  LA = 'LA'

  @property
  def label(self):
    return _LOCATION_LABELS[self]

  @classmethod
  def parse(cls, value):
    """ Accepts market codes and city names, case-insensitively """
    if isinstance(value, cls):
      return value
    key = str(value).strip().casefold()
    for location in cls:
      if key in (location.value.casefold(), location.label.casefold()):
        return location
    if key in _LOCATION_ALIASES:
      return _LOCATION_ALIASES[key]
    raise ValueError("unknown location %r" % (value,))


_LOCATION_LABELS = {
    Location.PHX: 'Phoenix',
    Location.SFO: 'San Francisco',
    Location.LA: 'Los Angeles',
}
_LOCATION_ALIASES = {'sf': Location.SFO, 'la': Location.LA}


class _ParsedEnum(str, Enum):
  """ str enum parsed case-insensitively from its value """

  @classmethod
  def parse(cls, value):
    if isinstance(value, cls):
      return value
    key = str(value).strip().casefold()
    for member in cls:
      if member.value.casefold() == key:
        return member
    raise ValueError("invalid %s %r" % (cls.__name__, value))


class LawEnforcement(_ParsedEnum):
  YES = 'Yes'
  NO = 'No'
  UNKNOWN = 'Unknown'

  @classmethod
  def parse(cls, value):
    if str(value).strip() == '':
      return cls.UNKNOWN
    return super().parse(value)


class Severity(_ParsedEnum):
  NONE = 'None'
  MINOR = 'Minor'
  MODERATE = 'Moderate'
  SERIOUS = 'Serious'
  FATALITY = 'Fatality'
  UNKNOWN = 'Unknown'

  @property
  def rank(self):
    """ None < Minor < Moderate < Serious < Fatality; Unknown has no rank """
    return _SEVERITY_RANK[self]

  @property
  def is_injury(self):
    return self.rank >= _SEVERITY_RANK[Severity.MINOR]

  @classmethod
  def parse(cls, value):
    # the export spells out the hospitalization status, e.g.
    # "Minor W/O Hospitalization", "No Injuries Reported" or
    # "Property Damage. No Injured Reported"
    key = str(value).strip().casefold()
    if key == '':
      return cls.UNKNOWN
    if key.startswith(('no injur', 'property damage')):
      return cls.NONE
    if key.startswith('fatal'):
      return cls.FATALITY
    for member in cls:
      if key.split(' ')[0] == member.value.casefold():
        return member
    raise ValueError("invalid severity %r" % (value,))


_SEVERITY_RANK = {
    Severity.UNKNOWN: -1,
    Severity.NONE: 0,
    Severity.MINOR: 1,
    Severity.MODERATE: 2,
    Severity.SERIOUS: 3,
    Severity.FATALITY: 4,
}


class GearState(_ParsedEnum):
  PARK = 'Park'
  NOT_PARK = 'NotPark'
  UNKNOWN = 'Unknown'

  @classmethod
  def from_movement(cls, value):
    """ Gear state implied by the pre-crash movement field """
    key = str(value).strip().casefold()
    if key in ('', 'unknown'):
      return cls.UNKNOWN
    if key in ('park', 'parked'):
      return cls.PARK
    try:
      return cls.parse(value)
    except ValueError:
      return cls.NOT_PARK


class Provenance(_ParsedEnum):
  CSV = 'CsvDerived'
  ROSTER = 'RosterOverride'


class Category(str, Enum):
  SGO_REPORTED = 'sgo_reported'
  IN_TRANSPORT = 'in_transport'
  EXCLUDE_LOW_DV = 'exclude_low_dv_member'
  POLICE_REPORTED = 'police_reported'
  ANY_INJURY = 'any_injury'

  @property
  def label(self):
    return _CATEGORY_LABELS[self]

  @classmethod
  def parse(cls, value):
    if isinstance(value, cls):
      return value
    key = str(value).strip().casefold().replace('-', '_')
    for member in cls:
      if key in (member.value, member.name.casefold()):
        return member
    raise ValueError("unknown category %r" % (value,))


_CATEGORY_LABELS = {
    Category.SGO_REPORTED: 'SGO-Reported',
    Category.IN_TRANSPORT: 'SGO-Reported in Transport',
    Category.EXCLUDE_LOW_DV: 'SGO-Reported Exclude Low Delta-V',
    Category.POLICE_REPORTED: 'SGO Police-Reported',
    Category.ANY_INJURY: 'SGO Any-Injury-Reported',
}

FLAGS = tuple(c.value for c in Category)


@dataclass(frozen=True)
class SgoRecord:
  """
  One crash report row. `location` is None for cities outside the three
  markets; the city is then kept in `extra` under "city".
  """
  report_id: str
  reporting_entity: str
  operator_type: str
  location: Optional[Location]
  law_enforcement_investigating: LawEnforcement
  highest_injury_severity: Severity
  narrative: str = ''
  gear_state: Optional[GearState] = None
  ads_vehicle_impacted: Optional[bool] = None
  curb_offset_in: Optional[float] = None
  designated_parking: Optional[bool] = None
  delta_v_sv: Optional[float] = None
  delta_v_cp: Optional[float] = None
  provenance: Provenance = Provenance.CSV
  extra: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ClassifiedEvent:
  record: SgoRecord
  sgo_reported: bool
  in_transport: bool
  exclude_low_dv_member: bool
  police_reported: bool
  any_injury: bool
  provenance: Provenance

  @property
  def report_id(self):
    return self.record.report_id

  @property
  def location(self):
    return self.record.location

  def in_category(self, category):
    return getattr(self, Category.parse(category).value)

  def flags(self):
    return {name: getattr(self, name) for name in FLAGS}


class ClassificationResult(NamedTuple):
  events: List[ClassifiedEvent]
  warnings: List[str]


@dataclass(frozen=True)
class RosterEntry:
  """
  Published per-event flags. A flag left blank (None) does not override the
  rule cascade.
  """
  report_id: str
  location: Location
  ro_event: Optional[int] = None
  pre_sgo: bool = False
  sgo_reported: Optional[bool] = None
  in_transport: Optional[bool] = None
  exclude_low_dv_member: Optional[bool] = None
  police_reported: Optional[bool] = None
  any_injury: Optional[bool] = None

  def flags(self):
    return {name: getattr(self, name) for name in FLAGS
            if getattr(self, name) is not None}


def _check_nesting(report_id, flags):
  if flags['in_transport'] and not flags['sgo_reported']:
    raise SchemaError("%s: in_transport requires sgo_reported" % report_id)
  for name in ('exclude_low_dv_member', 'police_reported', 'any_injury'):
    if flags[name] and not flags['in_transport']:
      raise SchemaError("%s: %s requires in_transport" % (report_id, name))


# ---------------------------------------------------------------------------
# Column map

@dataclass(frozen=True)
class ColumnMap:
  required: Dict[str, str]
  optional: Dict[str, str]
  city_locations: Dict[str, Location]

  def header(self, name):
    return self.required.get(name) or self.optional.get(name)

  def location_of(self, city):
    """ Market of a city, None when it is not one of the three """
    for key, location in self.city_locations.items():
      if key.casefold() == city.strip().casefold():
        return location
    try:
      return Location.parse(city)
    except ValueError:
      return None


_REQUIRED_FIELDS = ('report_id', 'reporting_entity', 'operator_type', 'city',
                    'law_enforcement_investigating',
                    'highest_injury_severity', 'narrative')
_OPTIONAL_FIELDS = ('pre_crash_movement', 'ads_vehicle_impacted',
                    'curb_offset_in', 'designated_parking', 'delta_v_sv',
                    'delta_v_cp')


def load_column_map(path=None):
  """ Reads the field -> header map, defaulting to the shipped one """
  path = path or data_path('sgo_columns.yaml')
  content = load_yaml(path)
  unknown = set(content) - {'required', 'optional', 'city_locations'}
  if unknown:
    raise SchemaError("unknown keys in %s: %s" % (path, sorted(unknown)))
  required = {str(k): str(v) for k, v in content.get('required', {}).items()}
  optional = {str(k): str(v) for k, v in content.get('optional', {}).items()}
  missing = [f for f in _REQUIRED_FIELDS if f not in required]
  if missing:
    raise SchemaError("%s lacks headers for %s" % (path, ', '.join(missing)),
                      column=missing[0])
  for name in list(required) + list(optional):
    if name not in _REQUIRED_FIELDS + _OPTIONAL_FIELDS:
      raise SchemaError("%s maps unknown field %r" % (path, name), column=name)
  try:
    cities = {str(k): Location.parse(v)
              for k, v in content.get('city_locations', {}).items()}
  except ValueError as exc:
    raise SchemaError("%s: %s" % (path, exc))
  return ColumnMap(required, optional, cities)


# ---------------------------------------------------------------------------
# Parsing

def _read_table(path):
  frame = pd.read_csv(path, dtype=str, keep_default_na=False,
                      encoding='utf-8', skipinitialspace=True)
  frame.columns = [str(c).strip() for c in frame.columns]
  return frame.apply(lambda column: column.str.strip())


def _optional_float(value):
  if value is None or str(value).strip() == '':
    return None
  value = float(value)
  if not math.isfinite(value):
    raise ValueError("not a finite number: %r" % value)
  return value


def _optional_bool(value):
  return parse_bool(value)


def parse_sgo_csv(path, column_map=None):
  """
  Parses an SGO crash export
  Parameters:
  -----------
  path: str
    CSV file, UTF-8 with a header row
  column_map: ColumnMap
    Field -> header map; the shipped default when None
  Returns:
  --------
  records: list of SgoRecord
    One per row, in file order; columns the map does not name are kept in
    `extra`
  """
  column_map = column_map or load_column_map()
  frame = _read_table(path)
  for name, header in column_map.required.items():
    if header not in frame.columns:
      raise SchemaError("%s: missing required column %r" % (path, header),
                        column=header)
  present = {name: header for name, header in column_map.optional.items()
             if header in frame.columns}
  known = set(column_map.required.values()) | set(present.values())
  extra_columns = [c for c in frame.columns if c not in known]

  records = []
  for row_number, row in enumerate(frame.to_dict('records'), start=1):
    get = lambda name: row[column_map.required[name]]
    opt = lambda name: row[present[name]] if name in present else None
    report_id = get('report_id')
    try:
      if report_id == '':
        raise ValueError("empty report ID")
      movement = opt('pre_crash_movement')
      location = column_map.location_of(get('city'))
      extra = {c: row[c] for c in extra_columns}
      if location is None:
        extra['city'] = get('city')
      record = SgoRecord(
          report_id=report_id,
          reporting_entity=get('reporting_entity'),
          operator_type=get('operator_type'),
          location=location,
          law_enforcement_investigating=LawEnforcement.parse(
              get('law_enforcement_investigating')),
          highest_injury_severity=Severity.parse(
              get('highest_injury_severity')),
          narrative=get('narrative'),
          gear_state=(None if movement is None else
                      GearState.from_movement(movement)),
          ads_vehicle_impacted=_optional_bool(opt('ads_vehicle_impacted')),
          curb_offset_in=_optional_float(opt('curb_offset_in')),
          designated_parking=_optional_bool(opt('designated_parking')),
          delta_v_sv=_optional_float(opt('delta_v_sv')),
          delta_v_cp=_optional_float(opt('delta_v_cp')),
          extra=extra,
      )
    except ValueError as exc:
      raise SchemaError("%s: row %d (%s): %s" % (path, row_number, report_id
                                                  or '?', exc),
                        row=row_number)
    records.append(record)
  logger.info("parsed %d rows from %s", len(records), path)
  return records


# ---------------------------------------------------------------------------
# Filtering

def filter_waymo_ro(records, entity='Waymo LLC', operator_type='None'):
  """
  Keeps rider-only reports of `entity` in the three markets: no driver or
  operator on board is recorded as operator type "None".
  """
  rider_only = [
      r for r in records
      if r.reporting_entity.casefold() == entity.casefold()
      and r.operator_type.casefold() == operator_type.casefold()
  ]
  kept = [r for r in rider_only if r.location is not None]
  logger.info("rider-only filter matched %d of %d records, dropped %d",
              len(rider_only), len(records), len(records) - len(rider_only))
  if len(kept) < len(rider_only):
    logger.info("dropped %d rider-only record(s) outside the markets: %s",
                len(rider_only) - len(kept),
                ", ".join(sorted(r.report_id for r in rider_only
                                 if r.location is None)))
  return kept


def dedup_updated_reports(records, exclusion_ids=None):
  """
  Removes reports resubmitted under a new ID

  Parameters:
  -----------
  records: list of SgoRecord
  exclusion_ids: iterable of str
    IDs to drop; the configured default list when None
  Returns:
  --------
  records: list of SgoRecord
    Remaining records. Repeated IDs not on the list are kept and logged as
    warnings.
  """
  if exclusion_ids is None:
    exclusion_ids = default_config().duplicate_report_ids
  exclusion_ids = set(exclusion_ids)
  kept = [r for r in records if r.report_id not in exclusion_ids]
  removed = sorted(r.report_id for r in records if r.report_id in exclusion_ids)
  logger.info("removed %d duplicate report(s)%s", len(removed),
              (": " + ", ".join(removed)) if removed else "")
  repeated = sorted(k for k, n in Counter(r.report_id for r in kept).items()
                    if n > 1)
  for report_id in repeated:
    logger.warning("report %s appears more than once and is not on the "
                   "exclusion list; keeping all copies", report_id)
  return kept


# ---------------------------------------------------------------------------
# Roster

_ROSTER_COLUMNS = ('report_id', 'location') + FLAGS


def load_roster(path=None):
  """
  Reads the per-event roster

  Rows whose report_id is NA are events from before the reporting
  requirement; they get the synthetic ID PRE-SGO-<ro_event>.
  """
  path = path or data_path('roster.csv')
  frame = _read_table(path)
  for column in _ROSTER_COLUMNS:
    if column not in frame.columns:
      raise SchemaError("%s: missing roster column %r" % (path, column),
                        column=column)
  entries = []
  seen = set()
  for row_number, row in enumerate(frame.to_dict('records'), start=1):
    try:
      ro_event = row.get('ro_event', '')
      ro_event = int(ro_event) if ro_event not in ('', None) else None
      report_id = row['report_id']
      pre_sgo = report_id.upper() in ('NA', 'N/A')
      if pre_sgo:
        if ro_event is None:
          raise ValueError("pre-SGO row without ro_event")
        report_id = 'PRE-SGO-%d' % ro_event
      elif report_id == '':
        raise ValueError("empty report_id")
      flags = {name: parse_bool(row[name]) for name in FLAGS}
      entry = RosterEntry(report_id=report_id,
                          location=Location.parse(row['location']),
                          ro_event=ro_event, pre_sgo=pre_sgo, **flags)
    except ValueError as exc:
      raise SchemaError("%s: row %d: %s" % (path, row_number, exc),
                        row=row_number)
    if entry.report_id in seen:
      raise DuplicateKeyError("%s: report %s listed twice" %
                              (path, entry.report_id), row=row_number)
    seen.add(entry.report_id)
    entries.append(entry)
  logger.info("loaded %d roster entries from %s", len(entries), path)
  return entries


def records_from_roster(roster):
  """
  Builds records for roster events that have no export row

  The report fields are set to agree with the roster flags; quantities the
  roster does not carry (delta-V, curb offset) stay unknown.
  """
  records = []
  for entry in roster:
    flags = entry.flags()
    in_transport = flags.get('in_transport', True)
    records.append(
        SgoRecord(
            report_id=entry.report_id,
            reporting_entity='Waymo LLC',
            operator_type='None',
            location=entry.location,
            law_enforcement_investigating=(LawEnforcement.YES if flags.get(
                'police_reported') else LawEnforcement.NO),
            highest_injury_severity=(Severity.MINOR if flags.get('any_injury')
                                     else Severity.NONE),
            gear_state=GearState.NOT_PARK if in_transport else GearState.PARK,
            designated_parking=None if in_transport else True,
            provenance=Provenance.ROSTER,
            extra=({'ro_event': str(entry.ro_event)}
                   if entry.ro_event is not None else {}),
        ))
  return records


def merge_pre_sgo(records, supplemental_roster=None):
  """
  Appends the pre-SGO events of a roster to the records

  Parameters:
  -----------
  records: list of SgoRecord
  supplemental_roster: list of RosterEntry
    Entries to add; only those flagged pre_sgo are used. The shipped roster
    when None.
  """
  if supplemental_roster is None:
    supplemental_roster = load_roster()
  extra = records_from_roster([e for e in supplemental_roster if e.pre_sgo])
  existing = {r.report_id for r in records}
  for record in extra:
    if record.report_id in existing:
      raise DuplicateKeyError("pre-SGO event %s collides with an existing "
                              "report" % record.report_id)
    existing.add(record.report_id)
  logger.info("merged %d pre-SGO event(s)", len(extra))
  return list(records) + extra


# ---------------------------------------------------------------------------
# Classification

_CURB_NARRATIVE = re.compile(
    r"\bpark(?:ed)?\b[^.]*\b(?:near|adjacent to|next to|along)\s+the\s+curb"
    r"|\bparked\s+in\s+a\s+(?:designated\s+)?parking\s+(?:spot|space|stall)",
    re.IGNORECASE)
_HOSPITAL_NARRATIVE = re.compile(r"\btransported\b[^.]*\bhospital\b",
                                 re.IGNORECASE)


def _not_in_transport(record, curb_limit):
  if record.gear_state != GearState.PARK:
    return False
  if record.designated_parking:
    return True
  if record.curb_offset_in is not None:
    return record.curb_offset_in <= curb_limit
  if record.designated_parking is None:
    return bool(_CURB_NARRATIVE.search(record.narrative))
  return False


def _rule_flags(record, config):
  impacted = not (record.ads_vehicle_impacted is False
                  or record.report_id in config.not_impacted_ids)
  in_transport = impacted and not _not_in_transport(
      record, config.curb_offset_limit_in)

  if record.delta_v_sv is not None and record.delta_v_cp is not None:
    low = classify_low_delta_v(DeltaVPair(record.delta_v_sv,
                                          record.delta_v_cp),
                               config.delta_v_threshold_mph)
    low_dv_member = in_transport and not low
  else:
    logger.debug("%s: no delta-V evidence, kept in low delta-V group",
                 record.report_id)
    low_dv_member = in_transport

  police = in_transport and (
      record.law_enforcement_investigating in (LawEnforcement.YES,
                                               LawEnforcement.UNKNOWN)
      or record.report_id in config.police_override_ids)

  severity = record.highest_injury_severity
  injury = in_transport and (
      severity.is_injury
      or (severity == Severity.UNKNOWN
          and bool(_HOSPITAL_NARRATIVE.search(record.narrative)))
      or record.report_id in config.injury_override_ids)

  return {
      'sgo_reported': True,
      'in_transport': in_transport,
      'exclude_low_dv_member': low_dv_member,
      'police_reported': police,
      'any_injury': injury,
  }


def classify(records, roster_overrides=None, config=None):
  """
  Assigns every record to the analysis categories

  Parameters:
  -----------
  records: list of SgoRecord
    Deduplicated rider-only records
  roster_overrides: list of RosterEntry
    Per-event flags taking precedence over the rules; None for rules only
  config: RunConfig
    Rule lists and thresholds; embedded defaults when None
  Returns:
  --------
  result: ClassificationResult
    Events sorted by report ID and warnings about overrides that matched no
    record
  """
  config = config or default_config()
  overrides = {e.report_id: e for e in (roster_overrides or ())}
  events = []
  for record in records:
    flags = _rule_flags(record, config)
    provenance = record.provenance
    entry = overrides.get(record.report_id)
    if entry is not None:
      for name, value in entry.flags().items():
        if value != flags[name]:
          logger.info("%s: roster sets %s=%s (rules gave %s)",
                      record.report_id, name, value, flags[name])
          flags[name] = value
          provenance = Provenance.ROSTER
        else:
          logger.debug("%s: roster confirms %s=%s", record.report_id, name,
                       value)
    _check_nesting(record.report_id, flags)
    events.append(ClassifiedEvent(record=record, provenance=provenance,
                                  **flags))

  present = {r.report_id for r in records}
  warnings = []
  for report_id in sorted(set(overrides) - present):
    message = "roster entry %s matches no record" % report_id
    logger.warning(message)
    warnings.append(message)
  events.sort(key=lambda e: e.report_id)
  return ClassificationResult(events, warnings)


def prepare_records(config=None, column_map=None):
  """
  Records for a run: the configured export, filtered, deduplicated and
  merged with the pre-SGO events, or the roster itself when no export is
  configured.
  """
  config = config or default_config()
  roster = load_roster(config.roster)
  if not config.sgo_csv:
    logger.info("no SGO export configured, using the roster records")
    return records_from_roster(roster)
  if column_map is None:
    column_map = load_column_map(config.column_map)
  records = parse_sgo_csv(config.sgo_csv, column_map)
  records = filter_waymo_ro(records)
  records = dedup_updated_reports(records, config.duplicate_report_ids)
  return merge_pre_sgo(records, roster)


# ---------------------------------------------------------------------------
# Stage files

RECORD_COLUMNS = ('report_id', 'reporting_entity', 'operator_type',
                  'location', 'law_enforcement_investigating',
                  'highest_injury_severity', 'narrative', 'gear_state',
                  'ads_vehicle_impacted', 'curb_offset_in',
                  'designated_parking', 'delta_v_sv', 'delta_v_cp',
                  'provenance', 'extra')


def _cell(value):
  if value is None:
    return ''
  if isinstance(value, bool):
    return 'true' if value else 'false'
  if isinstance(value, Enum):
    return value.value
  if isinstance(value, float):
    return repr(value)
  return value


def _record_row(record):
  row = {name: _cell(getattr(record, name)) for name in RECORD_COLUMNS[:-1]}
  row['extra'] = json.dumps(dict(record.extra), sort_keys=True)
  return row


def _record_from_row(row):
  optional_enum = lambda cls, v: cls.parse(v) if v != '' else None
  return SgoRecord(
      report_id=row['report_id'],
      reporting_entity=row['reporting_entity'],
      operator_type=row['operator_type'],
      location=optional_enum(Location, row['location']),
      law_enforcement_investigating=LawEnforcement.parse(
          row['law_enforcement_investigating']),
      highest_injury_severity=Severity.parse(row['highest_injury_severity']),
      narrative=row['narrative'],
      gear_state=optional_enum(GearState, row['gear_state']),
      ads_vehicle_impacted=parse_bool(row['ads_vehicle_impacted']),
      curb_offset_in=_optional_float(row['curb_offset_in']),
      designated_parking=parse_bool(row['designated_parking']),
      delta_v_sv=_optional_float(row['delta_v_sv']),
      delta_v_cp=_optional_float(row['delta_v_cp']),
      provenance=Provenance.parse(row['provenance']),
      extra=json.loads(row['extra'] or '{}'),
  )


def _format_of(path, format=None):
  if format is None:
    format = 'json' if path.endswith('.json') else 'csv'
  if format not in ('csv', 'json'):
    raise SchemaError("unsupported stage file format %r" % format)
  return format


def _write_rows(rows, columns, path, format):
  os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
  if format == 'json':
    with open(path, 'w') as f:
      json.dump(rows, f, indent=2, sort_keys=True)
      f.write('\n')
  else:
    pd.DataFrame(rows, columns=list(columns)).to_csv(path, index=False)
  logger.info("wrote %d rows to %s", len(rows), path)


def _read_rows(path, columns, format):
  if format == 'json':
    with open(path) as f:
      rows = json.load(f)
    if not isinstance(rows, list):
      raise SchemaError("%s must contain a list of rows" % path)
    rows = [{k: _cell(v) if not isinstance(v, str) else v
             for k, v in row.items()} for row in rows]
  else:
    rows = _read_table(path).to_dict('records')
  for row_number, row in enumerate(rows, start=1):
    for column in columns:
      if column not in row:
        raise SchemaError("%s: row %d lacks %r" % (path, row_number, column),
                          column=column, row=row_number)
  return rows


def write_records(records, path, format=None):
  """ Writes records as a stage file (CSV, or JSON for *.json) """
  _write_rows([_record_row(r) for r in records], RECORD_COLUMNS, path,
              _format_of(path, format))


def read_records(path, format=None):
  rows = _read_rows(path, RECORD_COLUMNS, _format_of(path, format))
  records = []
  for row_number, row in enumerate(rows, start=1):
    try:
      records.append(_record_from_row(row))
    except ValueError as exc:
      raise SchemaError("%s: row %d: %s" % (path, row_number, exc),
                        row=row_number)
  return records


CLASSIFIED_COLUMNS = RECORD_COLUMNS[:-2] + FLAGS + ('record_provenance',
                                                   'provenance', 'extra')


def write_classified(events, path, format=None):
  """ Writes classified events with their flags and provenance """
  rows = []
  for event in events:
    row = _record_row(event.record)
    row['record_provenance'] = row.pop('provenance')
    row.update({name: _cell(value) for name, value in event.flags().items()})
    row['provenance'] = event.provenance.value
    rows.append(row)
  _write_rows(rows, CLASSIFIED_COLUMNS, path, _format_of(path, format))


def read_classified(path, format=None):
  """ Reads a file written by write_classified and checks category nesting """
  rows = _read_rows(path, CLASSIFIED_COLUMNS, _format_of(path, format))
  events = []
  for row_number, row in enumerate(rows, start=1):
    try:
      record_row = dict(row, provenance=row['record_provenance'])
      flags = {name: parse_bool(row[name]) for name in FLAGS}
      if any(v is None for v in flags.values()):
        raise ValueError("blank category flag")
      event = ClassifiedEvent(record=_record_from_row(record_row),
                              provenance=Provenance.parse(row['provenance']),
                              **flags)
    except ValueError as exc:
      raise SchemaError("%s: row %d: %s" % (path, row_number, exc),
                        row=row_number)
    _check_nesting(event.report_id, flags)
    events.append(event)
  return events

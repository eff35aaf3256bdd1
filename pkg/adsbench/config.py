"""
Run configuration.

Settings are layered: the embedded `data/run.yaml` gives the defaults, a
user file (``--config`` or ``$ADSBENCH_CONFIG``) overrides them and explicit
overrides, typically command-line flags, win over both.
"""
import dataclasses
import logging
import os
from dataclasses import dataclass
from typing import Optional, Tuple

import yaml

from adsbench.errors import SchemaError
from adsbench.utils import data_path

__all__ = ['RunConfig', 'load_config', 'default_config', 'load_yaml',
           'CONFIG_ENV', 'FORMATS']

logger = logging.getLogger(__name__)

CONFIG_ENV = 'ADSBENCH_CONFIG'
FORMATS = ('markdown', 'csv', 'json')

_PATH_KEYS = ('sgo_csv', 'roster', 'benchmarks', 'ledger', 'column_map',
              'out_dir')
_ID_KEYS = ('duplicate_report_ids', 'not_impacted_ids', 'police_override_ids',
            'injury_override_ids')


@dataclass(frozen=True)
class RunConfig:
  sgo_csv: Optional[str] = None
  roster: Optional[str] = None
  benchmarks: Optional[str] = None
  ledger: Optional[str] = None
  column_map: Optional[str] = None
  out_dir: str = 'results'
  alpha: float = 0.05
  ratio_alpha: float = 0.025
  seed: int = 20231031
  formats: Tuple[str, ...] = FORMATS
  include_la: bool = True
  bootstrap_trials: int = 100000
  coverage_trials: int = 20000
  bootstrap_column: bool = False
  bootstrap_design_effect: float = 1.0
  duplicate_report_ids: Tuple[str, ...] = ()
  not_impacted_ids: Tuple[str, ...] = ()
  police_override_ids: Tuple[str, ...] = ()
  injury_override_ids: Tuple[str, ...] = ()
  curb_offset_limit_in: float = 18.0
  delta_v_threshold_mph: float = 1.0

  def __post_init__(self):
    for key in ('alpha', 'ratio_alpha'):
      value = getattr(self, key)
      if not 0. < value < 1.:
        raise SchemaError("%s must lie in (0, 1), got %r" % (key, value),
                          column=key)
    unknown = set(self.formats) - set(FORMATS)
    if unknown:
      raise SchemaError("unknown report format(s) %s" % ', '.join(
          sorted(unknown)), column='formats')
    for key in ('bootstrap_trials', 'coverage_trials'):
      if getattr(self, key) < 1000:
        raise SchemaError("%s must be at least 1000" % key, column=key)
    for key in ('curb_offset_limit_in', 'delta_v_threshold_mph',
                'bootstrap_design_effect'):
      if not getattr(self, key) > 0.:
        raise SchemaError("%s must be positive" % key, column=key)

  def replace(self, **changes):
    return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def load_yaml(path):
  """ Reads a YAML mapping, raising SchemaError on anything else """
  with open(path) as f:
    try:
      content = yaml.safe_load(f)
    except yaml.YAMLError as exc:
      raise SchemaError("%s is not valid YAML: %s" % (path, exc))
  if content is None:
    return {}
  if not isinstance(content, dict):
    raise SchemaError("%s must contain a mapping at top level" % path)
  return content


def _coerce(key, value):
  if key in _ID_KEYS or key == 'formats':
    if isinstance(value, str):
      value = [value]
    if not isinstance(value, (list, tuple)):
      raise SchemaError("%s must be a list" % key, column=key)
    return tuple(str(v) for v in value)
  if value is None:
    return None
  kind = _FIELDS[key].type
  try:
    if kind is bool:
      if not isinstance(value, bool):
        raise ValueError(value)
      return value
    if kind is int:
      if isinstance(value, bool):
        raise ValueError(value)
      return int(value)
    if kind is float:
      return float(value)
  except (TypeError, ValueError):
    raise SchemaError("invalid value %r for %s" % (value, key), column=key)
  return str(value)


def _merge(settings, layer, origin, base_dir=None):
  for key, value in layer.items():
    if key not in _FIELDS:
      raise SchemaError("unknown configuration key %r in %s" % (key, origin),
                        column=key)
    value = _coerce(key, value)
    if base_dir and key in _PATH_KEYS and value is not None:
      value = os.path.join(base_dir, os.path.expanduser(value))
    settings[key] = value


def load_config(path=None, overrides=None):
  """
  Builds the run configuration
  Parameters:
  -----------
  path: str
    User configuration file; defaults to $ADSBENCH_CONFIG when set
  overrides: dict
    Highest priority settings; None values are ignored
  Returns:
  --------
  config: RunConfig
  """
  settings = {}
  _merge(settings, load_yaml(data_path('run.yaml')), 'embedded defaults')

  path = path or os.environ.get(CONFIG_ENV)
  if path:
    if not os.path.exists(path):
      raise FileNotFoundError("configuration file not found: %s" % path)
    # relative paths in a user file are relative to that file
    _merge(settings, load_yaml(path), path,
           base_dir=os.path.dirname(os.path.abspath(path)))
    logger.info("configuration loaded from %s", path)

  if overrides:
    _merge(settings, {k: v for k, v in overrides.items() if v is not None},
           'overrides')
  return RunConfig(**settings)


def default_config():
  """ Embedded defaults only, ignoring $ADSBENCH_CONFIG """
  settings = {}
  _merge(settings, load_yaml(data_path('run.yaml')), 'embedded defaults')
  return RunConfig(**settings)

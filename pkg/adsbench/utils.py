import math
import os

__all__ = ['MILLION', 'BILLION', 'data_path', 'miles_conversion', 'fmt_value',
           'fmt_interval', 'parse_bool']

MILLION = 'million'
BILLION = 'billion'

_FACTORS = {MILLION: 1., BILLION: 1000.}

_DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data')


def data_path(name):
  """ Path of a file shipped in adsbench/data """
  return os.path.join(_DATA_DIR, name)


def miles_conversion(src, dst):
  """
  Factor turning a mileage in unit `src` into unit `dst`

  Rates convert with the inverse factor.
  """
  try:
    return _FACTORS[src] / _FACTORS[dst]
  except KeyError as exc:
    raise ValueError("unknown mileage unit %s" % exc)


def fmt_value(x, digits=2, floor=None, decimals=None):
  """
  Formats a number the way result tables print it

  Parameters:
  -----------
  x: float or None
  digits: int
    Significant figures, used when `decimals` is None
  floor: float
    Positive values below it print as "<floor"
  decimals: int
    Fixed number of decimals
  """
  if x is None:
    return 'N/A'
  if math.isinf(x):
    return 'inf'
  if floor is not None and 0. < x < floor:
    return '<%g' % floor
  if decimals is not None:
    return '%.*f' % (decimals, x)
  if x == 0.:
    return '0'
  magnitude = int(math.floor(math.log10(abs(x))))
  return '%.*f' % (max(digits - 1 - magnitude, 0), x)


def fmt_interval(lower, upper, digits=2, floor=None, decimals=None):
  return '(%s, %s)' % (fmt_value(lower, digits, floor, decimals),
                       fmt_value(upper, digits, floor, decimals))


_TRUE = {'true', 't', 'yes', 'y', '1'}
_FALSE = {'false', 'f', 'no', 'n', '0'}


def parse_bool(value):
  """ Parses a roster or CSV boolean cell; blanks give None """
  if value is None:
    return None
  if isinstance(value, bool):
    return value
  if isinstance(value, float) and math.isnan(value):
    return None
  text = str(value).strip().lower()
  if text == '':
    return None
  if text in _TRUE:
    return True
  if text in _FALSE:
    return False
  raise ValueError("not a boolean: %r" % (value,))

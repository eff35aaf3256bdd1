"""
Exception hierarchy shared by every adsbench module.

The command line maps each class to its own exit code (see `adsbench.cli`).
"""


class AdsBenchError(Exception):
  """Base class of all errors raised by adsbench."""


class DomainError(AdsBenchError, ValueError):
  """A numeric argument lies outside the domain of the operation."""


class ConvergenceError(AdsBenchError, ArithmeticError):
  """An iterative inversion did not reach its tolerance."""


class SchemaError(AdsBenchError, ValueError):
  """Input file or configuration does not match its schema.

  Attributes
  ----------
  column: str or None
    Name of the missing or malformed column.
  row: int or None
    1-based data row of a malformed record.
  """

  def __init__(self, message, column=None, row=None):
    super().__init__(message)
    self.column = column
    self.row = row


class DuplicateKeyError(SchemaError):
  """A key that must be unique appears more than once."""


class MissingBenchmarkError(AdsBenchError, KeyError):
  """Requested benchmark cell is absent from the registry."""

  def __init__(self, key, message=None):
    super().__init__(message or "no benchmark for %s" % (key,))
    self.key = key

  def __str__(self):
    return self.args[0]


class ValidationError(AdsBenchError):
  """A validation check failed its threshold."""

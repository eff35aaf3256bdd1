"""
Rate and rate-ratio inference.

`poisson_exact_ci` is the exact Poisson (gamma quantile) interval of an
incident rate, `rate_ratio_ci` the exact conditional interval of the ratio
of two Poisson rates expressed through beta prime quantiles. The bootstrap
and coverage helpers draw from counter-based `jax.random` streams: trial `i`
always uses `fold_in(PRNGKey(seed), i)`, so results do not depend on how the
trials are split into chunks.
"""
import logging
import math
import numbers
from dataclasses import dataclass
from typing import NamedTuple

import jax
import jax.numpy as jnp
import numpy as np

from adsbench.errors import DomainError
from adsbench.specfun import betaprime_quantile, gamma_quantile
from adsbench.utils import BILLION, MILLION, miles_conversion

__all__ = ['ExposureMiles', 'RateEstimate', 'RateRatioResult',
           'poisson_exact_ci', 'rate_ratio_ci', 'relative_difference',
           'bootstrap_ratio_ci', 'simulate_coverage', 'coverage_threshold',
           'reconstruct_count']

logger = logging.getLogger(__name__)

MIN_TRIALS = 1000


@dataclass(frozen=True)
class ExposureMiles:
  """
  Miles driven, carried with an explicit unit

  Parameters:
  -----------
  miles: float
    Positive mileage
  unit: str
    'million' or 'billion'
  """
  miles: float
  unit: str = MILLION

  def __post_init__(self):
    if self.unit not in (MILLION, BILLION):
      raise DomainError("unknown mileage unit %r" % (self.unit,))
    miles = float(self.miles)
    if not (math.isfinite(miles) and miles > 0.):
      raise DomainError("miles must be positive and finite, got %r"
                        % (self.miles,))
    object.__setattr__(self, 'miles', miles)

  def to(self, unit):
    return ExposureMiles(self.miles * miles_conversion(self.unit, unit), unit)

  @property
  def millions(self):
    return self.to(MILLION).miles

  @property
  def billions(self):
    return self.to(BILLION).miles


class RateEstimate(NamedTuple):
  """ Incident rate per unit of `exposure` with its two-sided interval """
  point: float
  lower: float
  upper: float
  alpha: float
  count: int
  exposure: ExposureMiles


class RateRatioResult(NamedTuple):
  """ Ratio of two rates; `reduction` is the relative difference point - 1 """
  point: float
  lower: float
  upper: float
  alpha: float
  reduction: float


def _as_exposure(m):
  if isinstance(m, ExposureMiles):
    return m
  return ExposureMiles(m)


def _count(n, name):
  if isinstance(n, bool):
    raise DomainError("%s must be a nonnegative integer, got %r" % (name, n))
  if not isinstance(n, numbers.Integral):
    if isinstance(n, numbers.Real) and float(n).is_integer():
      n = int(n)
    else:
      raise DomainError("%s must be a nonnegative integer, got %r" % (name, n))
  n = int(n)
  if n < 0:
    raise DomainError("%s must be a nonnegative integer, got %r" % (name, n))
  return n


def _alpha(alpha):
  alpha = float(alpha)
  if not 0. < alpha < 1.:
    raise DomainError("alpha must lie in (0, 1), got %r" % alpha)
  return alpha


def poisson_exact_ci(n, m, alpha=0.05, one_sided_zero=False):
  """
  Exact Poisson confidence interval of an incident rate

  Parameters:
  -----------
  n: int
    Event count
  m: ExposureMiles or float
    Exposure; plain numbers are millions of miles
  alpha: float
    Significance level of the two-sided interval
  one_sided_zero: bool
    For n = 0, return the one-sided upper bound -ln(alpha)/m instead of the
    two-sided -ln(alpha/2)/m
  Returns:
  --------
  estimate: RateEstimate
    Rate per million (or billion, following m.unit) miles
  """
  n = _count(n, 'n')
  m = _as_exposure(m)
  alpha = _alpha(alpha)
  miles = m.miles
  if n == 0:
    upper = -math.log(alpha if one_sided_zero else alpha / 2.)
    return RateEstimate(0., 0., upper / miles, alpha, 0, m)
  lower = gamma_quantile(alpha / 2., n)
  upper = gamma_quantile(1. - alpha / 2., n + 1)
  return RateEstimate(n / miles, lower / miles, upper / miles, alpha, n, m)


def rate_ratio_ci(Y, t, X, s, alpha=0.05):
  """
  Confidence interval of the ratio (Y/t) / (X/s) of two Poisson rates

  Bounds come from beta prime quantiles of the conditional binomial
  distribution of Y given Y + X. With Y = 0 the point and lower bound are 0
  and the upper bound stays finite.

  Parameters:
  -----------
  Y, X: int
    Event counts of the studied fleet and of the benchmark, X >= 1
  t, s: ExposureMiles or float
    Exposures in identical units
  alpha: float
  Returns:
  --------
  ratio: RateRatioResult
  """
  Y = _count(Y, 'Y')
  X = _count(X, 'X')
  t = _as_exposure(t)
  s = _as_exposure(s)
  alpha = _alpha(alpha)
  if t.unit != s.unit:
    raise DomainError("exposures must share a unit, got %s and %s"
                      % (t.unit, s.unit))
  if X == 0:
    raise DomainError("benchmark count X must be positive")
  scale = s.miles / t.miles
  point = (Y / t.miles) / (X / s.miles)
  lower = scale * betaprime_quantile(alpha / 2., Y, X + 1)
  upper = scale * betaprime_quantile(1. - alpha / 2., Y + 1, X)
  return RateRatioResult(point, lower, upper, alpha, point - 1.)


def relative_difference(ratio):
  """ Relative difference of a ratio and its bounds, in percent """
  return tuple(100. * (v - 1.) for v in (ratio.point, ratio.lower,
                                         ratio.upper))


def reconstruct_count(ipmm, vmt_millions):
  """ Benchmark event count implied by a rate and its exposure """
  count = int(round(float(ipmm) * float(vmt_millions)))
  if count < 1:
    raise DomainError("rate %r over %r million miles implies no events"
                      % (ipmm, vmt_millions))
  return count


def coverage_threshold(alpha, trials):
  """ Smallest acceptable empirical coverage, nominal minus 3 sigma """
  return (1. - alpha) - 3. * math.sqrt(alpha * (1. - alpha) / trials)


# ---------------------------------------------------------------------------
# Randomized procedures

def _trial_keys(seed, start, stop):
  base = jax.random.PRNGKey(seed)
  return jax.vmap(lambda i: jax.random.fold_in(base, i))(jnp.arange(start, stop))


@jax.jit
def _ratio_draws(keys, y_mean, x_mean, x_se):

  def one(key):
    ky, kx = jax.random.split(key)
    y = jax.random.poisson(ky, y_mean)
    z = jax.random.truncated_normal(kx, -x_mean / x_se, jnp.inf,
                                    dtype=jnp.float64)
    return y, x_mean + x_se * z

  return jax.vmap(one)(keys)


@jax.jit
def _count_draws(keys, lam):
  return jax.vmap(lambda key: jax.random.poisson(key, lam))(keys)


def _chunks(trials, chunk_size):
  if chunk_size < 1:
    raise DomainError("chunk_size must be positive, got %r" % chunk_size)
  for start in range(0, trials, chunk_size):
    yield start, min(start + chunk_size, trials)


def _trials(trials):
  trials = _count(trials, 'trials')
  if trials < MIN_TRIALS:
    raise DomainError("at least %d trials are required, got %d"
                      % (MIN_TRIALS, trials))
  return trials


def bootstrap_ratio_ci(Y, t, X_mean, X_se, s, alpha=0.05, trials=100000,
                       seed=0, chunk_size=4096):
  """
  Parametric bootstrap interval of a rate ratio

  Each trial draws the fleet count from Poisson(Y) and the benchmark count
  from a normal(X_mean, X_se) truncated to positive values; the interval is
  given by the empirical alpha/2 and 1 - alpha/2 percentiles of the
  simulated ratios.

  Parameters:
  -----------
  Y: int
    Observed fleet event count
  t, s: ExposureMiles or float
    Fleet and benchmark exposures in identical units
  X_mean, X_se: float
    Benchmark count estimate and its standard error
  trials: int
  seed: int
  chunk_size: int
    Number of trials drawn per vectorized call
  Returns:
  --------
  ratio: RateRatioResult
  """
  Y = _count(Y, 'Y')
  t = _as_exposure(t)
  s = _as_exposure(s)
  alpha = _alpha(alpha)
  trials = _trials(trials)
  if t.unit != s.unit:
    raise DomainError("exposures must share a unit, got %s and %s"
                      % (t.unit, s.unit))
  X_mean = float(X_mean)
  X_se = float(X_se)
  if not X_mean > 0.:
    raise DomainError("X_mean must be positive, got %r" % X_mean)
  if not X_se > 0.:
    raise DomainError("X_se must be positive, got %r" % X_se)

  ratios = []
  for start, stop in _chunks(trials, chunk_size):
    y, x = _ratio_draws(_trial_keys(seed, start, stop), float(Y), X_mean,
                        X_se)
    ratios.append((y / t.miles) / (x / s.miles))
  ratios = jnp.concatenate(ratios)
  lower, upper = jnp.quantile(ratios, jnp.array([alpha / 2., 1. - alpha / 2.]))
  point = (Y / t.miles) / (X_mean / s.miles)
  logger.debug("bootstrap Y=%d X=%.1f+-%.1f over %d trials: (%.4g, %.4g)",
               Y, X_mean, X_se, trials, float(lower), float(upper))
  return RateRatioResult(point, float(lower), float(upper), alpha, point - 1.)


def simulate_coverage(true_rate, miles, alpha=0.05, trials=20000, seed=0,
                      chunk_size=4096):
  """
  Fraction of simulated Poisson counts whose exact interval covers the
  true rate

  Parameters:
  -----------
  true_rate: float
    Rate per unit of `miles`
  miles: ExposureMiles or float
  alpha: float
  trials: int
  seed: int
  Returns:
  --------
  coverage: float
  """
  true_rate = float(true_rate)
  if not (math.isfinite(true_rate) and true_rate > 0.):
    raise DomainError("true_rate must be positive, got %r" % true_rate)
  miles = _as_exposure(miles)
  alpha = _alpha(alpha)
  trials = _trials(trials)

  lam = true_rate * miles.miles
  counts = np.concatenate([
      np.asarray(_count_draws(_trial_keys(seed, start, stop), lam))
      for start, stop in _chunks(trials, chunk_size)
  ])
  values, multiplicity = np.unique(counts, return_counts=True)
  covered = 0
  for n, k in zip(values, multiplicity):
    ci = poisson_exact_ci(int(n), miles, alpha)
    if ci.lower <= true_rate <= ci.upper:
      covered += int(k)
  coverage = covered / trials
  logger.debug("coverage at rate %g over %g %s miles: %.4f (%d distinct "
               "counts)", true_rate, miles.miles, miles.unit, coverage,
               len(values))
  return coverage

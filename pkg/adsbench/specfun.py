"""
Regularized incomplete gamma and beta functions and their quantiles.

All kernels are scalar, jit-compiled and run in double precision. The
incomplete functions use the power series below the transition point and a
modified Lentz continued fraction above it; quantiles are found by bracketing
from a moment-based start and then safeguarded Newton steps on the CDF.
"""
import math

import jax
import jax.numpy as jnp
from jax import lax
from jax.scipy.special import gammaln, ndtri

from adsbench.errors import ConvergenceError, DomainError

__all__ = ['reg_gamma_p', 'reg_beta_i', 'gamma_quantile', 'beta_quantile',
           'betaprime_quantile', 'gamma_pdf_log', 'betaprime_pdf_log']

_EPS = 1e-16
_TINY = 1e-300
_MAXITER = 200000.
_BRACKET_MAXITER = 2100.
_NEWTON_MAXITER = 400.
# Newton stops on this relative step; results are reported converged below
# _XTOL_ACCEPT.
_XTOL = 1e-13
_XTOL_ACCEPT = 1e-10


def _f64(v):
  return jnp.asarray(v, dtype=jnp.float64)


def _guard(v):
  return jnp.where(jnp.abs(v) < _TINY, _TINY, v)


# ---------------------------------------------------------------------------
# Incomplete gamma

def _gamma_series(a, x):
  """ Lower regularized gamma P(a, x) by its power series, x < a + 1 """

  def cond(state):
    n, term, total = state
    return (jnp.abs(term) > jnp.abs(total) * _EPS) & (n < _MAXITER)

  def body(state):
    n, term, total = state
    term = term * x / (a + n + 1.)
    return n + 1., term, total + term

  term = 1. / a
  n, _, total = lax.while_loop(cond, body, (_f64(0.), term, term))
  log_prefactor = a * jnp.log(x) - x - gammaln(a)
  return total * jnp.exp(log_prefactor), n


def _gamma_contfrac(a, x):
  """ Upper regularized gamma Q(a, x) by continued fraction, x >= a + 1 """
  b = x + 1. - a
  c = _f64(1. / _TINY)
  d = 1. / b

  def cond(state):
    i, _, _, _, _, delta = state
    return (jnp.abs(delta - 1.) > _EPS) & (i < _MAXITER)

  def body(state):
    i, b, c, d, h, _ = state
    an = -i * (i - a)
    b = b + 2.
    d = 1. / _guard(an * d + b)
    c = _guard(b + an / c)
    delta = d * c
    return i + 1., b, c, d, h * delta, delta

  i, _, _, _, h, _ = lax.while_loop(cond, body,
                                    (_f64(1.), b, c, d, d, _f64(2.)))
  log_prefactor = a * jnp.log(x) - x - gammaln(a)
  return jnp.exp(log_prefactor) * h, i


def _gamma_p_impl(a, x):
  def lower(_):
    return _gamma_series(a, x)

  def upper(_):
    q, n = _gamma_contfrac(a, x)
    return 1. - q, n

  p, n = lax.cond(x < a + 1., lower, upper, None)
  return jnp.where(x <= 0., 0., p), n < _MAXITER


@jax.jit
def _gamma_p_kernel(a, x):
  return _gamma_p_impl(_f64(a), _f64(x))


def _gamma_logpdf(a, x):
  return (a - 1.) * jnp.log(x) - x - gammaln(a)


@jax.jit
def _gamma_quantile_kernel(p, a):
  p = _f64(p)
  a = _f64(a)

  def cdf(x):
    return _gamma_p_impl(a, x)[0]

  # Wilson-Hilferty start, falling back to the small-x series leading term
  c = 1. / (9. * a)
  x_wh = a * (1. - c + ndtri(p) * jnp.sqrt(c))**3
  x_small = jnp.exp((jnp.log(p) + gammaln(a + 1.)) / a)
  x0 = jnp.where(x_wh > 0., x_wh, x_small)
  x0 = jnp.maximum(x0, _TINY)

  return _invert(cdf, lambda x: jnp.exp(_gamma_logpdf(a, x)), p, x0)


# ---------------------------------------------------------------------------
# Incomplete beta

def _beta_contfrac(a, b, x):
  """ Continued fraction of I_x(a, b), converging for x < (a+1)/(a+b+2) """
  qab = a + b
  qap = a + 1.
  qam = a - 1.
  c = _f64(1.)
  d = 1. / _guard(1. - qab * x / qap)

  def cond(state):
    m, _, _, _, delta = state
    return (jnp.abs(delta - 1.) > _EPS) & (m < _MAXITER)

  def body(state):
    m, c, d, h, _ = state
    m2 = 2. * m
    aa = m * (b - m) * x / ((qam + m2) * (a + m2))
    d = 1. / _guard(1. + aa * d)
    c = _guard(1. + aa / c)
    h = h * d * c
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
    d = 1. / _guard(1. + aa * d)
    c = _guard(1. + aa / c)
    delta = d * c
    return m + 1., c, d, h * delta, delta

  m, _, _, h, _ = lax.while_loop(cond, body, (_f64(1.), c, d, d, _f64(2.)))
  return h, m


def _beta_i_impl(a, b, x, y):
  """ I_x(a, b) with y = 1 - x supplied by the caller to keep precision """
  log_front = (gammaln(a + b) - gammaln(a) - gammaln(b)
               + a * jnp.log(x) + b * jnp.log(y))
  swap = x >= (a + 1.) / (a + b + 2.)
  a_, b_ = jnp.where(swap, b, a), jnp.where(swap, a, b)
  x_ = jnp.where(swap, y, x)
  h, m = _beta_contfrac(a_, b_, x_)
  part = jnp.exp(log_front) * h / a_
  value = jnp.where(swap, 1. - part, part)
  value = jnp.where(x <= 0., 0., jnp.where(y <= 0., 1., value))
  return value, m < _MAXITER


@jax.jit
def _beta_i_kernel(a, b, x, y):
  return _beta_i_impl(_f64(a), _f64(b), _f64(x), _f64(y))


def _betaprime_logpdf(a, b, w):
  lbeta = gammaln(a) + gammaln(b) - gammaln(a + b)
  return (a - 1.) * jnp.log(w) - (a + b) * jnp.log1p(w) - lbeta


@jax.jit
def _betaprime_quantile_kernel(p, a, b):
  p = _f64(p)
  a = _f64(a)
  b = _f64(b)

  def cdf(w):
    return _beta_i_impl(a, b, w / (1. + w), 1. / (1. + w))[0]

  # start from the mean a/(b-1), or a/b when the mean does not exist
  w0 = a / jnp.where(b > 2., b - 1., b)
  return _invert(cdf, lambda w: jnp.exp(_betaprime_logpdf(a, b, w)), p, w0)


# ---------------------------------------------------------------------------
# Shared inversion

def _invert(cdf, pdf, p, x0):
  """
  Solves cdf(x) = p on (0, inf)
  Parameters:
  -----------
  cdf, pdf: callables
    Distribution function and its derivative
  p: float
    Target probability, 0 < p < 1
  x0: float
    Positive starting point
  Returns:
  --------
  x: float
    Quantile
  converged: bool
  """

  def hi_cond(state):
    hi, k = state
    return (cdf(hi) < p) & (k < _BRACKET_MAXITER)

  def lo_cond(state):
    lo, k = state
    return (cdf(lo) > p) & (k < _BRACKET_MAXITER)

  hi, _ = lax.while_loop(hi_cond, lambda s: (s[0] * 2., s[1] + 1.),
                         (x0, _f64(0.)))
  lo, _ = lax.while_loop(lo_cond, lambda s: (s[0] * 0.5, s[1] + 1.),
                         (x0, _f64(0.)))

  def cond(state):
    x, lo, hi, step, k = state
    return ((jnp.abs(step) > _XTOL * x) & (hi - lo > _XTOL * x)
            & (k < _NEWTON_MAXITER))

  def body(state):
    x, lo, hi, _, k = state
    f = cdf(x) - p
    lo = jnp.where(f < 0., x, lo)
    hi = jnp.where(f > 0., x, hi)
    x_new = x - f / pdf(x)
    outside = (x_new <= lo) | (x_new >= hi) | ~jnp.isfinite(x_new)
    x_new = jnp.where(outside, 0.5 * (lo + hi), x_new)
    step = jnp.where(f == 0., 0., x_new - x)
    x_new = jnp.where(f == 0., x, x_new)
    return x_new, lo, hi, step, k + 1.

  x, lo, hi, step, k = lax.while_loop(
      cond, body, (x0, lo, hi, _f64(jnp.inf), _f64(0.)))
  converged = ((k < _NEWTON_MAXITER) | (jnp.abs(step) <= _XTOL_ACCEPT * x)
               | (hi - lo <= _XTOL_ACCEPT * x))
  return x, converged


# ---------------------------------------------------------------------------
# Public API

def _real(value, name):
  try:
    value = float(value)
  except (TypeError, ValueError):
    raise DomainError("%s must be a real number, got %r" % (name, value))
  if not math.isfinite(value):
    raise DomainError("%s must be finite, got %r" % (name, value))
  return value


def _shape(value, name, allow_zero=False):
  value = _real(value, name)
  if value < 0. or (value == 0. and not allow_zero):
    raise DomainError("%s must be positive, got %r" % (name, value))
  return value


def _probability(p, name='p'):
  p = _real(p, name)
  if not 0. <= p < 1.:
    raise DomainError("%s must lie in [0, 1), got %r" % (name, p))
  return p


def reg_gamma_p(a, x):
  """
  Lower regularized incomplete gamma function P(a, x)
  Parameters:
  -----------
  a: float
    Shape, a > 0
  x: float
    Argument, x >= 0
  Returns:
  --------
  p: float
    P(a, x) in [0, 1]
  """
  a = _shape(a, 'a')
  x = _real(x, 'x')
  if x < 0.:
    raise DomainError("x must be nonnegative, got %r" % x)
  p, ok = _gamma_p_kernel(a, x)
  if not bool(ok):
    raise ConvergenceError("P(a=%g, x=%g) did not converge" % (a, x))
  return float(p)


def reg_beta_i(x, a, b):
  """
  Regularized incomplete beta function I_x(a, b)
  Parameters:
  -----------
  x: float
    Argument in [0, 1]
  a, b: float
    Positive shapes
  Returns:
  --------
  i: float
    I_x(a, b) in [0, 1]
  """
  x = _real(x, 'x')
  a = _shape(a, 'a')
  b = _shape(b, 'b')
  if not 0. <= x <= 1.:
    raise DomainError("x must lie in [0, 1], got %r" % x)
  value, ok = _beta_i_kernel(a, b, x, 1. - x)
  if not bool(ok):
    raise ConvergenceError("I_x(a=%g, b=%g) at x=%g did not converge"
                           % (a, b, x))
  return float(value)


def gamma_quantile(p, shape, scale=1.):
  """
  Quantile (inverse CDF) of the gamma distribution

  A shape of zero denotes the distribution degenerate at 0, so the lower
  Poisson bound at zero events is 0. p = 0 maps to 0.

  Parameters:
  -----------
  p: float
    Probability in [0, 1)
  shape: float
    Shape, >= 0
  scale: float
    Scale, > 0
  Returns:
  --------
  x: float
    Value with reg_gamma_p(shape, x / scale) = p
  """
  p = _probability(p)
  shape = _shape(shape, 'shape', allow_zero=True)
  scale = _shape(scale, 'scale')
  if p == 0. or shape == 0.:
    return 0.
  x, ok = _gamma_quantile_kernel(p, shape)
  if not bool(ok):
    raise ConvergenceError("gamma quantile p=%g shape=%g did not converge"
                           % (p, shape))
  return float(x) * scale


def betaprime_quantile(p, a, b):
  """
  Quantile of the beta prime distribution, q = z / (1 - z) with z the beta
  quantile of p for shapes (a, b). A zero first shape maps to 0.
  """
  p = _probability(p)
  a = _shape(a, 'a', allow_zero=True)
  b = _shape(b, 'b')
  if p == 0. or a == 0.:
    return 0.
  w, ok = _betaprime_quantile_kernel(p, a, b)
  if not bool(ok):
    raise ConvergenceError("beta prime quantile p=%g a=%g b=%g did not "
                           "converge" % (p, a, b))
  return float(w)


def beta_quantile(p, a, b):
  """ Quantile of the beta distribution with shapes (a, b) """
  w = betaprime_quantile(p, a, b)
  return w / (1. + w)


def gamma_pdf_log(a, x):
  """ Log density of the unit-scale gamma distribution """
  return _gamma_logpdf(_f64(a), _f64(x))


def betaprime_pdf_log(a, b, w):
  """ Log density of the beta prime distribution """
  return _betaprime_logpdf(_f64(a), _f64(b), _f64(w))

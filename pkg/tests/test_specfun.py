import math

import jax.numpy as jnp
import numpy as np
import pytest
from jax_cosmo.scipy.integrate import simps

from adsbench.errors import DomainError
from adsbench.specfun import (beta_quantile, betaprime_pdf_log,
                              betaprime_quantile, gamma_pdf_log,
                              gamma_quantile, reg_beta_i, reg_gamma_p)


@pytest.mark.parametrize('x', [0.01, 0.5, 1., 3., 25.])
def test_gamma_p_exponential(x):
  assert reg_gamma_p(1., x) == pytest.approx(1. - math.exp(-x), abs=1e-13)


@pytest.mark.parametrize('x', [0.1, 0.4, 2., 9.])
def test_gamma_p_half_shape_is_erf(x):
  assert reg_gamma_p(0.5, x) == pytest.approx(math.erf(math.sqrt(x)),
                                              abs=1e-12)


def test_gamma_p_limits():
  assert reg_gamma_p(3., 0.) == 0.
  assert reg_gamma_p(5., 200.) == pytest.approx(1., abs=1e-14)


def test_gamma_p_against_integrated_density():
  a, x = 3.5, 4.2
  density = lambda t: jnp.exp(gamma_pdf_log(a, t))
  integral = simps(density, 1e-12, x, N=2048)
  assert reg_gamma_p(a, x) == pytest.approx(float(integral), abs=1e-7)


def test_beta_i_closed_forms():
  x = 0.3
  assert reg_beta_i(x, 1., 4.) == pytest.approx(1. - (1. - x)**4, abs=1e-13)
  assert reg_beta_i(x, 2.5, 1.) == pytest.approx(x**2.5, abs=1e-13)
  assert reg_beta_i(0., 2., 3.) == 0.
  assert reg_beta_i(1., 2., 3.) == pytest.approx(1., abs=1e-14)


@pytest.mark.parametrize('x,a,b', [(0.2, 2., 7.), (0.65, 13., 4.),
                                   (0.01, 0.5, 300.)])
def test_beta_i_symmetry(x, a, b):
  assert reg_beta_i(x, a, b) == pytest.approx(1. - reg_beta_i(1. - x, b, a),
                                              abs=1e-10)


def test_beta_i_symmetry_random_grid():
  rng = np.random.default_rng(42)
  for _ in range(50):
    x = rng.uniform(0.01, 0.99)
    a, b = np.exp(rng.uniform(np.log(0.5), np.log(200.), size=2))
    assert reg_beta_i(x, a, b) == pytest.approx(
        1. - reg_beta_i(1. - x, b, a), abs=1e-10)


@pytest.mark.parametrize('p', [0.0125, 0.025, 0.5, 0.975, 0.9875])
@pytest.mark.parametrize('shape', [0.3, 1., 2., 38., 1000.])
def test_gamma_quantile_roundtrip(p, shape):
  x = gamma_quantile(p, shape)
  assert reg_gamma_p(shape, x) == pytest.approx(p, abs=1e-8)


@pytest.mark.parametrize('p', [0.001, 0.999])
@pytest.mark.parametrize('shape', [0.5, 12., 1e5])
def test_gamma_quantile_roundtrip_tails(p, shape):
  x = gamma_quantile(p, shape)
  assert reg_gamma_p(shape, x) == pytest.approx(p, abs=1e-8)


def test_gamma_quantile_reference_values():
  # chi-square(4) 97.5% point is 11.1433
  assert gamma_quantile(0.975, 2.) == pytest.approx(11.1433 / 2., rel=1e-4)
  assert gamma_quantile(0.5, 1.) == pytest.approx(math.log(2.), rel=1e-10)
  assert gamma_quantile(0.3, 4., scale=2.5) == pytest.approx(
      2.5 * gamma_quantile(0.3, 4.), rel=1e-12)


def test_gamma_quantile_monotone():
  ps = np.linspace(0.01, 0.99, 25)
  xs = [gamma_quantile(p, 7.) for p in ps]
  assert np.all(np.diff(xs) > 0)
  shapes = [1., 2., 5., 10., 40.]
  assert np.all(np.diff([gamma_quantile(0.4, a) for a in shapes]) > 0)


def test_quantiles_monotone_random_parameters():
  rng = np.random.default_rng(7)
  ps = np.linspace(0.01, 0.99, 7)
  for _ in range(100):
    shape = np.exp(rng.uniform(np.log(0.5), np.log(1000.)))
    a, b = np.exp(rng.uniform(np.log(1.), np.log(100.), size=2))
    gammas = [gamma_quantile(p, shape) for p in ps]
    primes = [betaprime_quantile(p, a, b) for p in ps]
    assert np.all(np.diff(gammas) > 0), shape
    assert np.all(np.diff(primes) > 0), (a, b)


def test_quantile_conventions():
  assert gamma_quantile(0., 3.) == 0.
  assert gamma_quantile(0.3, 0.) == 0.
  assert betaprime_quantile(0.025, 0., 10.) == 0.
  assert beta_quantile(0.5, 0., 2.) == 0.


@pytest.mark.parametrize('p', [1., 1.5, -0.1, float('nan')])
def test_bad_probability(p):
  with pytest.raises(DomainError):
    gamma_quantile(p, 2.)


def test_bad_shapes():
  with pytest.raises(DomainError):
    gamma_quantile(0.5, -1.)
  with pytest.raises(DomainError):
    reg_gamma_p(0., 1.)
  with pytest.raises(DomainError):
    reg_beta_i(1.2, 1., 1.)
  with pytest.raises(DomainError):
    betaprime_quantile(0.5, 2., 0.)


@pytest.mark.parametrize('p,a,b', [(0.0125, 12., 107169.), (0.9875, 13., 2.),
                                   (0.5, 1., 1.), (0.1, 0.7, 3.)])
def test_beta_quantile_roundtrip(p, a, b):
  z = beta_quantile(p, a, b)
  assert reg_beta_i(z, a, b) == pytest.approx(p, abs=1e-8)


def test_betaprime_large_b_limit():
  # b * BetaPrime(a, b) tends to Gamma(a) as b grows
  a, b = 12., 1e6
  for p in (0.025, 0.5, 0.975):
    assert b * betaprime_quantile(p, a, b) == pytest.approx(
        gamma_quantile(p, a), rel=1e-3)


def test_betaprime_density_integrates_to_cdf():
  a, b, w = 3., 5., 0.8
  density = lambda t: jnp.exp(betaprime_pdf_log(a, b, t))
  integral = simps(density, 1e-12, w, N=2048)
  assert reg_beta_i(w / (1. + w), a, b) == pytest.approx(float(integral),
                                                          abs=1e-7)

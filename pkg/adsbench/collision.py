"""
Central impact of two vehicles under an impulse-momentum model.

The impulse acts along the relative velocity direction; with coefficient of
restitution e the closing speed after contact is e times the closing speed
before it.
"""
import math
from typing import NamedTuple, Tuple

import jax.numpy as jnp

from adsbench.errors import DomainError

__all__ = ['BodyState', 'DeltaVPair', 'closing_speed', 'post_impact_velocities',
           'delta_v_two_body', 'classify_low_delta_v']


class BodyState(NamedTuple):
  """ Mass in kg and planar velocity in mph """
  mass: float
  velocity: Tuple[float, float]


class DeltaVPair(NamedTuple):
  dv1: float
  dv2: float


def _check_body(body, name):
  mass = float(body.mass)
  if not (math.isfinite(mass) and mass > 0.):
    raise DomainError("%s mass must be positive, got %r" % (name, body.mass))
  velocity = jnp.asarray(body.velocity, dtype=jnp.float64)
  if velocity.shape != (2,) or not bool(jnp.all(jnp.isfinite(velocity))):
    raise DomainError("%s velocity must be a finite 2-vector, got %r"
                      % (name, body.velocity))
  return mass, velocity


def _check_restitution(restitution):
  e = float(restitution)
  if not 0. <= e <= 1.:
    raise DomainError("restitution must lie in [0, 1], got %r" % restitution)
  return e


def closing_speed(b1, b2):
  """ Magnitude of the relative velocity of two bodies """
  _, v1 = _check_body(b1, 'b1')
  _, v2 = _check_body(b2, 'b2')
  return float(jnp.linalg.norm(v1 - v2))


def post_impact_velocities(b1, b2, restitution=0.):
  """
  Velocities of both bodies after a central impact
  Parameters:
  -----------
  b1, b2: BodyState
  restitution: float
    Coefficient of restitution in [0, 1]
  Returns:
  --------
  v1, v2: array
    Post-impact velocity vectors, mph
  """
  m1, v1 = _check_body(b1, 'b1')
  m2, v2 = _check_body(b2, 'b2')
  e = _check_restitution(restitution)

  v_rel = v1 - v2
  speed = jnp.linalg.norm(v_rel)
  if float(speed) == 0.:
    return v1, v2
  normal = v_rel / speed
  impulse = (1. + e) * m1 * m2 / (m1 + m2) * speed
  return v1 - impulse / m1 * normal, v2 + impulse / m2 * normal


def delta_v_two_body(b1, b2, restitution=0.):
  """
  Delta-V of both bodies in a central impact

  dv1 = (1+e) m2/(m1+m2) |v1 - v2| and symmetrically for dv2, so that
  m1 dv1 = m2 dv2.
  """
  m1, v1 = _check_body(b1, 'b1')
  m2, v2 = _check_body(b2, 'b2')
  e = _check_restitution(restitution)
  speed = float(jnp.linalg.norm(v1 - v2))
  total = m1 + m2
  return DeltaVPair((1. + e) * m2 / total * speed,
                    (1. + e) * m1 / total * speed)


def classify_low_delta_v(dv, threshold=1.0):
  """ True when both vehicles changed velocity by less than `threshold` mph """
  threshold = float(threshold)
  if not threshold > 0.:
    raise DomainError("threshold must be positive, got %r" % threshold)
  return bool(dv.dv1 < threshold and dv.dv2 < threshold)

import numpy as np
import pytest

from adsbench.collision import (BodyState, DeltaVPair, classify_low_delta_v,
                                closing_speed, delta_v_two_body,
                                post_impact_velocities)
from adsbench.errors import DomainError


def test_equal_masses_plastic_impact():
  dv = delta_v_two_body(BodyState(1500., (10., 0.)), BodyState(1500.,
                                                               (0., 0.)))
  assert dv.dv1 == pytest.approx(5.)
  assert dv.dv2 == pytest.approx(5.)


@pytest.mark.parametrize('restitution', [0., 0.3, 1.])
def test_momentum_exchange(restitution):
  b1 = BodyState(2200., (12., -3.))
  b2 = BodyState(1300., (-4., 6.5))
  dv = delta_v_two_body(b1, b2, restitution)
  assert b1.mass * dv.dv1 == pytest.approx(b2.mass * dv.dv2, rel=1e-9)
  v1, v2 = post_impact_velocities(b1, b2, restitution)
  before = b1.mass * np.asarray(b1.velocity) + b2.mass * np.asarray(
      b2.velocity)
  after = b1.mass * np.asarray(v1) + b2.mass * np.asarray(v2)
  np.testing.assert_allclose(after, before, rtol=1e-9)
  assert np.linalg.norm(np.asarray(v1) - b1.velocity) == pytest.approx(
      dv.dv1, rel=1e-9)


def test_restitution_scales_delta_v():
  b1 = BodyState(1800., (8., 0.))
  b2 = BodyState(1800., (0., 0.))
  plastic = delta_v_two_body(b1, b2, 0.)
  elastic = delta_v_two_body(b1, b2, 1.)
  assert elastic.dv1 == pytest.approx(2. * plastic.dv1)


def test_post_impact_limits():
  b1 = BodyState(1000., (6., 0.))
  b2 = BodyState(1000., (0., 0.))
  v1, v2 = post_impact_velocities(b1, b2, 0.)
  np.testing.assert_allclose(v1, v2)
  v1, v2 = post_impact_velocities(b1, b2, 1.)
  np.testing.assert_allclose(v1, [0., 0.], atol=1e-12)
  np.testing.assert_allclose(v2, [6., 0.])


def test_no_relative_motion():
  b = BodyState(1500., (3., 4.))
  assert closing_speed(b, b) == 0.
  assert delta_v_two_body(b, b) == DeltaVPair(0., 0.)


def test_closing_speed():
  assert closing_speed(BodyState(1., (3., 4.)),
                       BodyState(2., (0., 0.))) == pytest.approx(5.)


def test_low_delta_v_threshold_is_strict():
  assert classify_low_delta_v(DeltaVPair(0.5, 0.9))
  assert not classify_low_delta_v(DeltaVPair(0.5, 1.0))
  assert not classify_low_delta_v(DeltaVPair(2.0, 0.1))
  assert classify_low_delta_v(DeltaVPair(1.5, 1.9), threshold=2.)


def test_invalid_inputs():
  with pytest.raises(DomainError):
    classify_low_delta_v(DeltaVPair(0.1, 0.1), threshold=0.)
  with pytest.raises(DomainError):
    delta_v_two_body(BodyState(-1., (0., 0.)), BodyState(1., (1., 0.)))
  with pytest.raises(DomainError):
    delta_v_two_body(BodyState(1., (0., 0.)), BodyState(1., (1., 0.)),
                     restitution=1.5)
  with pytest.raises(DomainError):
    closing_speed(BodyState(1., (0., 0., 0.)), BodyState(1., (1., 0.)))

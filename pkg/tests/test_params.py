"""Parameter validation and derived quantities."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from halfcavity.params import SystemParams, phase_distance, wrap_phase


def test_defaults():
    p = SystemParams()
    assert p.theta0 == 0.0 and p.theta_l == 0.0
    assert p.gamma == 1.0


def test_phase_derivation_from_theta0():
    p = SystemParams(epsilon=0.1, tau=2.0, theta0=1.0, detuning=0.3)
    assert p.theta_l == pytest.approx(wrap_phase(1.0 - 0.6))


def test_phase_derivation_from_theta_l():
    p = SystemParams(epsilon=0.1, tau=2.0, theta_l=0.4, detuning=0.3)
    assert p.theta0 == pytest.approx(wrap_phase(0.4 + 0.6))


def test_consistent_pair_accepted():
    SystemParams(epsilon=0.1, tau=2.0, theta0=1.0, theta_l=wrap_phase(0.4), detuning=0.3)


def test_inconsistent_pair_rejected():
    with pytest.raises(ValueError, match="inconsistent phases"):
        SystemParams(epsilon=0.1, tau=2.0, theta0=1.0, theta_l=0.9, detuning=0.3)


@pytest.mark.parametrize("kwargs", [
    dict(epsilon=-0.1), dict(epsilon=1.2), dict(tau=-1.0),
    dict(rabi=-0.5), dict(gamma=0.0), dict(gamma=-1.0),
    dict(detuning=float("nan")),
])
def test_range_violations(kwargs):
    with pytest.raises(ValueError):
        SystemParams(**kwargs)


def test_derived_rates():
    p = SystemParams(epsilon=0.4, tau=1.0, theta0=0.0)
    assert p.gamma_tilde == pytest.approx(0.6)
    assert SystemParams(epsilon=0.4, tau=1.0, theta0=math.pi).gamma_tilde \
        == pytest.approx(1.4)
    q = SystemParams(epsilon=0.4, tau=1.0, theta_l=math.pi / 2, detuning=0.5)
    assert q.delta_tilde == pytest.approx(0.5 - 0.2)
    assert q.generalized_rabi == pytest.approx(0.5)
    assert q.triplet_width == pytest.approx(2.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(-50.0, 50.0))
def test_wrap_phase_range_and_identity(phi):
    w = wrap_phase(phi)
    assert 0.0 <= w < 2 * math.pi
    assert phase_distance(w, phi) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 10.0), st.floats(-20.0, 20.0),
       st.floats(-3.0, 3.0))
def test_phase_consistency_invariant(eps, tau, theta0, detuning):
    p = SystemParams(epsilon=eps, tau=tau, theta0=theta0, detuning=detuning)
    assert phase_distance(p.theta_l, p.theta0 - detuning * tau) < 1e-9

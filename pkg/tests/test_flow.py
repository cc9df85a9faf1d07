from __future__ import annotations

import math

import numpy as np
import pytest

from saddlenode.flow import FlowError, UnreachableError, integrate, time_of_flight, transit_time
from saddlenode.models import builtin


@pytest.fixture(scope="module")
def nf():
    return builtin("normalform")


def test_tanh_oracle(nf):
    # y' = nu - y^2 with nu = 1: y(t) = tanh(t) from y(0) = 0
    for t in (0.3, 1.0, 2.5):
        r = integrate(nf, 0.0, 1.0, t)
        assert r.ok
        assert abs(r.state - math.tanh(t)) < 1e-9


def test_backward_integration(nf):
    fwd = integrate(nf, 0.2, 1.0, 0.7)
    back = integrate(nf, fwd.state, 1.0, -0.7)
    assert abs(back.state - 0.2) < 1e-9


def test_variational_derivative_matches_finite_difference(nf):
    h = 1e-6
    r = integrate(nf, 0.1, 0.5, 1.3, variational=True)
    rp = integrate(nf, 0.1 + h, 0.5, 1.3)
    rm = integrate(nf, 0.1 - h, 0.5, 1.3)
    assert abs(r.derivative - (rp.state - rm.state) / (2 * h)) < 1e-6


def test_planar_variational_matches_finite_difference():
    m = builtin("stommel2d", alpha=36.0)
    r = integrate(m, [1.0, 0.8], 1.0, 0.2, variational=True)
    h = 1e-6
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        d = (integrate(m, np.array([1.0, 0.8]) + e, 1.0, 0.2).state
             - integrate(m, np.array([1.0, 0.8]) - e, 1.0, 0.2).state) / (2 * h)
        assert np.allclose(r.derivative[:, k], d, atol=1e-6)


def test_boundary_hit(nf):
    # y' = -1 - y^2 run backward from y = 0 reaches 10 at t = -arctan(10)
    r = integrate(nf.with_constants(a=0.0), 0.0, -1.0, -5.0, boundary=(-10.0, 10.0))
    assert r.status == "boundary-hit"
    assert r.state == 10.0
    assert abs(r.time + math.atan(10.0)) < 1e-8


def test_blowup(nf):
    r = integrate(nf, 1.0, 0.0, -2.0)  # y' = -y^2 backward explodes at t = -1
    assert r.status == "blowup"
    assert -1.0 < r.time < -0.99


def test_invalid_inputs(nf):
    with pytest.raises(ValueError):
        integrate(nf, 0.0, 1.0, 1.0, abs_tol=0)
    with pytest.raises(ValueError):
        integrate(nf, [0.0, 1.0], 1.0, 1.0)
    with pytest.raises(ValueError):
        integrate(nf, math.nan, 1.0, 1.0)
    with pytest.raises(ValueError):
        integrate(builtin("stommel2d"), [1.0, 1.0], 1.0, 1.0, boundary=(0, 1))
    assert issubclass(UnreachableError, FlowError)


def test_time_of_flight_oracle(nf):
    # y' = -0.01 - y^2: time from 0.1 to -0.1 is 20 arctan(1)
    t = time_of_flight(nf, 0.1, -0.1, -0.01)
    assert abs(t - 20 * math.atan(1.0)) < 1e-8
    assert abs(transit_time(nf, 0.1, -0.1, -0.01) - t) < 1e-8
    assert time_of_flight(nf, 0.3, 0.3, -0.01) == 0.0


def test_unreachable(nf):
    with pytest.raises(UnreachableError):
        time_of_flight(nf, -0.1, 0.1, -0.01)  # flow points the other way
    with pytest.raises(UnreachableError):
        time_of_flight(nf, 0.5, -0.5, 0.01)  # equilibria in between
    with pytest.raises(UnreachableError):
        transit_time(nf, 0.5, -0.5, 0.01)

from __future__ import annotations

import numpy as np
import pytest

from saddlenode.conjugacy import (
    ConjugacyError,
    MultiplierMismatchError,
    chebyshev_grid,
    conjugacy_defect,
    conjugate_to_normal_form,
    extend_by_flow,
    flow_box_conjugacy,
    inject_fault,
    local_taylor_conjugacy,
    taylor_patch,
)
from saddlenode.matching import default_windows
from saddlenode.models import load_model


@pytest.fixture(scope="module")
def cubic_res(cubic_nf):
    f, sn = cubic_nf
    return conjugate_to_normal_form(f, sn, 0.01)


@pytest.fixture(scope="module")
def stommel_res(stommel, stommel_sn):
    return conjugate_to_normal_form(stommel, stommel_sn, 1e-3)


def scalar(rhs):
    return load_model(f"states: x\nparams: mu\neq x = {rhs}\n")


def test_taylor_coefficients_of_x_over_one_minus_x():
    # -h = h' (-x + x^2) is solved by h = x / (1 - x)
    f, g = scalar("-x + x^2 + 0*mu"), scalar("-x + 0*mu")
    h = local_taylor_conjugacy(f, 0.0, g, 0.0, 0.0, 0.0, order=6)
    assert np.allclose(h, [0, 1, 1, 1, 1, 1, 1], atol=1e-14)


def test_multiplier_mismatch_is_rejected():
    f, g = scalar("-x + x^2 + 0*mu"), scalar("-1.1*x + 0*mu")
    with pytest.raises(MultiplierMismatchError):
        local_taylor_conjugacy(f, 0.0, g, 0.0, 0.0, 0.0)
    with pytest.raises(ConjugacyError):
        local_taylor_conjugacy(scalar("x^2 + 0*mu"), 0.0, g, 0.0, 0.0, 0.0)


def test_identity_conjugacy(cubic_nf, cubic_res):
    f, _ = cubic_nf
    res = cubic_res
    assert abs(res.matched.nu - 0.01) < 1e-14
    for s in res.samples:
        assert s.defect.max < 1e-10
        assert np.allclose(s.h, s.x, atol=1e-10)


def test_cubic_example_defect_and_monotonicity(cubic_nf, cubic_res):
    f, _ = cubic_nf
    res = cubic_res
    assert len(res.samples) == 4
    for s in res.samples:
        assert s.defect.p90 < 1e-6
        assert s.defect.flow_max < 1e-8
        assert s.monotone
        lo, hi = s.interval
        assert np.all((s.x > lo) & (s.x < hi))


def test_fault_is_detected(cubic_nf, cubic_res):
    f, _ = cubic_nf
    res = cubic_res
    for s in res.samples:
        bad = conjugacy_defect(inject_fault(s, 1e-3), f, res.model_param, res.normal_form, res.matched.nu)
        assert bad.defect.max > 1e-4


def test_patch_and_flow_agree_on_overlap(stommel, stommel_res):
    res = stommel_res
    m, g, nu = res.matched, res.normal_form, res.matched.nu
    xe, ye = m.x[0], m.y[0]
    patch = taylor_patch(stommel, res.model_param, g, nu, xe, ye, slope=1.0,
                         max_radius=0.25 * abs(m.x[1] - m.x[0]))
    side = (xe, m.x[1]) if m.x[1] > xe else (m.x[1], xe)
    s = extend_by_flow(patch, stommel, res.model_param, g, nu, side)
    pts = xe + np.sign(side[1] + side[0] - 2 * xe) * np.linspace(0.1, 0.9, 5) * patch.radius
    h_flow, dh_flow = s.evaluate(pts)
    assert np.max(np.abs(h_flow - patch(pts))) < 1e-8
    # differentiating the truncated series costs one power of the radius
    assert np.max(np.abs(dh_flow - patch.derivative(pts))) < 10 * 1e-8 / patch.radius


def test_stommel_conjugacy(stommel_res):
    res = stommel_res
    assert res.worst_p90 < 1e-6
    assert all(s.monotone for s in res.samples)


def test_flow_box_maps_entry_to_entry_and_exit_to_exit(stommel, stommel_sn):
    res = conjugate_to_normal_form(stommel, stommel_sn, -1e-3)
    (s,) = res.samples
    U, V = default_windows(stommel_sn, -1e-3)
    h_ends, _ = s.evaluate(np.array(U))
    assert np.allclose(sorted(h_ends), V, atol=1e-8)
    assert s.defect.max < 1e-6 and s.monotone


def test_extend_rejects_bad_intervals(cubic_nf, cubic_res):
    f, _ = cubic_nf
    res = cubic_res
    xe = res.matched.x[0]
    patch = taylor_patch(f, 0.01, res.normal_form, 0.01, xe, res.matched.y[0], max_radius=0.01)
    with pytest.raises(ConjugacyError):
        extend_by_flow(patch, f, 0.01, res.normal_form, 0.01, (xe - 0.05, xe + 0.05))
    with pytest.raises(ConjugacyError):
        extend_by_flow(patch, f, 0.01, res.normal_form, 0.01, (xe, xe + 1.0))


def test_chebyshev_grid_endpoints():
    g = chebyshev_grid(-1.0, 3.0, 9)
    assert g[0] == -1.0 and g[-1] == 3.0 and np.all(np.diff(g) > 0)


def test_flow_box_on_identical_system():
    f = scalar("mu - x^2")
    s = flow_box_conjugacy(f, -0.01, f, -0.01, (-0.1, 0.1), (-0.1, 0.1))
    assert np.allclose(s.h, s.x, atol=1e-10)

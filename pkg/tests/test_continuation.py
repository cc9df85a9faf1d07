from __future__ import annotations

import math
from decimal import Decimal, getcontext
from fractions import Fraction

import numpy as np
import pytest

from saddlenode.centre_manifold import fold_residual, polish_fold
from saddlenode.continuation import (
    DS_MAX,
    DS_MIN,
    analytic_branch_1d,
    analytic_locus_stommel,
    branch_numbers,
    continue_branch,
    seed_point,
    trace_both,
    trace_branch,
)
from saddlenode.models import builtin

M_GRID = np.linspace(4.0, 10.0, 25)


@pytest.fixture(scope="module")
def stiff():
    return trace_both(builtin("stommel2d"), (4.0, 10.0), jobs=2)


@pytest.fixture(scope="module")
def soft():
    return trace_both(builtin("stommel2d", alpha=36.0), (4.0, 10.0))


def test_locus_closed_forms():
    pp, pm, yp, ym = analytic_locus_stommel(7.5)
    getcontext().prec = 40
    m = Decimal("7.5")
    r = 1 - 3 / m
    k = r * r.sqrt()
    ref = [Decimal(2) / 3 + 2 * m / 27 * (1 - k), Decimal(2) / 3 + 2 * m / 27 * (1 + k),
           (2 + r.sqrt()) / 3, (2 - r.sqrt()) / 3]
    assert np.allclose([pp, pm, yp, ym], [float(v) for v in ref], rtol=0, atol=1e-15)
    # quoted seven-digit values
    assert np.allclose([pp, pm, yp, ym], [0.9640235, 1.4804211, 0.9248658, 0.4084675], rtol=0, atol=5e-7)
    assert pp < pm
    exact = Fraction(2, 3) + Fraction(8, 27) * Fraction(7, 8)
    assert exact == Fraction(25, 27)
    assert abs(analytic_locus_stommel(4.0)[0] - 25 / 27) < 1e-15
    for m in (3.0, 2.0):
        with pytest.raises(ValueError):
            analytic_locus_stommel(m)
    pp, pm, _, _ = analytic_locus_stommel(3.0 + 1e-9)
    assert abs(pp - 8 / 9) < 1e-6 and abs(pm - 8 / 9) < 1e-6


def test_large_alpha_branches_follow_the_locus(stiff):
    for which, k in (("upper", 0), ("lower", 1)):
        b = stiff[which]
        assert b.complete
        dev = [abs(b.point_at(m).p - analytic_locus_stommel(m)[k]) for m in M_GRID]
        assert max(dev) < 1e-2


def test_small_alpha_branches_deviate(soft):
    for which, k in (("upper", 0), ("lower", 1)):
        b = soft[which]
        assert b.complete
        assert b.m.min() <= 4.0 + 1e-12 and b.m.max() >= 10.0 - 1e-12
        dev = [abs(b.point_at(m).p - analytic_locus_stommel(m)[k]) for m in M_GRID]
        assert max(dev) > 1e-2


def test_two_folds_differ_at_small_alpha(soft):
    up, lo = soft["upper"].point_at(7.5), soft["lower"].point_at(7.5)
    assert abs(up.p0sq - lo.p0sq) > 1e-3
    assert abs(up.a0 - lo.a0) > 1e-3


def test_accepted_points_are_newton_fixed_points(soft):
    model = soft["upper"].model
    for q in soft["upper"].points[::5]:
        H, _ = fold_residual(model, q.x, q.y, q.p, q.m)
        assert np.max(np.abs(H)) < 1e-9
        x, y, p = polish_fold(model, q.x, q.y, q.p, q.m)
        assert np.allclose([x, y, p], [q.x, q.y, q.p], atol=1e-9)


def test_reversal_symmetry():
    model = builtin("stommel2d", alpha=36.0)
    a = seed_point(model, 5.0, "upper")
    fwd = continue_branch(model, a, 8.0)
    back = continue_branch(model, fwd.points[-1], 5.0)
    assert fwd.complete and back.complete
    for m in (5.5, 6.3, 7.1, 7.9):
        assert abs(fwd.point_at(m).p - back.point_at(m).p) < 1e-6


def test_step_sizes_stay_in_bounds(stiff):
    steps = [q.step for q in stiff["upper"].points if q.step > 0]
    assert steps and DS_MIN <= min(steps) and max(steps) <= DS_MAX
    with pytest.raises(ValueError):
        continue_branch(stiff["upper"].model, stiff["upper"].points[0], 9.0, ds=DS_MIN / 2)


def test_terminates_near_the_cusp():
    model = builtin("stommel2d")
    start = seed_point(model, 5.0, "upper")
    b = continue_branch(model, start, 2.0)
    assert b.termination == "cusp-suspect"
    assert 3.0 < b.m.min() < 3.1


def test_numbers_shrink_toward_the_cusp():
    ms = np.linspace(3.05, 6.0, 40)
    rows = branch_numbers(analytic_branch_1d(ms))
    assert np.all(np.diff(rows[:, 2]) > 0)  # p0^2 grows with m
    assert np.all(np.diff(np.abs(rows[:, 3])) > 0)  # so does 1/|a0|
    assert abs(rows[0, 3]) < 0.2  # 1/|a0| = m - 3 is small
    pp, pm, _, _ = analytic_locus_stommel(3.001)
    assert abs(pp - 8 / 9) < 1e-3 and abs(pm - 8 / 9) < 1e-3


def test_one_dimensional_branches_share_numbers():
    ms = [4.0, 7.5, 10.0]
    up = branch_numbers(analytic_branch_1d(ms, "upper"))
    lo = branch_numbers(analytic_branch_1d(ms, "lower"))
    assert np.allclose(up[:, 2:], lo[:, 2:], rtol=1e-9)
    k = ms.index(7.5)
    assert abs(up[k, 2] - math.sqrt(33.75)) < 1e-7
    assert abs(up[k, 3] + 4.5) < 1e-7
    assert np.allclose(up[:, 2], [math.sqrt(m * (m - 3)) for m in ms], rtol=1e-9)


def test_seed_needs_a_rule_or_a_guess():
    from saddlenode.continuation import ContinuationError
    from saddlenode.models import load_model

    m = load_model("states: x, y\nparams: mu, s = 0\neq x = mu - x^2 + 0*s\neq y = -y\n")
    with pytest.raises(ContinuationError):
        seed_point(m, 0.0)
    bp = seed_point(m, 0.0, guess=(0.0, 0.0, 0.0))
    assert bp.p == 0.0 and bp.lam == -1.0


def test_trace_branch_default_seed_inside_range():
    b = trace_branch(builtin("stommel2d", alpha=36.0), "upper", (5.0, 6.0))
    assert b.complete and np.all(np.diff(b.m) > 0)

"""Differentiable conjugacies between a scalar model and its matched normal form.

A conjugacy ``y = h(x)`` satisfies ``g(h(x)) = h'(x) f(x)``, equivalently
``h(phi_t(x)) = psi_t(h(x))``.  Near a hyperbolic equilibrium it is built
as a Taylor polynomial solved order by order; the polynomial is then carried
over the basin of that equilibrium by the flows: a point ``x`` is reached
from the anchor ``p`` in time ``t_x``, and ``h(x) = psi_{t_x}(h(p))``.

The transfer is integrated with ``x`` as the independent variable,

    dy/dx = g(y) / f(x),   d log phi'/dx = f'(x) / f(x),   d log psi'/dx = g'(y) / f(x),

which is the time-of-flight construction with ``dt = dx / f``, and gives
``h'(x) = psi' h'(p) / phi'`` from the variational flows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .jets import Jet1
from .matching import MatchedParams, match_multipliers, negative_mu_match, default_windows
from .models import ScalarModel1P, builtin
from .saddle_node import SaddleNodePoint, find_all_stationary, orientation

__all__ = [
    "MultiplierMismatchError",
    "ConjugacyError",
    "TaylorPatch",
    "ConjugacySample",
    "DefectReport",
    "local_taylor_conjugacy",
    "taylor_patch",
    "extend_by_flow",
    "flow_box_conjugacy",
    "conjugacy_defect",
    "conjugate_to_normal_form",
    "inject_fault",
    "chebyshev_grid",
]

MULTIPLIER_TOL = 1e-8
TAYLOR_ORDER = 4
REMAINDER_TOL = 1e-8
GRID_POINTS = 257
COLLAR = 1e-4
EXT_RTOL = 1e-12
EXT_ATOL = 1e-14


class ConjugacyError(RuntimeError):
    pass


class MultiplierMismatchError(ConjugacyError):
    """The linear conjugacy equation ``g'(y*) h1 = h1 f'(x*)`` has no solution with ``h1 != 0``."""


def _taylor(model: ScalarModel1P, x0: float, param: float, order: int) -> np.ndarray:
    return np.asarray(model.rhs(Jet1.variable(x0, order), param).coeffs, dtype=float)


def local_taylor_conjugacy(
    f: ScalarModel1P,
    mu: float,
    g: ScalarModel1P,
    nu: float,
    x_star: float,
    y_star: float,
    order: int = TAYLOR_ORDER,
    *,
    slope: float = 1.0,
    tol: float = MULTIPLIER_TOL,
) -> np.ndarray:
    """Coefficients ``h_0..h_order`` of ``h(x* + e) = sum h_k e^k``.

    ``h_0 = y*`` and ``h_1 = slope``; order ``k >= 2`` solves
    ``lambda (1 - k) h_k = sum_{j<k} j h_j f_{k+1-j} - [g(y* + H_{<k})]_k``.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    if slope == 0:
        raise ValueError("slope must be nonzero")
    fc = _taylor(f, x_star, mu, order + 1)
    gc = _taylor(g, y_star, nu, order)
    lam_f, lam_g = fc[1], gc[1]
    if abs(lam_f) <= tol:
        raise ConjugacyError(f"equilibrium at x*={x_star:g} is not hyperbolic (f'={lam_f:.3g})")
    if abs(lam_f - lam_g) > tol:
        raise MultiplierMismatchError(
            f"multipliers differ: f'(x*)={lam_f:.10g}, g'(y*)={lam_g:.10g}; "
            "the linear conjugacy equation is inconsistent"
        )
    h = np.zeros(order + 1)
    h[0], h[1] = y_star, slope
    for k in range(2, order + 1):
        inner = np.zeros(order + 1)
        inner[0] = y_star
        inner[1:k] = h[1:k]
        gh = np.asarray(g.rhs(Jet1(inner), nu).coeffs, dtype=float)
        rhs = sum(j * h[j] * fc[k + 1 - j] for j in range(1, k)) - gh[k]
        h[k] = rhs / (lam_f * (1 - k))
    return h


@dataclass(frozen=True)
class TaylorPatch:
    """A local Taylor conjugacy valid for ``|x - x*| <= radius``."""

    coeffs: np.ndarray
    x_star: float
    radius: float

    @property
    def y_star(self) -> float:
        return float(self.coeffs[0])

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float) - self.x_star, self.coeffs)

    def derivative(self, x):
        d = np.polynomial.polynomial.polyder(self.coeffs)
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float) - self.x_star, d)


def taylor_patch(
    f: ScalarModel1P,
    mu: float,
    g: ScalarModel1P,
    nu: float,
    x_star: float,
    y_star: float,
    order: int = TAYLOR_ORDER,
    *,
    slope: float = 1.0,
    max_radius: float = math.inf,
    remainder_tol: float = REMAINDER_TOL,
) -> TaylorPatch:
    """Taylor conjugacy of ``order`` with the radius where ``|h_{order+1}| r^(order+1) < remainder_tol``."""
    ext = local_taylor_conjugacy(f, mu, g, nu, x_star, y_star, order + 1, slope=slope)
    nxt = abs(ext[-1])
    r = max_radius if nxt == 0 else (remainder_tol / nxt) ** (1.0 / (order + 1))
    r = min(r, max_radius)
    if not (r > 0 and math.isfinite(r)):
        raise ConjugacyError("could not size the Taylor patch")
    return TaylorPatch(coeffs=ext[:-1].copy(), x_star=float(x_star), radius=float(r))


@dataclass(frozen=True)
class DefectReport:
    max: float
    rms: float
    p90: float  # largest defect over the best 90% of grid points
    flow_max: float  # max |h(phi_D(x)) - psi_D(h(x))|
    probe: float

    def as_dict(self) -> dict[str, float]:
        return {"max": self.max, "rms": self.rms, "p90": self.p90, "flow_max": self.flow_max, "probe": self.probe}


@dataclass(frozen=True)
class ConjugacySample:
    x: np.ndarray
    h: np.ndarray
    dh: np.ndarray
    anchor: tuple[float, float]
    interval: tuple[float, float]
    equilibrium: tuple[float, float] | None = None
    defect: DefectReport | None = None
    pointwise: np.ndarray | None = field(default=None, repr=False, compare=False)
    evaluate: Callable | None = field(default=None, repr=False, compare=False)

    @property
    def monotone(self) -> bool:
        d = np.diff(self.h)
        return bool(np.all(d > 0) or np.all(d < 0))

    def rows(self):
        for i in range(self.x.size):
            yield self.x[i], self.h[i], self.dh[i], (math.nan if self.pointwise is None else self.pointwise[i])


def chebyshev_grid(a: float, b: float, n: int = GRID_POINTS) -> np.ndarray:
    """Chebyshev-Lobatto points on ``[a, b]`` in increasing order."""
    k = np.arange(n)
    t = -np.cos(np.pi * k / (n - 1))
    return 0.5 * (a + b) + 0.5 * (b - a) * t


def _transfer(f, mu, g, nu, p, q, dhp, xs):
    """Flow transfer from ``(p, q)`` to the sorted-by-distance points ``xs``."""
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        return np.empty(0), np.empty(0)
    fp = float(f.rhs(p, mu))
    gq = float(g.rhs(q, nu))
    if fp == 0 or gq == 0:
        raise ConjugacyError("anchor sits on an equilibrium")

    def rhs(x, u):
        fx = f.rhs(Jet1.variable(x, 1), mu)
        gy = g.rhs(Jet1.variable(u[0], 1), nu)
        inv = 1.0 / fx[0]
        return np.array([gy[0] * inv, fx[1] * inv, gy[1] * inv])

    order = np.argsort(np.abs(xs - p))
    target = xs[order]
    end = target[-1]
    if np.any(np.sign(target - p) * np.sign(end - p) < 0):
        raise ConjugacyError("points on both sides of the anchor; transfer one side at a time")
    if end == p:
        return np.full(xs.size, q), np.full(xs.size, dhp)
    sol = solve_ivp(rhs, (p, end), [q, 0.0, 0.0], method="DOP853", t_eval=target,
                    rtol=EXT_RTOL, atol=EXT_ATOL)
    if sol.status != 0 or sol.y.shape[1] != target.size:
        raise ConjugacyError(f"flow transfer failed: {sol.message}")
    y, lphi, lpsi = sol.y
    h = np.empty(xs.size)
    dh = np.empty(xs.size)
    h[order] = y
    dh[order] = dhp * np.exp(lpsi - lphi)
    return h, dh


def extend_by_flow(
    patch: TaylorPatch,
    f: ScalarModel1P,
    mu: float,
    g: ScalarModel1P,
    nu: float,
    interval: tuple[float, float],
    *,
    points: int = GRID_POINTS,
    collar: float = COLLAR,
) -> ConjugacySample:
    """Carry the Taylor patch over ``interval`` (one side of the equilibrium).

    The anchor is ``x* +/- radius/2`` on the side of ``interval``; grid points
    closer than ``collar`` to either end are dropped.
    """
    lo, hi = sorted(map(float, interval))
    xs_ = patch.x_star
    if lo < xs_ < hi:
        raise ConjugacyError("interval must lie on one side of the equilibrium")
    side = 1 if lo >= xs_ else -1
    p = xs_ + side * 0.5 * patch.radius
    if side * (p - xs_) > hi - lo:
        p = 0.5 * (lo + hi)
    grid = chebyshev_grid(lo, hi, points)
    grid = grid[(grid - lo > collar) & (hi - grid > collar)]
    # fixed points of f inside the interval would stall the transfer
    fv = np.asarray(f.rhs(grid, mu), dtype=float)
    if np.any(fv == 0) or np.any(np.sign(fv) != np.sign(fv[0])):
        raise ConjugacyError("equilibrium inside the target interval")
    q = float(patch(p))
    dhp = float(patch.derivative(p))
    h = np.empty(grid.size)
    dh = np.empty(grid.size)
    for sel in (side * (grid - p) <= 0, side * (grid - p) > 0):
        hv, dv = _transfer(f, mu, g, nu, p, q, dhp, grid[sel])
        h[sel], dh[sel] = hv, dv

    def evaluate(xs, _p=p, _q=q, _d=dhp):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out_h = np.empty(xs.size)
        out_d = np.empty(xs.size)
        for sel in (xs <= _p, xs > _p):
            hv, dv = _transfer(f, mu, g, nu, _p, _q, _d, xs[sel])
            out_h[sel], out_d[sel] = hv, dv
        return out_h, out_d

    return ConjugacySample(
        x=grid, h=h, dh=dh, anchor=(p, q), interval=(lo, hi),
        equilibrium=(xs_, patch.y_star), evaluate=evaluate,
    )


def flow_box_conjugacy(
    f: ScalarModel1P,
    mu: float,
    g: ScalarModel1P,
    nu: float,
    U: tuple[float, float],
    V: tuple[float, float],
    *,
    points: int = GRID_POINTS,
) -> ConjugacySample:
    """Conjugacy on an equilibrium-free interval ``U`` onto ``V``.

    The entry point of ``U`` is sent to the entry point of ``V`` with
    ``h' = g / f`` there; with matched transit times the exit points
    correspond as well.
    """
    U = tuple(sorted(map(float, U)))
    V = tuple(sorted(map(float, V)))
    fu = float(f.rhs(U[0], mu))
    gv = float(g.rhs(V[0], nu))
    p = U[0] if fu > 0 else U[1]
    q = V[0] if gv > 0 else V[1]
    dhp = float(g.rhs(q, nu)) / float(f.rhs(p, mu))
    grid = chebyshev_grid(U[0], U[1], points)
    h, dh = _transfer(f, mu, g, nu, p, q, dhp, grid)

    def evaluate(xs):
        return _transfer(f, mu, g, nu, p, q, dhp, np.atleast_1d(np.asarray(xs, dtype=float)))

    return ConjugacySample(x=grid, h=h, dh=dh, anchor=(p, q), interval=U, evaluate=evaluate)


def conjugacy_defect(
    sample: ConjugacySample,
    f: ScalarModel1P,
    mu: float,
    g: ScalarModel1P,
    nu: float,
    *,
    probe: float | None = None,
    probe_points: int = 17,
) -> ConjugacySample:
    """Attach defect statistics of ``|g(h) - h' f|`` and the flow-commutation defect.

    The flow probe uses ``Delta`` small enough that ``phi_Delta(x)`` stays in
    the sample interval; points leaving it are skipped.
    """
    fx = np.asarray(f.rhs(sample.x, mu), dtype=float)
    gy = np.asarray(g.rhs(sample.h, nu), dtype=float)
    pointwise = np.abs(gy - sample.dh * fx)
    n = pointwise.size
    srt = np.sort(pointwise)
    p90 = float(srt[max(0, int(math.ceil(0.9 * n)) - 1)]) if n else math.nan
    flow_max = 0.0
    lo, hi = sample.interval
    if probe is None:
        probe = 0.05 * (hi - lo) / max(float(np.max(np.abs(fx))), 1e-300) if n else 0.0
    if sample.evaluate is not None and n and probe > 0:
        from .flow import integrate

        idx = np.unique(np.linspace(0, n - 1, probe_points).astype(int))
        starts, moved = [], []
        for i in idx:
            r = integrate(f, sample.x[i], mu, probe, 1e-13, 1e-13, boundary=(lo, hi))
            if r.status == "ok":
                starts.append(i)
                moved.append(r.state)
        if starts:
            h_moved, _ = sample.evaluate(np.array(moved))
            for i, hm in zip(starts, h_moved):
                r = integrate(g, sample.h[i], nu, probe, 1e-13, 1e-13)
                flow_max = max(flow_max, abs(hm - r.state))
    report = DefectReport(
        max=float(pointwise.max()) if n else math.nan,
        rms=float(np.sqrt(np.mean(pointwise**2))) if n else math.nan,
        p90=p90,
        flow_max=float(flow_max),
        probe=float(probe),
    )
    return replace(sample, defect=report, pointwise=pointwise)


def inject_fault(sample: ConjugacySample, amplitude: float = 1e-3, centre: float | None = None,
                 width: float | None = None) -> ConjugacySample:
    """Add a smooth Gaussian bump to ``h`` (and its derivative to ``h'``)."""
    lo, hi = sample.interval
    c = 0.5 * (lo + hi) if centre is None else centre
    w = 0.1 * (hi - lo) if width is None else width
    z = (sample.x - c) / w
    bump = amplitude * np.exp(-z * z)
    dbump = bump * (-2.0 * z / w)
    return replace(sample, h=sample.h + bump, dh=sample.dh + dbump, defect=None, pointwise=None, evaluate=None)


@dataclass
class NormalFormConjugacy:
    """Samples covering the basins around a fold, plus the matched parameters."""

    matched: MatchedParams
    model_param: float
    normal_form: ScalarModel1P
    samples: list[ConjugacySample]

    @property
    def worst_p90(self) -> float:
        return max(s.defect.p90 for s in self.samples)


def _basin_limits(f, mu, eqs, width):
    """Outer ends of the basins beside ``eqs`` within ``width``, stopping at other equilibria."""
    lo, hi = eqs[0] - width, eqs[-1] + width
    try:
        others = [p.x for p in find_all_stationary(f, mu, lo, hi)]
    except Exception:  # noqa: BLE001 - no extra equilibria found is the normal case
        others = []
    others = [x for x in others if all(abs(x - e) > 1e-9 for e in eqs)]
    left = max([x for x in others if x < eqs[0]], default=lo)
    right = min([x for x in others if x > eqs[-1]], default=hi)
    return left, right


def conjugate_to_normal_form(
    model: ScalarModel1P,
    sn: SaddleNodePoint,
    mu: float,
    *,
    matched: MatchedParams | None = None,
    order: int = TAYLOR_ORDER,
    points: int = GRID_POINTS,
    collar: float = COLLAR,
) -> NormalFormConjugacy:
    """Conjugacy between ``model`` at fold distance ``mu`` and its matched normal form.

    For ``mu > 0`` each equilibrium gets a Taylor patch extended over both
    sides of its basin; the outer basins are cut at one equilibrium spacing
    beyond the pair.  For ``mu < 0`` the flow-box conjugacy on the default
    windows is returned.
    """
    o = orientation(sn.bundle)
    param = o.param(mu, sn)
    if mu < 0:
        matched = matched or negative_mu_match(model, sn, mu)
        g = builtin("normalform", a=matched.a)
        U, V = default_windows(sn, mu)
        s = flow_box_conjugacy(model, param, g, matched.nu, U, V, points=points)
        s = conjugacy_defect(s, model, param, g, matched.nu)
        return NormalFormConjugacy(matched, param, g, [s])
    matched = matched or match_multipliers(model, sn, mu)
    g = builtin("normalform", a=matched.a)
    nu = matched.nu
    xs = sorted(zip(matched.x, matched.y), key=lambda t: t[0])
    eq_x = [t[0] for t in xs]
    spacing = eq_x[1] - eq_x[0]
    left, right = _basin_limits(model, param, eq_x, spacing)
    samples = []
    for i, (xe, ye) in enumerate(xs):
        other = eq_x[1 - i]
        dist = min(abs(other - xe), abs((left if i == 0 else right) - xe))
        patch = taylor_patch(model, param, g, nu, xe, ye, order, slope=float(o.s), max_radius=0.25 * dist)
        sides = [(left, xe), (xe, other)] if i == 0 else [(other, xe), (xe, right)]
        for iv in sides:
            smp = extend_by_flow(patch, model, param, g, nu, iv, points=points, collar=collar)
            samples.append(conjugacy_defect(smp, model, param, g, nu))
    return NormalFormConjugacy(matched, param, g, samples)

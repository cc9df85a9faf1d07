"""Matching a model to the extended normal form ``y' = nu - y^2 + a y^3``.

Past the fold (``mu > 0`` in the normalised frame of
:mod:`~saddlenode.saddle_node`) the model has two hyperbolic equilibria.
``nu`` and ``a`` are chosen so that the normal form's two equilibria carry
the same multipliers.  With ``m = sqrt(mu)`` and ``nu = (p m)^2`` the
mismatches ``G_r = f'(x_r) - g'(y_r)`` are scaled as

    F1 = G1 / m,    F2 = (G1 + G2) / m^2,

which stays well conditioned as ``m -> 0`` (the Jacobian in ``(a, p)`` tends
to ``[[0, -2], [-4 p0^2, -8 a0 p0]]``).  Newton runs on these scaled
residuals, seeded at ``(a0, p0)``.

Before the fold (``mu < 0``) no equilibria exist near the fold and ``nu`` is
fixed by equal transit times through matched intervals, with ``a = a0``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .flow import UnreachableError, transit_time
from .models import ScalarModel1P, builtin
from .saddle_node import (
    ConvergenceError,
    GenericityError,
    SaddleNodePoint,
    asymptotic_predictions,
    find_stationary,
    orientation,
)

__all__ = [
    "MATCH_TOL",
    "MatchError",
    "MatchedParams",
    "NormalFormCurve",
    "nf_equilibria",
    "model_equilibria",
    "match_multipliers",
    "negative_mu_match",
    "default_windows",
    "normal_form_curve",
    "validity_radius",
]

MATCH_TOL = 1e-10
MAX_MATCH_ITER = 20


class MatchError(RuntimeError):
    pass


@dataclass(frozen=True)
class MatchedParams:
    mu: float
    nu: float
    a: float
    residual1: float
    residual2: float
    iterations: int
    x: tuple[float, float] = (math.nan, math.nan)
    y: tuple[float, float] = (math.nan, math.nan)
    multipliers: tuple[float, float] = (math.nan, math.nan)

    def as_row(self) -> dict[str, float]:
        return {
            "mu": self.mu,
            "nu": self.nu,
            "a": self.a,
            "residual1": self.residual1,
            "residual2": self.residual2,
            "iterations": self.iterations,
        }


@dataclass
class NormalFormCurve:
    samples: list[MatchedParams]
    p0sq: float
    a0: float
    failures: list[tuple[float, str]] = field(default_factory=list)

    @property
    def mu(self) -> np.ndarray:
        return np.array([s.mu for s in self.samples])

    @property
    def nu(self) -> np.ndarray:
        return np.array([s.nu for s in self.samples])

    @property
    def a(self) -> np.ndarray:
        return np.array([s.a for s in self.samples])


def _polish_nf_root(y: float, nu: float, a: float) -> float:
    for _ in range(8):
        g = nu - y * y + a * y**3
        dg = -2.0 * y + 3.0 * a * y * y
        if dg == 0:
            break
        step = g / dg
        y -= step
        if abs(step) <= 2e-16 * max(abs(y), 1e-300):
            break
    return y


def nf_equilibria(nu: float, a: float) -> tuple[float, float, float, float]:
    """The two equilibria of ``nu - y^2 + a y^3`` continuing from ``-/+ sqrt(nu)``.

    Returns ``(y1, y2, g'(y1), g'(y2))`` with ``y1 < y2``.
    """
    if not nu > 0:
        raise MatchError(f"normal form has no equilibrium pair for nu={nu!r}")
    n = math.sqrt(nu)
    if a == 0:
        return -n, n, 2.0 * n, -2.0 * n
    roots = np.roots([a, -1.0, 0.0, nu])
    real = sorted(r.real for r in roots if abs(r.imag) <= 1e-9 * max(1.0, abs(r)))
    near = [r for r in real if abs(a * r) < 1.0 / 3.0]
    if len(near) != 2:
        raise MatchError(f"guard |a y| < 1/3 violated or roots coalesced (nu={nu:g}, a={a:g})")
    y1, y2 = (_polish_nf_root(r, nu, a) for r in near)
    if not y1 < 0 < y2:
        raise MatchError(f"roots do not straddle the fold (nu={nu:g}, a={a:g})")
    return y1, y2, -2.0 * y1 + 3.0 * a * y1 * y1, -2.0 * y2 + 3.0 * a * y2 * y2


def model_equilibria(model: ScalarModel1P, sn: SaddleNodePoint, mu: float):
    """Model equilibria r = 1, 2 at fold distance ``mu > 0`` (normalised frame).

    Returns the two :class:`StationaryPoint` objects ordered so that the
    first has the smaller normalised coordinate.
    """
    if not mu > 0:
        raise MatchError("model equilibria exist only for mu > 0 in the normalised frame")
    o = orientation(sn.bundle)
    pred = asymptotic_predictions(sn, math.sqrt(mu))
    pts = []
    for x_seed in pred.x:
        try:
            pts.append(find_stationary(model, pred.mu, x_seed))
        except ConvergenceError as exc:
            raise MatchError(f"model equilibrium not found at mu={mu:g}: {exc}") from exc
    xt = [o.s * (p.x - sn.x) for p in pts]
    if not xt[0] < 0 < xt[1] or abs(pts[0].x - pts[1].x) < 1e-14:
        raise MatchError(f"model equilibria at mu={mu:g} did not separate around the fold")
    if pts[0].multiplier <= 0 or pts[1].multiplier >= 0:
        raise MatchError(f"model equilibria at mu={mu:g} are not the expected repeller/attractor pair")
    return pts[0], pts[1]


def _nf_side(nu: float, a: float):
    """Normal-form multipliers and their derivatives in ``nu`` and ``a``."""
    y1, y2, g1, g2 = nf_equilibria(nu, a)
    out = []
    for y, gp in ((y1, g1), (y2, g2)):
        gpp = -2.0 + 6.0 * a * y
        dy_dnu = -1.0 / gp
        dy_da = -(y**3) / gp
        out.append((gp, gpp * dy_dnu, 3.0 * y * y + gpp * dy_da))
    return (y1, y2), out


def match_multipliers(
    model: ScalarModel1P,
    sn: SaddleNodePoint,
    mu: float,
    *,
    seed: tuple[float, float] | None = None,
    tol: float = MATCH_TOL,
    maxiter: int = MAX_MATCH_ITER,
) -> MatchedParams:
    """Solve ``f'(x_r) = g'(y_r)``, r = 1, 2, for ``(nu, a)`` at fold distance ``mu > 0``.

    ``seed`` is ``(nu, a)``; the default is ``(p0^2 mu, a0)``.
    """
    if not sn.generic:
        raise GenericityError("matching needs a generic fold")
    x1, x2 = model_equilibria(model, sn, mu)
    lam = np.array([x1.multiplier, x2.multiplier])
    m = math.sqrt(mu)
    if seed is None:
        a, p = sn.a0, math.sqrt(sn.p0sq)
    else:
        a, p = float(seed[1]), math.sqrt(seed[0]) / m

    def evaluate(a, p):
        nu = (p * m) ** 2
        ys, side = _nf_side(nu, a)
        G = lam - np.array([side[0][0], side[1][0]])
        # dG_r/da = -d g'_r/da ; dG_r/dp = -d g'_r/dnu * 2 p m^2
        dGa = -np.array([side[0][2], side[1][2]])
        dGp = -np.array([side[0][1], side[1][1]]) * 2.0 * p * m * m
        F = np.array([G[0] / m, (G[0] + G[1]) / mu])
        J = np.array([[dGa[0] / m, dGp[0] / m], [(dGa[0] + dGa[1]) / mu, (dGp[0] + dGp[1]) / mu]])
        return G, F, J, ys

    try:
        G, F, J, ys = evaluate(a, p)
    except MatchError as exc:
        raise MatchError(f"seed outside the normal form's two-equilibrium range at mu={mu:g}: {exc}") from exc
    it = 0
    for it in range(1, maxiter + 1):
        if np.max(np.abs(G)) < tol * 1e-3:
            it -= 1
            break
        try:
            step = -np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            raise MatchError(f"singular matching Jacobian at mu={mu:g}") from None
        lam_step = 1.0
        for _ in range(20):
            try:
                trial = evaluate(a + lam_step * step[0], p + lam_step * step[1])
            except MatchError:
                lam_step *= 0.5
                continue
            if np.linalg.norm(trial[1]) < np.linalg.norm(F) or lam_step < 1e-3:
                break
            lam_step *= 0.5
        else:
            raise MatchError(f"line search failed at mu={mu:g}")
        a, p = a + lam_step * step[0], p + lam_step * step[1]
        G, F, J, ys = trial
        if np.all(np.abs(lam_step * step) <= 1e-15 * np.maximum(1.0, np.abs([a, p]))):
            break
    if not np.all(np.abs(G) < tol):
        raise MatchError(f"multiplier matching did not converge at mu={mu:g} (|G|={np.max(np.abs(G)):.3g})")
    return MatchedParams(
        mu=float(mu), nu=float((p * m) ** 2), a=float(a),
        residual1=float(abs(G[0])), residual2=float(abs(G[1])), iterations=it,
        x=(x1.x, x2.x), y=(float(ys[0]), float(ys[1])), multipliers=(float(lam[0]), float(lam[1])),
    )


def default_windows(sn: SaddleNodePoint, mu: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """Matched intervals ``(U, V)`` for ``mu < 0``.

    ``V`` is symmetric with radius ``2 sqrt(p0^2 |mu|)`` in normal-form units;
    ``U`` is its preimage under the leading-order scaling ``y = (|f_xx| / 2) x``,
    centred on the fold state.
    """
    r_v = 2.0 * math.sqrt(sn.p0sq * abs(mu))
    r_u = r_v / (0.5 * abs(sn.bundle.f_xx))
    return (sn.x - r_u, sn.x + r_u), (-r_v, r_v)


def _transit(model, window, param):
    lo, hi = window
    f_lo = float(model.rhs(lo, param))
    if f_lo < 0:
        return transit_time(model, hi, lo, param)
    return transit_time(model, lo, hi, param)


def negative_mu_match(
    model: ScalarModel1P,
    sn: SaddleNodePoint,
    mu: float,
    U: tuple[float, float] | None = None,
    V: tuple[float, float] | None = None,
    *,
    a: float | None = None,
    time_tol: float = 1e-10,
) -> MatchedParams:
    """``nu < 0`` whose transit time through ``V`` equals the model's through ``U``.

    ``mu < 0`` is the fold distance in the normalised frame (no equilibria).
    """
    if not mu < 0:
        raise MatchError("negative_mu_match needs mu < 0")
    o = orientation(sn.bundle)
    dU, dV = default_windows(sn, mu)
    U = dU if U is None else U
    V = dV if V is None else V
    a = sn.a0 if a is None else a
    param = o.param(mu, sn)
    grid = np.linspace(U[0], U[1], 513)
    vals = np.asarray(model.rhs(grid, param), dtype=float)
    if np.any(np.sign(vals) != np.sign(vals[0])) or np.any(vals == 0):
        raise MatchError(f"equilibrium inside U={U} at mu={mu:g}")
    try:
        T_u = _transit(model, U, param)
    except UnreachableError as exc:
        raise MatchError(str(exc)) from exc
    nf = builtin("normalform", a=a)

    def mismatch(nu):
        return _transit(nf, V, nu) - T_u

    nu0 = sn.p0sq * mu
    lo = nu0
    for _ in range(60):
        try:
            if mismatch(lo) < 0:
                break
        except UnreachableError:
            pass
        lo *= 2.0
    else:
        raise MatchError("could not bracket nu from below")
    hi = nu0
    for _ in range(200):
        try:
            if mismatch(hi) > 0:
                break
        except UnreachableError:
            raise MatchError("normal form acquired equilibria inside V while bracketing") from None
        hi *= 0.5
    else:
        raise MatchError("could not bracket nu from above")
    nu = brentq(mismatch, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
    dt = abs(mismatch(nu))
    if dt > max(time_tol, 1e-13 * T_u):
        raise MatchError(f"transit times differ by {dt:.3g} at mu={mu:g}")
    return MatchedParams(mu=float(mu), nu=float(nu), a=float(a), residual1=dt, residual2=0.0, iterations=0)


def normal_form_curve(
    model: ScalarModel1P,
    sn: SaddleNodePoint,
    mus,
    *,
    jobs: int = 1,
    skip_failures: bool = False,
) -> NormalFormCurve:
    """Matched parameters over a grid of fold distances (either sign)."""
    mus = sorted(float(m) for m in mus if m != 0)

    def one(mu):
        if mu > 0:
            return match_multipliers(model, sn, mu)
        return negative_mu_match(model, sn, mu)

    results: list = []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(one, mu) for mu in mus]
            for mu, fut in zip(mus, futures):
                try:
                    results.append(fut.result())
                except (MatchError, ConvergenceError) as exc:
                    if not skip_failures:
                        raise
                    results.append((mu, str(exc)))
    else:
        for mu in mus:
            try:
                results.append(one(mu))
            except (MatchError, ConvergenceError) as exc:
                if not skip_failures:
                    raise
                results.append((mu, str(exc)))
    samples = [r for r in results if isinstance(r, MatchedParams)]
    failures = [r for r in results if not isinstance(r, MatchedParams)]
    return NormalFormCurve(samples=samples, p0sq=sn.p0sq, a0=sn.a0, failures=failures)


def validity_radius(model: ScalarModel1P, sn: SaddleNodePoint, mu_max: float = 1.0, min_mu: float = 1e-12) -> float:
    """Largest dyadic ``mu = mu_max 2^-k`` at which matching converges."""
    mu = mu_max
    while mu >= min_mu:
        try:
            match_multipliers(model, sn, mu)
            return mu
        except (MatchError, ConvergenceError, GenericityError):
            mu *= 0.5
    raise MatchError("no dyadic mu converged")

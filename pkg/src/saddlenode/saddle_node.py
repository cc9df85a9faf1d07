"""Stationary points, saddle-node points and their bifurcation numbers.

For ``x' = f(x, mu)`` with a fold at ``(x*, mu*)`` the two numbers that
characterise the bifurcation are

* the speed coefficient ``p0^2 = |f_mu f_xx| / 2``, and
* Takens' coefficient ``a0 = 2 f_xxx / (3 f_xx^2)``,

both evaluated at the fold.  Neither needs the model to be brought into the
orientation ``f_mu > 0, f_xx < 0`` first: ``p0^2`` uses absolute values and
``a0`` is unchanged by ``x -> -x`` (``f_xx`` flips sign, ``f_xxx`` does not).

Orientation folding
-------------------
Where a formula does assume that orientation, local coordinates
``xt = s (x - x*)`` and ``mut = sigma (mu - mu*)`` are used with
``s = -sign(f_xx)`` and ``sigma = s sign(f_mu)``:

=========  ==========  =====  =======  ==================================
``f_mu``   ``f_xx``    ``s``  ``sigma``  two equilibria exist for
=========  ==========  =====  =======  ==================================
``> 0``    ``< 0``     +1     +1       ``mu > mu*``
``< 0``    ``< 0``     +1     -1       ``mu < mu*``
``> 0``    ``> 0``     -1     -1       ``mu < mu*``
``< 0``    ``> 0``     -1     +1       ``mu > mu*``
=========  ==========  =====  =======  ==================================

Multipliers ``f'`` at equilibria are the same in both frames.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .jets import Jet2, jet_partial
from .models import DerivativeBundle, ScalarModel1P, derivative_bundle

__all__ = [
    "GENERICITY_TOL",
    "ConvergenceError",
    "GenericityError",
    "StationaryPoint",
    "SaddleNodePoint",
    "find_stationary",
    "find_all_stationary",
    "locate_saddle_node",
    "takens_numbers",
    "Orientation",
    "orientation",
    "AsymptoticPrediction",
    "asymptotic_predictions",
]

log = logging.getLogger(__name__)

GENERICITY_TOL = 1e-8
STATIONARY_TOL = 1e-12
SADDLE_NODE_TOL = 1e-10
MAX_NEWTON = 50
MAX_HALVINGS = 20


class ConvergenceError(RuntimeError):
    pass


class GenericityError(ValueError):
    pass


@dataclass(frozen=True)
class StationaryPoint:
    x: float
    mu: float
    multiplier: float
    residual: float

    @property
    def stable(self) -> bool:
        return self.multiplier < 0


@dataclass(frozen=True)
class SaddleNodePoint:
    x: float
    mu: float
    bundle: DerivativeBundle
    p0sq: float
    a0: float
    sign_fmu: int
    sign_fxx: int
    generic: bool
    cusp_suspect: bool
    iterations: int = 0

    @property
    def residuals(self) -> tuple[float, float]:
        return abs(self.bundle.f), abs(self.bundle.f_x)

    @property
    def orientation(self) -> "Orientation":
        return orientation(self.bundle)

    def as_dict(self) -> dict:
        return {
            "x": self.x,
            "mu": self.mu,
            "p0sq": self.p0sq,
            "a0": self.a0,
            "sign_fmu": self.sign_fmu,
            "sign_fxx": self.sign_fxx,
            "generic": self.generic,
            "cusp_suspect": self.cusp_suspect,
            "bundle": self.bundle.as_dict(),
        }


def _sign(v: float) -> int:
    return 1 if v > 0 else (-1 if v < 0 else 0)


def _f_and_fx(model: ScalarModel1P, x: float, mu: float) -> tuple[float, float]:
    J = model.jet(x, mu, 1)
    return float(J[0, 0]), float(J[1, 0])


def find_stationary(
    model: ScalarModel1P,
    mu: float,
    x_guess: float,
    *,
    bracket: tuple[float, float] | None = None,
    tol: float = STATIONARY_TOL,
    maxiter: int = MAX_NEWTON,
) -> StationaryPoint:
    """Refine a root of ``f(., mu)`` by damped Newton, falling back to ``bracket``."""
    x = float(x_guess)
    f, fx = _f_and_fx(model, x, mu)
    converged = abs(f) < tol
    polish = 2  # extra steps once |f| < tol
    for _ in range(maxiter):
        if converged:
            if polish == 0 or f == 0:
                break
            polish -= 1
        if fx == 0 or not math.isfinite(fx):
            break
        step = -f / fx
        for _ in range(MAX_HALVINGS):
            x_new = x + step
            f_new, fx_new = _f_and_fx(model, x_new, mu)
            if math.isfinite(f_new) and (abs(f_new) < abs(f) or (converged and abs(f_new) <= abs(f))):
                break
            step *= 0.5
        else:
            break
        done = abs(x_new - x) <= 4 * np.finfo(float).eps * max(1.0, abs(x))
        x, f, fx = x_new, f_new, fx_new
        converged = abs(f) < tol or done
    if not converged or abs(f) >= tol:
        if bracket is None:
            raise ConvergenceError(f"Newton did not converge from x={x_guess} at mu={mu} (|f|={abs(f):.3g})")
        lo, hi = bracket
        g = lambda s: float(model.rhs(s, mu))  # noqa: E731
        if g(lo) * g(hi) > 0:
            raise ConvergenceError(f"bracket [{lo}, {hi}] does not contain a sign change")
        x = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        f, fx = _f_and_fx(model, x, mu)
    return StationaryPoint(x=x, mu=float(mu), multiplier=fx, residual=abs(f))


def find_all_stationary(
    model: ScalarModel1P, mu: float, lo: float, hi: float, samples: int = 2001
) -> list[StationaryPoint]:
    """All sign-change roots of ``f(., mu)`` on ``[lo, hi]``, in increasing order."""
    grid = np.linspace(lo, hi, samples)
    vals = np.asarray(model.rhs(grid, mu), dtype=float)
    out = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0):
        a, b = grid[i], grid[i + 1]
        if vals[i] == 0 and i > 0 and vals[i - 1] * vals[i + 1] < 0:
            continue
        if vals[i] == 0:
            root = a
        elif vals[i + 1] == 0:
            continue
        else:
            root = 0.5 * (a + b)
        pt = find_stationary(model, mu, root, bracket=(a, b) if vals[i] != 0 else None)
        if not out or abs(pt.x - out[-1].x) > 1e-10:
            out.append(pt)
    return out


def takens_numbers(bundle: DerivativeBundle, tol: float = GENERICITY_TOL) -> tuple[float, float]:
    """``(p0^2, a0)`` from the derivatives at a fold."""
    if abs(bundle.f_mu) <= tol or abs(bundle.f_xx) <= tol:
        raise GenericityError(
            f"non-generic fold: |f_mu|={abs(bundle.f_mu):.3g}, |f_xx|={abs(bundle.f_xx):.3g} (tol {tol:g})"
        )
    p0sq = 0.5 * abs(bundle.f_mu * bundle.f_xx)
    a0 = 2.0 * bundle.f_xxx / (3.0 * bundle.f_xx**2)
    return p0sq, a0


def locate_saddle_node(
    model: ScalarModel1P,
    x_guess: float,
    mu_guess: float,
    *,
    tol: float = SADDLE_NODE_TOL,
    genericity_tol: float = GENERICITY_TOL,
    maxiter: int = MAX_NEWTON,
) -> SaddleNodePoint:
    """Solve ``f = f_x = 0`` for ``(x, mu)`` by damped 2x2 Newton."""
    z = np.array([x_guess, mu_guess], dtype=float)

    def system(z):
        J = model.jet(z[0], z[1], 2)
        r = np.array([J[0, 0], J[1, 0]])
        D = np.array([[J[1, 0], J[0, 1]], [2.0 * J[2, 0], J[1, 1]]])
        return r, D

    r, D = system(z)
    it = 0
    for it in range(1, maxiter + 1):
        if np.max(np.abs(r)) < tol * 1e-2:
            break
        try:
            step = -np.linalg.solve(D, r)
        except np.linalg.LinAlgError:
            raise ConvergenceError(f"singular Jacobian at (x, mu) = ({z[0]}, {z[1]})") from None
        norm0 = np.linalg.norm(r)
        for _ in range(MAX_HALVINGS):
            z_new = z + step
            r_new, D_new = system(z_new)
            if np.all(np.isfinite(r_new)) and np.linalg.norm(r_new) < norm0:
                break
            step *= 0.5
        else:
            break
        tiny = np.all(np.abs(z_new - z) <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(z)))
        z, r, D = z_new, r_new, D_new
        if tiny:
            break
    if not np.all(np.abs(r) < tol):
        raise ConvergenceError(
            f"saddle-node Newton failed: residuals |f|={abs(r[0]):.3g}, |f_x|={abs(r[1]):.3g}"
        )
    bundle = derivative_bundle(model, z[0], z[1])
    generic = abs(bundle.f_mu) > genericity_tol and abs(bundle.f_xx) > genericity_tol
    if generic:
        p0sq, a0 = takens_numbers(bundle, genericity_tol)
    else:
        log.warning("cusp-suspect point at (%g, %g): f_mu=%g f_xx=%g", z[0], z[1], bundle.f_mu, bundle.f_xx)
        p0sq, a0 = math.nan, math.nan
    return SaddleNodePoint(
        x=float(z[0]), mu=float(z[1]), bundle=bundle, p0sq=p0sq, a0=a0,
        sign_fmu=_sign(bundle.f_mu), sign_fxx=_sign(bundle.f_xx),
        generic=generic, cusp_suspect=abs(bundle.f_xx) <= genericity_tol, iterations=it,
    )


@dataclass(frozen=True)
class Orientation:
    """Sign bookkeeping between model coordinates and the normalised frame."""

    s: int
    sigma: int

    def to_local(self, x, mu, sn: SaddleNodePoint):
        return self.s * (x - sn.x), self.sigma * (mu - sn.mu)

    def state(self, xt, sn: SaddleNodePoint):
        return sn.x + self.s * xt

    def param(self, mut, sn: SaddleNodePoint):
        return sn.mu + self.sigma * mut


def orientation(bundle: DerivativeBundle) -> Orientation:
    if bundle.f_xx == 0 or bundle.f_mu == 0:
        raise GenericityError("orientation undefined at a non-generic point")
    s = -_sign(bundle.f_xx)
    return Orientation(s=s, sigma=s * _sign(bundle.f_mu))


def _local_derivatives(bundle: DerivativeBundle, o: Orientation):
    s, sg = o.s, o.sigma
    return dict(
        f_mu=s * sg * bundle.f_mu,
        f_xx=s * bundle.f_xx,
        f_xxx=bundle.f_xxx,
        f_xmu=sg * bundle.f_xmu,
    )


@dataclass(frozen=True)
class AsymptoticPrediction:
    m: float
    mu: float
    x: tuple[float, float]
    multipliers: tuple[float, float]
    mu_of_x: Callable[[float], float]


def asymptotic_predictions(sn: SaddleNodePoint, m: float) -> AsymptoticPrediction:
    """Leading-order equilibria and multipliers at distance ``m^2`` past the fold.

    ``x[0]``, ``x[1]`` correspond to r = 1, 2 in the normalised frame
    (``xt_1 < 0 < xt_2``), mapped back to model coordinates.
    """
    if not sn.generic:
        raise GenericityError("asymptotic predictions need a generic fold")
    o = orientation(sn.bundle)
    d = _local_derivatives(sn.bundle, o)
    fmu, fxx, fxxx, fxmu = d["f_mu"], d["f_xx"], d["f_xxx"], d["f_xmu"]
    lead = math.sqrt(-2.0 * fmu / fxx)
    second = (fmu * fxxx - 3.0 * fxmu * fxx) / (3.0 * fxx**2)
    mlead = math.sqrt(-2.0 * fmu * fxx)
    msecond = -(2.0 / 3.0) * fmu * fxxx / fxx
    xs, mults = [], []
    for r in (1, 2):
        xt = (-1) ** r * lead * m + second * m * m
        xs.append(o.state(xt, sn))
        mults.append((-1) ** (r + 1) * mlead * m + msecond * m * m)
    curv = -fxx / (2.0 * fmu)

    def mu_of_x(x):
        return o.param(curv * (o.s * (x - sn.x)) ** 2, sn)

    return AsymptoticPrediction(
        m=m, mu=o.param(m * m, sn), x=(xs[0], xs[1]), multipliers=(mults[0], mults[1]), mu_of_x=mu_of_x
    )

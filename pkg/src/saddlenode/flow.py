"""Numerical flows of scalar and planar models.

Integration uses the embedded Dormand-Prince 8(5,3) pair from scipy with
event location for boundaries, blow-up and time-of-flight targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp

from .jets import Jet1
from .models import PlanarModel2P, ScalarModel1P

__all__ = [
    "FlowResult",
    "FlowError",
    "UnreachableError",
    "integrate",
    "time_of_flight",
    "transit_time",
    "DEFAULT_ATOL",
    "DEFAULT_RTOL",
]

DEFAULT_ATOL = 1e-10
DEFAULT_RTOL = 1e-10
BLOWUP_BOUND = 1e8
# time_of_flight refuses segments where |f| falls below this
STALL_TOL = 1e-12
MAX_TIME = 1e7


class FlowError(RuntimeError):
    pass


class UnreachableError(FlowError):
    pass


@dataclass(frozen=True)
class FlowResult:
    state: np.ndarray | float
    time: float
    steps: int
    status: str  # 'ok' | 'blowup' | 'boundary-hit'
    derivative: np.ndarray | float | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _split_params(model, params):
    if isinstance(model, ScalarModel1P):
        return (float(np.ravel(params)[0]),)
    if np.ndim(params) == 0:
        return float(params), model.secondary_default()
    p = np.ravel(params)
    return float(p[0]), (float(p[1]) if p.size > 1 else model.secondary_default())


def _vector_field(model, params, variational: bool):
    if isinstance(model, ScalarModel1P):
        mu = params[0]
        if not variational:
            return lambda t, u: np.array([model.rhs(u[0], mu)])

        def rhs(t, u):
            j = model.rhs(Jet1.variable(u[0], 1), mu)
            return np.array([j[0], j[1] * u[1]])

        return rhs

    if isinstance(model, PlanarModel2P):
        mu, s = params
        if not variational:
            return lambda t, u: np.array(model.rhs(u[0], u[1], mu, s), dtype=float)

        def rhs(t, u):
            F, G = model.rhs(u[0], u[1], mu, s)
            J = model.jacobian(u[0], u[1], mu, s)
            V = u[2:].reshape(2, 2)
            return np.concatenate([[F, G], (J @ V).ravel()])

        return rhs
    raise TypeError(f"not a model: {model!r}")


def integrate(
    model,
    state,
    params,
    t: float,
    abs_tol: float = DEFAULT_ATOL,
    rel_tol: float = DEFAULT_RTOL,
    *,
    bound: float = BLOWUP_BOUND,
    boundary: tuple[float, float] | None = None,
    variational: bool = False,
) -> FlowResult:
    """Advance ``state`` by time ``t`` (negative ``t`` integrates backward).

    ``boundary`` (scalar models only) is an interval ``(lo, hi)``; reaching
    either end stops the integration with status ``'boundary-hit'``.  With
    ``variational=True`` the derivative of the flow with respect to the
    initial state is returned in ``FlowResult.derivative``.
    """
    if abs_tol <= 0 or rel_tol <= 0:
        raise ValueError("tolerances must be positive")
    scalar = isinstance(model, ScalarModel1P)
    x0 = np.atleast_1d(np.asarray(state, dtype=float))
    if not np.all(np.isfinite(x0)) or not np.isfinite(t):
        raise ValueError("state and time must be finite")
    n = x0.size
    if n != model.dimension:
        raise ValueError(f"state has {n} components, model has {model.dimension}")
    pars = _split_params(model, params)

    def pack(u):
        return float(u[0]) if scalar else np.array(u[:n])

    def pack_deriv(u):
        if not variational:
            return None
        return float(u[1]) if scalar else u[n:].reshape(n, n).copy()

    y0 = np.concatenate([x0, np.eye(n).ravel()]) if variational else x0
    if t == 0:
        return FlowResult(pack(y0), 0.0, 0, "ok", pack_deriv(y0))

    def blowup(_t, u):
        return bound - np.max(np.abs(u[:n]))

    blowup.terminal = True
    events = [blowup]
    if boundary is not None:
        if not scalar:
            raise ValueError("boundary intervals are only supported for scalar models")
        lo, hi = boundary
        lo_ev = lambda _t, u: u[0] - lo  # noqa: E731
        hi_ev = lambda _t, u: u[0] - hi  # noqa: E731
        lo_ev.terminal = hi_ev.terminal = True
        events += [lo_ev, hi_ev]

    sol = solve_ivp(
        _vector_field(model, pars, variational), (0.0, float(t)), y0,
        method="DOP853", rtol=rel_tol, atol=abs_tol, events=events,
    )
    if sol.status == -1:
        raise FlowError(sol.message)
    status = "ok"
    if sol.status == 1:
        hit = [i for i, te in enumerate(sol.t_events) if te.size]
        status = "blowup" if hit and hit[0] == 0 else "boundary-hit"
    u = sol.y[:, -1]
    if status == "boundary-hit":
        u = sol.y_events[hit[0]][0]
        u = u.copy()
        u[0] = lo if hit[0] == 1 else hi
    return FlowResult(pack(u), float(sol.t[-1]), int(sol.t.size - 1), status, pack_deriv(u))


def time_of_flight(
    model: ScalarModel1P,
    start: float,
    target: float,
    params,
    abs_tol: float = DEFAULT_ATOL,
    rel_tol: float = DEFAULT_RTOL,
    *,
    samples: int = 257,
) -> float:
    """Time ``t`` with ``phi_t(start) = target`` for a scalar model.

    The segment between the two points must be free of equilibria and the
    flow at ``start`` must point towards ``target``.
    """
    if not isinstance(model, ScalarModel1P):
        raise TypeError("time_of_flight needs a scalar model")
    start = float(start)
    target = float(target)
    if start == target:
        return 0.0
    (mu,) = _split_params(model, params)
    grid = np.linspace(start, target, samples)
    fvals = np.asarray(model.rhs(grid, mu), dtype=float)
    direction = np.sign(target - start)
    if np.any(np.abs(fvals) < STALL_TOL) or np.any(np.sign(fvals) != direction):
        raise UnreachableError(
            f"{target!r} is not reachable from {start!r}: equilibrium in between or flow points away"
        )

    def hit(_t, u):
        return u[0] - target

    hit.terminal = True
    # |dt/dx| = 1/|f| bounds the crossing time by a crude quadrature
    t_est = float(np.trapezoid(1.0 / np.abs(fvals), grid) * direction)
    horizon = min(max(4.0 * abs(t_est), 1.0), MAX_TIME)
    sol = solve_ivp(
        lambda _t, u: np.array([model.rhs(u[0], mu)]), (0.0, horizon), [start],
        method="DOP853", rtol=rel_tol, atol=abs_tol, events=hit,
    )
    if sol.status != 1 or not sol.t_events[0].size:
        raise UnreachableError(f"orbit from {start!r} did not reach {target!r} within t={horizon:g}")
    return float(sol.t_events[0][0])


def transit_time(model: ScalarModel1P, start: float, target: float, params) -> float:
    """Crossing time from ``start`` to ``target`` as the quadrature of ``dx / f``.

    Same preconditions as :func:`time_of_flight`; smooth in the parameters,
    which makes it the better choice inside root finders.
    """
    (mu,) = _split_params(model, params)
    start, target = float(start), float(target)
    if start == target:
        return 0.0
    grid = np.linspace(start, target, 257)
    fvals = np.asarray(model.rhs(grid, mu), dtype=float)
    if np.any(np.abs(fvals) < STALL_TOL) or np.any(np.sign(fvals) != np.sign(target - start)):
        raise UnreachableError(f"{target!r} is not reachable from {start!r}")
    val, err = quad(lambda x: 1.0 / float(model.rhs(x, mu)), start, target, epsabs=1e-14, epsrel=1e-13, limit=200)
    return float(val)

"""Centre-manifold reduction of a planar system at a fold.

At a point where the Jacobian has eigenvalues ``0`` and ``lambda != 0`` the
state is written in the eigenbasis, ``(x, y) = z* + V (u, w)``, so that

    u' = b0 mu + b1 u^2 + b2 u w + b3 w^2 + b4 mu u + b5 mu w + b6 mu^2 + b7 u^3 + ...
    w' = lambda w + c1 u^2 + c2 u w + c3 w^2 + c4 mu u + c5 mu w + c6 mu^2 + c7 u^3 + ...

with ``mu`` the offset of the primary parameter from the fold.  The extended
centre manifold is ``w = d1 u^2 + O(mu u, mu^2, u^3)`` with ``d1 = -c1/lambda``
and the leading reduced equation is

    u' = b0 mu + b1 u^2 + b4 mu u + b6 mu^2 + (b7 - b2 c1 / lambda) u^3.

Hence ``p0^2 = |b0 b1|`` and ``a0 = (b7 - b2 c1/lambda) / b1^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import exprlang
from .models import PlanarModel2P, ScalarModel1P
from .saddle_node import GENERICITY_TOL, ConvergenceError, GenericityError

__all__ = [
    "FoldError",
    "JordanizedSystem",
    "CmReduction",
    "fold_residual",
    "polish_fold",
    "jordanize",
    "cm_reduce",
    "reduce_at",
]

ZERO_EIG_RTOL = 1e-8
MIN_LAMBDA = 1e-8


class FoldError(ValueError):
    """The point is not a simple planar fold."""


def _derivative_tables(model: PlanarModel2P, x, y, mu, s):
    """Values, first derivatives and the second derivatives needed for ``det J``.

    Returns ``(FG, D1, D2)``: ``FG[i]`` the field components, ``D1[i, k]`` the
    derivative of component ``i`` in variable ``k`` of ``(x, y, mu, s)``, and
    ``D2[i, a, k]`` the derivative of ``D1[i, a]`` (``a`` in ``x, y``) in ``k``.
    """
    names = ("x", "y", "mu", "s")
    FG = np.zeros(2)
    D1 = np.zeros((2, 4))
    D2 = np.zeros((2, 2, 4))
    jets = {}
    for a, b in (("x", "y"), ("x", "mu"), ("x", "s"), ("y", "mu"), ("y", "s")):
        jets[a, b] = model.pair_jets(x, y, mu, s, (a, b), order=2)
    for i in range(2):
        J = jets["x", "y"][i]
        FG[i] = J[0, 0]
        D1[i, 0], D1[i, 1] = J[1, 0], J[0, 1]
        D1[i, 2] = jets["x", "mu"][i][0, 1]
        D1[i, 3] = jets["x", "s"][i][0, 1]
        D2[i, 0, 0] = 2.0 * J[2, 0]
        D2[i, 0, 1] = D2[i, 1, 0] = J[1, 1]
        D2[i, 1, 1] = 2.0 * J[0, 2]
        for a in range(2):
            for k, v in ((2, "mu"), (3, "s")):
                D2[i, a, k] = jets[names[a], v][i][1, 1]
    return FG, D1, D2


def fold_residual(model: PlanarModel2P, x, y, mu, s=None):
    """``H = (F, G, det J)`` and its derivatives in ``(x, y, mu, s)`` (a 3x4 matrix)."""
    if s is None:
        s = model.secondary_default()
    FG, D1, D2 = _derivative_tables(model, x, y, mu, s)
    J = D1[:, :2]
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    ddet = (D2[0, 0] * J[1, 1] + J[0, 0] * D2[1, 1] - D2[0, 1] * J[1, 0] - J[0, 1] * D2[1, 0])
    H = np.array([FG[0], FG[1], det])
    DH = np.vstack([D1, ddet])
    return H, DH


def polish_fold(model: PlanarModel2P, x, y, mu, s=None, *, scale: float = 1.0, maxiter: int = 30):
    """Newton on ``(F, G, det J) = 0`` in ``(x, y, mu)`` with ``s`` fixed.

    Accepts ``|F|, |G| < 1e-10 scale`` and ``|det J| < 1e-9 scale``; raise
    ``scale`` for stiff systems whose rounding floor is higher.
    """
    if s is None:
        s = model.secondary_default()
    z = np.array([x, y, mu], dtype=float)
    for it in range(maxiter):
        H, DH = fold_residual(model, *z, s)
        if not np.all(np.isfinite(H)):
            raise ConvergenceError("fold residual is not finite")
        try:
            step = np.linalg.solve(DH[:, :3], -H)
        except np.linalg.LinAlgError:
            raise ConvergenceError("singular fold Jacobian") from None
        z = z + step
        if np.max(np.abs(step)) <= 1e-15 * max(1.0, np.max(np.abs(z))):
            break
    H, _ = fold_residual(model, *z, s)
    if np.max(np.abs(H[:2])) > 1e-10 * scale or abs(H[2]) > 1e-9 * scale:
        raise ConvergenceError(f"fold polish did not converge (|H| = {np.max(np.abs(H)):.3g})")
    return float(z[0]), float(z[1]), float(z[2])


def _normalise(v: np.ndarray) -> np.ndarray:
    v = np.real_if_close(v).astype(float)
    v = v / np.linalg.norm(v)
    nz = v[np.abs(v) > 1e-14]
    return -v if nz.size and nz[0] < 0 else v


@dataclass(frozen=True)
class JordanizedSystem:
    x: float
    y: float
    mu: float
    s: float
    lam: float
    basis: np.ndarray  # columns: null vector, lambda eigenvector
    inverse: np.ndarray
    b: dict[str, float]  # b0 .. b7
    c: dict[str, float]  # c1 .. c7
    linear: np.ndarray  # Jacobian in the eigenbasis

    def as_dict(self) -> dict:
        return {
            "x": self.x, "y": self.y, "mu": self.mu, "s": self.s, "lambda": self.lam,
            "basis": self.basis.tolist(), "b": dict(self.b), "c": dict(self.c),
        }


def jordanize(model: PlanarModel2P, x, y, mu, s=None) -> JordanizedSystem:
    """Eigenbasis at a fold point and the quadratic/cubic coefficients there."""
    if s is None:
        s = model.secondary_default()
    J = model.jacobian(x, y, mu, s)
    vals, vecs = np.linalg.eig(J)
    if np.any(np.abs(np.imag(vals)) > 0):
        raise FoldError("complex eigenvalues; not a fold")
    vals = np.real(vals)
    k0 = int(np.argmin(np.abs(vals)))
    lam = float(vals[1 - k0])
    if abs(lam) < MIN_LAMBDA:
        raise FoldError("both eigenvalues vanish; the fold is degenerate")
    if abs(vals[k0]) > ZERO_EIG_RTOL * abs(lam):
        raise FoldError(f"no zero eigenvalue (eigenvalues {vals[0]:.3g}, {vals[1]:.3g})")
    V = np.column_stack([_normalise(vecs[:, k0]), _normalise(vecs[:, 1 - k0])])
    if abs(np.linalg.det(V)) < 1e-8:
        raise FoldError("eigenvectors are nearly parallel")
    Vi = np.linalg.inv(V)

    def transformed(pair, order):
        F, G = model.pair_jets(x, y, mu, s, pair, order=order, basis=V)
        return F * Vi[0, 0] + G * Vi[0, 1], F * Vi[1, 0] + G * Vi[1, 1]

    Pu, Qu = transformed(("u", "mu"), 3)
    Puw, Quw = transformed(("u", "w"), 2)
    Pwm, Qwm = transformed(("w", "mu"), 2)
    b = {
        "b0": Pu[0, 1], "b1": Pu[2, 0], "b2": Puw[1, 1], "b3": Puw[0, 2],
        "b4": Pu[1, 1], "b5": Pwm[1, 1], "b6": Pu[0, 2], "b7": Pu[3, 0],
    }
    c = {
        "c1": Qu[2, 0], "c2": Quw[1, 1], "c3": Quw[0, 2], "c4": Qu[1, 1],
        "c5": Qwm[1, 1], "c6": Qu[0, 2], "c7": Qu[3, 0],
    }
    lin = np.array([[Puw[1, 0], Puw[0, 1]], [Quw[1, 0], Quw[0, 1]]])
    return JordanizedSystem(
        x=float(x), y=float(y), mu=float(mu), s=float(s), lam=lam, basis=V, inverse=Vi,
        b={k: float(v) for k, v in b.items()}, c={k: float(v) for k, v in c.items()}, linear=lin,
    )


@dataclass(frozen=True)
class CmReduction:
    system: JordanizedSystem
    d1: float
    cubic: float
    p0sq: float
    a0: float
    model: ScalarModel1P

    @property
    def lam(self) -> float:
        return self.system.lam

    def as_dict(self) -> dict:
        b = self.system.b
        return {
            **self.system.as_dict(),
            "d1": self.d1,
            "reduced": {"mu": b["b0"], "u^2": b["b1"], "mu*u": b["b4"], "mu^2": b["b6"], "u^3": self.cubic},
            "p0sq": self.p0sq,
            "a0": self.a0,
        }


def _reduced_model(b0, b1, b4, b6, cubic) -> ScalarModel1P:
    expr = exprlang.parse("b0*mu + b1*u^2 + b4*mu*u + b6*mu^2 + k3*u^3", {"u", "mu", "b0", "b1", "b4", "b6", "k3"})
    return ScalarModel1P(
        "centre-manifold", "u", "mu", {"b0": b0, "b1": b1, "b4": b4, "b6": b6, "k3": cubic}, expr,
        hints={"x": 0.0, "mu": 0.0},
    )


def cm_reduce(J: JordanizedSystem, tol: float = GENERICITY_TOL) -> CmReduction:
    b, c, lam = J.b, J.c, J.lam
    if abs(b["b0"]) < tol or abs(b["b1"]) < tol:
        raise GenericityError(
            f"reduced fold is not generic (b0={b['b0']:.3g}, b1={b['b1']:.3g}); cusp suspected"
        )
    d1 = -c["c1"] / lam
    cubic = b["b7"] - b["b2"] * c["c1"] / lam
    return CmReduction(
        system=J, d1=d1, cubic=cubic,
        p0sq=abs(b["b0"] * b["b1"]), a0=cubic / b["b1"] ** 2,
        model=_reduced_model(b["b0"], b["b1"], b["b4"], b["b6"], cubic),
    )


def reduce_at(model: PlanarModel2P, x, y, mu, s=None, *, polish: bool = True) -> CmReduction:
    """Polish the fold (optional), jordanize and reduce."""
    if polish:
        x, y, mu = polish_fold(model, x, y, mu, s)
    return cm_reduce(jordanize(model, x, y, mu, s))

"""Formal reduction of a fold jet to Takens' form ``y' = -y^2 + a y^3``.

Works on a finite truncation ``x' = c2 x^2 + c3 x^3 + ... + cK x^K``:

1. ``y = alpha x`` with ``alpha = -c2`` makes the quadratic coefficient -1 and
   the cubic ``a = c3 / c2^2``.
2. For ``k = 4 .. K`` the substitution ``z = y + beta y^(k-1)`` with
   ``beta = b / (k - 3)`` removes the ``z^k`` coefficient ``b`` while leaving
   every lower order untouched.

A near-identity change ``z = y + beta y^2`` cannot remove the cubic term; see
:func:`near_identity`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .jets import Jet1, jet_compose

__all__ = [
    "PolySeries",
    "ReductionLog",
    "NotAFoldError",
    "scale_quadratic",
    "reduce_to_takens",
    "near_identity",
    "replay",
    "MAX_ORDER",
    "SNAP_TOL",
]

MAX_ORDER = 16
SNAP_TOL = 1e-10


class NotAFoldError(ValueError):
    pass


@dataclass(frozen=True)
class PolySeries:
    """Coefficients ``c[0..K]`` of ``sum c_i x^i`` with ``c0 = c1 = 0``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.dtype != object:
            c = c.astype(float)
            if not np.all(np.isfinite(c)):
                raise ValueError("series coefficients must be finite")
        if c.ndim != 1 or c.size < 3:
            raise ValueError("need at least coefficients up to order 2")
        if c[0] != 0 or c[1] != 0:
            raise ValueError("constant and linear coefficients must vanish")
        object.__setattr__(self, "coeffs", c.copy())

    @classmethod
    def from_tail(cls, tail, order: int | None = None) -> "PolySeries":
        """Build from ``[c2, c3, ...]``, zero-padded to ``order``."""
        tail = list(tail)
        K = max(order if order is not None else 0, len(tail) + 1)
        c = np.zeros(K + 1, dtype=object if any(not isinstance(t, (int, float)) for t in tail) else float)
        c[2 : 2 + len(tail)] = tail
        return cls(c)

    @classmethod
    def from_derivatives(cls, f_xx: float, f_xxx: float, order: int = 3) -> "PolySeries":
        return cls.from_tail([0.5 * f_xx, f_xxx / 6.0], order)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @property
    def tail(self) -> np.ndarray:
        return self.coeffs[2:]

    def jet(self) -> Jet1:
        return Jet1(self.coeffs)


@dataclass(frozen=True)
class Transform:
    kind: str  # 'scale' or 'remove'
    power: int  # 1 for y = alpha x, k-1 for z = y + beta y^(k-1)
    value: float


@dataclass
class ReductionLog:
    transforms: list[Transform] = field(default_factory=list)
    a: float = float("nan")

    @property
    def alpha(self) -> float:
        return next(t.value for t in self.transforms if t.kind == "scale")

    @property
    def betas(self) -> dict[int, float]:
        """``{k: beta_k}`` for every removal step."""
        return {t.power + 1: t.value for t in self.transforms if t.kind == "remove"}


def _require_fold(s: PolySeries):
    if s.coeffs[2] == 0:
        raise NotAFoldError("quadratic coefficient is zero; not a saddle-node jet")


def scale_quadratic(s: PolySeries) -> tuple[PolySeries, float]:
    """Rescale ``y = alpha x`` so the quadratic coefficient becomes -1."""
    _require_fold(s)
    alpha = -s.coeffs[2]
    c = s.coeffs.copy()
    for i in range(2, c.size):
        c[i] = c[i] / alpha ** (i - 1)
    c[2] = -1 if c.dtype == object else -1.0
    return PolySeries(c), alpha


def _inverse_near_identity(beta, power: int, order: int, dtype) -> Jet1:
    """Series of ``y(z)`` solving ``z = y + beta y^power``."""
    z = np.zeros(order + 1, dtype=dtype)
    z[1] = 1
    zj = Jet1(z)
    y = zj
    # each sweep fixes at least one more order
    for _ in range(order):
        y_pow = y
        for _ in range(power - 1):
            y_pow = y_pow * y
        y = zj - y_pow * beta
    return y


def near_identity(s: PolySeries, beta, power: int) -> PolySeries:
    """The field ``x' = P(x)`` rewritten in ``z = x + beta x^power``.

    ``z' = (1 + power beta x^(power-1)) P(x)`` evaluated at ``x = x(z)``.
    Exact when the coefficients and ``beta`` are Fractions.
    """
    if power < 2:
        raise ValueError("near-identity power must be at least 2")
    K = s.order
    dtype = s.coeffs.dtype
    ident = np.zeros(K + 1, dtype=dtype)
    ident[1] = 1
    x = Jet1(ident)
    xp = x
    for _ in range(power - 2):
        xp = xp * x
    factor = xp * (beta * power) + 1  # 1 + power*beta*x^(power-1)
    transformed = factor * s.jet()
    inner = _inverse_near_identity(beta, power, K, dtype)
    return PolySeries(jet_compose(transformed, inner).coeffs)


def reduce_to_takens(s: PolySeries, order: int | None = None) -> tuple[PolySeries, ReductionLog]:
    """Scale, then remove orders 4..K one at a time."""
    _require_fold(s)
    if order is not None:
        s = PolySeries(np.concatenate([s.coeffs, np.zeros(max(0, order - s.order), dtype=s.coeffs.dtype)])[: order + 1])
    if s.order > MAX_ORDER:
        raise ValueError(f"truncation order {s.order} exceeds {MAX_ORDER}")
    logbook = ReductionLog()
    cur, alpha = scale_quadratic(s)
    logbook.transforms.append(Transform("scale", 1, alpha))
    exact = cur.coeffs.dtype == object
    for k in range(4, cur.order + 1):
        b = cur.coeffs[k]
        if b == 0:
            continue
        beta = b / (k - 3)
        nxt = near_identity(cur, beta, k - 1).coeffs
        # orders below k are untouched by this substitution
        nxt[:k] = cur.coeffs[:k]
        scale = max(1.0, float(abs(b)))
        if not exact:
            if abs(nxt[k]) > SNAP_TOL * scale:
                raise ArithmeticError(f"order-{k} removal left residual {nxt[k]:.3g}")
            nxt[k] = 0.0
        cur = PolySeries(nxt)
        logbook.transforms.append(Transform("remove", k - 1, beta))
    logbook.a = cur.coeffs[3]
    return cur, logbook


def replay(s: PolySeries, logbook: ReductionLog) -> PolySeries:
    """Re-apply the logged substitutions by plain composition, no snapping."""
    cur = s
    for t in logbook.transforms:
        if t.kind == "scale":
            c = cur.coeffs.copy()
            for i in range(2, c.size):
                c[i] = c[i] / t.value ** (i - 1)
            cur = PolySeries(c)
        else:
            cur = near_identity(cur, t.value, t.power)
    return cur

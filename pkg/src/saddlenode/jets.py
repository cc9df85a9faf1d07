"""Truncated Taylor series ("jets") in one and two variables.

A jet carries the scaled Taylor coefficients of a quantity about an
expansion point, truncated at a fixed total order ``K``:

* :class:`Jet1` stores ``coeffs[i] = f^(i)(x0) / i!``.
* :class:`Jet2` stores ``coeffs[i][j] = d^(i+j) f / dx^i dmu^j / (i! j!)``
  for ``i + j <= K`` (the entries with ``i + j > K`` are identically zero).

Arithmetic, elementary functions and composition act on the coefficients so
that every result equals the truncation of the exact operation.  Raw
partial derivatives are recovered with :func:`jet_partial`.
"""

from __future__ import annotations

import math
from functools import lru_cache
from numbers import Number

import numpy as np

__all__ = [
    "DEFAULT_ORDER",
    "SingularJetError",
    "Jet1",
    "Jet2",
    "jet_arith",
    "jet_partial",
    "jet_compose",
    "exp",
    "log",
    "sqrt",
    "sin",
    "cos",
    "tanh",
    "fabs",
    "power",
    "is_jet",
]

DEFAULT_ORDER = 4

# abs() is refused on jets whose value is closer than this to the kink.
ABS_KINK_TOL = 1e-12


class SingularJetError(ArithmeticError):
    """Raised when a jet operation hits a singular or non-smooth point."""


class _Jet:
    """Shared machinery; concrete classes store a flat coefficient vector."""

    __slots__ = ("_c", "order")

    def __init__(self, flat: np.ndarray, order: int):
        self._c = flat
        self.order = order

    # -- construction helpers -------------------------------------------------
    def _new(self, flat):
        return type(self)._from_flat(flat, self.order)

    def _lift(self, value):
        flat = np.zeros_like(self._c)
        flat[0] = value
        return self._new(flat)

    def _coerce(self, other):
        if isinstance(other, _Jet):
            if type(other) is not type(self):
                raise TypeError(f"cannot mix {type(self).__name__} and {type(other).__name__}")
            if other.order != self.order:
                raise ValueError(f"jet orders differ: {self.order} vs {other.order}")
            return other
        if isinstance(other, (Number, np.number)):
            return self._lift(other)
        return NotImplemented

    @property
    def value(self):
        """Constant term, i.e. the value at the expansion point."""
        return self._c[0]

    def is_constant(self) -> bool:
        return not np.any(self._c[1:] != 0)

    # -- ring operations -------------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._new(self._c + other._c)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._new(self._c - other._c)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._new(other._c - self._c)

    def __neg__(self):
        return self._new(-self._c)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, (Number, np.number)):
            return self._new(self._c * other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._new(self._product(self._c, other._c))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (Number, np.number)):
            if other == 0:
                raise SingularJetError("division by zero constant")
            return self._new(self._c / other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self.reciprocal()

    def __pow__(self, exponent):
        return power(self, exponent)

    def reciprocal(self):
        c0 = self._c[0]
        if c0 == 0:
            raise SingularJetError("division by a jet with zero constant term")
        K = self.order
        uni = [(-1) ** k / c0 ** (k + 1) for k in range(K + 1)]
        return _apply_series(self, uni)

    def _ipow(self, n: int):
        result = self._lift(1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def allclose(self, other, rtol=1e-12, atol=1e-14) -> bool:
        other = self._coerce(other)
        return bool(np.allclose(np.asarray(self._c, float), np.asarray(other._c, float), rtol=rtol, atol=atol))


class Jet1(_Jet):
    """Univariate truncated Taylor series."""

    __slots__ = ()

    def __init__(self, coeffs):
        arr = np.asarray(coeffs)
        if arr.dtype != object:
            arr = arr.astype(float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("Jet1 needs a non-empty 1-d coefficient array")
        if arr.dtype != object and not np.all(np.isfinite(arr)):
            raise ValueError("jet coefficients must be finite")
        super().__init__(arr.copy(), arr.size - 1)

    @classmethod
    def _from_flat(cls, flat, order):
        obj = cls.__new__(cls)
        _Jet.__init__(obj, flat, order)
        return obj

    @classmethod
    def variable(cls, x0, order: int = DEFAULT_ORDER) -> "Jet1":
        c = np.zeros(order + 1)
        c[0] = x0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order: int = DEFAULT_ORDER) -> "Jet1":
        c = np.zeros(order + 1)
        c[0] = value
        return cls(c)

    @property
    def coeffs(self) -> np.ndarray:
        return self._c.copy()

    def __getitem__(self, i):
        return self._c[i]

    def __len__(self):
        return self.order + 1

    @staticmethod
    def _product(a, b):
        return np.convolve(a, b)[: a.size]

    def partial(self, i: int) -> float:
        if not 0 <= i <= self.order:
            raise IndexError(f"derivative order {i} outside 0..{self.order}")
        return math.factorial(i) * self._c[i]

    def derivatives(self) -> np.ndarray:
        return np.array([math.factorial(i) * c for i, c in enumerate(self._c)])

    def compose(self, inner: "Jet1") -> "Jet1":
        return jet_compose(self, inner)

    def truncate(self, order: int) -> "Jet1":
        if order > self.order:
            return Jet1(np.concatenate([self._c, np.zeros(order - self.order, dtype=self._c.dtype)]))
        return Jet1(self._c[: order + 1])

    def __call__(self, s):
        """Evaluate the truncated polynomial at offset ``s`` from the base point."""
        out = 0.0
        for c in self._c[::-1]:
            out = out * s + c
        return out

    def __repr__(self):
        return f"Jet1({self._c.tolist()})"


@lru_cache(maxsize=None)
def _jet2_layout(order: int):
    idx = [(i, j) for i in range(order + 1) for j in range(order + 1 - i)]
    pos = {ij: n for n, ij in enumerate(idx)}
    p, q, r = [], [], []
    for (i1, j1), n1 in pos.items():
        for (i2, j2), n2 in pos.items():
            if i1 + i2 + j1 + j2 <= order:
                p.append(n1)
                q.append(n2)
                r.append(pos[i1 + i2, j1 + j2])
    rows = np.array([i for i, _ in idx])
    cols = np.array([j for _, j in idx])
    return pos, rows, cols, np.array(p), np.array(q), np.array(r)


class Jet2(_Jet):
    """Bivariate jet in ``(x, mu)`` truncated at total order ``K``."""

    __slots__ = ()

    def __init__(self, coeffs, order: int | None = None):
        table = np.asarray(coeffs, dtype=float)
        if table.ndim != 2 or table.shape[0] != table.shape[1]:
            raise ValueError("Jet2 needs a square (K+1, K+1) coefficient table")
        K = table.shape[0] - 1 if order is None else order
        if table.shape[0] != K + 1:
            raise ValueError("table size does not match order")
        _, rows, cols, *_ = _jet2_layout(K)
        mask = np.add.outer(np.arange(K + 1), np.arange(K + 1)) > K
        if np.any(table[mask] != 0):
            raise ValueError("entries with i + j > K must be zero")
        if not np.all(np.isfinite(table)):
            raise ValueError("jet coefficients must be finite")
        super().__init__(table[rows, cols].copy(), K)

    @classmethod
    def _from_flat(cls, flat, order):
        obj = cls.__new__(cls)
        _Jet.__init__(obj, flat, order)
        return obj

    @classmethod
    def constant(cls, value, order: int = DEFAULT_ORDER) -> "Jet2":
        n = (order + 1) * (order + 2) // 2
        flat = np.zeros(n)
        flat[0] = value
        return cls._from_flat(flat, order)

    @classmethod
    def variables(cls, x0, mu0, order: int = DEFAULT_ORDER) -> tuple["Jet2", "Jet2"]:
        """Seed jets for the two independent variables at ``(x0, mu0)``."""
        pos = _jet2_layout(order)[0]
        x = cls.constant(x0, order)
        mu = cls.constant(mu0, order)
        if order >= 1:
            x._c[pos[1, 0]] = 1.0
            mu._c[pos[0, 1]] = 1.0
        return x, mu

    @property
    def coeffs(self) -> np.ndarray:
        _, rows, cols, *_ = _jet2_layout(self.order)
        table = np.zeros((self.order + 1, self.order + 1))
        table[rows, cols] = self._c
        return table

    def __getitem__(self, ij):
        i, j = ij
        pos = _jet2_layout(self.order)[0]
        if (i, j) not in pos:
            raise IndexError(f"coefficient ({i}, {j}) outside total order {self.order}")
        return self._c[pos[i, j]]

    def _product(self, a, b):
        _, _, _, p, q, r = _jet2_layout(self.order)
        return np.bincount(r, weights=a[p] * b[q], minlength=a.size)

    def partial(self, i: int, j: int) -> float:
        return jet_partial(self, i, j)

    def __repr__(self):
        return f"Jet2(order={self.order}, coeffs={self.coeffs.tolist()})"


def is_jet(obj) -> bool:
    return isinstance(obj, _Jet)


# -- free-function forms of the jet operations----------------------------------------------

def jet_arith(a: _Jet, b: _Jet, op: str) -> _Jet:
    """Apply ``op`` in {'add', 'sub', 'mul', 'div'} to two jets of equal order."""
    if a.order != b.order:
        raise ValueError(f"jet orders differ: {a.order} vs {b.order}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown jet operation {op!r}")


def jet_partial(a: _Jet, i: int, j: int = 0) -> float:
    """Raw partial derivative ``d^(i+j) / dx^i dmu^j`` at the expansion point."""
    if i < 0 or j < 0 or i + j > a.order:
        raise IndexError(f"partial ({i}, {j}) outside total order {a.order}")
    if isinstance(a, Jet1):
        if j:
            raise IndexError("Jet1 has no second variable")
        return a.partial(i)
    return math.factorial(i) * math.factorial(j) * a[i, j]


def jet_compose(outer: Jet1, inner: _Jet) -> _Jet:
    """Taylor coefficients of ``outer(inner)`` where ``inner`` vanishes at the base point.

    ``outer`` is read as a polynomial in the offset from its own base point,
    so composing about the origin needs ``inner.value == 0``.  ``inner`` may be
    a :class:`Jet1` or a :class:`Jet2`.
    """
    if inner.value != 0:
        raise ValueError("inner jet must have zero constant term")
    if isinstance(inner, Jet1) and outer.order != inner.order:
        raise ValueError(f"jet orders differ: {outer.order} vs {inner.order}")
    coeffs = outer._c[: inner.order + 1]
    result = inner._lift(coeffs[-1])
    for c in coeffs[-2::-1]:
        result = result * inner + c
    return result


def _apply_series(jet: _Jet, uni) -> _Jet:
    """Compose the univariate Taylor coefficients ``uni`` (about ``jet.value``) with ``jet``."""
    delta = jet - jet.value
    if delta.order == 0:
        return jet._lift(uni[0])
    result = jet._lift(uni[jet.order])
    for k in range(jet.order - 1, -1, -1):
        result = result * delta + uni[k]
    return result


# -- elementary functions (dispatch on jets vs plain numbers) -------------------

def exp(x):
    if not is_jet(x):
        return np.exp(x)
    e = math.exp(x.value)
    return _apply_series(x, [e / math.factorial(k) for k in range(x.order + 1)])


def log(x):
    if not is_jet(x):
        return np.log(x)
    c0 = x.value
    if c0 <= 0:
        raise SingularJetError(f"log of non-positive constant term {c0!r}")
    uni = [math.log(c0)] + [(-1) ** (k + 1) / (k * c0**k) for k in range(1, x.order + 1)]
    return _apply_series(x, uni)


def _binomial_series(c0: float, p: float, order: int):
    out = []
    coef = 1.0
    for k in range(order + 1):
        out.append(coef * c0 ** (p - k))
        coef *= (p - k) / (k + 1)
    return out


def sqrt(x):
    if not is_jet(x):
        return np.sqrt(x)
    if x.value <= 0:
        raise SingularJetError(f"sqrt of non-positive constant term {x.value!r}")
    return _apply_series(x, _binomial_series(x.value, 0.5, x.order))


def sin(x):
    if not is_jet(x):
        return np.sin(x)
    s, c = math.sin(x.value), math.cos(x.value)
    cycle = (s, c, -s, -c)
    return _apply_series(x, [cycle[k % 4] / math.factorial(k) for k in range(x.order + 1)])


def cos(x):
    if not is_jet(x):
        return np.cos(x)
    s, c = math.sin(x.value), math.cos(x.value)
    cycle = (c, -s, -c, s)
    return _apply_series(x, [cycle[k % 4] / math.factorial(k) for k in range(x.order + 1)])


def tanh(x):
    if not is_jet(x):
        return np.tanh(x)
    # T' = 1 - T^2 gives (k+1) t_{k+1} = [k == 0] - sum_i t_i t_{k-i}
    t = [math.tanh(x.value)]
    for k in range(x.order):
        conv = sum(t[i] * t[k - i] for i in range(k + 1))
        t.append(((1.0 if k == 0 else 0.0) - conv) / (k + 1))
    return _apply_series(x, t)


def fabs(x):
    if not is_jet(x):
        return np.abs(x)
    if abs(x.value) < ABS_KINK_TOL:
        raise SingularJetError("abs() evaluated at its non-smooth point")
    return x if x.value > 0 else -x


def power(base, exponent):
    """``base ** exponent`` with a constant (non-jet) exponent."""
    if is_jet(exponent):
        if not exponent.is_constant():
            raise SingularJetError("exponent must be a constant")
        exponent = exponent.value
    if not is_jet(base):
        return np.power(base, float(exponent))
    e = float(exponent)
    if e.is_integer():
        n = int(e)
        if n >= 0:
            return base._ipow(n)
        return base.reciprocal()._ipow(-n)
    if base.value <= 0:
        raise SingularJetError("non-integer power of a jet needs a positive constant term")
    return _apply_series(base, _binomial_series(base.value, e, base.order))

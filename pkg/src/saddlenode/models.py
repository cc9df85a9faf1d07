"""Scalar and planar parameter-dependent vector fields.

Models are immutable.  Right-hand sides are :mod:`~saddlenode.exprlang`
trees compiled once; the compiled callables accept floats, numpy arrays and
jets, so the same object serves integration and exact differentiation.

Built-ins
---------
``normalform``  ``y' = nu - y^2 + a y^3``
``stommel1d``   ``y' = p - y (1 + m (1 - y)^2)``, the alpha -> infinity limit of
                the Stommel/Cessi box model with the O(1/alpha) remainder dropped
``stommel2d``   ``x' = -alpha (x - 1) - x (1 + m (x - y)^2)``,
                ``y' = p - y (1 + m (x - y)^2)``; p is the fold parameter and m
                the continuation parameter
``fraedrich``   ``T' = a (-T^4 + b mu T^2 - d mu)`` with a, b, d derived from the
                physical constants (SI units).  Ashwin et al. carry an extra 1/c
                factor in this equation; it is omitted here.

Model-file format
-----------------
Plain UTF-8 text, ``#`` starts a comment::

    name: stommel
    states: y
    params: p
    consts:
      m = 7.5
    eq y = p - y*(1+m*(1-y)^2)

Planar files list two states and two params; the second param is the
continuation parameter and may carry a default (``params: p, m = 7.5``).
Each state needs exactly one ``eq`` line.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from . import exprlang
from .exprlang import ExprAst
from .jets import DEFAULT_ORDER, Jet2, jet_partial

__all__ = [
    "ModelError",
    "ModelFileError",
    "ScalarModel1P",
    "PlanarModel2P",
    "DerivativeBundle",
    "BUILTINS",
    "builtin",
    "load_model",
    "load_model_file",
    "derivative_bundle",
    "fraedrich_constants",
    "linear_recoding",
]


class ModelError(ValueError):
    pass


class ModelFileError(ModelError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def _freeze(d: Mapping[str, float]) -> Mapping[str, float]:
    return MappingProxyType({k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class ScalarModel1P:
    """``x' = f(x, mu)`` with named constants."""

    name: str
    state: str
    param: str
    constants: Mapping[str, float]
    expr: ExprAst
    derive: Callable[[Mapping[str, float]], Mapping[str, float]] | None = field(default=None, repr=False)
    hints: Mapping[str, float] = field(default_factory=dict, repr=False, compare=False)
    _fn: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        consts = dict(self.constants)
        for k, v in consts.items():
            if not math.isfinite(v):
                raise ModelError(f"constant {k} is not finite")
        if self.derive is not None:
            consts.update(self.derive(consts))
        object.__setattr__(self, "constants", _freeze(consts))
        allowed = {self.state, self.param} | set(consts)
        extra = exprlang.free_names(self.expr) - allowed
        if extra:
            raise ModelError(f"right-hand side references undeclared name {sorted(extra)[0]!r}")
        fn = exprlang.compile_expr(self.expr, [self.state, self.param], consts)
        object.__setattr__(self, "_fn", fn)

    @property
    def dimension(self) -> int:
        return 1

    def rhs(self, x, mu):
        return self._fn(x, mu)

    def __call__(self, x, mu):
        return self._fn(x, mu)

    def jet(self, x: float, mu: float, order: int = DEFAULT_ORDER) -> Jet2:
        X, M = Jet2.variables(float(x), float(mu), order)
        out = self._fn(X, M)
        if not isinstance(out, Jet2):
            out = Jet2.constant(float(out), order)
        return out

    def with_constants(self, **updates: float) -> "ScalarModel1P":
        unknown = set(updates) - set(self.constants)
        if unknown:
            raise ModelError(f"unknown constant {sorted(unknown)[0]!r} for model {self.name}")
        consts = dict(self.constants)
        consts.update(updates)
        return replace(self, constants=consts)

    def text(self) -> str:
        return exprlang.to_text(self.expr)


@dataclass(frozen=True)
class PlanarModel2P:
    """``(x', y') = (F, G)(x, y, mu, s)`` where ``s`` is the continuation parameter."""

    name: str
    states: tuple[str, str]
    params: tuple[str, str]
    constants: Mapping[str, float]
    exprs: tuple[ExprAst, ExprAst]
    param_defaults: Mapping[str, float] = field(default_factory=dict)
    hints: Mapping[str, float] = field(default_factory=dict, repr=False, compare=False)
    _fns: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.states) != 2 or len(self.exprs) != 2 or len(self.params) != 2:
            raise ModelError("a planar model needs exactly two states, two params and two equations")
        object.__setattr__(self, "constants", _freeze(self.constants))
        object.__setattr__(self, "param_defaults", _freeze(self.param_defaults))
        args = [*self.states, *self.params]
        allowed = set(args) | set(self.constants)
        fns = []
        for e in self.exprs:
            extra = exprlang.free_names(e) - allowed
            if extra:
                raise ModelError(f"right-hand side references undeclared name {sorted(extra)[0]!r}")
            fns.append(exprlang.compile_expr(e, args, self.constants))
        object.__setattr__(self, "_fns", tuple(fns))

    @property
    def dimension(self) -> int:
        return 2

    def secondary_default(self) -> float:
        try:
            return self.param_defaults[self.params[1]]
        except KeyError:
            raise ModelError(f"no value for continuation parameter {self.params[1]!r}") from None

    def rhs(self, x, y, mu, s=None):
        if s is None:
            s = self.secondary_default()
        F, G = self._fns
        return F(x, y, mu, s), G(x, y, mu, s)

    def with_constants(self, **updates: float) -> "PlanarModel2P":
        consts = dict(self.constants)
        defaults = dict(self.param_defaults)
        for k, v in updates.items():
            if k in consts:
                consts[k] = v
            elif k == self.params[1]:
                defaults[k] = v
            else:
                raise ModelError(f"unknown constant {k!r} for model {self.name}")
        return replace(self, constants=consts, param_defaults=defaults)

    def jacobian(self, x, y, mu, s=None) -> np.ndarray:
        JF, JG = self.pair_jets(x, y, mu, s, ("x", "y"), order=1)
        return np.array([[JF[1, 0], JF[0, 1]], [JG[1, 0], JG[0, 1]]])

    def pair_jets(self, x, y, mu, s=None, pair=("x", "y"), order: int = 2, basis=None):
        """Jets of ``(F, G)`` in two of the four inputs, the others held fixed.

        ``pair`` names two of ``'x', 'y', 'mu', 's'``.  With ``basis`` (a 2x2
        matrix ``V``) the state is ``(x, y) + V (u, w)`` and ``'u'``, ``'w'``
        may be used as jet variables instead of ``'x'``, ``'y'``.
        """
        if s is None:
            s = self.secondary_default()
        first, second = Jet2.variables(0.0, 0.0, order)
        seeds = {pair[0]: first, pair[1]: second}
        zero = Jet2.constant(0.0, order)
        if basis is None:
            X = x + seeds.get("x", zero)
            Y = y + seeds.get("y", zero)
        else:
            u = seeds.get("u", zero)
            w = seeds.get("w", zero)
            X = x + basis[0][0] * u + basis[0][1] * w
            Y = y + basis[1][0] * u + basis[1][1] * w
        M = mu + seeds.get("mu", zero)
        S = s + seeds.get("s", zero)
        F, G = self._fns
        return _as_jet(F(X, Y, M, S), order), _as_jet(G(X, Y, M, S), order)

    def texts(self) -> tuple[str, str]:
        return exprlang.to_text(self.exprs[0]), exprlang.to_text(self.exprs[1])


def _as_jet(v, order):
    return v if isinstance(v, Jet2) else Jet2.constant(float(v), order)


@dataclass(frozen=True)
class DerivativeBundle:
    """Raw partial derivatives of ``f`` at one point."""

    f: float
    f_x: float
    f_mu: float
    f_xx: float
    f_xmu: float
    f_mumu: float
    f_xxx: float
    f_xxxx: float

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def derivative_bundle(model: ScalarModel1P, x: float, mu: float) -> DerivativeBundle:
    J = model.jet(x, mu, max(DEFAULT_ORDER, 4))
    vals = dict(
        f=jet_partial(J, 0, 0),
        f_x=jet_partial(J, 1, 0),
        f_mu=jet_partial(J, 0, 1),
        f_xx=jet_partial(J, 2, 0),
        f_xmu=jet_partial(J, 1, 1),
        f_mumu=jet_partial(J, 0, 2),
        f_xxx=jet_partial(J, 3, 0),
        f_xxxx=jet_partial(J, 4, 0),
    )
    for k, v in vals.items():
        if not math.isfinite(v):
            raise ModelError(f"derivative {k} is not finite at ({x}, {mu})")
    return DerivativeBundle(**{k: float(v) for k, v in vals.items()})


# -- built-in models -------------------------------------------------------------

FRAEDRICH_CONSTANTS = {
    "I0": 1366.0,  # W m^-2
    "sigma": 5.6704e-8,  # W m^-2 K^-4
    "c": 108.0,  # kg K s^-2
    "e_SA": 0.62,
    "a2": 1.6927,
    "b2": 1.690e-5,  # K^-2
}


def fraedrich_constants(consts: Mapping[str, float]) -> dict[str, float]:
    """Derived coefficients a, b, d of the Fraedrich energy balance."""
    es = consts["e_SA"] * consts["sigma"]
    return {
        "a": es / consts["c"],
        "b": consts["b2"] * consts["I0"] / (4.0 * es),
        "d": (consts["a2"] - 1.0) * consts["I0"] / (4.0 * es),
    }


def _fraedrich_derive(consts):
    return fraedrich_constants(consts)


def _make_fraedrich() -> ScalarModel1P:
    names = set(FRAEDRICH_CONSTANTS) | {"a", "b", "d", "T", "mu"}
    expr = exprlang.parse("a*(-T^4 + b*mu*T^2 - d*mu)", names)
    return ScalarModel1P(
        "fraedrich", "T", "mu", dict(FRAEDRICH_CONSTANTS), expr, derive=_fraedrich_derive,
        hints={"x": 290.0, "mu": 1.0, "x_lo": 150.0, "x_hi": 400.0},
    )


def _make_stommel1d() -> ScalarModel1P:
    expr = exprlang.parse("p - y*(1 + m*(1 - y)^2)", {"p", "y", "m"})
    return ScalarModel1P(
        "stommel1d", "y", "p", {"m": 7.5}, expr,
        hints={"x": 0.9, "mu": 0.95, "x_lo": -0.5, "x_hi": 2.0},
    )


def _make_normalform() -> ScalarModel1P:
    expr = exprlang.parse("nu - y^2 + a*y^3", {"nu", "y", "a"})
    return ScalarModel1P(
        "normalform", "y", "nu", {"a": 0.0}, expr,
        hints={"x": 0.01, "mu": 0.01, "x_lo": -1.0, "x_hi": 1.0},
    )


def _make_stommel2d() -> PlanarModel2P:
    names = {"x", "y", "p", "m", "alpha"}
    F = exprlang.parse("-alpha*(x - 1) - x*(1 + m*(x - y)^2)", names)
    G = exprlang.parse("p - y*(1 + m*(x - y)^2)", names)
    return PlanarModel2P(
        "stommel2d", ("x", "y"), ("p", "m"), {"alpha": 3600.0}, (F, G),
        param_defaults={"m": 7.5}, hints={"homotopy": "alpha"},
    )


BUILTINS: dict[str, Callable[[], ScalarModel1P | PlanarModel2P]] = {
    "fraedrich": _make_fraedrich,
    "stommel1d": _make_stommel1d,
    "stommel2d": _make_stommel2d,
    "normalform": _make_normalform,
}


def builtin(name: str, **constants: float) -> ScalarModel1P | PlanarModel2P:
    try:
        model = BUILTINS[name]()
    except KeyError:
        raise ModelError(f"unknown built-in model {name!r}; choose from {sorted(BUILTINS)}") from None
    return model.with_constants(**constants) if constants else model


# -- model files -------------------------------------------------------------------

_SECTION = re.compile(r"^(name|states|params|consts)\s*:\s*(.*)$")
_ASSIGN = re.compile(r"^([A-Za-z_]\w*)\s*=\s*(.+)$")
_EQ = re.compile(r"^eq\s+([A-Za-z_]\w*)\s*=\s*(.+)$")


def _parse_number(text: str, lineno: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ModelFileError(f"not a number: {text.strip()!r}", lineno) from None
    if not math.isfinite(v):
        raise ModelFileError(f"value must be finite: {text.strip()!r}", lineno)
    return v


def load_model(text: str, name: str = "user") -> ScalarModel1P | PlanarModel2P:
    """Parse a model file (see module docstring)."""
    states: list[str] = []
    params: list[str] = []
    defaults: dict[str, float] = {}
    consts: dict[str, float] = {}
    eqs: dict[str, tuple[str, int]] = {}
    seen: dict[str, int] = {}
    section = None

    def declare(ident: str, lineno: int):
        if not re.fullmatch(r"[A-Za-z_]\w*", ident):
            raise ModelFileError(f"invalid name {ident!r}", lineno)
        if ident in exprlang.FUNCTIONS:
            raise ModelFileError(f"{ident!r} is a reserved function name", lineno)
        if ident in seen:
            raise ModelFileError(f"duplicate name {ident!r} (first declared on line {seen[ident]})", lineno)
        seen[ident] = lineno

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _EQ.match(line)
        if m:
            state, rhs = m.groups()
            if state in eqs:
                raise ModelFileError(f"second equation for {state!r}", lineno)
            eqs[state] = (rhs, lineno)
            section = None
            continue
        m = _SECTION.match(line)
        if m:
            key, rest = m.group(1), m.group(2).strip()
            section = key
            if key == "name":
                name = rest or name
                section = None
            elif key == "states":
                for item in filter(None, (s.strip() for s in rest.split(","))):
                    declare(item, lineno)
                    states.append(item)
                section = None
            elif key == "params":
                for item in filter(None, (s.strip() for s in rest.split(","))):
                    a = _ASSIGN.match(item)
                    ident = a.group(1) if a else item
                    declare(ident, lineno)
                    params.append(ident)
                    if a:
                        defaults[ident] = _parse_number(a.group(2), lineno)
                section = None
            elif rest:
                for item in filter(None, (s.strip() for s in rest.split(","))):
                    a = _ASSIGN.match(item)
                    if not a:
                        raise ModelFileError(f"expected name = value, got {item!r}", lineno)
                    declare(a.group(1), lineno)
                    consts[a.group(1)] = _parse_number(a.group(2), lineno)
            continue
        a = _ASSIGN.match(line)
        if section == "consts" and a:
            declare(a.group(1), lineno)
            consts[a.group(1)] = _parse_number(a.group(2), lineno)
            continue
        raise ModelFileError(f"cannot parse line {raw.strip()!r}", lineno)

    if not states:
        raise ModelFileError("missing 'states:' declaration")
    if len(states) not in (1, 2):
        raise ModelFileError(f"expected one or two states, got {len(states)}")
    if len(params) != len(states):
        raise ModelFileError(f"{len(states)}-state model needs {len(states)} parameter(s), got {len(params)}")
    for st, (_, lineno) in eqs.items():
        if st not in states:
            raise ModelFileError(f"equation for undeclared state {st!r}", lineno)
    for st in states:
        if st not in eqs:
            raise ModelFileError(f"no equation for state {st!r}")

    declared = set(states) | set(params) | set(consts)
    asts = []
    for st in states:
        rhs, lineno = eqs[st]
        try:
            asts.append(exprlang.parse(rhs, declared, constants=set(consts)))
        except (exprlang.ExprSyntaxError, exprlang.UndeclaredIdentifierError) as exc:
            raise ModelFileError(str(exc), lineno) from exc

    if len(states) == 1:
        if defaults:
            raise ModelFileError("parameter defaults are only used by planar models")
        return ScalarModel1P(name, states[0], params[0], consts, asts[0])
    return PlanarModel2P(name, tuple(states), tuple(params), consts, tuple(asts), param_defaults=defaults)


def load_model_file(path) -> ScalarModel1P | PlanarModel2P:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stem = re.sub(r"\.[^.]*$", "", str(path).replace("\\", "/").rsplit("/", 1)[-1])
    return load_model(text, name=stem)


def linear_recoding(model: PlanarModel2P, A, name: str | None = None) -> PlanarModel2P:
    """The same system in coordinates ``(x, y) = A (X, Y)``."""
    A = np.asarray(A, dtype=float)
    Ainv = np.linalg.inv(A)
    X, Y = (exprlang.Var(s) for s in model.states)

    def lin(r0, r1, a, b):
        return exprlang.BinOp("+", exprlang.BinOp("*", exprlang.Num(r0), a), exprlang.BinOp("*", exprlang.Num(r1), b))

    sub = {model.states[0]: lin(A[0, 0], A[0, 1], X, Y), model.states[1]: lin(A[1, 0], A[1, 1], X, Y)}
    F, G = (exprlang.substitute(e, sub) for e in model.exprs)
    newF = lin(Ainv[0, 0], Ainv[0, 1], F, G)
    newG = lin(Ainv[1, 0], Ainv[1, 1], F, G)
    return replace(model, name=name or f"{model.name}-recoded", exprs=(newF, newG))

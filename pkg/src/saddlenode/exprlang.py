"""A small expression language for ODE right-hand sides.

Grammar (lowest to highest binding)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

``+ - * /`` associate to the left.  ``^`` binds tighter than unary minus
(``-y^2`` is ``-(y^2)``) and associates to the right.  Its exponent must be a
constant: a literal, or a name listed as a constant.  ``FUNC`` is one of
``exp log sqrt sin cos tanh abs``.  There is no implicit multiplication.

The same tree evaluates over plain floats (or numpy arrays) and over jets.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from . import jets

__all__ = [
    "ExprSyntaxError",
    "UndeclaredIdentifierError",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "ExprAst",
    "FUNCTIONS",
    "parse",
    "to_text",
    "evaluate",
    "eval_jet",
    "compile_expr",
    "free_names",
    "substitute",
]


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class UndeclaredIdentifierError(ValueError):
    def __init__(self, name: str, position: int | None = None):
        self.name = name
        self.position = position
        where = "" if position is None else f" at position {position}"
        super().__init__(f"undeclared identifier {name!r}{where}")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "ExprAst"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "ExprAst"


ExprAst = Num | Var | Neg | BinOp | Call

FUNCTIONS: dict[str, Callable] = {
    "exp": jets.exp,
    "log": jets.log,
    "sqrt": jets.sqrt,
    "sin": jets.sin,
    "cos": jets.cos,
    "tanh": jets.tanh,
    "abs": jets.fabs,
}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, declared: frozenset, constants: frozenset | None):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.declared = declared
        self.constants = constants

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos, self.text)

    def parse(self) -> ExprAst:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos, self.text)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            pos = self.take()[2]
            exponent = self.unary()
            self._check_constant_exponent(exponent, pos)
            return BinOp("^", base, exponent)
        return base

    def _check_constant_exponent(self, node, pos):
        names = free_names(node)
        if self.constants is not None and not names <= self.constants:
            bad = sorted(names - self.constants)[0]
            raise ExprSyntaxError(f"exponent must be constant, found variable {bad!r}", pos, self.text)

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val not in self.declared:
                raise UndeclaredIdentifierError(val, pos)
            return Var(val)
        if (kind, val) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"expected a number, name or '(', found {found}", pos, self.text)


def parse(text: str, declared: Iterable[str], constants: Iterable[str] | None = None) -> ExprAst:
    """Parse ``text`` into an AST.  Every identifier must be in ``declared``.

    When ``constants`` is given, exponents may only reference those names.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text or "")
    declared = frozenset(declared)
    clash = declared & FUNCTIONS.keys()
    if clash:
        raise ValueError(f"reserved function name used as identifier: {sorted(clash)[0]}")
    consts = None if constants is None else frozenset(constants)
    return _Parser(text, declared, consts).parse()


def to_text(node: ExprAst) -> str:
    """Fully parenthesised rendering that parses back to an equal tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def free_names(node: ExprAst) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, (Neg, Call)):
        return free_names(node.operand if isinstance(node, Neg) else node.arg)
    return free_names(node.left) | free_names(node.right)


def substitute(node: ExprAst, mapping: Mapping[str, ExprAst]) -> ExprAst:
    """Replace variables by sub-trees."""
    if isinstance(node, Var):
        return mapping.get(node.name, node)
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, mapping))
    if isinstance(node, Call):
        return Call(node.func, substitute(node.arg, mapping))
    return BinOp(node.op, substitute(node.left, mapping), substitute(node.right, mapping))


def evaluate(node: ExprAst, bindings: Mapping[str, object]):
    """Tree-walking evaluation over floats, arrays or jets."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return bindings[node.name]
        except KeyError:
            raise UndeclaredIdentifierError(node.name) from None
    if isinstance(node, Neg):
        return -evaluate(node.operand, bindings)
    if isinstance(node, Call):
        return FUNCTIONS[node.func](evaluate(node.arg, bindings))
    left = evaluate(node.left, bindings)
    right = evaluate(node.right, bindings)
    op = node.op
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        if not jets.is_jet(right) and right == 0 and jets.is_jet(left):
            raise jets.SingularJetError("division by zero")
        return left / right
    return jets.power(left, right)


def eval_jet(node: ExprAst, bindings: Mapping[str, object]) -> jets.Jet2:
    """Evaluate over :class:`~saddlenode.jets.Jet2`; plain numbers are lifted."""
    orders = {b.order for b in bindings.values() if jets.is_jet(b)}
    if len(orders) > 1:
        raise ValueError(f"bound jets have different orders: {sorted(orders)}")
    order = orders.pop() if orders else jets.DEFAULT_ORDER
    lifted = {
        k: v if jets.is_jet(v) else jets.Jet2.constant(float(v), order) for k, v in bindings.items()
    }
    out = evaluate(node, lifted)
    if not jets.is_jet(out):
        out = jets.Jet2.constant(float(out), order)
    return out


def _codegen(node: ExprAst, names: Mapping[str, str]) -> str:
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return names[node.name]
    if isinstance(node, Neg):
        return f"(-{_codegen(node.operand, names)})"
    if isinstance(node, Call):
        return f"_f_{node.func}({_codegen(node.arg, names)})"
    left = _codegen(node.left, names)
    right = _codegen(node.right, names)
    if node.op == "^":
        return f"_pow({left}, {right})"
    return f"({left} {node.op} {right})"


def compile_expr(node: ExprAst, argnames: Iterable[str], constants: Mapping[str, float] | None = None):
    """Compile to a Python callable taking ``argnames`` positionally.

    Names in ``constants`` are baked in as literals.  The callable accepts
    floats, numpy arrays or jets (mixed freely).
    """
    argnames = list(argnames)
    constants = dict(constants or {})
    missing = free_names(node) - set(argnames) - constants.keys()
    if missing:
        raise UndeclaredIdentifierError(sorted(missing)[0])
    mangled = {n: f"_a{i}" for i, n in enumerate(argnames)}
    for k, v in constants.items():
        if k not in mangled:
            mangled[k] = f"({float(v)!r})"
    body = _codegen(node, mangled)
    src = f"def _rhs({', '.join(mangled[n] for n in argnames)}):\n    return {body}\n"
    namespace = {f"_f_{k}": v for k, v in FUNCTIONS.items()}
    namespace["_pow"] = jets.power
    exec(compile(src, "<expr>", "exec"), namespace)
    fn = namespace["_rhs"]
    fn.source = src
    return fn

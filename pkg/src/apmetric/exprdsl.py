"""A small expression language for functions, weights and exponents.

Grammar (EBNF)::

    top     := vector | cond_or
    vector  := "[" cond_or { "," cond_or } "]"
    cond_or := cond_and { "or" cond_and }
    cond_and:= cond_not { "and" cond_not }
    cond_not:= "not" cond_not | compare
    compare := sum [ ("<" | "<=" | ">" | ">=" | "==") sum ]
    sum     := product { ("+" | "-") product }
    product := unary { ("*" | "/") unary }
    unary   := "-" unary | "+" unary | power
    power   := atom [ "^" unary ]            (right associative)
    atom    := number | constant | variable | call | "(" cond_or ")"
    call    := func "(" cond_or ")" | "pw" "(" cond_or "," cond_or "," cond_or ")"
    func    := sin | cos | tan | exp | log | sqrt | abs | arcsin
             | floor | frac | re | im | conj
    constant:= pi | e | i | inf

Variables are ``t1 .. tn`` (``t`` is an alias of ``t1`` when n = 1); callers
may supply other names.  Booleans may only appear as the first argument of
``pw`` or under ``and``/``or``/``not``.

Evaluation is vectorised over an (N, n) point array.  Arrays stay real until
an operation leaves the reals (``i``, square root or logarithm of a negative,
a fractional power of a negative); from then on complex arithmetic is used.
``pw`` evaluates each branch only on the points that select it.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArityError, DimensionError, DomainError, ExprSyntaxError, UnknownIdentifierError
from .funcspace import UNKNOWN, DomainBox, EvalFunction, as_points

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "arcsin",
             "floor", "frac", "re", "im", "conj")
CONSTANTS = {"pi": math.pi, "e": math.e, "i": 1j, "inf": math.inf}
COMPARISONS = ("<", "<=", ">", ">=", "==")


# -- AST ---------------------------------------------------------------------
@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Unary:
    op: str  # "-"
    arg: object


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / ^
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    arg: object


@dataclass(frozen=True)
class Piecewise:
    cond: object
    then: object
    other: object


@dataclass(frozen=True)
class Compare:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Logic:
    op: str  # "and" | "or"
    left: object
    right: object


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class Vector:
    items: tuple


_BOOL_NODES = (Compare, Logic, Not)


@dataclass(frozen=True)
class Expr:
    """A parsed expression: root node plus the variable names it was parsed with."""

    root: object
    names: tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def m(self) -> int:
        return len(self.root.items) if isinstance(self.root, Vector) else 1

    def __str__(self):
        return to_text(self)


# -- tokenizer -----------------------------------------------------------------
_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|==|[-+*/^(),\[\]<>])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    out, pos = [], 0
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        if mt.lastgroup != "ws":
            out.append(_Tok(mt.lastgroup, mt.group(), pos))
        pos = mt.end()
    out.append(_Tok("end", "", len(text)))
    return out


# -- parser ------------------------------------------------------------------
def default_names(n: int) -> tuple[str, ...]:
    return ("t",) if n == 1 else tuple(f"t{k + 1}" for k in range(n))


class _Parser:
    def __init__(self, text: str, names: Sequence[str], aliases: dict[str, int]):
        self.toks = _tokenize(text)
        self.k = 0
        self.lookup = {nm: j for j, nm in enumerate(names)}
        self.lookup.update(aliases)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.k]

    def advance(self) -> _Tok:
        t = self.toks[self.k]
        self.k += 1
        return t

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind == "end":
            found = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", self.tok.pos)
        return self.advance()

    def top(self):
        if self.tok.text == "[":
            start = self.advance().pos
            items = [self.cond_or()]
            while self.tok.text == ",":
                self.advance()
                items.append(self.cond_or())
            self.expect("]")
            for it in items:
                self._need_value(it, start)
            node = Vector(tuple(items))
        else:
            pos = self.tok.pos
            node = self.cond_or()
            self._need_value(node, pos)
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return node

    @staticmethod
    def _need_value(node, pos):
        if isinstance(node, _BOOL_NODES):
            raise ExprSyntaxError("a condition is only allowed as the first argument of pw", pos)

    @staticmethod
    def _need_bool(node, pos):
        if not isinstance(node, _BOOL_NODES):
            raise ExprSyntaxError("expected a condition", pos)

    def cond_or(self):
        pos = self.tok.pos
        node = self.cond_and()
        while self.tok.text == "or":
            self._need_bool(node, pos)
            p2 = self.advance().pos
            rhs = self.cond_and()
            self._need_bool(rhs, p2)
            node = Logic("or", node, rhs)
        return node

    def cond_and(self):
        pos = self.tok.pos
        node = self.cond_not()
        while self.tok.text == "and":
            self._need_bool(node, pos)
            p2 = self.advance().pos
            rhs = self.cond_not()
            self._need_bool(rhs, p2)
            node = Logic("and", node, rhs)
        return node

    def cond_not(self):
        if self.tok.text == "not":
            self.advance()
            pos = self.tok.pos
            arg = self.cond_not()
            self._need_bool(arg, pos)
            return Not(arg)
        return self.compare()

    def compare(self):
        pos = self.tok.pos
        left = self.sum()
        if self.tok.text in COMPARISONS:
            op = self.advance().text
            self._need_value(left, pos)
            p2 = self.tok.pos
            right = self.sum()
            self._need_value(right, p2)
            return Compare(op, left, right)
        return left

    def _arith(self, sub, ops):
        pos = self.tok.pos
        node = sub()
        while self.tok.text in ops:
            self._need_value(node, pos)
            op = self.advance().text
            p2 = self.tok.pos
            rhs = sub()
            self._need_value(rhs, p2)
            node = Binary(op, node, rhs)
        return node

    def sum(self):
        return self._arith(self.product, ("+", "-"))

    def product(self):
        return self._arith(self.unary, ("*", "/"))

    def unary(self):
        if self.tok.text in ("-", "+"):
            op = self.advance().text
            pos = self.tok.pos
            arg = self.unary()
            self._need_value(arg, pos)
            return Unary("-", arg) if op == "-" else arg
        return self.power()

    def power(self):
        pos = self.tok.pos
        base = self.atom()
        if self.tok.text == "^":
            self._need_value(base, pos)
            self.advance()
            p2 = self.tok.pos
            expo = self.unary()
            self._need_value(expo, p2)
            return Binary("^", base, expo)
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text))
        if t.text == "(":
            self.advance()
            node = self.cond_or()
            self.expect(")")
            return node
        if t.kind == "name":
            self.advance()
            if t.text in CONSTANTS:
                return Const(t.text)
            if t.text in self.lookup:
                return Var(self.lookup[t.text])
            if t.text == "pw":
                return self._call_args(t, 3)
            if t.text in FUNCTIONS:
                return self._call_args(t, 1)
            raise UnknownIdentifierError(f"unknown identifier {t.text!r}", t.pos)
        if t.kind == "end":
            raise ExprSyntaxError("unexpected end of input", t.pos)
        raise ExprSyntaxError(f"unexpected {t.text!r}", t.pos)

    def _call_args(self, name_tok: _Tok, arity: int):
        self.expect("(")
        args, poss = [], []
        if self.tok.text != ")":
            poss.append(self.tok.pos)
            args.append(self.cond_or())
            while self.tok.text == ",":
                self.advance()
                poss.append(self.tok.pos)
                args.append(self.cond_or())
        self.expect(")")
        if len(args) != arity:
            raise ArityError(f"{name_tok.text} takes {arity} argument(s), got {len(args)}", name_tok.pos)
        if name_tok.text == "pw":
            self._need_bool(args[0], poss[0])
            self._need_value(args[1], poss[1])
            self._need_value(args[2], poss[2])
            return Piecewise(*args)
        self._need_value(args[0], poss[0])
        return Call(name_tok.text, args[0])


def parse(text: str, n: int = 1, names: Sequence[str] | None = None) -> Expr:
    """Parse ``text`` over n variables (or over the explicit ``names``)."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    if names is None:
        names = default_names(n)
        aliases = {"t1": 0} if n == 1 else {}
    else:
        names = tuple(names)
        aliases = {}
    clash = [nm for nm in names if nm in CONSTANTS or nm in FUNCTIONS or nm in ("pw", "and", "or", "not")]
    if clash:
        raise ValueError(f"variable names shadow reserved words: {clash}")
    return Expr(_Parser(text, names, aliases).top(), tuple(names))


# -- printer -----------------------------------------------------------------
def _fmt(node, names) -> str:
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return names[node.index]
    if isinstance(node, Unary):
        return f"(-{_fmt(node.arg, names)})"
    if isinstance(node, (Binary, Compare)):
        return f"({_fmt(node.left, names)} {node.op} {_fmt(node.right, names)})"
    if isinstance(node, Logic):
        return f"({_fmt(node.left, names)} {node.op} {_fmt(node.right, names)})"
    if isinstance(node, Not):
        return f"(not {_fmt(node.arg, names)})"
    if isinstance(node, Call):
        return f"{node.name}({_fmt(node.arg, names)})"
    if isinstance(node, Piecewise):
        return f"pw({_fmt(node.cond, names)}, {_fmt(node.then, names)}, {_fmt(node.other, names)})"
    if isinstance(node, Vector):
        return "[" + ", ".join(_fmt(it, names) for it in node.items) + "]"
    raise TypeError(f"not an expression node: {node!r}")


def to_text(expr: Expr) -> str:
    """Canonical, fully parenthesised text; ``parse(to_text(e))`` rebuilds ``e``."""
    return _fmt(expr.root, expr.names)


# -- evaluation ----------------------------------------------------------------
def _real_or_fail(x: np.ndarray, pts: np.ndarray, what: str) -> np.ndarray:
    if np.iscomplexobj(x):
        bad = x.imag != 0
        if np.any(bad):
            raise DomainError(f"{what} needs a real argument", pts[np.argmax(bad)])
        return x.real
    return x


def _sqrt(x):
    if not np.iscomplexobj(x) and np.any(x < 0):
        x = x.astype(complex)
    return np.sqrt(x)


def _log(x):
    if not np.iscomplexobj(x) and np.any(x < 0):
        x = x.astype(complex)
    return np.log(x)


def _power(a, b):
    if not np.iscomplexobj(a) and not np.iscomplexobj(b):
        frac_exp = b != np.floor(b)
        if np.any((a < 0) & frac_exp):
            a = a.astype(complex)
    return np.power(a, b)


def _eval(node, pts: np.ndarray) -> np.ndarray:
    N = pts.shape[0]
    if isinstance(node, Num):
        return np.full(N, node.value)
    if isinstance(node, Const):
        v = CONSTANTS[node.name]
        return np.full(N, v, dtype=complex if isinstance(v, complex) else float)
    if isinstance(node, Var):
        return pts[:, node.index]
    if isinstance(node, Unary):
        return -_eval(node.arg, pts)
    if isinstance(node, Binary):
        a, b = _eval(node.left, pts), _eval(node.right, pts)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return _power(a, b)
    if isinstance(node, Call):
        x = _eval(node.arg, pts)
        name = node.name
        if name == "sqrt":
            return _sqrt(x)
        if name == "log":
            return _log(x)
        if name == "arcsin":
            if not np.iscomplexobj(x):
                bad = np.abs(x) > 1
                if np.any(bad):
                    raise DomainError("arcsin argument outside [-1, 1]", pts[np.argmax(bad)])
            return np.arcsin(x)
        if name in ("floor", "frac"):
            x = _real_or_fail(x, pts, name)
            return np.floor(x) if name == "floor" else x - np.floor(x)
        if name == "re":
            return np.real(x)
        if name == "im":
            return np.imag(x) if np.iscomplexobj(x) else np.zeros_like(x)
        if name == "conj":
            return np.conj(x)
        return getattr(np, name)(x)
    if isinstance(node, Compare):
        a = _real_or_fail(_eval(node.left, pts), pts, "comparison")
        b = _real_or_fail(_eval(node.right, pts), pts, "comparison")
        return {"<": np.less, "<=": np.less_equal, ">": np.greater,
                ">=": np.greater_equal, "==": np.equal}[node.op](a, b)
    if isinstance(node, Logic):
        a, b = _eval(node.left, pts), _eval(node.right, pts)
        return (a & b) if node.op == "and" else (a | b)
    if isinstance(node, Not):
        return ~_eval(node.arg, pts)
    if isinstance(node, Piecewise):
        mask = np.asarray(_eval(node.cond, pts), dtype=bool)
        if mask.all():
            return _eval(node.then, pts)
        if not mask.any():
            return _eval(node.other, pts)
        a = _eval(node.then, pts[mask])
        b = _eval(node.other, pts[~mask])
        out = np.empty(N, dtype=np.result_type(a, b))
        out[mask] = a
        out[~mask] = b
        return out
    raise TypeError(f"not an expression node: {node!r}")


def eval_points(expr: Expr, points) -> np.ndarray:
    """Evaluate on many points; returns an (N, m) array (real or complex)."""
    pts = as_points(points, expr.n)
    with np.errstate(all="ignore"):
        if isinstance(expr.root, Vector):
            cols = [np.broadcast_to(_eval(it, pts), (pts.shape[0],)) for it in expr.root.items]
            return np.stack(cols, axis=1)
        return np.asarray(_eval(expr.root, pts)).reshape(-1, 1)


def eval_values(expr: Expr, values) -> np.ndarray:
    """Evaluate at complex-valued inputs (used for relation maps u -> g(u))."""
    vals = np.asarray(values)
    if vals.ndim == 1:
        vals = vals.reshape(-1, 1)
    if vals.shape[1] != expr.n:
        raise DimensionError(f"expected inputs of dimension {expr.n}")
    with np.errstate(all="ignore"):
        if isinstance(expr.root, Vector):
            return np.stack([np.broadcast_to(_eval(it, vals), (vals.shape[0],)) for it in expr.root.items], axis=1)
        return np.asarray(_eval(expr.root, vals)).reshape(-1, 1)


def evaluate(expr: Expr, point) -> np.ndarray:
    """Value at one point as a complex vector of length m."""
    p = np.atleast_1d(np.asarray(point, dtype=float)).reshape(1, expr.n)
    return eval_points(expr, p)[0].astype(complex)


def to_evalfunction(expr: Expr, domain: DomainBox | None = None, bounded: str = UNKNOWN,
                    label: str | None = None) -> EvalFunction:
    return EvalFunction(lambda p: eval_points(expr, p), expr.n, expr.m, domain, bounded,
                        label or to_text(expr))


def compile_expr(text: str, n: int = 1, domain: DomainBox | None = None, bounded: str = UNKNOWN,
                 names: Sequence[str] | None = None, label: str | None = None) -> EvalFunction:
    """Parse and wrap in one step."""
    expr = parse(text, n, names)
    return to_evalfunction(expr, domain, bounded, label or text)

"""Expression trees over the coordinates (t, x, y, z) and named parameters.

The kernel is deliberately small: a recursive-descent parser, a canonical
printer that emits the same grammar, symbolic differentiation with light
structural simplification, scalar and vectorised evaluation, and a
randomised zero test.

Grammar (loosest to tightest)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?
    primary := number | ident | func '(' expr ')' | '(' expr ')'

``^`` is right associative and unary minus binds looser than ``^``, so
``-x^2`` is ``-(x^2)``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

COORDS = ("t", "x", "y", "z")
FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos", "sinh", "cosh")
BINARY = ("add", "sub", "mul", "div", "pow")

ZERO_RTOL = 1e-9

DEFAULT_DOMAIN: dict[str, tuple[float, float]] = {
    "t": (-1.0, 1.0),
    "x": (0.5, 3.0),
    "y": (-1.0, 1.0),
    "z": (-1.0, 1.0),
}
DEFAULT_SAMPLES = 16
DEFAULT_SEED = 42


class ExprError(Exception):
    pass


class ParseError(ExprError, ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownFunctionError(ParseError):
    pass


class EvaluationError(ExprError):
    pass


class DomainError(EvaluationError):
    def __init__(self, message: str, expr: "Expr", bindings: Mapping[str, float]):
        shown = ", ".join(f"{k}={bindings[k]!r}" for k in sorted(bindings))
        super().__init__(f"{message} in '{expr}' with {{{shown}}}")
        self.expr = expr
        self.bindings = dict(bindings)


class UnboundSymbolError(EvaluationError, KeyError):
    def __init__(self, name: str):
        super().__init__(f"unbound symbol {name!r}")
        self.name = name

    def __str__(self) -> str:
        return self.args[0]


class IndeterminateError(ExprError):
    """Every sample point failed to evaluate."""


class Expr:
    """Immutable expression node.

    ``op`` is one of ``const``, ``var``, ``neg``, a function name or a binary
    operator name. ``value`` holds the float of a constant or the name of a
    variable.
    """

    __slots__ = ("op", "args", "value", "_hash", "_free")

    def __init__(self, op: str, args: tuple["Expr", ...] = (), value=None):
        self.op = op
        self.args = args
        self.value = value
        if op == "const":
            value = float(value)
            if value == 0.0:
                value = 0.0  # fold -0.0
            self.value = value
            self._free = frozenset()
        elif op == "var":
            self._free = frozenset((value,))
        elif len(args) == 1:
            self._free = args[0]._free
        else:
            self._free = args[0]._free | args[1]._free
        self._hash = hash((op, self.value, args))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr) or self._hash != other._hash:
            return False
        return self.op == other.op and self.value == other.value and self.args == other.args

    def __repr__(self) -> str:
        return f"Expr({to_string(self)!r})"

    def __str__(self) -> str:
        return to_string(self)

    @property
    def free_symbols(self) -> frozenset[str]:
        return self._free

    def is_const(self, value: float | None = None) -> bool:
        if self.op != "const":
            return False
        return value is None or self.value == value

    # Arithmetic operators build simplified trees; the parser builds raw ones.
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __rpow__(self, other):
        return power(as_expr(other), self)

    def __neg__(self):
        return neg(self)


def Const(value: float) -> Expr:
    return Expr("const", value=value)


def Var(name: str) -> Expr:
    return Expr("var", value=name)


ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(obj) -> Expr:
    if isinstance(obj, Expr):
        return obj
    if isinstance(obj, (int, float, np.floating, np.integer)):
        return Const(float(obj))
    if isinstance(obj, str):
        return parse(obj)
    raise TypeError(f"cannot convert {type(obj).__name__} to Expr")


# --- simplifying constructors ---------------------------------------------------

_SCALAR_FUNCS = {
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "sin": math.sin,
    "cos": math.cos,
    "sinh": math.sinh,
    "cosh": math.cosh,
}


def _fold(fn, *vals) -> Expr | None:
    try:
        out = fn(*vals)
    except (ValueError, ZeroDivisionError, OverflowError):
        return None
    if isinstance(out, complex) or not math.isfinite(out):
        return None
    return Const(out)


def add(a: Expr, b: Expr) -> Expr:
    if a.is_const(0.0):
        return b
    if b.is_const(0.0):
        return a
    if a.op == "const" and b.op == "const":
        return _fold(lambda p, q: p + q, a.value, b.value) or Expr("add", (a, b))
    if b.op == "neg":
        return sub(a, b.args[0])
    return Expr("add", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    if b.is_const(0.0):
        return a
    if a.is_const(0.0):
        return neg(b)
    if a == b:
        return ZERO
    if a.op == "const" and b.op == "const":
        return _fold(lambda p, q: p - q, a.value, b.value) or Expr("sub", (a, b))
    if b.op == "neg":
        return add(a, b.args[0])
    return Expr("sub", (a, b))


def mul(a: Expr, b: Expr) -> Expr:
    if a.is_const(0.0) or b.is_const(0.0):
        return ZERO
    if a.is_const(1.0):
        return b
    if b.is_const(1.0):
        return a
    if a.op == "const" and b.op == "const":
        return _fold(lambda p, q: p * q, a.value, b.value) or Expr("mul", (a, b))
    if a.is_const(-1.0):
        return neg(b)
    if b.is_const(-1.0):
        return neg(a)
    if a.op == "neg" and b.op == "neg":
        return mul(a.args[0], b.args[0])
    if a.op == "neg":
        return neg(mul(a.args[0], b))
    if b.op == "neg":
        return neg(mul(a, b.args[0]))
    if b.op == "const":
        a, b = b, a
    return Expr("mul", (a, b))


def div(a: Expr, b: Expr) -> Expr:
    if b.is_const(1.0):
        return a
    if a.is_const(0.0) and not b.is_const(0.0):
        return ZERO
    if a.op == "const" and b.op == "const":
        return _fold(lambda p, q: p / q, a.value, b.value) or Expr("div", (a, b))
    if a.op == "neg":
        return neg(div(a.args[0], b))
    if b.op == "neg":
        return neg(div(a, b.args[0]))
    return Expr("div", (a, b))


def neg(a: Expr) -> Expr:
    if a.op == "const":
        return Const(-a.value)
    if a.op == "neg":
        return a.args[0]
    return Expr("neg", (a,))


def power(a: Expr, b: Expr) -> Expr:
    if b.is_const(0.0):
        return ONE
    if b.is_const(1.0):
        return a
    if a.op == "const" and b.op == "const":
        return _fold(math.pow, a.value, b.value) or Expr("pow", (a, b))
    return Expr("pow", (a, b))


def func(name: str, a: Expr) -> Expr:
    if name not in _SCALAR_FUNCS:
        raise ValueError(f"unknown function {name!r}")
    if a.op == "const":
        folded = _fold(_SCALAR_FUNCS[name], a.value)
        if folded is not None:
            return folded
    return Expr(name, (a,))


def exp(a) -> Expr:
    return func("exp", as_expr(a))


def log(a) -> Expr:
    return func("log", as_expr(a))


def sqrt(a) -> Expr:
    return func("sqrt", as_expr(a))


def sin(a) -> Expr:
    return func("sin", as_expr(a))


def cos(a) -> Expr:
    return func("cos", as_expr(a))


def sinh(a) -> Expr:
    return func("sinh", as_expr(a))


def cosh(a) -> Expr:
    return func("cosh", as_expr(a))


def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the simplifying constructors."""
    return _simplify(e)


@lru_cache(maxsize=65536)
def _simplify(e: Expr) -> Expr:
    if e.op in ("const", "var"):
        return e
    args = [_simplify(a) for a in e.args]
    return _rebuild(e.op, args)


def _rebuild(op: str, args: list[Expr]) -> Expr:
    if op == "neg":
        return neg(args[0])
    if op in FUNCTIONS:
        return func(op, args[0])
    return {"add": add, "sub": sub, "mul": mul, "div": div, "pow": power}[op](*args)


def substitute(e: Expr, mapping: Mapping[str, Expr | float]) -> Expr:
    """Simultaneously replace variables by expressions (or numbers)."""
    repl = {k: as_expr(v) for k, v in mapping.items()}
    cache: dict[Expr, Expr] = {}

    def walk(node: Expr) -> Expr:
        if not (node._free & repl.keys()):
            return node
        if node in cache:
            return cache[node]
        if node.op == "var":
            out = repl[node.value]
        else:
            out = _rebuild(node.op, [walk(a) for a in node.args])
        cache[node] = out
        return out

    return walk(e)


# --- parser ---------------------------------------------------------------------


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            literal = text[i:j]
            try:
                val = float(literal)
            except ValueError:
                raise ParseError(f"malformed number {literal!r}", i) from None
            tokens.append(("num", val, i))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("id", text[i:j], i))
            i = j
        elif ch in "+-*/^()":
            tokens.append((ch, ch, i))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, object, int]:
        return self.tokens[self.pos]

    def take(self, kind: str | None = None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ParseError(f"expected {kind!r}, found {found}", tok[2])
        self.pos += 1
        return tok

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            node = Expr("add" if op == "+" else "sub", (node, self.term()))
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            node = Expr("mul" if op == "*" else "div", (node, self.unary()))
        return node

    def unary(self) -> Expr:
        if self.peek()[0] == "-":
            self.take()
            return Expr("neg", (self.unary(),))
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek()[0] == "^":
            self.take()
            return Expr("pow", (base, self.unary()))
        return base

    def primary(self) -> Expr:
        kind, val, off = self.peek()
        if kind == "num":
            self.take()
            return Const(val)
        if kind == "id":
            self.take()
            if self.peek()[0] == "(":
                if val not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {val!r}", off)
                self.take("(")
                arg = self.expr()
                self.take(")")
                return Expr(val, (arg,))
            if val in FUNCTIONS:
                raise ParseError(f"function {val!r} needs an argument", off)
            return Var(val)
        if kind == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {found}", off)


def parse(text: str) -> Expr:
    """Parse ``text`` into an unsimplified tree."""
    p = _Parser(text)
    node = p.expr()
    kind, val, off = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected {val!r}", off)
    return node


# --- printer --------------------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _prec(e: Expr) -> int:
    if e.op == "const" and e.value < 0:
        return 5  # printed parenthesised
    return _PREC.get(e.op, 5)


def _num(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_string(e: Expr) -> str:
    """Canonical printer; ``parse(to_string(e)) == e`` for parser-built trees."""
    op = e.op
    if op == "const":
        return f"({_num(e.value)})" if e.value < 0 else _num(e.value)
    if op == "var":
        return e.value
    if op in FUNCTIONS:
        return f"{op}({to_string(e.args[0])})"
    if op == "neg":
        return "-" + _wrap(e.args[0], 3)
    left, right = e.args
    if op in ("add", "sub"):
        sym = "+" if op == "add" else "-"
        return f"{_wrap(left, 1)} {sym} {_wrap(right, 2)}"
    if op in ("mul", "div"):
        sym = "*" if op == "mul" else "/"
        return f"{_wrap(left, 2)}{sym}{_wrap(right, 3)}"
    return f"{_wrap(left, 5)}^{_wrap(right, 3)}"


def _wrap(e: Expr, min_prec: int) -> str:
    s = to_string(e)
    if _prec(e) < min_prec:
        return f"({s})"
    return s


# --- differentiation ------------------------------------------------------------


def _const_value(e: Expr) -> float | None:
    if e._free:
        return None
    try:
        return evaluate(e, {})
    except EvaluationError:
        return None


def differentiate(e: Expr, var: str) -> Expr:
    """Symbolic partial derivative with structural simplification."""
    return _diff(e, var)


@lru_cache(maxsize=262144)
def _diff(e: Expr, v: str) -> Expr:
    if v not in e._free:
        return ZERO
    op = e.op
    if op == "var":
        return ONE
    if op == "neg":
        return neg(_diff(e.args[0], v))
    if op in ("add", "sub"):
        a, b = e.args
        return (add if op == "add" else sub)(_diff(a, v), _diff(b, v))
    if op == "mul":
        a, b = e.args
        return add(mul(_diff(a, v), b), mul(a, _diff(b, v)))
    if op == "div":
        a, b = e.args
        da, db = _diff(a, v), _diff(b, v)
        if db.is_const(0.0):
            return div(da, b)
        return div(sub(mul(da, b), mul(a, db)), power(b, Const(2.0)))
    if op == "pow":
        base, ex = e.args
        q = _const_value(ex)
        if q is not None and float(q).is_integer():
            return mul(mul(Const(q), power(base, Const(q - 1.0))), _diff(base, v))
        # p^q = exp(q log p)
        return _diff(func("exp", mul(ex, func("log", base))), v)
    u = e.args[0]
    du = _diff(u, v)
    if op == "exp":
        return mul(e, du)
    if op == "log":
        return div(du, u)
    if op == "sqrt":
        return div(du, mul(Const(2.0), e))
    if op == "sin":
        return mul(func("cos", u), du)
    if op == "cos":
        return neg(mul(func("sin", u), du))
    if op == "sinh":
        return mul(func("cosh", u), du)
    if op == "cosh":
        return mul(func("sinh", u), du)
    raise ExprError(f"cannot differentiate node {op!r}")


# --- evaluation -----------------------------------------------------------------


def evaluate(e: Expr, bindings: Mapping[str, float]) -> float:
    """Evaluate ``e`` at a point, raising on unbound symbols or domain errors."""
    memo: dict[Expr, float] = {}

    def ev(node: Expr) -> float:
        got = memo.get(node)
        if got is not None:
            return got
        op = node.op
        if op == "const":
            out = node.value
        elif op == "var":
            if node.value not in bindings:
                raise UnboundSymbolError(node.value)
            out = float(bindings[node.value])
        elif op == "neg":
            out = -ev(node.args[0])
        elif op in FUNCTIONS:
            a = ev(node.args[0])
            if op == "log" and a <= 0.0:
                raise DomainError("log of non-positive value", node, bindings)
            if op == "sqrt" and a < 0.0:
                raise DomainError("sqrt of negative value", node, bindings)
            try:
                out = _SCALAR_FUNCS[op](a)
            except OverflowError:
                raise DomainError("overflow", node, bindings) from None
        else:
            a, b = ev(node.args[0]), ev(node.args[1])
            if op == "add":
                out = a + b
            elif op == "sub":
                out = a - b
            elif op == "mul":
                out = a * b
            elif op == "div":
                if b == 0.0:
                    raise DomainError("division by zero", node, bindings)
                out = a / b
            else:
                if a == 0.0 and b < 0.0:
                    raise DomainError("division by zero", node, bindings)
                if a < 0.0 and not float(b).is_integer():
                    raise DomainError("negative base with non-integer exponent", node, bindings)
                try:
                    out = math.pow(a, b)
                except OverflowError:
                    raise DomainError("overflow", node, bindings) from None
        if not math.isfinite(out):
            raise DomainError("non-finite result", node, bindings)
        memo[node] = out
        return out

    return ev(e)


_NP_FUNCS = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "sinh": np.sinh,
    "cosh": np.cosh,
}


class SampleSet:
    """Deterministic sample points plus a shared evaluation cache.

    Values are numpy arrays over the points; a point where any subexpression
    leaves its domain carries NaN from that node upward.
    """

    def __init__(self, columns: Mapping[str, np.ndarray | float], size: int):
        self.size = size
        self.columns = {k: np.broadcast_to(np.asarray(v, dtype=float), (size,)) for k, v in columns.items()}
        self._memo: dict[Expr, tuple[np.ndarray, np.ndarray]] = {}

    @classmethod
    def draw(
        cls,
        domain: Mapping[str, tuple[float, float]] | None = None,
        params: Mapping[str, float] | None = None,
        samples: int = DEFAULT_SAMPLES,
        seed: int = DEFAULT_SEED,
    ) -> "SampleSet":
        if samples < 1:
            raise ValueError("samples must be >= 1")
        dom = dict(DEFAULT_DOMAIN)
        dom.update(domain or {})
        rng = np.random.default_rng(seed)
        cols: dict[str, np.ndarray | float] = {}
        for name in COORDS:
            lo, hi = dom[name]
            if not hi >= lo:
                raise ValueError(f"empty domain for {name}: [{lo}, {hi}]")
            cols[name] = rng.uniform(lo, hi, samples)
        for name in sorted(set(dom) - set(COORDS)):
            lo, hi = dom[name]
            cols[name] = rng.uniform(lo, hi, samples)
        for k, v in (params or {}).items():
            cols[k] = float(v)
        return cls(cols, samples)

    def point(self, i: int) -> dict[str, float]:
        return {k: float(v[i]) for k, v in self.columns.items()}

    def _eval(self, node: Expr) -> tuple[np.ndarray, np.ndarray]:
        got = self._memo.get(node)
        if got is not None:
            return got
        op = node.op
        with np.errstate(all="ignore"):
            if op == "const":
                val = np.full(self.size, node.value)
                mag = np.abs(val)
            elif op == "var":
                if node.value not in self.columns:
                    raise UnboundSymbolError(node.value)
                val = np.array(self.columns[node.value], dtype=float)
                mag = np.abs(val)
            elif op == "neg":
                a, mag = self._eval(node.args[0])
                val = -a
            elif op in FUNCTIONS:
                a, ma = self._eval(node.args[0])
                if op == "log":
                    a = np.where(a > 0.0, a, np.nan)
                val = _NP_FUNCS[op](a)
                mag = np.fmax(ma, np.abs(val))
            else:
                (a, ma), (b, mb) = self._eval(node.args[0]), self._eval(node.args[1])
                if op == "add":
                    val = a + b
                elif op == "sub":
                    val = a - b
                elif op == "mul":
                    val = a * b
                elif op == "div":
                    val = a / np.where(b != 0.0, b, np.nan)
                else:
                    val = np.power(a, b)
                    val = np.where(np.isnan(a) | np.isnan(b), np.nan, val)
                mag = np.fmax(np.fmax(ma, mb), np.abs(val))
            val = np.where(np.isfinite(val), val, np.nan)
        out = (val, mag)
        self._memo[node] = out
        return out

    def values(self, e: Expr) -> np.ndarray:
        return self._eval(e)[0]

    def magnitudes(self, e: Expr) -> np.ndarray:
        """Largest intermediate magnitude per point."""
        return self._eval(e)[1]

    def tensor(self, arr) -> np.ndarray:
        """Evaluate an object array of Expr; result has a trailing point axis."""
        arr = np.asarray(arr, dtype=object)
        out = np.empty(arr.shape + (self.size,))
        for idx in np.ndindex(arr.shape):
            out[idx] = self.values(arr[idx])
        return out

    def is_zero(self, e: Expr, rtol: float = ZERO_RTOL) -> bool:
        if e.is_const(0.0):
            return True
        val, mag = self._eval(e)
        ok = ~np.isnan(val)
        if not ok.any():
            raise IndeterminateError(f"every sample point failed for '{e}'")
        return bool(np.all(np.abs(val[ok]) <= rtol * (1.0 + mag[ok])))


def is_identically_zero(
    e: Expr,
    domain: Mapping[str, tuple[float, float]] | None = None,
    params: Mapping[str, float] | None = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> bool:
    """Randomised one-sided zero test.

    ``False`` means some sample point certainly gave a non-zero value; ``True``
    means every evaluable point was within ``1e-9 * (1 + max intermediate
    magnitude)`` of zero.
    """
    return SampleSet.draw(domain, params, samples, seed).is_zero(e)


# --- compilation to numpy callables ---------------------------------------------


def _source(e: Expr, consts: Mapping[str, float]) -> str:
    op = e.op
    if op == "const":
        return repr(e.value)
    if op == "var":
        if e.value in consts:
            return repr(float(consts[e.value]))
        return e.value
    if op == "neg":
        return f"(-{_source(e.args[0], consts)})"
    if op in FUNCTIONS:
        return f"_np.{op}({_source(e.args[0], consts)})"
    a, b = (_source(x, consts) for x in e.args)
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "**"}[op]
    return f"({a} {sym} {b})"


def compile_exprs(
    exprs: Iterable[Expr], argnames: Iterable[str] = COORDS, consts: Mapping[str, float] | None = None
):
    """Compile expressions to one numpy function of ``argnames``.

    The returned callable gives a tuple of values, one per expression, and
    works on floats or broadcastable arrays. Domain failures show up as
    non-finite values rather than exceptions.
    """
    exprs = list(exprs)
    consts = dict(consts or {})
    args = list(argnames)
    unbound = set().union(*(e._free for e in exprs)) - set(args) - set(consts) if exprs else set()
    if unbound:
        raise UnboundSymbolError(sorted(unbound)[0])
    body = ", ".join(f"({_source(e, consts)}) + 0.0 * {args[0]}" for e in exprs) if args else ""
    src = f"def _f({', '.join(args)}):\n    return ({body}{',' if len(exprs) == 1 else ''})\n"
    namespace = {"_np": np}
    exec(compile(src, "<planeaffine-compiled>", "exec"), namespace)
    return namespace["_f"]

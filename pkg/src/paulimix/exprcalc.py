"""Tiny expression language for time-dependent decoherence functions.

Grammar (ASCII source, a single free variable ``t``)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative exponent
    atom   := NUMBER | 't' | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := 'exp' | 'ln' | 'sin' | 'cos' | 'sqrt'

so ``^`` binds tighter than unary minus, which binds tighter than ``*``/``/``,
which bind tighter than ``+``/``-`` (``-t^2`` is ``-(t^2)``).

Trees are evaluated as dual numbers ``(value, d/dt)``: forward-mode automatic
differentiation, so first derivatives are exact to rounding and no symbolic
manipulation happens anywhere.  Evaluation works elementwise on numpy arrays
of times as well as on scalars.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ParseError",
    "DomainError",
    "Num",
    "Var",
    "Unary",
    "Binary",
    "ExprAst",
    "DualValue",
    "parse",
    "eval_dual",
]

_FUNCTIONS = ("exp", "ln", "sin", "cos", "sqrt")


class ParseError(ValueError):
    """Syntax or identifier error; carries the 0-based source position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class DomainError(ArithmeticError):
    """Evaluation left the real domain; carries the offending time."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t={t!r}")
        self.t = t


# ---------------------------------------------------------------------------
# Expression trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    """The single time variable ``t``."""


@dataclass(frozen=True)
class Unary:
    op: str  # 'neg', 'exp', 'ln', 'sin', 'cos', 'sqrt'
    arg: "ExprAst"


@dataclass(frozen=True)
class Binary:
    op: str  # '+', '-', '*', '/', '^'
    left: "ExprAst"
    right: "ExprAst"


ExprAst = Union[Num, Var, Unary, Binary]


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Token:
    kind: str  # 'num', 'ident', 'op', 'end'
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch in "+-*/^()":
            tokens.append(_Token("op", ch, i))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            # optional exponent part
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    while k < n and source[k].isdigit():
                        k += 1
                    j = k
            text = source[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError(f"malformed number {text!r}", i) from None
            tokens.append(_Token("num", text, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(_Token("ident", source[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def take(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> None:
        tok = self.take()
        if tok.kind != "op" or tok.text != text:
            raise ParseError(f"expected {text!r}", tok.pos)

    def expr(self) -> ExprAst:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.take().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> ExprAst:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.take().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> ExprAst:
        if self.peek().kind == "op" and self.peek().text == "-":
            self.take()
            return Unary("neg", self.unary())
        return self.power()

    def power(self) -> ExprAst:
        node = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            # exponent re-enters at unary so '2^-t' parses; right-associative
            node = Binary("^", node, self.unary())
        return node

    def atom(self) -> ExprAst:
        tok = self.take()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "ident":
            if tok.text == "t":
                return Var()
            if tok.text in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(tok.text, arg)
            raise ParseError(f"unknown identifier {tok.text!r}", tok.pos)
        if tok.kind == "op" and tok.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "end":
            raise ParseError("unexpected end of input", tok.pos)
        raise ParseError(f"unexpected {tok.text!r}", tok.pos)


def parse(source: str) -> ExprAst:
    """Parse ``source`` into an immutable expression tree.

    Raises :class:`ParseError` (with position) for syntax errors, unknown
    identifiers, and empty input.
    """
    if not source.strip():
        raise ParseError("empty expression", 0)
    parser = _Parser(_tokenize(source))
    node = parser.expr()
    tail = parser.peek()
    if tail.kind != "end":
        raise ParseError(f"trailing input {tail.text!r}", tail.pos)
    return node


# ---------------------------------------------------------------------------
# Dual-number evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DualValue:
    """A value together with its derivative d/dt (forward-mode dual number)."""

    value: Union[float, np.ndarray]
    derivative: Union[float, np.ndarray]

    def __add__(self, other: "DualValue") -> "DualValue":
        return DualValue(self.value + other.value, self.derivative + other.derivative)

    def __sub__(self, other: "DualValue") -> "DualValue":
        return DualValue(self.value - other.value, self.derivative - other.derivative)

    def __neg__(self) -> "DualValue":
        return DualValue(-self.value, -self.derivative)

    def __mul__(self, other: "DualValue") -> "DualValue":
        return DualValue(
            self.value * other.value,
            self.derivative * other.value + self.value * other.derivative,
        )


def _first_bad_time(t: np.ndarray, bad: np.ndarray) -> float:
    flat_t = np.broadcast_to(t, bad.shape).ravel()
    return float(flat_t[bad.ravel().argmax()])


def _contains_var(node: ExprAst) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Unary):
        return _contains_var(node.arg)
    if isinstance(node, Binary):
        return _contains_var(node.left) or _contains_var(node.right)
    return False


def _eval(node: ExprAst, t: np.ndarray) -> DualValue:
    if isinstance(node, Num):
        return DualValue(np.full_like(t, node.value), np.zeros_like(t))
    if isinstance(node, Var):
        return DualValue(t.copy(), np.ones_like(t))
    if isinstance(node, Unary):
        u = _eval(node.arg, t)
        return _apply_unary(node.op, u, t)
    if isinstance(node, Binary):
        if node.op == "^":
            return _apply_pow(node, t)
        left = _eval(node.left, t)
        right = _eval(node.right, t)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            zero = right.value == 0
            if np.any(zero):
                raise DomainError("division by zero", _first_bad_time(t, zero))
            val = left.value / right.value
            der = (left.derivative - val * right.derivative) / right.value
            return DualValue(val, der)
    raise TypeError(f"not an expression node: {node!r}")


def _apply_unary(op: str, u: DualValue, t: np.ndarray) -> DualValue:
    if op == "neg":
        return -u
    if op == "exp":
        e = np.exp(u.value)
        return DualValue(e, e * u.derivative)
    if op == "ln":
        bad = u.value <= 0
        if np.any(bad):
            raise DomainError("ln of non-positive argument", _first_bad_time(t, bad))
        return DualValue(np.log(u.value), u.derivative / u.value)
    if op == "sin":
        return DualValue(np.sin(u.value), np.cos(u.value) * u.derivative)
    if op == "cos":
        return DualValue(np.cos(u.value), -np.sin(u.value) * u.derivative)
    if op == "sqrt":
        bad = u.value < 0
        if np.any(bad):
            raise DomainError("sqrt of negative argument", _first_bad_time(t, bad))
        root = np.sqrt(u.value)
        zero = root == 0
        if np.any(zero):
            raise DomainError(
                "sqrt derivative singular at zero argument", _first_bad_time(t, zero)
            )
        return DualValue(root, u.derivative / (2.0 * root))
    raise ValueError(f"unknown unary op {op!r}")


def _apply_pow(node: Binary, t: np.ndarray) -> DualValue:
    base = _eval(node.left, t)
    if not _contains_var(node.right):
        # constant exponent: evaluate once, keep the power rule so negative
        # bases work for integer exponents
        n = float(_eval(node.right, np.zeros(1)).value[0])
        if n == np.floor(n):
            if n < 0:
                zero = base.value == 0
                if np.any(zero):
                    raise DomainError(
                        "zero base with negative exponent", _first_bad_time(t, zero)
                    )
            val = base.value**n
            if n == 0:
                return DualValue(val, np.zeros_like(t))
            der = n * base.value ** (n - 1) * base.derivative
            return DualValue(val, der)
        bad = base.value <= 0
        if np.any(bad):
            raise DomainError(
                "non-positive base with non-integer exponent", _first_bad_time(t, bad)
            )
        val = base.value**n
        return DualValue(val, n * base.value ** (n - 1) * base.derivative)
    expo = _eval(node.right, t)
    bad = base.value <= 0
    if np.any(bad):
        raise DomainError(
            "non-positive base with variable exponent", _first_bad_time(t, bad)
        )
    val = base.value**expo.value
    log_base = np.log(base.value)
    der = val * (expo.derivative * log_base + expo.value * base.derivative / base.value)
    return DualValue(val, der)


def eval_dual(ast: ExprAst, t) -> DualValue:
    """Evaluate ``ast`` and its time derivative at ``t`` (scalar or array).

    Returns a :class:`DualValue`; raises :class:`DomainError` (carrying the
    first offending time) when evaluation leaves the real domain or produces
    a non-finite value or derivative.
    """
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    if scalar:
        arr = arr.reshape(1)
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite evaluation time", float(arr[~np.isfinite(arr)][0]))
    with np.errstate(all="ignore"):
        out = _eval(ast, arr)
    bad = ~(np.isfinite(out.value) & np.isfinite(out.derivative))
    if np.any(bad):
        raise DomainError("non-finite result", _first_bad_time(arr, bad))
    if scalar:
        return DualValue(float(out.value[0]), float(out.derivative[0]))
    return out

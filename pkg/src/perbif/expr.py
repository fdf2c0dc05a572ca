"""Map-family expressions: a small recursive descent parser and evaluator.

Grammar (``x`` is the dynamic variable, ``l1 .. lmu`` the parameters)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ['^' ['-'] INTEGER]
    primary := NUMBER | 'x' | PARAM | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := 'tan' | 'sin' | 'cos' | 'exp'

Numeric literals are read as exact rationals, so ``0.5`` is ``1/2``.
"""

import re
from dataclasses import dataclass
from fractions import Fraction

from . import numeric
from .errors import ExprSyntaxError, NumericError, ParamIndexOutOfRange, UnknownIdentifier
from .numeric import Grad, Jet

FUNCTIONS = ("tan", "sin", "cos", "exp")


class Expr:
    """Base class of the AST nodes; nodes are frozen dataclasses."""

    def __call__(self, x, params=()):
        return evaluate(self, x, params)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction


@dataclass(frozen=True)
class VarX(Expr):
    pass


@dataclass(frozen=True)
class Param(Expr):
    index: int  # 1-based


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class PowInt(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


_BINARY = {"+": Add, "-": Sub, "*": Mul, "/": Div}
_SYMBOL = {Add: "+", Sub: "-", Mul: "*", Div: "/"}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)
_PARAM = re.compile(r"l(\d+)")


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", position=pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, mu):
        self.text = text
        self.mu = mu
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"found {found}", position=pos, expected=repr(value))

    def parse(self):
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", position=pos, expected="operator or end of input")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = _BINARY[op](node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = _BINARY[op](node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[:2] != ("op", "^"):
            return base
        self.take()
        sign = 1
        if self.peek()[:2] == ("op", "-"):
            self.take()
            sign = -1
        kind, text, pos = self.take()
        if kind != "num" or not text.isdigit():
            raise ExprSyntaxError("exponent must be an integer literal", position=pos, expected="integer")
        if self.peek()[:2] == ("op", "^"):
            raise ExprSyntaxError(
                "chained powers are ambiguous; add parentheses", position=self.peek()[2]
            )
        return PowInt(base, sign * int(text))

    def primary(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Const(Fraction(text))
        if kind == "name":
            if text == "x":
                return VarX()
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            m = _PARAM.fullmatch(text)
            if m:
                idx = int(m.group(1))
                if idx < 1 or idx > self.mu:
                    raise ParamIndexOutOfRange(
                        f"parameter {text} out of range: the system has mu = {self.mu}"
                    )
                return Param(idx)
            raise UnknownIdentifier(f"unknown identifier {text!r} at position {pos}")
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"found {found}", position=pos, expected="number, x, parameter, function or '('")


def parse(text, mu):
    """Parse ``text`` into an expression tree over parameters ``l1..l{mu}``."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", position=0)
    return _Parser(text, mu).parse()


def _const_text(v):
    v = Fraction(v)
    if v < 0:
        return f"(-{_const_text(-v)})"
    if v.denominator == 1:
        return str(v.numerator)
    den, twos, fives = v.denominator, 0, 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        # not a terminating decimal; prints as a quotient of two literals
        return f"({v.numerator}/{v.denominator})"
    digits = max(twos, fives)
    s = str(v.numerator * 10**digits // v.denominator).rjust(digits + 1, "0")
    return f"{s[:-digits]}.{s[-digits:]}"


def to_text(e):
    """Print an expression so that :func:`parse` rebuilds the same tree."""
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, VarX):
        return "x"
    if isinstance(e, Param):
        return f"l{e.index}"
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, (Add, Sub, Mul, Div)):
        return f"({to_text(e.left)} {_SYMBOL[type(e)]} {to_text(e.right)})"
    if isinstance(e, PowInt):
        base = to_text(e.base)
        if isinstance(e.base, PowInt):
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


def walk(e):
    yield e
    for child in _children(e):
        yield from walk(child)


def _children(e):
    if isinstance(e, (Neg,)):
        return (e.arg,)
    if isinstance(e, Call):
        return (e.arg,)
    if isinstance(e, PowInt):
        return (e.base,)
    if isinstance(e, (Add, Sub, Mul, Div)):
        return (e.left, e.right)
    return ()


def max_param(e):
    return max((n.index for n in walk(e) if isinstance(n, Param)), default=0)


def has_transcendental(e):
    return any(isinstance(n, Call) for n in walk(e))


# ---------------------------------------------------------------------------
# evaluation


def _eval(e, x, params, exact, floor):
    if isinstance(e, Const):
        return e.value if exact else float(e.value)
    if isinstance(e, VarX):
        return x
    if isinstance(e, Param):
        return params[e.index - 1]
    if isinstance(e, Neg):
        return -_eval(e.arg, x, params, exact, floor)
    if isinstance(e, Add):
        return _eval(e.left, x, params, exact, floor) + _eval(e.right, x, params, exact, floor)
    if isinstance(e, Sub):
        return _eval(e.left, x, params, exact, floor) - _eval(e.right, x, params, exact, floor)
    if isinstance(e, Mul):
        return _eval(e.left, x, params, exact, floor) * _eval(e.right, x, params, exact, floor)
    if isinstance(e, Div):
        return numeric.div(
            _eval(e.left, x, params, exact, floor), _eval(e.right, x, params, exact, floor), floor
        )
    if isinstance(e, PowInt):
        return numeric.pow_int(_eval(e.base, x, params, exact, floor), e.exponent, floor)
    if isinstance(e, Call):
        arg = _eval(e.arg, x, params, exact, floor)
        return getattr(numeric, e.func)(arg, floor)
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e, x, params=(), floor=numeric.DEFAULT_FLOOR):
    """Evaluate ``e`` at ``x`` over whatever scalar kind ``x``/``params`` carry.

    Exact mode (``Fraction``/``int`` inputs throughout) keeps literals exact;
    any floating input switches literals to ``float``.
    """
    needed = max_param(e)
    if len(params) < needed:
        raise ParamIndexOutOfRange(f"expression uses l{needed} but only {len(params)} parameters given")
    exact = numeric.is_exact(x) and all(numeric.is_exact(p) for p in params)
    return _eval(e, x, params, exact, floor)


def eval_jet(e, x0, params, order, floor=numeric.DEFAULT_FLOOR):
    """Plain Taylor jet of ``e`` in ``x`` at ``x0`` (no parameter gradients)."""
    return evaluate(e, Jet.variable(x0, order), params, floor)


def lift_params(params):
    n = len(params)
    return [p if isinstance(p, Grad) else Grad.seed(p, i, n) for i, p in enumerate(params)]


def eval_jet_grad(e, x0, params, order, floor=numeric.DEFAULT_FLOOR):
    """Jet in ``x`` whose coefficients carry gradients in the parameters.

    Coefficient k holds ``d^k f/dx^k / k!`` with gradient
    ``d^{k+1} f / dx^k dl_i / k!``.  ``x0`` may itself be a :class:`Grad`
    (for instance the image of a previous map), in which case its gradient is
    propagated through the chain rule.
    """
    if order < 0:
        raise ValueError("jet order must be non-negative")
    n = len(params)
    gparams = lift_params(params)
    if not isinstance(x0, Grad):
        x0 = Grad.constant(x0, n)
    try:
        out = evaluate(e, Jet.variable(x0, order), gparams, floor)
    except NumericError as exc:
        raise exc.with_context(f"in {to_text(e)}")
    if not isinstance(out, Jet):
        return Jet.constant(out, order, at=x0)
    return Jet(out.coeffs, at=x0)

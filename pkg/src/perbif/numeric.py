"""Scalar tower and truncated Taylor jets.

The tower is made of ordinary Python numbers plus two wrappers:

* ``float`` (or a numpy float array, evaluated element-wise),
* ``fractions.Fraction`` for exact arithmetic,
* :class:`Grad`, a value carrying a first-order gradient in the parameters,
* :class:`Jet`, a truncated Taylor expansion whose coefficients are any of
  the above.

Jets store *normalized* coefficients ``c_k = u^{(k)}(x0) / k!``; use
:meth:`Jet.derivative` to get raw derivatives back.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import (
    DivisionByNearZero,
    ExpansionPointMismatch,
    InsufficientOrder,
    TanPole,
    UnsupportedInRationalMode,
)

DEFAULT_FLOOR = 1e-12

EXACT_TYPES = (int, Fraction)


def base_value(v):
    """Strip jets and gradients down to the underlying number."""
    while True:
        if isinstance(v, Jet):
            v = v.coeffs[0]
        elif isinstance(v, Grad):
            v = v.value
        else:
            return v


def is_exact(v):
    base = base_value(v)
    return isinstance(base, EXACT_TYPES) and not isinstance(base, bool)


def near_zero(v, floor=DEFAULT_FLOOR):
    """Exact values test against zero, floating ones against ``floor``."""
    base = base_value(v)
    if isinstance(base, EXACT_TYPES):
        return base == 0
    return bool(np.any(np.abs(base) < floor))


class Grad:
    """A value together with its gradient with respect to the parameters."""

    __slots__ = ("value", "grad")
    __array_ufunc__ = None

    def __init__(self, value, grad=()):
        self.value = value
        self.grad = tuple(grad)

    @classmethod
    def constant(cls, value, n):
        return cls(value, (value * 0,) * n)

    @classmethod
    def seed(cls, value, index, n):
        zero = value * 0
        return cls(value, tuple(zero + 1 if i == index else zero for i in range(n)))

    def _check(self, other):
        if len(other.grad) != len(self.grad):
            raise ValueError(
                f"gradient length mismatch: {len(self.grad)} vs {len(other.grad)}"
            )

    def __add__(self, o):
        if isinstance(o, Jet):
            return NotImplemented
        if isinstance(o, Grad):
            self._check(o)
            return Grad(self.value + o.value, (a + b for a, b in zip(self.grad, o.grad)))
        return Grad(self.value + o, self.grad)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Jet):
            return NotImplemented
        if isinstance(o, Grad):
            self._check(o)
            return Grad(self.value - o.value, (a - b for a, b in zip(self.grad, o.grad)))
        return Grad(self.value - o, self.grad)

    def __rsub__(self, o):
        return Grad(o - self.value, (-a for a in self.grad))

    def __mul__(self, o):
        if isinstance(o, Jet):
            return NotImplemented
        if isinstance(o, Grad):
            self._check(o)
            v, w = self.value, o.value
            return Grad(v * w, (v * b + w * a for a, b in zip(self.grad, o.grad)))
        return Grad(self.value * o, (a * o for a in self.grad))

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Jet):
            return NotImplemented
        if isinstance(o, Grad):
            self._check(o)
            q = self.value / o.value
            return Grad(q, ((a - q * b) / o.value for a, b in zip(self.grad, o.grad)))
        return Grad(self.value / o, (a / o for a in self.grad))

    def __rtruediv__(self, o):
        q = o / self.value
        return Grad(q, (-q * a / self.value for a in self.grad))

    def __neg__(self):
        return Grad(-self.value, (-a for a in self.grad))

    def __pos__(self):
        return self

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n == 0:
            return Grad.constant(self.value * 0 + 1, len(self.grad))
        d = n * self.value ** (n - 1)
        return Grad(self.value**n, (d * a for a in self.grad))

    def __eq__(self, o):
        if not isinstance(o, Grad):
            return NotImplemented
        return self.value == o.value and self.grad == o.grad

    __hash__ = None

    def __repr__(self):
        return f"Grad({self.value!r}, {list(self.grad)!r})"


def value_of(v):
    """Drop the gradient part of a :class:`Grad`; identity otherwise."""
    return v.value if isinstance(v, Grad) else v


def grad_of(v, n):
    """Gradient of ``v``; plain numbers have a zero gradient."""
    if isinstance(v, Grad):
        return v.grad
    return (v * 0,) * n


# ---------------------------------------------------------------------------
# scalar transcendentals


def _reject_exact(name, v):
    if isinstance(v, EXACT_TYPES):
        raise UnsupportedInRationalMode(
            f"{name} cannot be evaluated exactly; use float mode"
        )


def _scalar_fn(name, v, floor):
    if isinstance(v, Grad):
        if name == "exp":
            e = _scalar_fn("exp", v.value, floor)
            return Grad(e, (e * a for a in v.grad))
        if name == "sin":
            c = _scalar_fn("cos", v.value, floor)
            return Grad(_scalar_fn("sin", v.value, floor), (c * a for a in v.grad))
        if name == "cos":
            s = _scalar_fn("sin", v.value, floor)
            return Grad(_scalar_fn("cos", v.value, floor), (-s * a for a in v.grad))
        t = _scalar_fn("tan", v.value, floor)
        w = 1 + t * t
        return Grad(t, (w * a for a in v.grad))
    _reject_exact(name, v)
    if name == "tan" and bool(np.any(np.abs(np.cos(v)) < floor)):
        raise TanPole(f"tan evaluated at a pole (x = {v})")
    return getattr(np, name)(v)


def sin(v, floor=DEFAULT_FLOOR):
    if isinstance(v, Jet):
        return _jet_sincos(v, floor)[0]
    return _scalar_fn("sin", v, floor)


def cos(v, floor=DEFAULT_FLOOR):
    if isinstance(v, Jet):
        return _jet_sincos(v, floor)[1]
    return _scalar_fn("cos", v, floor)


def exp(v, floor=DEFAULT_FLOOR):
    if isinstance(v, Jet):
        return _jet_exp(v, floor)
    return _scalar_fn("exp", v, floor)


def tan(v, floor=DEFAULT_FLOOR):
    if isinstance(v, Jet):
        return _jet_tan(v, floor)
    return _scalar_fn("tan", v, floor)


def div(a, b, floor=DEFAULT_FLOOR):
    """Division with the near-zero guard applied to the divisor."""
    if isinstance(b, Jet):
        if not isinstance(a, Jet):
            a = Jet.constant(a, b.order, at=b.at)
        return jet_div(a, b, floor)
    if near_zero(b, floor):
        raise DivisionByNearZero(f"division by {base_value(b)}")
    if isinstance(a, Jet):
        return a.map(lambda c: c / b)
    return a / b


def pow_int(u, n, floor=DEFAULT_FLOOR):
    if not isinstance(n, int) or isinstance(n, bool):
        raise TypeError("exponent must be an integer")
    if n < 0:
        return div(1, pow_int(u, -n, floor), floor)
    if not isinstance(u, Jet):
        return u**n
    result = Jet.constant(u.coeffs[0] * 0 + 1, u.order, at=u.at)
    base = u
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


# ---------------------------------------------------------------------------
# jets


class Jet:
    """Truncated Taylor expansion ``sum_k c_k h^k`` around the point ``at``."""

    __slots__ = ("coeffs", "at")
    __array_ufunc__ = None

    def __init__(self, coeffs, at=None):
        coeffs = tuple(coeffs)
        if not coeffs:
            raise ValueError("a jet needs at least one coefficient")
        self.coeffs = coeffs
        self.at = at

    @property
    def order(self):
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k]

    def __iter__(self):
        return iter(self.coeffs)

    @classmethod
    def constant(cls, value, order, at=None):
        zero = value * 0
        return cls((value,) + (zero,) * order, at=at)

    @classmethod
    def variable(cls, x0, order):
        zero = x0 * 0
        coeffs = [x0] + [zero] * order
        if order >= 1:
            coeffs[1] = zero + 1
        return cls(coeffs, at=x0)

    @classmethod
    def from_derivatives(cls, derivs, at=None):
        return cls((d / math.factorial(k) for k, d in enumerate(derivs)), at=at)

    def derivative(self, k):
        """Raw derivative ``u^{(k)}(x0)``."""
        return self.coeffs[k] * math.factorial(k)

    def derivatives(self):
        return [self.derivative(k) for k in range(len(self.coeffs))]

    def map(self, fn):
        return Jet((fn(c) for c in self.coeffs), at=self.at)

    def _peer(self, o):
        if o.order != self.order:
            raise ValueError(f"jet orders differ: {self.order} vs {o.order}")
        return o.coeffs

    def _at(self, o):
        return self.at if self.at is not None else o.at

    def __add__(self, o):
        if isinstance(o, Jet):
            b = self._peer(o)
            return Jet((x + y for x, y in zip(self.coeffs, b)), at=self._at(o))
        return Jet((self.coeffs[0] + o,) + self.coeffs[1:], at=self.at)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Jet):
            b = self._peer(o)
            return Jet((x - y for x, y in zip(self.coeffs, b)), at=self._at(o))
        return Jet((self.coeffs[0] - o,) + self.coeffs[1:], at=self.at)

    def __rsub__(self, o):
        return Jet((o - self.coeffs[0],) + tuple(-c for c in self.coeffs[1:]), at=self.at)

    def __neg__(self):
        return Jet((-c for c in self.coeffs), at=self.at)

    def __pos__(self):
        return self

    def __mul__(self, o):
        if isinstance(o, Jet):
            a, b = self.coeffs, self._peer(o)
            out = []
            for k in range(len(a)):
                s = a[0] * b[k]
                for i in range(1, k + 1):
                    s = s + a[i] * b[k - i]
                out.append(s)
            return Jet(out, at=self._at(o))
        return Jet((c * o for c in self.coeffs), at=self.at)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return div(self, o)

    def __rtruediv__(self, o):
        return div(Jet.constant(o, self.order, at=self.at), self)

    def __pow__(self, n):
        return pow_int(self, n)

    def __eq__(self, o):
        if not isinstance(o, Jet):
            return NotImplemented
        return len(self.coeffs) == len(o.coeffs) and all(
            bool(np.all(x == y)) for x, y in zip(self.coeffs, o.coeffs)
        )

    __hash__ = None

    def __repr__(self):
        return f"Jet({list(self.coeffs)!r}, at={self.at!r})"


def jet_div(a, b, floor=DEFAULT_FLOOR):
    b0 = b.coeffs[0]
    if near_zero(b0, floor):
        raise DivisionByNearZero(f"jet division by a series with leading term {base_value(b0)}")
    b._peer(a)
    ac = a.coeffs
    out = []
    for k in range(len(b.coeffs)):
        s = ac[k]
        for j in range(1, k + 1):
            s = s - b.coeffs[j] * out[k - j]
        out.append(s / b0)
    return Jet(out, at=a._at(b))


def _jet_exp(u, floor):
    c = u.coeffs
    out = [exp(c[0], floor)]
    for k in range(1, len(c)):
        s = c[1] * out[k - 1]
        for j in range(2, k + 1):
            s = s + j * c[j] * out[k - j]
        out.append(s / k)
    return Jet(out, at=u.at)


def _jet_sincos(u, floor):
    c = u.coeffs
    s = [sin(c[0], floor)]
    co = [cos(c[0], floor)]
    for k in range(1, len(c)):
        a = c[1] * co[k - 1]
        b = c[1] * s[k - 1]
        for j in range(2, k + 1):
            a = a + j * c[j] * co[k - j]
            b = b + j * c[j] * s[k - j]
        s.append(a / k)
        co.append(-b / k)
    return Jet(s, at=u.at), Jet(co, at=u.at)


def _jet_tan(u, floor):
    # t' = (1 + t^2) u'
    c = u.coeffs
    t = [tan(c[0], floor)]
    w = [1 + t[0] * t[0]]
    for k in range(1, len(c)):
        s = c[1] * w[k - 1]
        for j in range(2, k + 1):
            s = s + j * c[j] * w[k - j]
        t.append(s / k)
        sq = t[0] * t[k]
        for i in range(1, k + 1):
            sq = sq + t[i] * t[k - i]
        w.append(sq)
    return Jet(t, at=u.at)


def jet_lift(value, kind, order):
    """Lift a scalar to a jet as either a constant or the expansion variable."""
    if order < 0:
        raise ValueError("jet order must be non-negative")
    if kind == "constant":
        return Jet.constant(value, order, at=value)
    if kind == "variable":
        return Jet.variable(value, order)
    raise ValueError(f"unknown lift kind {kind!r}")


_UNARY = {"neg": lambda a, floor: -a, "tan": tan, "sin": sin, "cos": cos, "exp": exp}


def jet_apply(op, *args, floor=DEFAULT_FLOOR):
    """Apply a named operation to jets (and plain scalars for the binary ops)."""
    if op in _UNARY:
        (a,) = args
        return _UNARY[op](a, floor)
    if op == "pow_int":
        a, n = args
        return pow_int(a, n, floor)
    a, b = args
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return div(a, b, floor)
    raise ValueError(f"unknown jet operation {op!r}")


def _points_match(p, q, tol):
    p, q = base_value(p), base_value(q)
    if isinstance(p, EXACT_TYPES) and isinstance(q, EXACT_TYPES):
        return p == q
    return bool(np.all(np.abs(p - q) <= tol * np.maximum(1.0, np.abs(q))))


def jet_compose(outer, inner, tol=1e-9):
    """Jet of ``outer o inner`` by truncated series substitution.

    ``outer`` must be expanded at the value ``inner`` takes at its own
    expansion point.
    """
    if outer.order != inner.order:
        raise ValueError(f"jet orders differ: {outer.order} vs {inner.order}")
    if outer.at is None:
        raise ExpansionPointMismatch("outer jet carries no expansion point")
    if not _points_match(outer.at, inner.coeffs[0], tol):
        raise ExpansionPointMismatch(
            f"outer expanded at {base_value(outer.at)}, inner value is {base_value(inner.coeffs[0])}"
        )
    order = inner.order
    zero = inner.coeffs[0] * 0
    h = Jet((zero,) + inner.coeffs[1:], at=inner.at)
    result = Jet.constant(outer.coeffs[order], order, at=inner.at)
    for k in range(order - 1, -1, -1):
        result = result * h + outer.coeffs[k]
    return result


# ---------------------------------------------------------------------------
# explicit Faa di Bruno formula, kept as an independent check on jet_compose


@dataclass(frozen=True)
class BrunoTerm:
    beta: tuple
    n: int
    coefficient: Fraction


@lru_cache(maxsize=None)
def _partitions(m):
    terms = []

    def rec(j, remaining, beta):
        if j > m:
            if remaining == 0:
                terms.append(tuple(beta))
            return
        for b in range(remaining // j + 1):
            rec(j + 1, remaining - j * b, beta + [b])

    rec(1, m, [])
    out = []
    for beta in terms:
        denom = 1
        for j, b in enumerate(beta, 1):
            denom *= math.factorial(b) * math.factorial(j) ** b
        out.append(BrunoTerm(beta, sum(beta), Fraction(math.factorial(m), denom)))
    return tuple(out)


def bruno_partitions(m):
    """All ``beta`` with ``sum_j j*beta_j == m`` and their Faa di Bruno weights."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    return list(_partitions(m))


def bruno_compose(outer_derivs, inner_derivs, m):
    """m-th raw derivative of ``g o f`` from raw derivatives of g and f.

    ``outer_derivs[n]`` is ``g^{(n)}`` at ``f(a)`` and ``inner_derivs[j]`` is
    ``f^{(j)}(a)``; index 0 holds the function value (unused for m >= 1).
    """
    if len(outer_derivs) < m + 1 or len(inner_derivs) < m + 1:
        raise InsufficientOrder(f"need derivatives up to order {m}")
    total = None
    for term in bruno_partitions(m):
        prod = outer_derivs[term.n]
        for j, b in enumerate(term.beta, 1):
            if b:
                prod = prod * inner_derivs[j] ** b
        prod = prod * term.coefficient.numerator / term.coefficient.denominator
        total = prod if total is None else total + prod
    return total

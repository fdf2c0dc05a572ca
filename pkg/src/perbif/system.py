"""p-periodic systems of one-dimensional maps."""

import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ClosureDefectExceeded, IndexOutOfRange, NotAFixedPoint, NumericError
from .expr import Expr, eval_jet_grad, evaluate, has_transcendental, max_param, parse, to_text
from .numeric import Grad, Jet, base_value, is_exact, jet_compose


class FiberEscapeWarning(RuntimeWarning):
    """An orbit point left the fiber interval it should live in."""


@dataclass(frozen=True)
class PeriodicSystem:
    """Cyclic list of maps ``f_0 .. f_{p-1}`` sharing ``mu`` parameters.

    ``fibers`` optionally holds one closed interval per map; ``f_j`` acts on
    fiber ``j`` and lands in fiber ``j+1 (mod p)``.
    """

    maps: tuple
    mu: int
    fibers: tuple = None

    def __post_init__(self):
        maps = tuple(self.maps)
        if not maps:
            raise ValueError("a periodic system needs at least one map")
        if self.mu < 0:
            raise ValueError("mu must be non-negative")
        for j, m in enumerate(maps):
            if not isinstance(m, Expr):
                raise TypeError(f"map {j} is not an expression")
            if max_param(m) > self.mu:
                raise ValueError(f"map {j} uses l{max_param(m)} but mu = {self.mu}")
        object.__setattr__(self, "maps", maps)
        if self.fibers is not None:
            fibers = tuple((Fraction(lo), Fraction(hi)) for lo, hi in self.fibers)
            if len(fibers) != len(maps):
                raise ValueError("need exactly one fiber interval per map")
            for lo, hi in fibers:
                if lo > hi:
                    raise ValueError(f"empty fiber interval [{lo}, {hi}]")
            object.__setattr__(self, "fibers", fibers)

    @property
    def p(self):
        return len(self.maps)

    @classmethod
    def from_strings(cls, texts, mu, fibers=None):
        return cls(tuple(parse(t, mu) for t in texts), mu, fibers)

    @classmethod
    def from_json(cls, data):
        """Build a system from a dict, a JSON string or a path to a JSON file."""
        if isinstance(data, str):
            if data.lstrip().startswith("{"):
                data = json.loads(data)
            else:
                with open(data, encoding="utf-8") as fh:
                    data = json.load(fh)
        if "maps" not in data or "mu" not in data:
            raise ValueError("system JSON needs 'maps' and 'mu'")
        fibers = data.get("fibers")
        if fibers is not None:
            fibers = [(Fraction(str(lo)), Fraction(str(hi))) for lo, hi in fibers]
        return cls.from_strings(data["maps"], int(data["mu"]), fibers)

    def to_json(self):
        out = {"maps": [to_text(m) for m in self.maps], "mu": self.mu}
        if self.fibers is not None:
            out["fibers"] = [[float(lo), float(hi)] for lo, hi in self.fibers]
        return out

    @property
    def transcendental(self):
        return any(has_transcendental(m) for m in self.maps)

    def rotate(self, m):
        return rotate(self, m)


def rotate(system, m):
    """System whose base composition is ``F_m`` (maps reindexed by ``m``)."""
    if not 0 <= m < system.p:
        raise IndexOutOfRange(f"rotation {m} outside 0..{system.p - 1}")
    maps = system.maps[m:] + system.maps[:m]
    fibers = None
    if system.fibers is not None:
        fibers = system.fibers[m:] + system.fibers[:m]
    return PeriodicSystem(maps, system.mu, fibers)


def _check_indices(system, j, k):
    if not 0 <= j < system.p:
        raise IndexOutOfRange(f"rotation {j} outside 0..{system.p - 1}")
    if k < 1:
        raise IndexOutOfRange("power k must be at least 1")


def composition_jet(system, j, k, x0, params, order, with_grad=True):
    """Jet of ``F_j^k`` at ``x0``, chaining map jets through :func:`jet_compose`.

    With ``with_grad`` every coefficient is a :class:`Grad` carrying the
    mixed derivatives in the parameters.
    """
    _check_indices(system, j, k)
    if order < 0:
        raise ValueError("jet order must be non-negative")
    n = len(params)
    if with_grad:
        start = x0 if isinstance(x0, Grad) else Grad.constant(x0, n)
        jet = Jet.variable(start, order)
        for step in range(k * system.p):
            idx = (j + step) % system.p
            try:
                outer = eval_jet_grad(system.maps[idx], jet.coeffs[0], params, order)
            except NumericError as exc:
                raise exc.with_context(f"map f_{idx}, derivative order {order}")
            jet = jet_compose(outer, jet)
        return jet
    jet = Jet.variable(x0, order)
    for step in range(k * system.p):
        idx = (j + step) % system.p
        try:
            outer = evaluate(system.maps[idx], Jet.variable(jet.coeffs[0], order), params)
        except NumericError as exc:
            raise exc.with_context(f"map f_{idx}, derivative order {order}")
        if not isinstance(outer, Jet):
            outer = Jet.constant(outer, order)
        outer = Jet(outer.coeffs, at=jet.coeffs[0])
        jet = jet_compose(outer, jet)
    return jet


def apply_map(system, idx, x, params):
    try:
        return evaluate(system.maps[idx], x, params)
    except NumericError as exc:
        raise exc.with_context(f"map f_{idx}")


def default_closure_tol(x):
    return 0 if is_exact(x) else 1e-9


@dataclass(frozen=True)
class FiberPoints:
    points: list  # points[m] is the periodic point in fiber m
    defect: object


def fiber_points(system, j, x, params, k=1, tol=None):
    """Follow the cycle from ``x`` in fiber ``j`` and collect one point per fiber."""
    _check_indices(system, j, k)
    p = system.p
    pts = [None] * p
    cur = x
    for step in range(k * p):
        idx = (j + step) % p
        if step < p:
            pts[idx] = cur
        cur = apply_map(system, idx, cur, params)
    defect = abs(cur - x)
    if tol is None:
        tol = default_closure_tol(x)
    if bool(np.any(defect > tol)):
        raise ClosureDefectExceeded(defect, tol)
    return FiberPoints(pts, defect)


@dataclass(frozen=True)
class OrbitRecord:
    points: list  # (n, fiber index, x_n)
    params: tuple = field(default=())

    @property
    def values(self):
        return [x for _, _, x in self.points]


def _in_fiber(system, fiber, x):
    if system.fibers is None:
        return True
    lo, hi = system.fibers[fiber]
    v = base_value(x)
    return bool(np.all((v >= lo) & (v <= hi))) if isinstance(v, np.ndarray) else lo <= v <= hi


def orbit(system, x0, params, n, fiber=0):
    """Iterate ``x_{n+1} = f_{n mod p}(x_n)`` starting in ``fiber``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    pts = [(0, fiber % system.p, x0)]
    cur = x0
    for step in range(n):
        idx = (fiber + step) % system.p
        if not _in_fiber(system, idx, cur):
            warnings.warn(f"x_{step} = {cur} left fiber {idx}", FiberEscapeWarning, stacklevel=2)
        cur = apply_map(system, idx, cur, params)
        pts.append((step + 1, (idx + 1) % system.p, cur))
    last_fiber = (fiber + n) % system.p
    if not _in_fiber(system, last_fiber, cur):
        warnings.warn(f"x_{n} = {cur} left fiber {last_fiber}", FiberEscapeWarning, stacklevel=2)
    return OrbitRecord(pts, tuple(params))


def check_fibers(system, params, n_samples=64):
    """Sampled check of ``f_j(I_j) within I_{j+1}``; returns the violations."""
    if system.fibers is None:
        return []
    bad = []
    for j, (lo, hi) in enumerate(system.fibers):
        nlo, nhi = system.fibers[(j + 1) % system.p]
        for x in np.linspace(float(lo), float(hi), n_samples):
            y = float(apply_map(system, j, float(x), [float(v) for v in params]))
            if not float(nlo) <= y <= float(nhi):
                bad.append((j, float(x), y))
    return bad


def classify_hyperbolicity(system, j, k, x, params, delta=1e-8, tol=None):
    """``attractor``, ``repeller`` or ``non_hyperbolic`` for a fixed point of ``F_j^k``."""
    jet = composition_jet(system, j, k, x, params, 1, with_grad=False)
    if tol is None:
        tol = default_closure_tol(x)
    if abs(jet[0] - x) > tol:
        raise NotAFixedPoint(f"|F(x) - x| = {abs(jet[0] - x)} exceeds {tol}")
    d = abs(jet.derivative(1))
    if d < 1 - delta:
        return "attractor"
    if d > 1 + delta:
        return "repeller"
    return "non_hyperbolic"


def as_scalar_mode(values, exact):
    """Convert numbers to Fractions (exact) or floats."""
    if exact:
        return [v if isinstance(v, Fraction) else Fraction(v) for v in values]
    return [float(v) for v in values]


__all__ = [
    "FiberEscapeWarning",
    "FiberPoints",
    "OrbitRecord",
    "PeriodicSystem",
    "apply_map",
    "as_scalar_mode",
    "check_fibers",
    "classify_hyperbolicity",
    "composition_jet",
    "fiber_points",
    "orbit",
    "rotate",
]

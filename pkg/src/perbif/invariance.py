"""Rotation-invariance certificates, Schwarzian tests and exclusion predicates."""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bifurcation import SolveConfig, _band, determinant, norm, point_at_rotation, residual_from_jet
from .errors import CriticalPoint, WrongArity, WrongClass
from .expr import eval_jet, evaluate
from .numeric import DEFAULT_FLOOR, grad_of, is_exact, near_zero, value_of
from .system import composition_jet, fiber_points


def ratio_exponent(mu):
    """Exponent ``(3 mu - mu^2) / 2`` relating adjacent transversality determinants."""
    return (3 * mu - mu * mu) // 2


@dataclass
class RotationRecord:
    rotation: int
    fixed_point: object
    residuals: list
    residual_norm: object
    nondeg_value: object
    nondegenerate: bool
    det: object
    map_slope: object  # d/dx f_m at a_m
    ratio_factor: object = None  # map_slope ** exponent
    ratio_defect: object = None  # |J_{m+1} - factor * J_m| / |J_{m+1}|
    passed: bool = False


@dataclass
class InvarianceReport:
    mu: int
    power: int
    exponent: int
    exact: bool
    tol: object
    rotations: list = field(default_factory=list)

    @property
    def passed(self):
        return all(r.passed for r in self.rotations)

    def to_json(self):
        from .bifurcation import _num_to_json

        return {
            "mu": self.mu,
            "power": self.power,
            "exponent": self.exponent,
            "exact": self.exact,
            "tol": _num_to_json(self.tol),
            "passed": self.passed,
            "rotations": [
                {
                    "rotation": r.rotation,
                    "fixed_point": _num_to_json(r.fixed_point),
                    "residuals": [_num_to_json(v) for v in r.residuals],
                    "residual_norm": _num_to_json(r.residual_norm),
                    "nondeg_value": _num_to_json(r.nondeg_value),
                    "nondegenerate": r.nondegenerate,
                    "det": _num_to_json(r.det),
                    "map_slope": _num_to_json(r.map_slope),
                    "ratio_factor": _num_to_json(r.ratio_factor),
                    "ratio_defect": _num_to_json(r.ratio_defect),
                    "passed": r.passed,
                }
                for r in self.rotations
            ],
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=2)

    def table(self):
        lines = [f"{'m':>2}  {'a_m':>14}  {'|residual|':>11}  {'F_x^(mu+1)':>14}  {'det J':>14}  {'ratio defect':>12}  ok"]
        for r in self.rotations:
            defect = "-" if r.ratio_defect is None else f"{float(r.ratio_defect):.3e}"
            lines.append(
                f"{r.rotation:>2}  {float(r.fixed_point):>14.7g}  {float(r.residual_norm):>11.3e}  "
                f"{float(r.nondeg_value):>14.7g}  {float(r.det):>14.7g}  {defect:>12}  "
                f"{'yes' if r.passed else 'NO'}"
            )
        return "\n".join(lines)


def _rel_defect(actual, predicted):
    diff = abs(actual - predicted)
    if is_exact(diff):
        return diff if actual == 0 else diff / abs(actual)
    scale = abs(float(actual))
    return float(diff) / scale if scale > 0 else float(diff)


def verify(system, point, config=None, tol=None, det_floor=1e-10):
    """Check degeneracy, non-degeneracy and transversality at every rotation.

    The fixed points ``a_m`` come from following the cycle of ``point``.
    Adjacent determinants must satisfy ``J_{m+1} = (f_m'(a_m))^e J_m`` with
    ``e = (3 mu - mu^2)/2``; the closing pair ``p-1 -> 0`` is included when
    ``k == 1``.  Exact points are checked with zero tolerance.
    """
    config = config or SolveConfig()
    mu, k, p = point.mu, point.power, system.p
    exact = point.exact
    if tol is None:
        tol = Fraction(0) if exact else 1e-8
    params = point.params
    fiber_points(system, point.rotation, point.x_star, params, k=k,
                 tol=0 if exact else max(1e-9, 10 * float(point.residual_norm or 0)))
    e = ratio_exponent(mu)
    report = InvarianceReport(mu=mu, power=k, exponent=e, exact=exact, tol=tol)
    n = len(params)
    for m in range(p):
        a = point_at_rotation(system, point, m)
        jet = composition_jet(system, m, k, a, params, mu + 1)
        res = residual_from_jet(jet, a, mu)
        nondeg = value_of(jet.derivative(mu + 1))
        matrix = [list(grad_of(jet.derivative(r), n)[:mu]) for r in range(mu)]
        det = determinant(matrix)
        slope = eval_jet(system.maps[m], a, params, 1).derivative(1)
        if exact:
            nondegenerate = nondeg != 0
        else:
            nondegenerate = _band(nondeg, mu + 1, config) == "nonzero"
        report.rotations.append(RotationRecord(
            rotation=m, fixed_point=a, residuals=res, residual_norm=norm(res),
            nondeg_value=nondeg, nondegenerate=bool(nondegenerate), det=det, map_slope=slope,
        ))
    recs = report.rotations
    for m in range(p):
        if p == 1 or (m == p - 1 and k != 1):
            continue
        nxt = recs[(m + 1) % p]
        factor = recs[m].map_slope ** e if e >= 0 else Fraction(1) / recs[m].map_slope ** (-e) if exact \
            else float(recs[m].map_slope) ** e
        recs[m].ratio_factor = factor
        recs[m].ratio_defect = _rel_defect(nxt.det, factor * recs[m].det)
    for r in recs:
        det_ok = r.det != 0 if exact else abs(float(r.det)) > det_floor
        ratio_ok = r.ratio_defect is None or r.ratio_defect <= tol
        r.passed = bool(r.residual_norm <= tol and r.nondegenerate and det_ok and ratio_ok)
    return report


# ---------------------------------------------------------------------------
# Schwarzian derivative


def schwarzian_from_jet(jet, floor=DEFAULT_FLOOR):
    d1, d2, d3 = jet.derivative(1), jet.derivative(2), jet.derivative(3)
    d1, d2, d3 = value_of(d1), value_of(d2), value_of(d3)
    if near_zero(d1, floor):
        raise CriticalPoint(f"f' = {d1} vanishes: not defined at a critical point")
    if is_exact(d1) and is_exact(d2) and is_exact(d3):
        d1, d2, d3 = Fraction(d1), Fraction(d2), Fraction(d3)
        return d3 / d1 - Fraction(3, 2) * (d2 / d1) ** 2
    return d3 / d1 - 1.5 * (d2 / d1) ** 2


def schwarzian(expr, x, params, floor=DEFAULT_FLOOR):
    """``f'''/f' - 3/2 (f''/f')^2`` from an order-3 jet."""
    return schwarzian_from_jet(eval_jet(expr, x, params, 3), floor)


def schwarzian_composition(system, j, k, x, params, floor=DEFAULT_FLOOR):
    """Schwarzian of the composite ``F_j^k`` at ``x``."""
    return schwarzian_from_jet(composition_jet(system, j, k, x, params, 3, with_grad=False), floor)


@dataclass(frozen=True)
class SchwarzianCheck:
    verdict: str  # pass | fail | inconclusive
    s_f: object
    s_g: object


def schwarzian_product_check(system, point, tol=1e-9):
    """Sign test ``Sf(a) * Sg(b) < 0`` at a swallowtail of an alternating system."""
    if system.p != 2:
        raise WrongArity(f"the Schwarzian product test needs p = 2, got p = {system.p}")
    if point.class_mu != 3:
        raise WrongClass(f"the Schwarzian product test needs an A3 point, got class {point.class_mu}")
    a = point_at_rotation(system, point, 0)
    b = point_at_rotation(system, point, 1)
    sf = schwarzian(system.maps[0], a, point.params)
    sg = schwarzian(system.maps[1], b, point.params)
    if abs(sf) <= tol or abs(sg) <= tol:
        return SchwarzianCheck("inconclusive", sf, sg)
    return SchwarzianCheck("pass" if sf * sg < 0 else "fail", sf, sg)


# ---------------------------------------------------------------------------
# sampled exclusion of swallowtails


@dataclass(frozen=True)
class ExclusionResult:
    verdict: str  # excluded | possible
    proposition: str = None  # "i", "ii" or "iii"
    reason: str = ""


def _slopes(expr, lo, hi, params, grid_n):
    d1, d2 = [], []
    for x in np.linspace(float(lo), float(hi), grid_n):
        jet = eval_jet(expr, float(x), params, 2)
        d1.append(float(jet.derivative(1)))
        d2.append(float(jet.derivative(2)))
    return np.array(d1), np.array(d2)


def a3_exclusion(system, params, intervals=None, grid_n=256):
    """Grid test of the monotonicity/convexity conditions that rule out A3.

    ``possible`` only means no excluding pattern was seen on the grid; it is
    not evidence that a swallowtail exists.
    """
    if system.p != 2:
        raise WrongArity(f"exclusion predicates need p = 2, got p = {system.p}")
    if intervals is None:
        intervals = system.fibers
    if intervals is None or len(intervals) != 2:
        raise ValueError("need one interval per fiber")
    params = [float(v) for v in params]
    f1, f2 = _slopes(system.maps[0], *intervals[0], params, grid_n)
    g1, g2 = _slopes(system.maps[1], *intervals[1], params, grid_n)
    f_up, f_down = bool(np.all(f1 > 0)), bool(np.all(f1 < 0))
    g_up, g_down = bool(np.all(g1 > 0)), bool(np.all(g1 < 0))
    if (f_up and g_down) or (f_down and g_up):
        return ExclusionResult("excluded", "i", "one map strictly increasing, the other strictly decreasing")
    if f_up and g_up:
        both = np.concatenate([f2, g2])
        if both.min() > 0:
            return ExclusionResult("excluded", "ii", "both increasing and convex")
        if both.max() < 0:
            return ExclusionResult("excluded", "ii", "both increasing and concave")
    if f_down and g_down:
        f_cvx, f_ccv = bool(np.all(f2 > 0)), bool(np.all(f2 < 0))
        g_cvx, g_ccv = bool(np.all(g2 > 0)), bool(np.all(g2 < 0))
        if (f_cvx and g_ccv) or (f_ccv and g_cvx):
            return ExclusionResult("excluded", "iii", "both decreasing with opposite convexity")
    return ExclusionResult("possible")


# ---------------------------------------------------------------------------
# contact order of F - x at the fixed point


def _displacement(system, m, k, x, params):
    cur = x
    for step in range(k * system.p):
        cur = evaluate(system.maps[(m + step) % system.p], cur, params)
    return cur - x


def contact_order_diagnostic(system, point, n_samples=24, rotation=None, d_min=1e-5, d_max=1e-2,
                             underflow=1e-14):
    """Least-squares slope of ``log|F(x) - x|`` against ``log|x - a|``.

    Samples sit on both sides of ``a`` at log-spaced distances; at an A_mu
    point the slope approaches ``mu + 1``.  Exact points of polynomial
    systems are evaluated in rational arithmetic.
    """
    m = point.rotation if rotation is None else rotation
    a = point_at_rotation(system, point, m)
    exact = point.exact and not system.transcendental
    params = point.params if exact else [float(v) for v in point.params]
    if not exact:
        a = float(a)
    logs_d, logs_r = [], []
    for d in np.logspace(math.log10(d_min), math.log10(d_max), n_samples):
        step = Fraction(float(d)) if exact else float(d)
        for x in (a + step, a - step):
            r = abs(float(_displacement(system, m, point.power, x, params)))
            if r < underflow:
                continue
            logs_d.append(math.log(float(d)))
            logs_r.append(math.log(r))
    if len(logs_d) < 2:
        return float("nan")
    slope, _ = np.polyfit(logs_d, logs_r, 1)
    return float(slope)


def contact_orders(system, point, **kwargs):
    """Contact-order slope at every rotation of the cycle."""
    return [contact_order_diagnostic(system, point, rotation=m, **kwargs) for m in range(system.p)]

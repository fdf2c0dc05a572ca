"""A_mu bifurcation equations: residuals, Newton solve, classification."""

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import AmbiguousClassification, NoConvergence, NumericError, SingularJacobian
from .numeric import grad_of, is_exact, value_of
from .system import composition_jet, fiber_points

log = logging.getLogger(__name__)

MU_CAP = 6


@dataclass(frozen=True)
class SolveConfig:
    residual_tol: float = 1e-12
    max_iter: int = 100
    damping: float = 1.0
    nondeg_tol: float = 1e-6
    hyperb_delta: float = 1e-8
    # order-aware classification bands: |d_n| <= vanish*n! vanishes,
    # |d_n| >= nonzero*n! is nonzero, anything between is ambiguous
    vanish_band: float = 1e-7
    nonzero_band: float = 1e-4
    min_step: float = 2.0**-30

    def __post_init__(self):
        for name in ("residual_tol", "nondeg_tol", "hyperb_delta", "vanish_band", "nonzero_band", "min_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.vanish_band >= self.nonzero_band:
            raise ValueError("vanish_band must be below nonzero_band")


def _num_to_json(v):
    if v is None:
        return None
    if isinstance(v, bool):
        return v
    if isinstance(v, (int, Fraction)) and not isinstance(v, bool):
        v = Fraction(v)
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return float(format(float(v), ".17g"))


def _num_from_json(v):
    if v is None or isinstance(v, bool):
        return v
    if isinstance(v, str):
        return Fraction(v)
    return float(v)


@dataclass(frozen=True)
class BifurcationPoint:
    rotation: int
    power: int
    x_star: object
    lambda_star: tuple
    class_mu: object  # int, or None when the non-degeneracy test failed
    residual_norm: object
    nondeg_value: object
    transversality_det: object
    converged: bool
    iterations: int
    mu: int = None
    nondeg_scale: float = 1.0
    nondegenerate: bool = True
    residuals: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "lambda_star", tuple(self.lambda_star))
        object.__setattr__(self, "residuals", tuple(self.residuals))
        if self.mu is None:
            object.__setattr__(self, "mu", len(self.lambda_star))

    @property
    def params(self):
        return list(self.lambda_star)

    @property
    def exact(self):
        return is_exact(self.x_star) and all(is_exact(v) for v in self.lambda_star)

    def to_json(self):
        return {
            "rotation": self.rotation,
            "power": self.power,
            "mu": self.mu,
            "x": _num_to_json(self.x_star),
            "lambda": [_num_to_json(v) for v in self.lambda_star],
            "class_mu": self.class_mu,
            "residual_norm": _num_to_json(self.residual_norm),
            "residuals": [_num_to_json(v) for v in self.residuals],
            "nondeg_value": _num_to_json(self.nondeg_value),
            "nondeg_scale": _num_to_json(self.nondeg_scale),
            "nondegenerate": self.nondegenerate,
            "transversality_det": _num_to_json(self.transversality_det),
            "converged": self.converged,
            "iterations": self.iterations,
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        return cls(
            rotation=int(data["rotation"]),
            power=int(data.get("power", 1)),
            x_star=_num_from_json(data["x"]),
            lambda_star=[_num_from_json(v) for v in data["lambda"]],
            class_mu=data.get("class_mu"),
            residual_norm=_num_from_json(data.get("residual_norm")),
            nondeg_value=_num_from_json(data.get("nondeg_value")),
            transversality_det=_num_from_json(data.get("transversality_det")),
            converged=bool(data.get("converged", True)),
            iterations=int(data.get("iterations", 0)),
            mu=data.get("mu"),
            nondeg_scale=_num_from_json(data.get("nondeg_scale", 1.0)),
            nondegenerate=bool(data.get("nondegenerate", True)),
            residuals=[_num_from_json(v) for v in data.get("residuals", [])],
        )


def _check_mu(system, mu):
    if mu < 1:
        raise ValueError("mu must be at least 1")
    if mu > system.mu:
        raise ValueError(f"class mu = {mu} needs at least {mu} parameters, system has {system.mu}")


def residual_from_jet(jet, x, mu):
    d = [value_of(v) for v in jet.derivatives()]
    return [d[0] - x, d[1] - 1] + d[2 : mu + 1]


def residual(system, j, k, mu, x, params):
    """``[F - x, F_x - 1, F_xx, ..., F_{x^mu}]`` for ``F = F_j^k``."""
    jet = composition_jet(system, j, k, x, params, mu, with_grad=False)
    return residual_from_jet(jet, x, mu)


def norm(values):
    if all(is_exact(v) for v in values):
        return max((abs(Fraction(v)) for v in values), default=Fraction(0))
    return float(np.linalg.norm(np.array([float(v) for v in values], dtype=float)))


def _system_and_jacobian(system, j, k, mu, z):
    """Residual of the bifurcation equations and its Jacobian in ``(x, l_1..l_mu)``.

    Only the first ``mu`` parameters are unknowns; further parameters of the
    system (if any) stay at the values given in ``z``.
    """
    x = z[0]
    params = list(z[1:])
    jet = composition_jet(system, j, k, x, params, mu + 1)
    d = jet.derivatives()
    r = np.array([float(value_of(d[0])) - x, float(value_of(d[1])) - 1]
                 + [float(value_of(v)) for v in d[2 : mu + 1]])
    jac = np.zeros((mu + 1, mu + 1))
    n = len(params)
    for i in range(mu + 1):
        jac[i, 0] = float(value_of(d[i + 1])) - (1.0 if i == 0 else 0.0)
        g = grad_of(d[i], n)
        for m in range(mu):
            jac[i, m + 1] = float(g[m])
    return r, jac, d


def _newton_step(jac, r):
    try:
        if np.linalg.cond(jac) < 1e14:
            return np.linalg.solve(jac, -r)
    except np.linalg.LinAlgError:
        pass
    step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
    return step


def solve(system, j, k, mu, init, config=None, strict=False):
    """Damped Newton on the bifurcation equations with jet-exact Jacobians.

    ``init`` is ``(x, l_1, ..., l_mu[, extra params...])``.  A failure to
    converge returns the best iterate with ``converged=False`` unless
    ``strict`` is set, in which case :class:`NoConvergence` is raised.
    """
    config = config or SolveConfig()
    _check_mu(system, mu)
    if len(init) != system.mu + 1:
        raise ValueError(f"init needs x plus {system.mu} parameters, got {len(init)} values")
    z = np.array([float(v) for v in init], dtype=float)
    r, jac, d = _system_and_jacobian(system, j, k, mu, z)
    res = float(np.linalg.norm(r))
    scale = max(1.0, abs(float(value_of(d[mu + 1]))))
    best = (res, z.copy())
    it = 0
    converged = res <= config.residual_tol
    while not converged and it < config.max_iter:
        it += 1
        if not np.any(jac):
            raise SingularJacobian("Jacobian of the bifurcation equations vanishes identically")
        step = np.zeros_like(z)
        step[: mu + 1] = _newton_step(jac, r)
        if not np.all(np.isfinite(step)):
            raise SingularJacobian("Newton step is not finite")
        if not np.any(step):
            raise SingularJacobian("Newton step vanished before convergence (rank-deficient Jacobian)")
        t = config.damping
        accepted = False
        while t >= config.min_step:
            trial = z + t * step
            try:
                r_new, jac_new, d_new = _system_and_jacobian(system, j, k, mu, trial)
                res_new = float(np.linalg.norm(r_new))
            except NumericError:
                res_new = math.inf
            if np.isfinite(res_new) and res_new < res:
                accepted = True
                break
            t /= 2
        if not accepted:
            log.debug("line search stalled at |r| = %g after %d iterations", res, it)
            break
        z, r, jac, d, res = trial, r_new, jac_new, d_new, res_new
        if res < best[0]:
            best = (res, z.copy())
        converged = res <= config.residual_tol
    if not converged:
        res, z = best
        r, jac, d = _system_and_jacobian(system, j, k, mu, z)
    point = _finish(system, j, k, mu, z, r, d, it, converged, scale, config)
    if strict and not converged:
        raise NoConvergence(f"no convergence after {it} iterations, |r| = {res:g}", point)
    return point


def _finish(system, j, k, mu, z, r, d, iterations, converged, scale, config):
    x = float(z[0])
    params = [float(v) for v in z[1:]]
    nondeg = float(value_of(d[mu + 1]))
    nondegenerate = abs(nondeg) > config.nondeg_tol * scale
    _, det = transversality_at(system, j, k, mu, x, params)
    return BifurcationPoint(
        rotation=j,
        power=k,
        x_star=x,
        lambda_star=params,
        class_mu=mu if (converged and nondegenerate) else None,
        residual_norm=float(np.linalg.norm(r)),
        nondeg_value=nondeg,
        transversality_det=float(det),
        converged=bool(converged),
        iterations=iterations,
        mu=mu,
        nondeg_scale=scale,
        nondegenerate=bool(nondegenerate),
        residuals=[float(v) for v in r],
    )


def exact_point(system, j, k, mu, x, params, config=None):
    """Build a point from exact (or float) coordinates without solving."""
    config = config or SolveConfig()
    jet = composition_jet(system, j, k, x, params, mu + 1, with_grad=False)
    r = residual_from_jet(jet, x, mu)
    nondeg = jet.derivative(mu + 1)
    _, det = transversality_at(system, j, k, mu, x, params)
    res = norm(r)
    zero = res == 0 if is_exact(res) else res <= config.residual_tol
    nondegenerate = nondeg != 0 if is_exact(nondeg) else abs(nondeg) > config.nondeg_tol
    return BifurcationPoint(
        rotation=j, power=k, x_star=x, lambda_star=list(params),
        class_mu=mu if (zero and nondegenerate) else None,
        residual_norm=res, nondeg_value=nondeg, transversality_det=det,
        converged=bool(zero), iterations=0, mu=mu, nondegenerate=bool(nondegenerate),
        residuals=r,
    )


def _exact_system(system, j, k, mu, z):
    jet = composition_jet(system, j, k, z[0], list(z[1:]), mu + 1)
    d = jet.derivatives()
    n = len(z) - 1
    r = residual_from_jet(jet, z[0], mu)
    jac = []
    for i in range(mu + 1):
        g = grad_of(d[i], n)
        jac.append([value_of(d[i + 1]) - (1 if i == 0 else 0)] + [g[m] for m in range(mu)])
    return r, jac


def _cramer(matrix, rhs):
    det = determinant(matrix)
    if det == 0:
        raise SingularJacobian("exact Jacobian is singular")
    out = []
    for c in range(len(matrix)):
        m = [row[:c] + [b] + row[c + 1:] for row, b in zip(matrix, rhs)]
        out.append(determinant(m) / det)
    return out


def rationalize(system, point, config=None, steps=4, working_den=10**40, bounds=(10**3, 10**6, 10**9, 10**12, 10**15)):
    """Recover an exact rational point near a converged float solution.

    A few Newton steps in rational arithmetic (rounded to denominators below
    ``working_den``) push the iterate far past double precision; small
    denominators are then read off by continued fractions and accepted only
    when every residual is exactly zero.  Returns ``None`` otherwise.
    """
    mu, j, k = point.mu, point.rotation, point.power
    if system.transcendental:
        return None
    z = [Fraction(v) for v in [point.x_star, *point.lambda_star]]
    try:
        for _ in range(steps):
            r, jac = _exact_system(system, j, k, mu, z)
            if all(v == 0 for v in r):
                break
            step = _cramer(jac, [-v for v in r])
            z[: mu + 1] = [(a + b).limit_denominator(working_den) for a, b in zip(z, step)]
    except (NumericError, SingularJacobian):
        return None
    for bound in bounds:
        guess = [v.limit_denominator(bound) for v in z]
        cand = exact_point(system, j, k, mu, guess[0], guess[1:], config)
        if cand.residual_norm == 0:
            return BifurcationPoint(**{**cand.__dict__, "iterations": point.iterations})
    return None


def point_at_rotation(system, point, m):
    """Fixed point ``a_m`` of ``F_m^k`` on the same cycle as ``point``."""
    if m == point.rotation:
        return point.x_star
    fp = fiber_points(system, point.rotation, point.x_star, point.params, k=point.power,
                      tol=None if point.exact else max(1e-9, 10 * float(point.residual_norm or 0)))
    return fp.points[m]


def nondegeneracy(system, point, rotation=None):
    """``F_{x^{mu+1}}`` of ``F_m^k`` at the point's fixed point in fiber m."""
    m = point.rotation if rotation is None else rotation
    x = point_at_rotation(system, point, m)
    jet = composition_jet(system, m, point.power, x, point.params, point.mu + 1, with_grad=False)
    return jet.derivative(point.mu + 1)


def is_nondegenerate(value, scale=1.0, tol=1e-6):
    if is_exact(value):
        return value != 0
    return abs(value) > tol * max(1.0, abs(scale))


def determinant(matrix):
    """Fraction-free Bareiss elimination for exact entries, LAPACK LU otherwise."""
    n = len(matrix)
    if n == 0:
        return 1
    if all(is_exact(v) for row in matrix for v in row):
        a = [[Fraction(v) for v in row] for row in matrix]
        sign = 1
        prev = Fraction(1)
        for i in range(n - 1):
            if a[i][i] == 0:
                swap = next((r for r in range(i + 1, n) if a[r][i] != 0), None)
                if swap is None:
                    return Fraction(0)
                a[i], a[swap] = a[swap], a[i]
                sign = -sign
            for r in range(i + 1, n):
                for c in range(i + 1, n):
                    a[r][c] = (a[r][c] * a[i][i] - a[r][i] * a[i][c]) / prev
            prev = a[i][i]
        return sign * a[n - 1][n - 1]
    return float(np.linalg.det(np.array(matrix, dtype=float)))


def transversality_at(system, j, k, mu, x, params):
    """Matrix of ``F_{x^{r-1} l_i}`` (r, i = 1..mu) for ``F = F_j^k`` and its determinant."""
    jet = composition_jet(system, j, k, x, params, max(mu - 1, 0))
    n = len(params)
    matrix = []
    for r in range(mu):
        g = grad_of(jet.derivative(r), n)
        matrix.append(list(g[:mu]))
    return matrix, determinant(matrix)


def transversality(system, j, point):
    """Transversality matrix and determinant at rotation ``j`` of a solved point."""
    x = point_at_rotation(system, point, j)
    return transversality_at(system, j, point.power, point.mu, x, point.params)


@dataclass(frozen=True)
class Singularity:
    label: str  # "A1".."A6" or "none"
    mu: object
    leading: object = None  # F_{x^{mu+1}}
    sign: int = 0

    def __str__(self):
        return self.label


def _band(value, order, config):
    """'zero', 'nonzero' or 'gap' for a derivative of the given order."""
    if is_exact(value):
        return "zero" if value == 0 else "nonzero"
    v = abs(float(value))
    f = math.factorial(order)
    if v <= config.vanish_band * f:
        return "zero"
    if v >= config.nonzero_band * f:
        return "nonzero"
    return "gap"


def classify_singularity(system, j, k, x, params, mu_max=MU_CAP, config=None):
    """Largest mu whose degeneracy ladder holds at ``(x, params)``.

    Returns ``Singularity('none', None)`` when the point is not a
    non-hyperbolic fixed point, or when every derivative up to order
    ``mu_max + 1`` vanishes.
    """
    config = config or SolveConfig()
    if mu_max < 1:
        raise ValueError("mu_max must be at least 1")
    jet = composition_jet(system, j, k, x, params, mu_max + 1, with_grad=False)
    d = jet.derivatives()
    ladder = [d[0] - x, d[1] - 1] + d[2:]
    for order in (0, 1):
        band = _band(ladder[order], order, config)
        if band == "nonzero":
            return Singularity("none", None)
        if band == "gap":
            raise AmbiguousClassification(
                f"{'F - x' if order == 0 else 'F_x - 1'} = {ladder[order]} lies between the tolerance bands"
            )
    for order in range(2, mu_max + 2):
        band = _band(ladder[order], order, config)
        if band == "gap":
            raise AmbiguousClassification(
                f"derivative of order {order} = {ladder[order]} lies between the tolerance bands"
            )
        if band == "nonzero":
            mu = order - 1
            lead = ladder[order]
            return Singularity(f"A{mu}", mu, lead, 1 if lead > 0 else -1)
    return Singularity("none", None)

"""Random systems with a known exact A_mu point, for property tests.

The first map is built so that its jet at ``a`` matches the inverse jet of
the remaining maps up to order ``mu``; the degeneracy ladder of the cyclic
composition then vanishes exactly at ``a``.
"""

import math
import random
from fractions import Fraction as Q

from perbif.bifurcation import exact_point
from perbif.system import PeriodicSystem, composition_jet


def qtext(q):
    q = Q(q)
    return f"({q.numerator}/{q.denominator})" if q.denominator != 1 else f"({q.numerator})"


def poly_text(coeffs, params=()):
    """``sum c_i x^i`` plus ``l_i x^(i-1)`` terms for the given parameter indices."""
    terms = [f"{qtext(c)}*x^{i}" if i else qtext(c) for i, c in enumerate(coeffs) if c != 0]
    terms += [f"l{i}*x^{i - 1}" if i > 1 else "l1" for i in params]
    return " + ".join(terms) if terms else "0"


def inverse_derivs(h):
    """Raw derivatives 0..3 of the local inverse of ``h`` given raw derivatives of ``h``."""
    h1, h2, h3 = h[1], h[2], h[3]
    return [None, 1 / h1, -h2 / h1**3, 3 * h2**2 / h1**5 - h3 / h1**4]


def _expand(center, taylor):
    """Coefficients in x of ``sum taylor[i] (x - center)^i``."""
    out = [Q(0)] * len(taylor)
    for i, t in enumerate(taylor):
        for m in range(i + 1):
            out[m] += t * math.comb(i, m) * (-center) ** (i - m)
    return out


def random_cubic(rng):
    slope = Q(rng.choice([-1, 1]) * rng.randint(5, 20), 10)
    return [Q(rng.randint(-5, 5), 10), slope, Q(rng.randint(-5, 5), 10), Q(rng.randint(-3, 3), 10)]


def random_amu(rng, mu, p=2, max_tries=50):
    """(system, a, params) with an exact, non-degenerate, transversal A_mu point at rotation 0."""
    if not 1 <= mu <= 3:
        raise ValueError("builder supports mu = 1..3")
    for _ in range(max_tries):
        rest = [random_cubic(rng) for _ in range(p - 1)]
        tail = PeriodicSystem.from_strings([poly_text(c) for c in rest], 0)
        b = Q(rng.randint(-4, 4), 10)
        jet = composition_jet(tail, 0, 1, b, [], 3, with_grad=False)
        h = jet.derivatives()
        if h[1] == 0:
            continue
        a = h[0]
        g = inverse_derivs(h)
        lam = [Q(rng.randint(-9, 9), 10) for _ in range(mu)]
        taylor = [b] + [g[i] / math.factorial(i) for i in range(1, mu + 1)]
        taylor.append(Q(rng.choice([-1, 1]) * rng.randint(2, 12), 4))
        coeffs = _expand(a, taylor)
        for i, l in enumerate(lam):
            coeffs[i] -= l
        maps = [poly_text(coeffs, range(1, mu + 1))] + [poly_text(c) for c in rest]
        system = PeriodicSystem.from_strings(maps, mu)
        pt = exact_point(system, 0, 1, mu, a, lam)
        if pt.class_mu != mu or pt.transversality_det == 0:
            continue
        if abs(pt.nondeg_value) < Q(1, 10) * math.factorial(mu + 1) or abs(pt.transversality_det) < Q(1, 100):
            continue
        return system, a, lam
    raise RuntimeError("could not build a random A_mu system")


def seeded(seed):
    return random.Random(seed)

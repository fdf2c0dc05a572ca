"""Built-in alternating systems with known swallowtail (A3) points.

Both systems ship embedded so the example commands run without input files.
"""

from fractions import Fraction as Q

from .system import PeriodicSystem

# quadratic followed by a cubic; the A3 point is rational
EXAMPLE1_MAPS = ("x^2 + l1", "l3*x^3 + l2*x + 1")
EXAMPLE1_INIT = (0.8, -1.0, 0.5, 0.02)
EXAMPLE1_POINT = {
    "a": Q(27, 35),
    "lambda": (Q(-243, 245), Q(175, 324), Q(52521875, 229582512)),
    "b": Q(-486, 1225),
    "det": Q(-944784, 214375),
    "sf": Q(-1225, 486),
    "sg": Q(1500625, 1417176),
}

# quartic followed by a scaled tangent
EXAMPLE2_MAPS = ("-x^4 + l1*x^2 + x + l2", "l3*tan(x)")
EXAMPLE2_INIT = (0.08, -0.04, 0.0, 1.0)
EXAMPLE2_POINT = {
    "a": 0.0797053,
    "lambda": (-0.0400839, -0.0000428492, 1.00215),
    "b": 0.0793675,
    "det": 2.08013,
    "F4": -26.05295,
    "G4": -26.72191,
    "sg": 2.0,
}


def example1():
    return PeriodicSystem.from_strings(EXAMPLE1_MAPS, 3)


def example2():
    return PeriodicSystem.from_strings(EXAMPLE2_MAPS, 3)


def principal_family(mu, sign=1):
    """``x +/- x^(mu+1) + l1 + l2 x + ... + l_mu x^(mu-1)`` as a 1-periodic system."""
    terms = ["x", f"{'+' if sign > 0 else '-'} x^{mu + 1}", "+ l1"]
    terms += [f"+ l{i}*x^{i - 1}" for i in range(2, mu + 1)]
    return PeriodicSystem.from_strings([" ".join(terms)], mu)

"""Angular-momentum algebra for hyperfine dipole couplings.

Clebsch-Gordan and Wigner 6-j symbols from the Racah sum formulas, exact
for the small (half-)integer momenta used here, plus the hyperfine line
strengths that split an excited level's decay between ground manifolds.
"""

from __future__ import annotations

from math import factorial, sqrt

__all__ = ["clebsch_gordan", "hyperfine_strength", "wigner_6j"]


def _fact(x: float) -> int:
    n = round(x)
    if abs(x - n) > 1e-9 or n < 0:
        raise ValueError(f"factorial of non-integer or negative value {x}")
    return factorial(n)


def _triangle_ok(a, b, c):
    return abs(a - b) <= c <= a + b and round(2 * (a + b + c)) % 2 == 0


def clebsch_gordan(j1, m1, j2, m2, j3, m3) -> float:
    """Clebsch-Gordan coefficient <j1 m1; j2 m2 | j3 m3>."""
    if m3 != m1 + m2 or not _triangle_ok(j1, j2, j3):
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0
    pref = sqrt(
        (2.0 * j3 + 1.0)
        * _fact(j3 + j1 - j2)
        * _fact(j3 - j1 + j2)
        * _fact(j1 + j2 - j3)
        * _fact(j3 + m3)
        * _fact(j3 - m3)
        / (
            _fact(j1 + j2 + j3 + 1)
            * _fact(j1 - m1)
            * _fact(j1 + m1)
            * _fact(j2 - m2)
            * _fact(j2 + m2)
        )
    )
    vmin = round(max(j2 + m3 - j1, 0))
    vmax = round(min(j2 + j3 + m1, j3 - j1 + j2, j3 + m3))
    total = 0.0
    for v in range(vmin, vmax + 1):
        total += (-1.0) ** round(v + j2 + m2) * (
            _fact(j2 + j3 + m1 - v)
            * _fact(j1 - m1 + v)
            / _fact(v)
            / _fact(j3 - j1 + j2 - v)
            / _fact(j3 + m3 - v)
            / _fact(v + j1 - j2 - m3)
        )
    return pref * total


def _triangle_coeff(a, b, c) -> float:
    return sqrt(_fact(a + b - c) * _fact(a - b + c) * _fact(-a + b + c) / _fact(a + b + c + 1))


def wigner_6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6-j symbol {j1 j2 j3; j4 j5 j6}."""
    triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)]
    for a, b, c in triads:
        if not _triangle_ok(a, b, c):
            return 0.0
    pref = 1.0
    for a, b, c in triads:
        pref *= _triangle_coeff(a, b, c)
    vmin = round(max(j1 + j2 + j3, j1 + j5 + j6, j4 + j2 + j6, j4 + j5 + j3))
    vmax = round(min(j1 + j2 + j4 + j5, j2 + j3 + j5 + j6, j3 + j1 + j6 + j4))
    total = 0.0
    for v in range(vmin, vmax + 1):
        total += (
            (-1.0) ** v
            * _fact(v + 1)
            / _fact(v - round(j1 + j2 + j3))
            / _fact(v - round(j1 + j5 + j6))
            / _fact(v - round(j4 + j2 + j6))
            / _fact(v - round(j4 + j5 + j3))
            / _fact(round(j1 + j2 + j4 + j5) - v)
            / _fact(round(j2 + j3 + j5 + j6) - v)
            / _fact(round(j3 + j1 + j6 + j4) - v)
        )
    return pref * total


def hyperfine_strength(j_exc, j_gnd, i_nuc, f_exc, f_gnd) -> float:
    """Fraction of decays from F_exc that land in the F_gnd manifold.

    S = (2 F_gnd + 1)(2 J_exc + 1) {J_gnd J_exc 1; F_exc F_gnd I}^2;
    summed over the ground F values it gives 1, so S times the squared
    Clebsch-Gordan coefficient of a Zeeman channel is that channel's
    branching fraction.
    """
    w = wigner_6j(j_gnd, j_exc, 1.0, f_exc, f_gnd, i_nuc)
    return (2.0 * f_gnd + 1.0) * (2.0 * j_exc + 1.0) * w * w

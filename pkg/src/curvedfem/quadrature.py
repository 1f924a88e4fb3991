"""Symmetric quadrature rules on the reference triangle (0,0), (1,0), (0,1).

Rules are stored as symmetry orbits in barycentric form and expanded on
first use; weights sum to the reference area 1/2.  Every rule is checked
against the closed-form monomial integrals when it is built.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import UnsupportedDegree

__all__ = ["QuadratureRule", "rule", "monomial_integral", "MAX_DEGREE"]

MAX_DEGREE = 8

# (exactness degree, orbits); orbit kinds:
#   ("s3", w)         centroid
#   ("s21", a, w)     (a, a, 1-2a) and permutations, 3 points
#   ("s111", a, b, w) (a, b, 1-a-b) and permutations, 6 points
_ORBITS = {
    1: [("s3", 0.5)],
    2: [("s21", 1.0 / 6.0, 1.0 / 6.0)],
    4: [
        ("s21", 0.4459484909159649, 0.1116907948390057),
        ("s21", 0.09157621350977074, 0.05497587182766093),
    ],
    5: [
        ("s3", 0.1125),
        ("s21", 0.4701420641051151, 0.06619707639425309),
        ("s21", 0.1012865073234563, 0.06296959027241358),
    ],
    6: [
        ("s21", 0.2492867451709104, 0.05839313786318968),
        ("s21", 0.06308901449150223, 0.02542245318510341),
        ("s111", 0.05314504984481695, 0.3103524510337844, 0.04142553780918679),
    ],
    8: [
        ("s3", 0.07215780383889358),
        ("s21", 0.4592925882927232, 0.04754581713364231),
        ("s21", 0.1705693077517602, 0.05160868526735913),
        ("s21", 0.05054722831703098, 0.01622924881159904),
        ("s111", 0.008394777409957605, 0.2631128296346381, 0.01361515708721750),
    ],
}


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    degree: int
    points: np.ndarray  # (n, 2) reference coordinates
    weights: np.ndarray  # (n,)

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        """Sum ``weights * values`` over the last axis of ``values``."""
        return np.asarray(values) @ self.weights


def monomial_integral(a, b):
    """Exact integral of ``x^a y^b`` over the reference triangle."""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def _expand(orbits):
    bary, w = [], []
    for orbit in orbits:
        kind = orbit[0]
        if kind == "s3":
            bary.append((1 / 3, 1 / 3, 1 / 3))
            w.append(orbit[1])
        elif kind == "s21":
            a, wt = orbit[1:]
            c = 1.0 - 2.0 * a
            bary += [(a, a, c), (a, c, a), (c, a, a)]
            w += [wt] * 3
        else:
            a, b, wt = orbit[1:]
            c = 1.0 - a - b
            bary += [(a, b, c), (b, a, c), (a, c, b), (c, a, b), (b, c, a), (c, b, a)]
            w += [wt] * 6
    bary = np.array(bary)
    return bary[:, 1:].copy(), np.array(w)


def _check(q):
    for a in range(q.degree + 1):
        for b in range(q.degree + 1 - a):
            got = q.weights @ (q.points[:, 0] ** a * q.points[:, 1] ** b)
            if abs(got - monomial_integral(a, b)) > 1e-14:
                raise AssertionError(f"quadrature rule of degree {q.degree} fails on x^{a} y^{b}")


@lru_cache(maxsize=None)
def rule(degree):
    """Smallest stored positive-weight rule exact for polynomials of ``degree``.

    The returned rule's ``degree`` is its actual exactness, which may exceed
    the request (3 is served by the degree-4 rule, 7 by the degree-8 rule).
    """
    if not isinstance(degree, (int, np.integer)) or not 1 <= degree <= MAX_DEGREE:
        raise UnsupportedDegree(f"quadrature degree must be in 1..{MAX_DEGREE}, got {degree!r}")
    exact = min(d for d in _ORBITS if d >= degree)
    pts, w = _expand(_ORBITS[exact])
    q = QuadratureRule(exact, pts, w)
    _check(q)
    return q

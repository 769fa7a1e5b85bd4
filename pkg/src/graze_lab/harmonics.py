"""Real solid harmonics as explicit polynomials.

``solid_harmonic(l, m)`` returns the homogeneous harmonic polynomial
``P(y) = |y|**l * Y_lm(y / |y|)`` where ``Y_lm`` is the orthonormal real
spherical harmonic (no Condon-Shortley phase; ``m < 0`` selects the sine
branch).  Polynomials are stored as ``(exponents, coefficients)`` arrays so
that values, gradients and Hessians can be evaluated in bulk with numpy.
"""

from functools import lru_cache
from math import comb, factorial, pi, sqrt

import numpy as np


@lru_cache(maxsize=None)
def solid_harmonic(l: int, m: int):
    """Exponent table ``(K, 3)`` and coefficients ``(K,)`` of the solid harmonic."""
    import sympy

    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid harmonic index (l={l}, m={m})")
    x, y, z = sympy.symbols("x y z", real=True)
    am = abs(m)
    r2 = x**2 + y**2 + z**2
    pi_lm = 0
    for k in range((l - am) // 2 + 1):
        pi_lm += (
            sympy.Integer(-1) ** k
            * sympy.Rational(comb(l, k) * comb(2 * l - 2 * k, l), 2**l)
            * sympy.Rational(factorial(l - 2 * k), factorial(l - 2 * k - am))
            * r2**k
            * z ** (l - 2 * k - am)
        )
    planar = sympy.expand((x + sympy.I * y) ** am)
    azimuthal = sympy.re(planar) if m >= 0 else sympy.im(planar)
    poly = sympy.Poly(sympy.expand(pi_lm * azimuthal), x, y, z)
    norm = sqrt((2 - (m == 0)) * (2 * l + 1) / (4 * pi) * factorial(l - am) / factorial(l + am))
    exps, coefs = [], []
    for monom, c in poly.terms():
        exps.append(monom)
        coefs.append(float(c) * norm)
    return np.array(exps, dtype=int), np.array(coefs)


_FIRST = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
_SECOND = {(i, j): tuple(int(i == k) + int(j == k) for k in range(3)) for i in range(3) for j in range(i, 3)}
# jet columns 4..9 hold xx, xy, xz, yy, yz, zz
_HESS_INDEX = np.array([[4, 5, 6], [5, 7, 8], [6, 8, 9]])


class HarmonicPolynomial:
    """Sum of same-degree solid harmonics with fixed coefficients."""

    def __init__(self, degree: int, terms):
        self.degree = degree
        table = {}
        for m, coef in terms:
            exps, coefs = solid_harmonic(degree, m)
            for e, c in zip(map(tuple, exps), coefs):
                table[e] = table.get(e, 0.0) + coef * c
        self.exponents = np.array(sorted(table), dtype=int).reshape(-1, 3)
        self.coefficients = np.array([table[e] for e in sorted(table)])

        # one dense table [value, gradient (3), upper Hessian (6)] over a shared
        # monomial set, so a single product evaluates the whole 2-jet
        shifts = [(0, 0, 0)] + _FIRST + list(_SECOND.values())
        tables = [self._derivative(s) for s in shifts]
        monos = sorted({tuple(e) for exps, _ in tables for e in exps})
        row = {m: k for k, m in enumerate(monos)}
        self._monos = np.array(monos, dtype=int).reshape(-1, 3)
        self._jet = np.zeros((len(monos), len(shifts)))
        for col, (exps, coefs) in enumerate(tables):
            for e, c in zip(map(tuple, exps), coefs):
                self._jet[row[e], col] += c

    def _derivative(self, shift):
        e = self.exponents - np.asarray(shift)
        factor = np.ones(len(e))
        for j in range(3):
            for s in range(shift[j]):
                factor = factor * (self.exponents[:, j] - s)
        keep = factor != 0
        return e[keep], (self.coefficients * factor)[keep]

    def jet(self, y, order=2):
        """Value, gradient and (if ``order == 2``) Hessian at ``y``."""
        y = np.asarray(y, dtype=float)
        pw = y[..., :, None] ** np.arange(self.degree + 1)
        e = self._monos
        mono = pw[..., 0, e[:, 0]] * pw[..., 1, e[:, 1]] * pw[..., 2, e[:, 2]]
        cols = 1 if order == 0 else 4 if order == 1 else 10
        out = mono @ self._jet[:, :cols]
        val, grad = out[..., 0], out[..., 1:4]
        if order < 2:
            return val, grad
        H = out[..., _HESS_INDEX]
        return val, grad, H

    def value(self, y):
        return self.jet(y, 0)[0]

    def gradient(self, y):
        return self.jet(y, 1)[1]

    def hessian(self, y):
        return self.jet(y, 2)[2]

def even_indices(degrees=(2, 4)):
    """All ``(l, m)`` pairs for the given even degrees, in a fixed order."""
    out = []
    for l in degrees:
        if l % 2:
            raise ValueError(f"odd degree {l} would break origin symmetry")
        out.extend((l, m) for m in range(-l, l + 1))
    return out

"""Weierstrass ``wp`` for the square lattice Z + iZ.

``g3`` vanishes because the lattice is invariant under multiplication by i;
``g2`` comes from the q-expansion of the Eisenstein series E4 at tau = i.
Values are computed from the Laurent series about the nearest lattice point.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


def _sigma3(n: int) -> int:
    return sum(d**3 for d in range(1, n + 1) if n % d == 0)


def lattice_invariants(tol: float = 1e-18) -> tuple:
    """``(g2, g3)`` for Z + iZ.

    ``E4(i) = 1 + 240 sum sigma3(n) q^n`` with ``q = exp(-2 pi)``; since
    ``sigma3(n) <= n^4`` the tail after N terms is below
    ``240 sum_{n>N} n^4 q^n``, which is checked against ``tol``.
    """
    q = math.exp(-2 * math.pi)
    e4 = 1.0
    n = 1
    while True:
        e4 += 240 * _sigma3(n) * q**n
        n += 1
        tail = 240 * sum(k**4 * q**k for k in range(n, n + 60))
        if tail < tol:
            break
    g2 = 4 * math.pi**4 / 3 * e4
    return g2, 0.0


class SquareLatticeWp:
    """``wp`` and ``wp'`` for Z + iZ via a Laurent series of configurable length."""

    def __init__(self, terms: int = 90):
        self.g2, self.g3 = lattice_invariants()
        self.terms = terms
        c = [0.0] * (terms + 1)
        if terms >= 1:
            c[1] = self.g2 / 20
        for k in range(3, terms + 1):
            c[k] = 3.0 / ((2 * k + 3) * (k - 2)) * sum(c[j] * c[k - 1 - j] for j in range(1, k - 1))
        # wp(z) = 1/z^2 + sum_{k>=1} c_k z^(2k)
        self._c = np.array(c[1:])
        self._pow = 2 * np.arange(1, terms + 1)

    @staticmethod
    def reduce(z: complex) -> complex:
        z = complex(z)
        return z - round(z.real) - 1j * round(z.imag)

    def _check(self, w):
        if abs(w) < 1e-300:
            raise ZeroDivisionError("wp has a pole at lattice points")

    def wp(self, z: complex) -> complex:
        w = self.reduce(z)
        self._check(w)
        w2 = w * w
        return complex(1 / w2 + w2 * self._series(w2, self._c))

    def wp_prime(self, z: complex) -> complex:
        w = self.reduce(z)
        self._check(w)
        w2 = w * w
        coef = self._c * self._pow
        return complex(-2 / (w2 * w) + w * self._series(w2, coef))

    @staticmethod
    def _series(w2, coef):
        # Horner in w^2: sum_k coef[k] * w2^k
        acc = 0j
        for c in coef[::-1]:
            acc = acc * w2 + c
        return acc

    def __call__(self, z):
        return self.wp(z)

    def half_period_values(self) -> tuple:
        """``(e1, e2, e3)`` at 1/2, (1+i)/2, i/2."""
        return self.wp(0.5), self.wp(0.5 + 0.5j), self.wp(0.5j)

    def ode_residual(self, z) -> float:
        """``|wp'^2 - 4 wp^3 + g2 wp + g3|`` relative to the size of its terms."""
        p = self.wp(z)
        dp = self.wp_prime(z)
        scale = 1.0 + abs(dp) ** 2 + 4 * abs(p) ** 3 + self.g2 * abs(p)
        return abs(dp * dp - (4 * p**3 - self.g2 * p - self.g3)) / scale


@lru_cache(maxsize=1)
def default_wp() -> SquareLatticeWp:
    return SquareLatticeWp()

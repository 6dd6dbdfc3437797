"""Complex 2x2 linear algebra, Möbius maps and the Hermitian model of H^3.

Matrices are plain ``numpy`` arrays of shape (2, 2) and dtype complex.
Points of H^3 are Hermitian matrices with unit determinant and positive
trace; :class:`MinkowskiVector` and :class:`BallPoint` are the coordinate
views used for export.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-9

ID2 = np.eye(2, dtype=complex)


class IntegrityError(ValueError):
    """A matrix left the set it is supposed to live in (SL2, Hermitian, H^3)."""


class _Infinity:
    """The point at infinity of the Riemann sphere."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def is_inf(w) -> bool:
    return w is INF


def mat(e11, e12, e21, e22) -> np.ndarray:
    return np.array([[e11, e12], [e21, e22]], dtype=complex)


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.shape != (2, 2):
        raise IntegrityError(f"expected a 2x2 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise IntegrityError("matrix has non-finite entries")
    return m


def det(a) -> complex:
    return complex(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])


def as_sl2(a, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Validate that ``a`` is a finite 2x2 matrix of determinant one."""
    m = as_matrix(a)
    d = det(m)
    if abs(d - 1) > tol:
        raise IntegrityError(f"|det - 1| = {abs(d - 1):.3e} exceeds {tol:.1e}")
    return m


def renormalize(a) -> np.ndarray:
    """Divide by the principal square root of the determinant."""
    m = np.asarray(a, dtype=complex)
    return m / np.sqrt(complex(det(m)))


def inverse(a) -> np.ndarray:
    """Inverse of a unit-determinant matrix (adjugate)."""
    return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]], dtype=complex)


def star(a) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def chain(*factors) -> np.ndarray:
    """Product of matrices; long chains are renormalized to unit determinant."""
    out = ID2.copy()
    for k, f in enumerate(factors, 1):
        out = out @ f
        if k % 8 == 0:
            out = renormalize(out)
    if len(factors) > 8:
        out = renormalize(out)
    return out


def moebius_apply(a, w):
    """Projective action ``(a11 w + a12) / (a21 w + a22)`` on the extended plane."""
    if w is INF:
        if a[1, 0] == 0:
            return INF
        return complex(a[0, 0] / a[1, 0])
    w = complex(w)
    num = a[0, 0] * w + a[0, 1]
    den = a[1, 0] * w + a[1, 1]
    if den == 0:
        return INF
    return complex(num / den)


def hermitian_from_lift(F, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Return ``F F*``, the point of H^3 carried by the lift ``F``."""
    F = as_sl2(F, tol)
    return F @ star(F)


def check_hermitian(X, tol: float = DEFAULT_TOL, in_h3: bool = False) -> np.ndarray:
    X = as_matrix(X)
    if np.max(np.abs(X - star(X))) > tol * max(1.0, np.max(np.abs(X))):
        raise IntegrityError("matrix is not Hermitian")
    if in_h3:
        if abs(det(X) - 1) > tol * max(1.0, float(np.max(np.abs(X))) ** 2):
            raise IntegrityError("Hermitian matrix does not have unit determinant")
        if (X[0, 0] + X[1, 1]).real <= 0:
            raise IntegrityError("Hermitian matrix has non-positive trace")
    return X


@dataclass(frozen=True)
class MinkowskiVector:
    t: float
    x1: float
    x2: float
    x3: float

    def lorentz_norm(self) -> float:
        return -self.t**2 + self.x1**2 + self.x2**2 + self.x3**2

    def as_array(self) -> np.ndarray:
        return np.array([self.t, self.x1, self.x2, self.x3])

    def to_hermitian(self) -> np.ndarray:
        return mat(self.t + self.x3, self.x1 + 1j * self.x2,
                   self.x1 - 1j * self.x2, self.t - self.x3)


@dataclass(frozen=True)
class BallPoint:
    b1: float
    b2: float
    b3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.b1, self.b2, self.b3])


def minkowski_coords(X, tol: float = DEFAULT_TOL) -> MinkowskiVector:
    X = check_hermitian(X, tol)
    return MinkowskiVector(
        t=float(((X[0, 0] + X[1, 1]) / 2).real),
        x1=float(X[0, 1].real),
        x2=float(X[0, 1].imag),
        x3=float(((X[0, 0] - X[1, 1]) / 2).real),
    )


def ball_project(v: MinkowskiVector) -> BallPoint:
    if not v.t > 0:
        raise IntegrityError("point is not on the upper sheet of the hyperboloid")
    s = 1.0 + v.t
    return BallPoint(v.x1 / s, v.x2 / s, v.x3 / s)


def ball_coords_array(X: np.ndarray) -> np.ndarray:
    """Vectorized ball projection for an array of Hermitian matrices (..., 2, 2)."""
    X = np.asarray(X)
    t = ((X[..., 0, 0] + X[..., 1, 1]) / 2).real
    x3 = ((X[..., 0, 0] - X[..., 1, 1]) / 2).real
    x1 = X[..., 0, 1].real
    x2 = X[..., 0, 1].imag
    return np.stack([x1, x2, x3], axis=-1) / (1.0 + t)[..., None]


def check_antidiagonal_form(a, tol: float = DEFAULT_TOL) -> dict:
    """Decompose a matrix with ``a conj(a) = id`` as ``[[p, i g1], [i g2, conj p]]``."""
    a = as_matrix(a)
    res = float(np.max(np.abs(a @ np.conj(a) - ID2)))
    if res > tol:
        raise IntegrityError(f"a conj(a) differs from id by {res:.3e}")
    p = complex((a[0, 0] + np.conj(a[1, 1])) / 2)
    g1 = float((a[0, 1] / 1j).real)
    g2 = float((a[1, 0] / 1j).real)
    return {"p": p, "g1": g1, "g2": g2}


def isometry_apply(a, X) -> np.ndarray:
    return a @ X @ star(a)


def conjugate_flip(X) -> np.ndarray:
    """Entrywise conjugation; in Minkowski coordinates this negates x2."""
    return np.conj(X)


def pauli_distance(a, b) -> float:
    """min(|a - b|, |a + b|) in the max norm; distance up to sign."""
    return float(min(np.max(np.abs(a - b)), np.max(np.abs(a + b))))


def hyperbolic_distance(X, Y) -> float:
    """Geodesic distance between two points of H^3 in the Hermitian model."""
    # cosh d - 1 = -det(X - Y) / 2; differencing first avoids the acosh cancellation near d = 0
    D = np.asarray(X) - np.asarray(Y)
    s = float(-(D[0, 0] * D[1, 1] - D[0, 1] * D[1, 0]).real)
    return 2.0 * math.asinh(math.sqrt(max(s, 0.0)) / 2.0)

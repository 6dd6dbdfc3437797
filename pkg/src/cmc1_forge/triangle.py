"""Spherical triangles, reflection matrices and normalized developing maps.

A developing map of a spherical triangle is evaluated as a projective pair
``(P, R)`` with ``g = P / R``.  Working with pairs keeps every formula
polynomial, so poles of ``g`` never produce overflow; the Wronskian
``P' R - P R'`` plays the role of ``dg`` times ``R**2``.
"""

from __future__ import annotations

import cmath
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import lin
from .lin import INF, IntegrityError

ANGLE_TOL = 1e-8


class TriangleError(ValueError):
    """Invalid or degenerate triangle data."""


# ---------------------------------------------------------------------------
# abstract triangles


def _in_pi_z(x: float) -> bool:
    r = x / math.pi
    return abs(r - round(r)) * math.pi < ANGLE_TOL


def validate_triangle(A: float, B: float, C: float) -> dict:
    """Margin of the strict triangle inequality, and whether it holds."""
    if min(A, B, C) <= 0:
        raise TriangleError("triangle angles must be positive")
    ca, cb, cc = math.cos(A), math.cos(B), math.cos(C)
    margin = 1.0 - (ca * ca + cb * cb + cc * cc + 2 * ca * cb * cc)
    nondeg = not any(_in_pi_z(x) for x in (A, B, C))
    return {"valid": bool(margin > 0 and nondeg), "margin": margin,
            "nondegenerate": nondeg}


@dataclass(frozen=True)
class TriangleAngles:
    A: float
    B: float
    C: float

    def __post_init__(self):
        if min(self.A, self.B, self.C) <= 0:
            raise TriangleError("triangle angles must be positive")

    @property
    def margin(self) -> float:
        return validate_triangle(self.A, self.B, self.C)["margin"]

    @property
    def valid(self) -> bool:
        return validate_triangle(self.A, self.B, self.C)["valid"]

    @property
    def nondegenerate(self) -> bool:
        return validate_triangle(self.A, self.B, self.C)["nondegenerate"]

    def at_vertex(self, j: int) -> float:
        return (self.A, self.B, self.C)[j - 1]


def triangle_area(A: float, B: float, C: float) -> float:
    """Spherical excess."""
    return A + B + C - math.pi


def pI_monodromy_q(A: float, B: float, C: float) -> complex:
    """Diagonal entry of the third reflection matrix for interior angle C at V3."""
    s = math.sin(C)
    if abs(s) < ANGLE_TOL:
        raise TriangleError("angle C lies in pi Z")
    return (1j / s) * (math.cos(A) + cmath.exp(1j * C) * math.cos(B))


@dataclass(frozen=True)
class ReflectionMatrices:
    rho1: np.ndarray
    rho2: np.ndarray
    rho3: np.ndarray
    q: complex
    delta: float

    def __getitem__(self, j: int) -> np.ndarray:
        return (self.rho1, self.rho2, self.rho3)[j - 1]

    def as_tuple(self):
        return (self.rho1, self.rho2, self.rho3)


RHO2 = lin.mat(-1j, 0, 0, 1j)


def rho3_matrix(q: complex, delta: float) -> np.ndarray:
    return lin.mat(q, 1j * delta, 1j * delta, np.conj(q))


def reflection_matrices(A: float, B: float, C: float = math.pi / 2) -> ReflectionMatrices:
    q = pI_monodromy_q(A, B, C)
    d2 = 1.0 - abs(q) ** 2
    if d2 < -1e-12:
        raise TriangleError(f"|q| = {abs(q):.6f} > 1; no real delta")
    delta = math.sqrt(max(d2, 0.0))
    return ReflectionMatrices(lin.ID2.copy(), RHO2.copy(), rho3_matrix(q, delta), q, delta)


def word_product(rhos, word) -> np.ndarray:
    """``conj(rho_a) rho_b conj(rho_c) rho_d ...`` for an even-length word."""
    if len(word) % 2:
        raise ValueError("reflection words must have even length")
    out = lin.ID2.copy()
    for k, j in enumerate(word):
        m = rhos[j]
        out = out @ (np.conj(m) if k % 2 == 0 else m)
    return lin.renormalize(out)


# ---------------------------------------------------------------------------
# charts


@dataclass
class TriangleChart:
    """Conformal map ``u`` from the fundamental triangle onto the upper half-plane.

    ``edges[j](s)`` parametrizes edge j for s in [0, 1]; edge 1 joins V2 and
    V3, edge 2 joins V3 and V1, edge 3 joins V1 and V2.  ``vertex_images``
    maps vertex index to one of 0, 1, INF.
    """

    forward: Callable[[complex], complex]
    derivative: Callable[[complex], complex]
    vertices: Dict[int, complex]
    vertex_images: Dict[int, object]
    edges: Dict[int, Callable[[float], complex]]
    name: str = "chart"

    def __call__(self, z):
        return self.forward(z)

    def interior_point(self) -> complex:
        v = self.vertices
        return (v[1] + v[2] + v[3]) / 3

    def edge_samples(self, j: int, count: int = 5):
        return [self.edges[j](s) for s in np.linspace(0.2, 0.8, count)]


# ---------------------------------------------------------------------------
# hypergeometric core


def hyp2f1_series(a, b, c, u, tol=1e-17, nmax=4000):
    """Gauss series and its derivative; intended for |u| <= 1/2."""
    s = 0j
    ds = 0j
    term = 1 + 0j
    k = 0
    while k < nmax:
        s += term
        if k > 0:
            ds += k * term / u
        term = term * (a + k) * (b + k) / ((c + k) * (k + 1)) * u
        k += 1
        if k > 8 and abs(term) * (k + 1) < tol * (abs(s) + 1e-300):
            break
    if u == 0:
        ds = a * b / c
    return s, ds


class NormalFormODE:
    """``v'' + I(u) v = 0`` with exponent differences lam, mu, nu at 0, 1, inf.

    The pair ``(v1, v2)`` is fixed by its behaviour at 0: ``v1 ~ u**((1+lam)/2)``
    and ``v2 ~ u**((1-lam)/2)``, so ``v1/v2 ~ u**lam``.
    """

    SEED = 0.5j
    SERIES_RADIUS = 0.5

    def __init__(self, lam: float, mu: float, nu: float, rtol: float = 1e-13):
        self.lam, self.mu, self.nu = lam, mu, nu
        self.alpha = (1 - lam**2) / 4
        self.beta = (1 - mu**2) / 4
        self.gamma = (lam**2 + mu**2 - nu**2 - 1) / 4
        self.a = (1 - lam - mu + nu) / 2
        self.b = (1 - lam - mu - nu) / 2
        self.c = 1 - lam
        self.rtol = rtol
        self._seed = self.series(self.SEED)
        self._one = None

    def coefficient(self, u):
        return self.alpha / u**2 + self.beta / (u - 1) ** 2 + self.gamma / (u * (u - 1))

    def series(self, u, upper: bool = True) -> np.ndarray:
        """Frobenius pair at 0 for |u| < 1; ``upper`` picks the side of the cut on the real axis."""
        u = complex(u)
        if upper:
            u = complex(u.real, u.imag if u.imag > 0 else 0.0)
        else:
            u = complex(u.real, u.imag if u.imag < 0 else -0.0)
        a, b, c = self.a, self.b, self.c
        e = (a + b + 1 - c) / 2
        h = u ** (c / 2) * (1 - u) ** e
        hp = h * (c / (2 * u) - e / (1 - u))
        f2, f2p = hyp2f1_series(a, b, c, u)
        f1, f1p = hyp2f1_series(a - c + 1, b - c + 1, 2 - c, u)
        p = u ** (1 - c)
        y1 = p * f1
        y1p = p * f1p + (1 - c) * p / u * f1
        return np.array([h * y1, hp * y1 + h * y1p, h * f2, hp * f2 + h * f2p])

    def rhs(self, u, du, v):
        k = -self.coefficient(u) * du
        return np.array([v[1] * du, k * v[0], v[3] * du, k * v[2]])

    def _near_one(self, u) -> np.ndarray:
        # in x = 1 - u the equation keeps its form with the roles of 0 and 1 swapped
        if self._one is None:
            local = NormalFormODE(self.mu, self.lam, self.nu, self.rtol)
            um = 1 + 0.4j
            v = self._integrate(um)
            b = local.series(1 - um, upper=False)
            basis = np.array([[b[0], b[2]], [-b[1], -b[3]]])
            coef = np.linalg.solve(basis, np.array([[v[0], v[2]], [v[1], v[3]]]))
            self._one = (local, coef)
        local, coef = self._one
        b = local.series(1 - u, upper=False)
        basis = np.array([[b[0], b[2]], [-b[1], -b[3]]])
        out = basis @ coef
        return np.array([out[0, 0], out[1, 0], out[0, 1], out[1, 1]])

    def state(self, u) -> np.ndarray:
        """State ``(v1, v1', v2, v2')`` at u in the closed upper half-plane."""
        u = complex(u)
        if abs(u) <= self.SERIES_RADIUS:
            return self.series(u)
        if abs(u - 1) <= self.SERIES_RADIUS:
            return self._near_one(u)
        return self._integrate(u)

    def _integrate(self, u) -> np.ndarray:
        u0 = self.SEED
        du = u - u0

        def f(s, v):
            return self.rhs(u0 + s * du, du, v)

        sol = solve_ivp(f, (0.0, 1.0), self._seed.astype(complex), method="DOP853",
                        rtol=self.rtol, atol=1e-15)
        if not sol.success:
            raise IntegrityError(f"hypergeometric continuation failed: {sol.message}")
        return sol.y[:, -1]


# ---------------------------------------------------------------------------
# generalized circles and normalization


def _unit_pair(P, R):
    n = math.hypot(abs(P), abs(R))
    return P / n, R / n


def fit_circle(pairs) -> tuple:
    """Hermitian matrix ``[[a, b], [conj b, c]]`` of the circle through projective points.

    Returns the matrix and the relative fit residual.
    """
    rows = []
    for P, R in pairs:
        P, R = _unit_pair(P, R)
        x = np.conj(P) * R
        rows.append([abs(P) ** 2, 2 * x.real, -2 * x.imag, abs(R) ** 2])
    rows = np.array(rows)
    _, s, vt = np.linalg.svd(rows)
    a, bx, by, c = vt[-1]
    H = np.array([[a, bx + 1j * by], [bx - 1j * by, c]])
    return H, float(s[-1] / s[0])


def transform_circle(H, M):
    Minv = lin.inverse(lin.renormalize(M))
    return lin.star(Minv) @ H @ Minv


def chordal(p, q) -> float:
    """Chordal distance between two projective points (in [0, 1])."""
    P1, R1 = _unit_pair(*p)
    P2, R2 = _unit_pair(*q)
    return abs(P1 * R2 - P2 * R1)


def _pair_apply(M, P, R):
    return M[0, 0] * P + M[0, 1] * R, M[1, 0] * P + M[1, 1] * R


def _other_intersection(H1, H2, point):
    """Second intersection of two generalized circles through ``point``."""
    P3, R3 = _unit_pair(*point)
    U = lin.mat(P3, -np.conj(R3), R3, np.conj(P3))  # sends infinity to point
    M0 = lin.star(U)
    L1 = transform_circle(H1, M0)
    L2 = transform_circle(H2, M0)
    # lines: 2 Re(conj(b) w) + c = 0
    b1, c1 = L1[0, 1], L1[1, 1].real
    b2, c2 = L2[0, 1], L2[1, 1].real
    mat2 = np.array([[b1.real, b1.imag], [b2.real, b2.imag]]) * 2
    if abs(np.linalg.det(mat2)) < 1e-14 * max(1.0, np.max(np.abs(mat2))) ** 2:
        raise IntegrityError("edge circles at V3 are tangent")
    x, y = np.linalg.solve(mat2, [-c1, -c2])
    return _pair_apply(U, complex(x, y), 1.0)


# ---------------------------------------------------------------------------
# developing map germ


@dataclass
class DevelopingMapGerm:
    """Normalized developing map of a triangle, evaluated on the fundamental domain.

    The germ exposes a small state-space interface used for analytic
    continuation along paths: ``aux_start(z)`` gives the auxiliary state at a
    point of the fundamental domain, ``aux_rhs`` its derivative along a path
    and ``pair_from_aux`` the projective value ``(P, R)`` plus the Wronskian
    ``P_z R - P R_z``.  Algebraic germs carry no auxiliary state.
    """

    angles: TriangleAngles
    chart: TriangleChart
    mode: str
    closed_form: Optional[tuple] = None
    ode: Optional[NormalFormODE] = None
    normalizer: np.ndarray = field(default_factory=lambda: lin.ID2.copy())
    rho: Optional[ReflectionMatrices] = None
    diagnostics: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    # -- raw (un-normalized) evaluation --------------------------------------
    @property
    def aux_dim(self) -> int:
        return 0 if self.mode == "algebraic" else 4

    def _raw_from_aux(self, z, aux):
        if self.mode == "algebraic":
            h, dh = self.closed_form
            return h(z), 1.0 + 0j, dh(z)
        v1, v1p, v2, v2p = aux
        return v1, v2, (v1p * v2 - v1 * v2p) * self.chart.derivative(z)

    def aux_start(self, z) -> np.ndarray:
        if self.mode == "algebraic":
            return np.zeros(0, dtype=complex)
        key = complex(z)
        u = self.chart.forward(key)
        if abs(u) <= self.ode.SERIES_RADIUS:
            return self.ode.series(u)
        with self._lock:
            hit = self._cache.get(key)
        if hit is None:
            hit = self.ode.state(u)
            with self._lock:
                self._cache[key] = hit
        return hit.copy()

    def aux_rhs(self, z, dz_ds, aux) -> np.ndarray:
        if self.mode == "algebraic":
            return aux
        return self.ode.rhs(self.chart.forward(z), self.chart.derivative(z) * dz_ds, aux)

    def pair_from_aux(self, z, aux):
        P, R, W = self._raw_from_aux(z, aux)
        N = self.normalizer
        return N[0, 0] * P + N[0, 1] * R, N[1, 0] * P + N[1, 1] * R, W

    def raw_pair(self, z):
        P, R, _ = self._raw_from_aux(z, self.aux_start(z))
        return P, R

    # -- normalized evaluation on the fundamental domain ---------------------
    def pair(self, z):
        return self.pair_from_aux(z, self.aux_start(z))

    def __call__(self, z):
        P, R, _ = self.pair(z)
        return INF if R == 0 else P / R

    def evaluate(self, z):
        """``(g(z), g'(z))``; g' is INF at poles of g."""
        P, R, W = self.pair(z)
        if R == 0:
            return INF, INF
        return P / R, W / R**2

    def density(self, z) -> float:
        """Pullback ``4|dg|^2 / (1 + |g|^2)^2`` of the spherical metric (per |dz|^2)."""
        P, R, W = self.pair(z)
        return float(4 * abs(W) ** 2 / (abs(P) ** 2 + abs(R) ** 2) ** 2)

    def vertex_pair(self, j: int):
        """Projective value at vertex j (exact for the vertex sent to 0)."""
        z = self.chart.vertices[j]
        if self.mode == "hypergeometric":
            img = self.chart.vertex_images[j]
            if img == 0:
                raw = (0j, 1 + 0j)
            else:
                zc = self.chart.interior_point()
                raw = self.raw_pair(z + 1e-6 * (zc - z))
        else:
            raw = (self.closed_form[0](z), 1 + 0j)
        return _pair_apply(self.normalizer, *raw)

    # -- checks -------------------------------------------------------------
    def edge_residuals(self, count: int = 7) -> dict:
        """Chordal violation of the three reflection relations along each edge."""
        C = self.angles.C
        rot = lin.mat(cmath.exp(-0.5j * C), 0, 0, cmath.exp(0.5j * C))
        r3 = self.rho.rho3
        out = {}
        for j in (1, 2, 3):
            worst = 0.0
            for z in self.chart.edge_samples(j, count):
                P, R, _ = self.pair(z)
                if j == 2:
                    P, R = _pair_apply(rot, P, R)
                if j in (1, 2):
                    worst = max(worst, chordal((P, R), (np.conj(P), np.conj(R))))
                else:
                    worst = max(worst, chordal((np.conj(P), np.conj(R)), _pair_apply(r3, P, R)))
            out[j] = worst
        return out


def _normalize(germ: DevelopingMapGerm, tol: float = 1e-6) -> None:
    chart = germ.chart
    raw = {j: [germ.raw_pair(z) for z in chart.edge_samples(j)] for j in (1, 2, 3)}
    v3 = germ.vertex_pair(3)  # normalizer is still the identity here
    fits = {j: fit_circle(raw[j]) for j in (1, 2, 3)}
    fit_res = max(f[1] for f in fits.values())
    if fit_res > 1e-6:
        raise IntegrityError(f"edge images are not circles (residual {fit_res:.2e})")
    H = {j: fits[j][0] for j in (1, 2, 3)}
    other = _other_intersection(H[1], H[2], v3)
    S = lin.mat(other[0], v3[0], other[1], v3[1])
    T = lin.renormalize(lin.inverse(lin.renormalize(S)))
    H3 = transform_circle(H[3], T)
    a, c = H3[0, 0].real, H3[1, 1].real
    if c == 0 or -a / c <= 0:
        raise IntegrityError("third edge image cannot be made a great circle")
    beta = math.sqrt(-a / c)
    D = lin.mat(math.sqrt(beta), 0, 0, 1 / math.sqrt(beta))
    M = D @ T
    P, R = _pair_apply(M, *raw[1][len(raw[1]) // 2])
    phi = cmath.phase(P / R)
    M = lin.mat(cmath.exp(-0.5j * phi), 0, 0, cmath.exp(0.5j * phi)) @ M
    germ.normalizer = M
    res_plus = germ.edge_residuals()
    germ.normalizer = lin.mat(1j, 0, 0, -1j) @ M
    res_minus = germ.edge_residuals()
    if res_plus[3] <= res_minus[3]:
        germ.normalizer = M
        res = res_plus
    else:
        res = res_minus
    germ.diagnostics.update({
        "circle_fit_residual": fit_res,
        "scale": beta,
        "edge_residuals": res,
    })
    worst = max(res.values())
    if worst > tol:
        raise IntegrityError(f"normalization failed: edge residual {worst:.2e}")
    for j, (ea, eb, s0) in {1: (2, 3, 0.02), 2: (1, 3, 0.98)}.items():
        val = _corner_value(germ, ea, eb, germ.pair(chart.edges[3](s0))[:2])
        germ.diagnostics[f"V{j}_at_infinity"] = bool(abs(val[1]) < 1e-12)
        germ.diagnostics[f"V{j}_value"] = "inf" if abs(val[1]) < 1e-12 else complex(val[0] / val[1])
    p3 = germ.vertex_pair(3)
    germ.diagnostics["V3_value"] = abs(p3[0]) / math.hypot(abs(p3[0]), abs(p3[1]))


def _corner_value(germ, ea: int, eb: int, near):
    """Vertex value as the intersection of two normalized edge circles.

    Edge ``ea`` is the line through 0 (edge 1: the real axis, edge 2:
    ``exp(iC) R``); of the two intersections with edge ``eb`` the one closer
    to ``near`` is returned.
    """
    pts = [germ.pair(z)[:2] for z in germ.chart.edge_samples(eb)]
    H, _ = fit_circle(pts)
    e = 1.0 if ea == 1 else cmath.exp(1j * germ.angles.C)
    a = H[0, 0].real
    b = 2 * (np.conj(H[0, 1]) * e).real
    c = H[1, 1].real
    if abs(a) < 1e-12 * max(abs(b), abs(c)):
        cands = [(1.0 + 0j, 0j), (e * (-c / b), 1.0 + 0j)]
    else:
        disc = cmath.sqrt(b * b - 4 * a * c)
        cands = [(e * (-b + disc) / (2 * a), 1.0 + 0j), (e * (-b - disc) / (2 * a), 1.0 + 0j)]
    return min(cands, key=lambda p: chordal(p, near))


def build_developing_map(angles: TriangleAngles, chart: TriangleChart,
                         closed_form: Optional[tuple] = None,
                         tol: float = 1e-6) -> DevelopingMapGerm:
    """Normalized developing map: ``g(V3) = 0``, ``g`` real on edge 1,
    ``exp(-iC) g`` real on edge 2, ``conj g = rho3 * g`` on edge 3.

    ``closed_form`` is a pair of callables ``(h, h')`` giving an algebraic
    developing map up to Möbius transformations.  Without it the triangle
    function is obtained from the normal-form hypergeometric equation in the
    chart coordinate.
    """
    check = validate_triangle(angles.A, angles.B, angles.C)
    if not check["valid"]:
        raise TriangleError(f"invalid triangle (margin {check['margin']:.3e})")
    rho = reflection_matrices(angles.A, angles.B, angles.C)
    if closed_form is not None:
        germ = DevelopingMapGerm(angles, chart, "algebraic", closed_form=closed_form, rho=rho)
    else:
        if chart.vertex_images[3] != 0:
            raise TriangleError("hypergeometric germs need V3 sent to u = 0")
        at = {}
        for j in (1, 2, 3):
            img = chart.vertex_images[j]
            at["inf" if img is INF else int(img)] = angles.at_vertex(j) / math.pi
        ode = NormalFormODE(at[0], at[1], at["inf"])
        germ = DevelopingMapGerm(angles, chart, "hypergeometric", ode=ode, rho=rho)
    _normalize(germ, tol)
    return germ


def reflect_continue(germ: DevelopingMapGerm, edge_index: int, value):
    """Value of the germ at the mirror image (across edge ``edge_index``) of a point where it equals ``value``."""
    if germ.rho is None:
        raise TriangleError("germ is not normalized")
    if edge_index == 1:
        m = lin.ID2
    elif edge_index == 2:
        C = germ.angles.C
        m = lin.mat(cmath.exp(-1j * C), 0, 0, cmath.exp(1j * C))
    elif edge_index == 3:
        m = germ.rho.rho3
    else:
        raise ValueError("edge index must be 1, 2 or 3")
    w = lin.moebius_apply(m, value)
    return INF if w is INF else complex(np.conj(w))

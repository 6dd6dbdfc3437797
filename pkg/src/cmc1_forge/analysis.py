"""Path integration of the null-curve ODE, contour integrals and Schwarzians.

Along a path ``z(s)`` the lift ``F`` solves

    dF/ds = t * F * [[g, -g^2], [1, -g]] * q(z) / g'(z) * dz/ds,

evaluated in projective form ``[[PR, -P^2], [R^2, -PR]] * q / W`` so that poles
of ``g`` are harmless.  Hypergeometric germs carry their own linear ODE
state, which is advanced together with ``F``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import lin
from .lin import IntegrityError

RTOL = 1e-10
ATOL = 1e-12
MIN_POLE_DISTANCE = 1e-3


class PathError(ValueError):
    """Malformed path or a path running into a singularity."""


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class Line:
    a: complex
    b: complex

    def point(self, s):
        return self.a + s * (self.b - self.a)

    def velocity(self, s):
        return self.b - self.a

    @property
    def start(self):
        return complex(self.a)

    @property
    def end(self):
        return complex(self.b)

    def reversed(self):
        return Line(self.b, self.a)


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    theta0: float
    theta1: float

    def point(self, s):
        return self.center + self.radius * cmath.exp(1j * (self.theta0 + s * (self.theta1 - self.theta0)))

    def velocity(self, s):
        th = self.theta0 + s * (self.theta1 - self.theta0)
        return 1j * self.radius * (self.theta1 - self.theta0) * cmath.exp(1j * th)

    @property
    def start(self):
        return self.point(0.0)

    @property
    def end(self):
        return self.point(1.0)

    def reversed(self):
        return Arc(self.center, self.radius, self.theta1, self.theta0)


@dataclass(frozen=True)
class Curve:
    """Segment given by a parametrization on [0, 1] and its derivative."""

    fn: Callable[[float], complex]
    dfn: Callable[[float], complex]

    def point(self, s):
        return complex(self.fn(s))

    def velocity(self, s):
        return complex(self.dfn(s))

    @property
    def start(self):
        return self.point(0.0)

    @property
    def end(self):
        return self.point(1.0)

    def reversed(self):
        return Curve(lambda s: self.fn(1.0 - s), lambda s: -self.dfn(1.0 - s))


@dataclass
class PathPlan:
    """Chain of segments sharing endpoints.

    ``chart_switches`` is kept for data compatibility; all built-in paths stay
    in the finite coordinate chart (loops around a puncture at infinity are
    large circles).
    """

    segments: List[object]
    min_pole_distance: float = MIN_POLE_DISTANCE
    chart_switches: List[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.segments:
            raise PathError("empty path")
        for s1, s2 in zip(self.segments, self.segments[1:]):
            if abs(s1.end - s2.start) > 1e-12 * max(1.0, abs(s1.end)):
                raise PathError("consecutive segments do not share endpoints")

    @property
    def start(self) -> complex:
        return self.segments[0].start

    @property
    def end(self) -> complex:
        return self.segments[-1].end

    @property
    def closed(self) -> bool:
        return abs(self.start - self.end) < 1e-12 * max(1.0, abs(self.start))

    def reversed(self) -> "PathPlan":
        return PathPlan([s.reversed() for s in reversed(self.segments)], self.min_pole_distance)

    def __add__(self, other: "PathPlan") -> "PathPlan":
        return PathPlan(self.segments + other.segments, min(self.min_pole_distance, other.min_pole_distance))

    def check(self, singularities: Sequence[complex], samples: int = 400) -> float:
        """Smallest distance to the given points; raises below ``min_pole_distance``."""
        best = math.inf
        pts = np.array([complex(p) for p in singularities]) if len(singularities) else None
        for seg in self.segments:
            for s in np.linspace(0.0, 1.0, samples):
                z = seg.point(s)
                if pts is not None:
                    best = min(best, float(np.min(np.abs(pts - z))))
        if best < self.min_pole_distance:
            raise PathError(f"path passes within {best:.2e} of a singularity")
        return best


def polyline(points: Sequence[complex], **kw) -> PathPlan:
    return PathPlan([Line(complex(a), complex(b)) for a, b in zip(points, points[1:])], **kw)


def circle(center: complex, radius: float, theta0: float = 0.0, turns: int = 1, **kw) -> PathPlan:
    return PathPlan([Arc(complex(center), radius, theta0, theta0 + 2 * math.pi * turns)], **kw)


def keyhole(approach: Sequence[complex], center: complex, **kw) -> PathPlan:
    """Loop based at ``approach[0]``: out along the polyline, once around
    ``center`` counter-clockwise starting from the last polyline point, and back."""
    out = polyline(approach, **kw) if len(approach) > 1 else None
    p = complex(approach[-1])
    r = abs(p - complex(center))
    th = cmath.phase(p - complex(center))
    loop = circle(center, r, th, **kw)
    if out is None:
        return loop
    return out + loop + out.reversed()


# ---------------------------------------------------------------------------
# maps


@dataclass
class RawMap:
    """A closed-form meromorphic map ``h`` used without normalization."""

    h: Callable[[complex], complex]
    dh: Callable[[complex], complex]
    aux_dim: int = 0

    def aux_start(self, z):
        return np.zeros(0, dtype=complex)

    def aux_rhs(self, z, dz_ds, aux):
        return aux

    def pair_from_aux(self, z, aux):
        return self.h(z), 1.0 + 0j, self.dh(z)

    def pair(self, z):
        return self.pair_from_aux(z, None)


def null_generator(P, R, W, qz) -> np.ndarray:
    """``[[g, -g^2], [1, -g]] q / g'`` in projective form."""
    k = qz / W
    pr = P * R * k
    return np.array([[pr, -P * P * k], [R * R * k, -pr]])


# ---------------------------------------------------------------------------
# ODE runs


@dataclass
class OdeRun:
    F_end: np.ndarray
    aux_end: np.ndarray
    error_estimate: float
    samples: list = field(default_factory=list)

    @property
    def det_drift(self) -> float:
        return abs(lin.det(self.F_end) - 1)


def _solve(rhs, y0, rtol, atol, t_eval=None):
    sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=rtol, atol=atol,
                    t_eval=t_eval)
    if not sol.success:
        raise IntegrityError(f"integration failed: {sol.message}")
    return sol


def integrate_null_ode(germ, q: Callable[[complex], complex], t: float, path: PathPlan,
                       F0=None, aux0=None, rtol: float = RTOL, atol: float = ATOL,
                       sample_params: Optional[Sequence[Sequence[float]]] = None) -> OdeRun:
    """Solve the null ODE along ``path`` starting from ``F0`` (identity by default).

    ``aux0`` is the germ's auxiliary state at the start; when omitted it is
    computed from the germ, which requires the start to lie in the
    fundamental domain.  ``sample_params[k]`` lists parameters of segment k at
    which ``(k, s, z, F, aux)`` samples are recorded.
    """
    F = lin.ID2.copy() if F0 is None else np.array(F0, dtype=complex)
    aux = germ.aux_start(path.start) if aux0 is None else np.array(aux0, dtype=complex)
    na = len(aux)
    err = 0.0
    samples = []
    for k, seg in enumerate(path.segments):

        def rhs(s, y, seg=seg):
            z = seg.point(s)
            dz = seg.velocity(s)
            a = y[4:]
            P, R, W = germ.pair_from_aux(z, a)
            out = np.empty_like(y)
            if t != 0.0:
                G = null_generator(P, R, W, q(z)) * (t * dz)
                Fm = y[:4].reshape(2, 2)
                out[:4] = (Fm @ G).ravel()
            else:
                out[:4] = 0.0
            if na:
                out[4:] = germ.aux_rhs(z, dz, a)
            return out

        y0 = np.concatenate([F.ravel(), aux]).astype(complex)
        t_eval = None
        if sample_params is not None and len(sample_params[k]):
            t_eval = sorted(set(float(x) for x in sample_params[k]) | {1.0})
        sol = _solve(rhs, y0, rtol, atol, t_eval)
        if t_eval is not None:
            for j, s in enumerate(sol.t):
                if np.min(np.abs(np.asarray(sample_params[k], dtype=float) - s)) < 1e-13:
                    Fs = sol.y[:4, j].reshape(2, 2)
                    samples.append((k, float(s), seg.point(s), Fs.copy(), sol.y[4:, j].copy()))
        y = sol.y[:, -1]
        F = y[:4].reshape(2, 2)
        drift = abs(lin.det(F) - 1)
        err += drift + rtol
        F = lin.renormalize(F)
        aux = y[4:]
    return OdeRun(F, aux, err, samples)


def integrate_from_vertex(germ, q, t: float, z_end: complex, rtol: float = RTOL,
                          atol: float = ATOL, offset: float = 1e-6) -> OdeRun:
    """F along the straight segment from V3 (where F = id) to ``z_end``.

    The germ is evaluated pointwise, so ``z_end`` must lie in the region where
    the germ has a direct local expansion around V3.  The generator is a 0/0
    limit at V3 (and noisy right next to it), so the first ``offset`` of
    length is covered by one midpoint step, which is exact to O(offset^2).
    """
    v3 = complex(germ.chart.vertices[3])
    z_end = complex(z_end)
    frac = min(offset / max(abs(z_end - v3), 1e-300), 0.5)
    z0 = v3 + frac * (z_end - v3)
    seg = Line(z0, z_end)

    def gen(z):
        P, R, W = germ.pair(z)
        return null_generator(P, R, W, q(z))

    def rhs(s, y):
        G = gen(seg.point(s)) * (t * seg.velocity(s))
        return (y.reshape(2, 2) @ G).ravel()

    if t == 0.0:
        F = lin.ID2.copy()
        err = 0.0
    else:
        F0 = lin.ID2 + t * (z0 - v3) * gen(v3 + 0.5 * (z0 - v3))
        sol = _solve(rhs, F0.ravel().astype(complex), rtol, atol)
        F = sol.y[:, -1].reshape(2, 2)
        err = abs(lin.det(F) - 1) + rtol
        F = lin.renormalize(F)
    return OdeRun(F, germ.aux_start(z_end), err)


def contour_integral_matrix(germ, q, loop: PathPlan, aux0=None,
                            rtol: float = 1e-12, atol: float = 1e-14) -> np.ndarray:
    """``∮ [[g, -g^2], [1, -g]] q / g' dz`` around a closed path."""
    if not loop.closed:
        raise PathError("contour is not closed")
    aux = germ.aux_start(loop.start) if aux0 is None else np.array(aux0, dtype=complex)
    na = len(aux)
    acc = np.zeros(4, dtype=complex)
    for seg in loop.segments:

        def rhs(s, y, seg=seg):
            z = seg.point(s)
            dz = seg.velocity(s)
            a = y[4:]
            P, R, W = germ.pair_from_aux(z, a)
            out = np.empty_like(y)
            out[:4] = (null_generator(P, R, W, q(z)) * dz).ravel()
            if na:
                out[4:] = germ.aux_rhs(z, dz, a)
            return out

        y0 = np.concatenate([np.zeros(4), aux]).astype(complex)
        sol = _solve(rhs, y0, rtol, atol)
        acc += sol.y[:4, -1]
        aux = sol.y[4:, -1]
    return acc.reshape(2, 2)


def residue(f: Callable[[complex], complex], p: complex, radius: float, nodes: int = 512) -> complex:
    """``(1/2πi) ∮ f dz`` on ``|z - p| = radius`` by the trapezoidal rule.

    For integrands analytic in an annulus around the circle the rule
    converges geometrically in ``nodes``.
    """
    th = 2 * np.pi * np.arange(nodes) / nodes
    w = radius * np.exp(1j * th)
    vals = np.array([f(p + x) for x in w])
    if not np.all(np.isfinite(vals)):
        raise IntegrityError("integrand is not finite on the circle")
    return complex(np.mean(vals * w))


def numerical_schwarzian(g: Callable[[complex], complex], z: complex, h: float = 1e-3) -> complex:
    """``(g''/g')' - (g''/g')^2 / 2`` from fourth-order central differences."""
    z = complex(z)
    v = {k: complex(g(z + k * h)) for k in (-3, -2, -1, 1, 2, 3)}
    v[0] = complex(g(z))
    d1 = (-v[2] + 8 * v[1] - 8 * v[-1] + v[-2]) / (12 * h)
    d2 = (-v[2] + 16 * v[1] - 30 * v[0] + 16 * v[-1] - v[-2]) / (12 * h * h)
    d3 = (-v[3] + 8 * v[2] - 13 * v[1] + 13 * v[-1] - 8 * v[-2] + v[-3]) / (8 * h**3)
    if abs(d1) < 1e-13 * max(1.0, abs(v[0])):
        raise IntegrityError("derivative vanishes; Schwarzian undefined at a branch point")
    return d3 / d1 - 1.5 * (d2 / d1) ** 2


def laurent_order(f: Callable[[complex], complex], p: complex,
                  radii: Sequence[float] = (1e-2, 5e-3, 2.5e-3), nodes: int = 16,
                  max_residual: float = 0.05) -> dict:
    """Order of a zero/pole of ``f`` at ``p`` from the slope of log|f| against log r.

    Circle averages of log|f| are used, which are exactly linear in log r for
    ``c (z-p)^k`` and insensitive to the leading coefficient's phase.
    """
    xs, ys = [], []
    for r in radii:
        th = 2 * np.pi * (np.arange(nodes) + 0.5) / nodes
        vals = [abs(f(p + r * cmath.exp(1j * x))) for x in th]
        xs.append(math.log(r))
        ys.append(float(np.mean(np.log(vals))))
    slope, icpt = np.polyfit(xs, ys, 1)
    fit = np.polyval([slope, icpt], xs)
    resid = float(np.max(np.abs(fit - ys)))
    order = int(round(slope))
    ok = abs(slope - order) < max_residual and resid < max_residual
    return {"order": order, "slope": float(slope), "residual": resid, "ok": bool(ok)}

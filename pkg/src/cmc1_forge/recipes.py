"""Catalog of example surfaces: domain, Hopf differential, triangle data.

Every recipe describes a fundamental triangle D with vertices V1 (an
umbilic), V2 (a puncture) and V3, the Hopf differential ``Q = q(z) dz^2``,
a global chart ``u`` that maps D conformally onto the upper half-plane and
is invariant under the reflections across the edges of D, and the
reflection combinatorics (2l copies of D meet at V1, 2k at V2, 2c at V3).
Edges are numbered so that edge 1 joins V2 and V3, edge 2 joins V3 and V1
and edge 3 joins V1 and V2.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional

import numpy as np
import sympy as sp

from . import analysis, lin
from .exprs import Z, compile_expr, from_json, to_json, wp, wp_prime
from .elliptic import default_wp
from .lin import INF
from .triangle import (DevelopingMapGerm, TriangleAngles, TriangleChart, build_developing_map,
                       chordal, validate_triangle)


class RecipeError(ValueError):
    """Unknown or unsupported recipe data."""


# ---------------------------------------------------------------------------
# edges and reflections


@dataclass(frozen=True)
class Edge:
    kind: str  # "line" or "arc"
    a: complex = 0j
    b: complex = 0j
    center: complex = 0j
    radius: float = 0.0
    theta0: float = 0.0
    theta1: float = 0.0

    def point(self, s: float) -> complex:
        if self.kind == "line":
            return self.a + s * (self.b - self.a)
        return self.center + self.radius * cmath.exp(1j * (self.theta0 + s * (self.theta1 - self.theta0)))

    def tangent(self, s: float) -> complex:
        if self.kind == "line":
            return self.b - self.a
        th = self.theta0 + s * (self.theta1 - self.theta0)
        return 1j * self.radius * (self.theta1 - self.theta0) * cmath.exp(1j * th)

    def as_segment(self):
        if self.kind == "line":
            return analysis.Line(self.a, self.b)
        return analysis.Arc(self.center, self.radius, self.theta0, self.theta1)

    def to_dict(self) -> dict:
        if self.kind == "line":
            return {"kind": "line", "a": _c(self.a), "b": _c(self.b)}
        return {"kind": "arc", "center": _c(self.center), "radius": self.radius,
                "theta0": self.theta0, "theta1": self.theta1}

    @staticmethod
    def from_dict(d) -> "Edge":
        if d["kind"] == "line":
            return Edge("line", a=_uc(d["a"]), b=_uc(d["b"]))
        return Edge("arc", center=_uc(d["center"]), radius=float(d["radius"]),
                    theta0=float(d["theta0"]), theta1=float(d["theta1"]))


def _c(z):
    if z is INF:
        return "inf"
    z = complex(z)
    return [z.real, z.imag]


def _uc(v):
    if v == "inf":
        return INF
    return complex(v[0], v[1])


def anti_moebius(M, z: complex) -> complex:
    """``z -> M * conj(z)``."""
    w = lin.moebius_apply(M, INF if z is INF else complex(np.conj(z)))
    return w


def anti_moebius_dz(M, z: complex) -> complex:
    """Derivative of ``x -> M * x`` at ``x = conj(z)``."""
    x = complex(np.conj(z))
    d = lin.det(M)
    return d / (M[1, 0] * x + M[1, 1]) ** 2


# ---------------------------------------------------------------------------
# recipe


@dataclass
class SurfaceRecipe:
    name: str
    tag: str
    params: dict
    domain: str
    punctures: list
    umbilics: list
    end_order: int
    umbilic_order: int
    zeros_in_domain: Dict[int, int]
    q_expr: sp.Expr
    chart_expr: sp.Expr
    base_g_expr: Optional[sp.Expr]
    angles: tuple
    vertices: Dict[int, complex]
    edges: Dict[int, Edge]
    reflections: Dict[int, np.ndarray]
    vertex_images: Dict[int, object]
    l: int
    k: int
    c: int
    copies_total: int
    words: List[tuple] = field(default_factory=list)
    loops: List[dict] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    # -- evaluators ------------------------------------------------------------
    @cached_property
    def q(self):
        return compile_expr(self.q_expr)

    @cached_property
    def u(self):
        return compile_expr(self.chart_expr)

    @cached_property
    def du(self):
        return compile_expr(sp.diff(self.chart_expr, Z))

    @property
    def A(self) -> float:
        return self.angles[0]

    @property
    def B0(self) -> float:
        return self.angles[1]

    @property
    def C(self) -> float:
        return self.angles[2]

    def triangle_angles(self, B: Optional[float] = None) -> TriangleAngles:
        return TriangleAngles(self.A, self.B0 if B is None else B, self.C)

    @cached_property
    def chart(self) -> TriangleChart:
        return TriangleChart(self.u, self.du, dict(self.vertices), dict(self.vertex_images),
                             {j: self.edges[j].point for j in (1, 2, 3)}, name=self.name)

    @cached_property
    def closed_form(self):
        if self.base_g_expr is None:
            return None
        return compile_expr(self.base_g_expr), compile_expr(sp.diff(self.base_g_expr, Z))

    def germ(self, B: Optional[float] = None, algebraic: bool = False) -> DevelopingMapGerm:
        """Normalized developing map for angle B at V2 (B0 by default)."""
        if algebraic:
            if self.closed_form is None:
                raise RecipeError(f"{self.name} has no closed-form developing map")
            return build_developing_map(self.triangle_angles(), self.chart, self.closed_form)
        return build_developing_map(self.triangle_angles(B), self.chart)

    def reflect(self, j: int, z: complex) -> complex:
        return anti_moebius(self.reflections[j], z)

    def euclidean_angle(self, j: int) -> float:
        """Interior angle of D at vertex j in the z-coordinate."""
        # edges at Vj: (outgoing, incoming) with outgoing starting at Vj
        e_out = {1: 3, 2: 1, 3: 2}[j]
        e_in = {1: 2, 2: 3, 3: 1}[j]
        t_out = self.edges[e_out].tangent(0.0)
        t_in = -self.edges[e_in].tangent(1.0)
        ang = abs(cmath.phase(t_in / t_out))
        return ang

    def vertex_sector(self, j: int) -> tuple:
        """Angular range (theta0, theta1) of D at vertex j."""
        e_out = {1: 3, 2: 1, 3: 2}[j]
        e_in = {1: 2, 2: 3, 3: 1}[j]
        a = cmath.phase(self.edges[e_out].tangent(0.0))
        b = cmath.phase(-self.edges[e_in].tangent(1.0))
        lo, hi = sorted((a, b))
        if hi - lo > math.pi:
            lo, hi = hi, lo + 2 * math.pi
        return lo, hi

    def base_point(self, target: float = 0.25) -> complex:
        """Point on the segment from V3 to the centroid of D with ``|u| = target``."""
        v3 = self.vertices[3]
        zc = self.chart.interior_point()
        lo, hi = 0.0, 1.0
        if abs(self.u(v3 + hi * (zc - v3))) < target:
            return v3 + hi * (zc - v3)
        for _ in range(60):
            mid = (lo + hi) / 2
            if abs(self.u(v3 + mid * (zc - v3))) < target:
                lo = mid
            else:
                hi = mid
        return v3 + lo * (zc - v3)

    def local_q(self, p):
        """``q`` in a local coordinate centred at ``p`` (``w = 1/z`` at infinity)."""
        if p is INF:
            return lambda w: self.q(1 / w) / w**4
        return lambda w: self.q(p + w)

    def loop_paths(self, base: Optional[complex] = None) -> List[tuple]:
        """(puncture, closed PathPlan based at ``base``) for each recorded loop."""
        base = self.base_point() if base is None else base
        out = []
        for lp in self.loops:
            pts = [base] + [complex(*p) if isinstance(p, (list, tuple)) else complex(p) for p in lp["approach"]]
            center = complex(*lp["center"]) if isinstance(lp["center"], (list, tuple)) else complex(lp["center"])
            out.append((lp.get("puncture", center), analysis.keyhole(pts, center)))
        return out

    def vertex_copies(self) -> list:
        """Points where the chart takes the values 0, 1 or infinity near the loops (for path checks)."""
        return list(self.notes.get("vertex_copies", []))

    # -- serialization ---------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format": "cmc1-forge-recipe/1",
            "name": self.name,
            "tag": self.tag,
            "params": self.params,
            "domain": self.domain,
            "punctures": [_c(p) for p in self.punctures],
            "umbilics": [_c(p) for p in self.umbilics],
            "end_order": self.end_order,
            "umbilic_order": self.umbilic_order,
            "zeros_in_domain": {str(j): o for j, o in self.zeros_in_domain.items()},
            "q": to_json(self.q_expr),
            "chart": to_json(self.chart_expr),
            "base_g": None if self.base_g_expr is None else to_json(self.base_g_expr),
            "angles": list(self.angles),
            "vertices": {str(j): _c(v) for j, v in self.vertices.items()},
            "edges": {str(j): e.to_dict() for j, e in self.edges.items()},
            "reflections": {str(j): [_c(x) for x in np.asarray(M).ravel()] for j, M in self.reflections.items()},
            "vertex_images": {str(j): ("inf" if v is INF else v) for j, v in self.vertex_images.items()},
            "l": self.l, "k": self.k, "c": self.c, "copies_total": self.copies_total,
            "words": [[name, list(w)] for name, w in self.words],
            "loops": self.loops,
            "notes": {k: v for k, v in self.notes.items() if k != "vertex_copies"},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @staticmethod
    def from_dict(d: dict) -> "SurfaceRecipe":
        try:
            if d.get("format") != "cmc1-forge-recipe/1":
                raise RecipeError("unknown recipe format")
            refl = {int(j): np.array([_uc(x) for x in v], dtype=complex).reshape(2, 2)
                    for j, v in d["reflections"].items()}
            return SurfaceRecipe(
                name=d["name"], tag=d["tag"], params=d["params"], domain=d["domain"],
                punctures=[_uc(p) for p in d["punctures"]],
                umbilics=[_uc(p) for p in d["umbilics"]],
                end_order=int(d["end_order"]), umbilic_order=int(d["umbilic_order"]),
                zeros_in_domain={int(j): int(o) for j, o in d["zeros_in_domain"].items()},
                q_expr=from_json(d["q"]), chart_expr=from_json(d["chart"]),
                base_g_expr=None if d.get("base_g") is None else from_json(d["base_g"]),
                angles=tuple(float(a) for a in d["angles"]),
                vertices={int(j): _uc(v) for j, v in d["vertices"].items()},
                edges={int(j): Edge.from_dict(e) for j, e in d["edges"].items()},
                reflections=refl,
                vertex_images={int(j): (INF if v == "inf" else v) for j, v in d["vertex_images"].items()},
                l=int(d["l"]), k=int(d["k"]), c=int(d["c"]), copies_total=int(d["copies_total"]),
                words=[(name, tuple(w)) for name, w in d.get("words", [])],
                loops=d.get("loops", []),
                notes=d.get("notes", {}),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, RecipeError):
                raise
            raise RecipeError(f"malformed recipe: {exc}") from exc

    @staticmethod
    def from_json(text: str) -> "SurfaceRecipe":
        return SurfaceRecipe.from_dict(json.loads(text))


def _vertex_words(l: int, k: int, c: int) -> list:
    return [("V1 rotation", (2, 3) * l), ("V2 rotation", (3, 1) * k), ("V3 rotation", (1, 2) * c)]


# ---------------------------------------------------------------------------
# built-in families


def dihedral_recipe(n: int, m: int) -> SurfaceRecipe:
    """Genus zero, n ends at the n-th roots of unity, dihedral symmetry."""
    if int(n) != n or n < 3:
        raise RecipeError("dihedral recipes need an integer n >= 3")
    if int(m) != m or m < 0:
        raise RecipeError("dihedral recipes need an integer m >= 0")
    n, m = int(n), int(m)
    w = Z**n
    q = Z ** (n * (m + 1) - 2) / (w - 1) ** (2 * (m + 1))
    chart = ((w + 1) / (w - 1)) ** 2
    g = Z ** (n * (m + 1) - 1)
    v3 = cmath.exp(1j * math.pi / n)
    roots = [cmath.exp(2j * math.pi * j / n) for j in range(n)]
    loops = []
    for j in range(n):
        th = 2 * math.pi * j / n
        if th > math.pi:
            th -= 2 * math.pi
        steps = max(1, int(math.ceil(abs(th - math.pi / n) / (math.pi / n))))
        approach = [0.6 * cmath.exp(1j * (math.pi / n + (th - math.pi / n) * s / steps)) for s in range(steps + 1)]
        approach.append(0.75 * cmath.exp(1j * th))
        loops.append({"puncture": _c(roots[j]), "approach": [_c(p) for p in approach],
                      "center": _c(roots[j])})
    copies = [0j] + roots + [cmath.exp(1j * math.pi * (2 * j + 1) / n) for j in range(n)]
    return SurfaceRecipe(
        name=f"dihedral({n},{m})", tag=f"dihedral({n},{m})", params={"n": n, "m": m},
        domain="sphere", punctures=roots, umbilics=[0j, INF],
        end_order=-2 * (m + 1), umbilic_order=n * (m + 1) - 2,
        zeros_in_domain={1: n * (m + 1) - 2},
        q_expr=q, chart_expr=chart, base_g_expr=g,
        angles=(math.pi * (m + 1 - 1 / n), math.pi / 2, math.pi / 2),
        vertices={1: 0j, 2: 1 + 0j, 3: v3},
        edges={1: Edge("arc", center=0j, radius=1.0, theta0=0.0, theta1=math.pi / n),
               2: Edge("line", a=v3, b=0j),
               3: Edge("line", a=0j, b=1 + 0j)},
        reflections={1: lin.mat(0, 1, 1, 0),
                     2: lin.mat(cmath.exp(1j * math.pi / n), 0, 0, cmath.exp(-1j * math.pi / n)),
                     3: lin.ID2.copy()},
        vertex_images={1: 1, 2: INF, 3: 0},
        l=n, k=2, c=2, copies_total=4 * n,
        words=_vertex_words(n, 2, 2), loops=loops,
        notes={"vertex_copies": copies},
    )


ZETA = cmath.exp(2j * math.pi / 3)


def tetrahedral_g0():
    return (Z - 4 / Z**2) / (3 * sp.sqrt(2))


def tetrahedral_q0():
    return Z * (Z**3 + 8) / (Z**3 - 1) ** 2


def schwarzian_expr(g):
    r = sp.diff(g, Z, 2) / sp.diff(g, Z)
    return sp.cancel(sp.diff(r, Z) - r**2 / 2)


def tetrahedral_q(m: int, simplify: bool = True):
    """``Q0^(m+1) / S(g0)^m`` with the Schwarzian taken symbolically."""
    e = tetrahedral_q0() ** (m + 1) / schwarzian_expr(tetrahedral_g0()) ** m
    return sp.factor(sp.cancel(e)) if simplify else e


def tetrahedral_q1_closed_form():
    return sp.Rational(1, 96) * Z**4 * (Z**3 + 8) ** 4 / (Z**3 - 1) ** 5


def tetrahedral_g1(a3=16):
    """Primitive of ``(z^3+8)^4 / (z^6 (z^3 - a^3)^2)``; rational exactly when a^3 = 16."""
    return sp.integrate((Z**3 + 8) ** 4 / (Z**6 * (Z**3 - a3) ** 2), Z)


def tetrahedral_g1_residue(a3: float, exact: bool = False):
    """Residue of the tetrahedral integrand at the real pole ``z = a3^(1/3)``.

    It vanishes only for ``a3 = 16``, which is what makes the primitive
    single-valued.  ``exact`` uses sympy; otherwise a trapezoid contour sum.
    """
    if exact:
        f = (Z**3 + 8) ** 4 / (Z**6 * (Z**3 - sp.nsimplify(a3)) ** 2)
        return sp.nsimplify(sp.residue(f, Z, sp.nsimplify(a3) ** sp.Rational(1, 3)))
    a = float(a3) ** (1 / 3)
    f = lambda z: (z**3 + 8) ** 4 / (z**6 * (z**3 - a3) ** 2)
    return analysis.residue(f, a, 0.3 * a).real


def tetrahedral_recipe(m: int) -> SurfaceRecipe:
    """Genus zero, ends at 1, zeta, zeta^2, infinity, tetrahedral symmetry."""
    if int(m) != m or m < 1:
        raise RecipeError("tetrahedral recipes need an integer m >= 1")
    m = int(m)
    R = Z**3 * (Z**3 + 8) ** 3 / (Z**3 - 1) ** 3
    chart = 1 - R / 64
    v3 = (math.sqrt(3) - 1) * cmath.exp(1j * math.pi / 3)
    z2 = ZETA**2
    th0 = cmath.phase(1 - z2)
    th1 = cmath.phase(v3 - z2)
    g = sp.together(tetrahedral_g1()) if m == 1 else None
    return SurfaceRecipe(
        name=f"tetrahedral({m})", tag=f"tetrahedral({m})", params={"m": m},
        domain="sphere", punctures=[1 + 0j, ZETA, ZETA**2, INF],
        umbilics=[0j, -2 + 0j, -2 * ZETA, -2 * ZETA**2],
        end_order=-3 * m - 2, umbilic_order=3 * m + 1,
        zeros_in_domain={1: 3 * m + 1},
        q_expr=tetrahedral_q(m), chart_expr=chart, base_g_expr=g,
        angles=(math.pi * (m + 2 / 3), math.pi / 3, math.pi / 2),
        vertices={1: 0j, 2: 1 + 0j, 3: v3},
        edges={1: Edge("arc", center=z2, radius=math.sqrt(3), theta0=th0, theta1=th1),
               2: Edge("line", a=v3, b=0j),
               3: Edge("line", a=0j, b=1 + 0j)},
        reflections={1: lin.renormalize(lin.mat(z2, 2, 1, -ZETA)),
                     2: lin.mat(cmath.exp(1j * math.pi / 3), 0, 0, cmath.exp(-1j * math.pi / 3)),
                     3: lin.ID2.copy()},
        vertex_images={1: 1, 2: INF, 3: 0},
        l=3, k=3, c=2, copies_total=24,
        words=_vertex_words(3, 3, 2),
    )


def torus_recipe() -> SurfaceRecipe:
    """Square torus C/2Z[i] with four ends at the lattice points of Z[i]."""
    W = default_wp()
    e1 = W.wp(0.5).real
    q = wp_prime(Z) ** 2
    chart = 1 - wp(Z) ** 2 / sp.Float(e1, 17) ** 2
    hub = 0.3 + 0.15j
    loops = [
        {"puncture": _c(0j), "approach": [_c(hub), _c(0.25 * cmath.exp(1j * math.pi / 8))], "center": _c(0j)},
        {"puncture": _c(1 + 0j), "approach": [_c(hub), _c(1 + 0.25 * cmath.exp(1j * 7 * math.pi / 8))],
         "center": _c(1 + 0j)},
        {"puncture": _c(1j), "approach": [_c(hub), _c(0.25 + 0.5j), _c(1j + 0.25 * cmath.exp(-3j * math.pi / 8))],
         "center": _c(1j)},
        {"puncture": _c(1 + 1j), "approach": [_c(hub), _c(0.75 + 0.5j),
                                              _c(1 + 1j + 0.25 * cmath.exp(-5j * math.pi / 8))],
         "center": _c(1 + 1j)},
    ]
    half = [0.5 * (a + 1j * b) for a in range(-1, 4) for b in range(-1, 4)]
    words = _vertex_words(4, 4, 2) + [("translation 1 squared", (2, 3, 1, 3) * 2),
                                      ("translation i squared", (3, 2, 3, 1) * 2)]
    return SurfaceRecipe(
        name="torus", tag="torus", params={},
        domain="torus", punctures=[0j, 1 + 0j, 1 + 1j, 1j],
        umbilics=[0.5 + 0j, 0.5j, 0.5 + 0.5j, 1.5 + 0j, 1.5j, 1.5 + 0.5j, 0.5 + 1.5j, 1 + 0.5j,
                  0.5 + 1j, 1.5 + 1j, 1 + 1.5j, 1.5 + 1.5j],
        end_order=-6, umbilic_order=2,
        zeros_in_domain={1: 2, 3: 2},
        q_expr=q, chart_expr=chart, base_g_expr=None,
        angles=(3 * math.pi / 4, math.pi / 2, 3 * math.pi / 2),
        vertices={1: 0.5 + 0.5j, 2: 0j, 3: 0.5 + 0j},
        edges={1: Edge("line", a=0j, b=0.5 + 0j),
               2: Edge("line", a=0.5 + 0j, b=0.5 + 0.5j),
               3: Edge("line", a=0.5 + 0.5j, b=0j)},
        reflections={1: lin.ID2.copy(),
                     2: lin.mat(1j, -1j, 0, -1j),
                     3: lin.mat(cmath.exp(0.25j * math.pi), 0, 0, cmath.exp(-0.25j * math.pi))},
        vertex_images={1: 1, 2: INF, 3: 0},
        l=4, k=4, c=2, copies_total=32,
        words=words, loops=loops,
        notes={"vertex_copies": half},
    )


# ---------------------------------------------------------------------------
# Platonic table


PLATONIC_ROWS = {
    # name: (#p, #q, ord_q Q0, ord_p Q_m(m), ord_q Q_m(m), A(m), B0, copies_total)
    "tetrahedral": (4, 4, 1, lambda m: -3 * m - 2, lambda m: 3 * m + 1, lambda m: math.pi * (m + 2 / 3), math.pi / 3, 24),
    "octahedral-8/6": (8, 6, 2, lambda m: -3 * m - 2, lambda m: 4 * m + 2, lambda m: math.pi * (m + 4 / 3), math.pi / 3, 48),
    "octahedral-6/8": (6, 8, 1, lambda m: -4 * m - 2, lambda m: 3 * m + 1, lambda m: math.pi * (m + 2 / 3), math.pi / 4, 48),
    "icosahedral-20/12": (20, 12, 3, lambda m: -3 * m - 2, lambda m: 5 * m + 3, lambda m: math.pi * (m + 4 / 5), math.pi / 3, 120),
    "icosahedral-12/20": (12, 20, 1, lambda m: -5 * m - 2, lambda m: 3 * m + 1, lambda m: math.pi * (m + 2 / 3), math.pi / 5, 120),
}


@dataclass
class PlatonicData:
    """Integer and angle data of one symmetry row; ``recipe`` is set when a chart is available."""

    row: str
    m: int
    n_ends: int
    n_umbilics: int
    ord_q_Q0: int
    ord_p_Qm: int
    ord_q_Qm: int
    A: float
    B0: float
    C: float
    copies_total: int
    recipe: Optional[SurfaceRecipe] = None

    @property
    def copies_at_ends(self) -> int:
        return int(round(2 * math.pi / self.B0))

    @property
    def copies_at_umbilics(self) -> int:
        return self.copies_total // self.n_umbilics

    def angle_relation_residual(self) -> float:
        """``A - pi (b+1)/l`` with b the umbilic order and 2l the copies at an umbilic."""
        l = self.copies_at_umbilics // 2
        return self.A - math.pi * (self.ord_q_Qm + 1) / l

    def total_order(self) -> int:
        return self.n_ends * self.ord_p_Qm + self.n_umbilics * self.ord_q_Qm

    def validate(self) -> dict:
        return validate_triangle(self.A, self.B0, self.C)


def platonic_recipe(row: str, m: int, n: Optional[int] = None) -> PlatonicData:
    """Table data for a Platonic (or dihedral) row.

    Charts are built in for the dihedral and tetrahedral rows; the
    octahedral and icosahedral rows carry data only.
    """
    if int(m) != m or m < 1:
        raise RecipeError("Platonic rows need an integer m >= 1")
    m = int(m)
    if row == "dihedral":
        if n is None:
            raise RecipeError("the dihedral row needs n")
        r = dihedral_recipe(n, m)
        return PlatonicData(row, m, n, 2, n - 2, -2 * (m + 1), n * (m + 1) - 2, r.A, r.B0, r.C, 4 * n, r)
    if row not in PLATONIC_ROWS:
        raise RecipeError(f"unknown Platonic row {row!r}")
    p, qn, q0, fp, fq, fA, B0, tot = PLATONIC_ROWS[row]
    rec = tetrahedral_recipe(m) if row == "tetrahedral" else None
    return PlatonicData(row, m, p, qn, q0, fp(m), fq(m), fA(m), B0, math.pi / 2, tot, rec)


def table_rows(m: int = 1, n: int = 3) -> List[PlatonicData]:
    return [platonic_recipe("dihedral", m, n)] + [platonic_recipe(r, m) for r in PLATONIC_ROWS]


def recipe_by_name(name: str, n: int = 3, m: int = 1) -> SurfaceRecipe:
    if name == "dihedral":
        return dihedral_recipe(n, m)
    if name == "tetrahedral":
        return tetrahedral_recipe(m)
    if name == "torus":
        return torus_recipe()
    if name in PLATONIC_ROWS:
        data = platonic_recipe(name, m)
        if data.recipe is None:
            raise RecipeError(f"no chart available for {name}")
        return data.recipe
    raise RecipeError(f"unknown recipe {name!r}")


# ---------------------------------------------------------------------------
# ends and hypotheses


@dataclass(frozen=True)
class EndReport:
    puncture: object
    ord_Q: int
    regular: bool
    slope: float
    residual: float


def classify_ends(r: SurfaceRecipe, radii=(1e-2, 5e-3, 2.5e-3)) -> List[EndReport]:
    out = []
    for p in r.punctures:
        fit = analysis.laurent_order(r.local_q(p), 0j, radii)
        if not fit["ok"]:
            raise RecipeError(f"Laurent fit at {p} did not settle (slope {fit['slope']:.3f})")
        out.append(EndReport(p, fit["order"], fit["order"] >= -2, fit["slope"], fit["residual"]))
    return out


def sector_order(f, p: complex, sector: tuple, radii=(1e-2, 5e-3, 2.5e-3), nodes: int = 12) -> dict:
    """Like :func:`analysis.laurent_order`, sampling only the angular sector of D at p."""
    lo, hi = sector
    xs, ys = [], []
    for r in radii:
        th = lo + (hi - lo) * (np.arange(nodes) + 0.5) / nodes
        vals = [abs(f(p + r * cmath.exp(1j * x))) for x in th]
        xs.append(math.log(r))
        ys.append(float(np.mean(np.log(vals))))
    slope, icpt = np.polyfit(xs, ys, 1)
    resid = float(np.max(np.abs(np.polyval([slope, icpt], xs) - ys)))
    return {"slope": float(slope), "order": int(round(slope)), "residual": resid}


def q_symmetry_residual(r: SurfaceRecipe, samples: int = 12, seed: int = 0) -> float:
    """Max relative violation of ``conj(Q o mu_j) = Q`` over interior samples of D."""
    rng = np.random.default_rng(seed)
    v = r.vertices
    worst = 0.0
    for _ in range(samples):
        a, b = rng.dirichlet([2, 2, 2])[:2]
        z = v[3] + a * (v[1] - v[3]) + b * (v[2] - v[3])
        qz = r.q(z)
        for j in (1, 2, 3):
            M = r.reflections[j]
            w = anti_moebius(M, z)
            pulled = np.conj(r.q(w) * anti_moebius_dz(M, z) ** 2)
            worst = max(worst, abs(pulled - qz) / max(abs(qz), 1e-300))
    return float(worst)


def check_theorem_hypotheses(r: SurfaceRecipe, germ: Optional[DevelopingMapGerm] = None,
                             tol: float = 0.05) -> dict:
    """Numerical check of the three hypotheses of the existence theorem.

    (1) the pulled-back metric has angles A, B0, C at V1, V2, V3;
    (2) Q has a pole of order <= -3 at V2 (and the declared order);
    (3) at each zero of Q in D the branch order of g equals ord Q.
    Q's symmetry under the three reflections is reported as well.
    """
    report = {"recipe": r.name}
    try:
        g = germ if germ is not None else (r.germ(algebraic=True) if r.base_g_expr is not None else r.germ())
    except Exception as exc:  # report-only
        return {**report, "ok": False, "error": str(exc)}
    values = {1: g.diagnostics.get("V1_value"), 2: g.diagnostics.get("V2_value"), 3: 0j}
    branching = {}
    angle_margin = 0.0
    for j in (1, 2, 3):
        val = values[j]
        ref = (1.0 + 0j, 0j) if val == "inf" else (complex(val), 1.0 + 0j)
        fit = sector_order(lambda z: chordal(g.pair(z)[:2], ref), r.vertices[j], r.vertex_sector(j))
        metric_angle = fit["slope"] * r.euclidean_angle(j)
        branching[j] = fit
        angle_margin = max(angle_margin, abs(metric_angle - g.angles.at_vertex(j)))
    report["angles"] = {"ok": angle_margin < tol, "margin": angle_margin}
    pole = sector_order(r.q, r.vertices[2], r.vertex_sector(2))
    report["pole_order"] = {"ok": pole["order"] <= -3 and pole["order"] == r.end_order
                            and abs(pole["slope"] - pole["order"]) < tol,
                            "order": pole["order"], "declared": r.end_order, "slope": pole["slope"]}
    branch = {}
    ok3 = True
    for j, declared in r.zeros_in_domain.items():
        qfit = sector_order(r.q, r.vertices[j], r.vertex_sector(j))
        b = branching[j]["order"] - 1
        good = qfit["order"] == b == declared
        ok3 &= good
        branch[f"V{j}"] = {"ord_Q": qfit["order"], "branch_order": b, "declared": declared, "ok": good}
    report["branching"] = {"ok": ok3, "points": branch}
    sym = q_symmetry_residual(r)
    report["symmetry"] = {"ok": sym < 1e-9, "residual": sym}
    report["ok"] = all(report[k]["ok"] for k in ("angles", "pole_order", "branching", "symmetry"))
    return report

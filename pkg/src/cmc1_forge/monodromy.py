"""Edge monodromies, period killing and representation checks.

For the lift ``F_{t,B}`` normalized by ``F(V3) = id`` the reflection across
edge j acts as ``F o mu_j = conj(sigma_j)``-twisted copies of ``F``; on the
edge itself this reads ``sigma_j = conj(F) rho_j F^{-1}``.  Killing the
period means choosing ``B = B(t)`` so that ``sigma_3`` is conjugate, by a
real diagonal matrix, to ``rho_3(B0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import analysis, lin
from .analysis import PathPlan, integrate_from_vertex, integrate_null_ode
from .recipes import SurfaceRecipe
from .triangle import DevelopingMapGerm, reflection_matrices, word_product

RTOL = 1e-11
ATOL = 1e-13


class MonodromyError(RuntimeError):
    """A monodromy computation could not be completed."""


# ---------------------------------------------------------------------------
# lifts


class Lift:
    """``F_{t,B}`` on the fundamental domain, propagated from a base point near V3."""

    def __init__(self, r: SurfaceRecipe, germ: DevelopingMapGerm, t: float,
                 rtol: float = RTOL, atol: float = ATOL):
        self.r, self.germ, self.t = r, germ, t
        self.rtol, self.atol = rtol, atol
        self.base = r.base_point()
        run = integrate_from_vertex(germ, r.q, t, self.base, rtol=rtol, atol=atol)
        self.F_base = run.F_end
        self.aux_base = run.aux_end
        self.error = run.error_estimate

    def run(self, path: PathPlan, **kw) -> analysis.OdeRun:
        """Integrate along a path starting at the base point."""
        if abs(path.start - self.base) > 1e-12:
            raise analysis.PathError("path does not start at the base point")
        return integrate_null_ode(self.germ, self.r.q, self.t, path, F0=self.F_base,
                                  aux0=self.aux_base, rtol=self.rtol, atol=self.atol, **kw)

    def at(self, z: complex) -> np.ndarray:
        """F at a point of D (straight segment from the base point)."""
        if abs(z - self.base) < 1e-14:
            return self.F_base.copy()
        return self.run(analysis.polyline([self.base, z])).F_end


# ---------------------------------------------------------------------------
# edge monodromies


@dataclass
class EdgeMonodromies:
    sigma1: np.ndarray
    sigma2: np.ndarray
    sigma3: np.ndarray
    p: complex
    nu1: float
    nu2: float
    residuals: dict

    def as_tuple(self):
        return (self.sigma1, self.sigma2, self.sigma3)

    def __getitem__(self, j):
        return self.as_tuple()[j - 1]


def _mid(r: SurfaceRecipe, j: int, s: float = 0.5) -> complex:
    return r.edges[j].point(s)


def edge_monodromies_from_lift(lift: Lift, B: float, s_star: float = 0.5) -> EdgeMonodromies:
    r = lift.r
    rho = reflection_matrices(r.A, B, r.C)
    sig = []
    for j in (1, 2, 3):
        F = lift.at(_mid(r, j, s_star))
        sig.append(lin.renormalize(np.conj(F) @ rho[j] @ lin.inverse(F)))
    s1, s2, s3 = sig
    p = complex(s3[0, 0])
    nu1 = (s3[0, 1] / 1j)
    nu2 = (s3[1, 0] / 1j)
    im_target = (math.cos(r.A) + math.cos(r.C) * math.cos(B)) / math.sin(r.C)
    res = {
        "sigma1_id": float(np.max(np.abs(s1 - lin.ID2))),
        "sigma2_rho2": float(np.max(np.abs(s2 - rho.rho2))),
        "sigma3_reality": float(np.max(np.abs(np.conj(s3) @ s3 - lin.ID2))),
        "sigma3_form": float(max(abs(nu1.imag), abs(nu2.imag), abs(s3[1, 1] - np.conj(p)))),
        "im_p_rigidity": float(abs(p.imag - im_target)),
        "integrator_error": float(lift.error),
    }
    return EdgeMonodromies(s1, s2, s3, p, float(nu1.real), float(nu2.real), res)


def compute_edge_monodromies(r: SurfaceRecipe, g: Optional[DevelopingMapGerm], t: float, B: float,
                             s_star: float = 0.5, rtol: float = RTOL) -> EdgeMonodromies:
    """sigma_j = conj(F(z_j)) rho_j(B) F(z_j)^-1 at the midpoint z_j of edge j."""
    germ = g if g is not None else r.germ(B)
    return edge_monodromies_from_lift(Lift(r, germ, t, rtol=rtol), B, s_star)


# ---------------------------------------------------------------------------
# period killing


@dataclass
class KillResult:
    t: float
    B_t: float
    u_t: float
    monodromies: EdgeMonodromies
    raw: EdgeMonodromies
    trace: List[dict] = field(default_factory=list)
    converged: bool = True
    lift: Optional[Lift] = None

    @property
    def rescale(self) -> np.ndarray:
        return lin.mat(self.u_t, 0, 0, 1 / self.u_t)

    def to_dict(self) -> dict:
        m = self.monodromies
        return {
            "t": self.t, "B_t": self.B_t, "u_t": self.u_t, "converged": self.converged,
            "p": [m.p.real, m.p.imag], "nu1": self.raw.nu1, "nu2": self.raw.nu2,
            "residuals": m.residuals, "iterations": self.trace,
        }


def _h(r: SurfaceRecipe, t: float, B: float, rtol: float):
    germ = r.germ(B)
    lift = Lift(r, germ, t, rtol=rtol)
    em = edge_monodromies_from_lift(lift, B)
    return em.p.real + math.cos(r.B0), em, lift


def kill_period(r: SurfaceRecipe, t: float, B_seed: Optional[float] = None, tol: float = 1e-10,
                max_iter: int = 50, rtol: float = RTOL) -> KillResult:
    """Solve ``Re p(t, B) = -cos B0`` for B by secant steps, then rescale.

    The first step uses the derivative ``sin B0`` of the t = 0 problem.
    """
    B0 = r.B0
    Ba = B0 if B_seed is None else B_seed
    ha, em, lift = _h(r, t, Ba, rtol)
    trace = [{"B": Ba, "h": ha}]
    if abs(ha) >= tol:
        Bb = Ba - ha / math.sin(B0)
        hb, em, lift = _h(r, t, Bb, rtol)
        trace.append({"B": Bb, "h": hb})
        it = 0
        while abs(hb) >= tol:
            it += 1
            if it > max_iter or hb == ha:
                raise MonodromyError(f"secant iteration did not converge (|h| = {abs(hb):.2e})")
            Bc = Bb - hb * (Bb - Ba) / (hb - ha)
            Ba, ha = Bb, hb
            Bb = Bc
            hb, em, lift = _h(r, t, Bb, rtol)
            trace.append({"B": Bb, "h": hb})
        Ba = Bb
    if not em.nu1 * em.nu2 > 0:
        raise MonodromyError(f"nu1 * nu2 = {em.nu1 * em.nu2:.3e} is not positive")
    u = (em.nu2 / em.nu1) ** 0.25
    D = lin.mat(u, 0, 0, 1 / u)
    Dinv = lin.mat(1 / u, 0, 0, u)
    scaled = [D @ s @ Dinv for s in em.as_tuple()]
    rho0 = reflection_matrices(r.A, B0, r.C)
    res = dict(em.residuals)
    for j in (1, 2, 3):
        res[f"sigma{j}_vs_rho{j}_B0"] = float(np.max(np.abs(scaled[j - 1] - rho0[j])))
    res["h"] = float(abs(trace[-1]["h"]))
    s3 = scaled[2]
    mono = EdgeMonodromies(scaled[0], scaled[1], s3, complex(s3[0, 0]), float((s3[0, 1] / 1j).real),
                           float((s3[1, 0] / 1j).real), res)
    return KillResult(t, Ba, u, mono, em, trace, True, lift)


def scan_epsilon(r: SurfaceRecipe, t_max: float = 0.5, steps: int = 10) -> dict:
    """Largest tested |t| at which the killing solve succeeds with nu1 nu2 > 0."""
    good = 0.0
    failure = None
    for t in np.linspace(t_max / steps, t_max, steps):
        try:
            kill_period(r, float(t))
            kill_period(r, float(-t))
            good = float(t)
        except Exception as exc:  # the scan reports where the regime ends
            failure = {"t": float(t), "reason": str(exc)}
            break
    return {"epsilon": good, "first_failure": failure}


# ---------------------------------------------------------------------------
# single-valuedness


def verify_single_valuedness(r: SurfaceRecipe, k: Optional[KillResult], tol: float = 1e-7,
                             loop_tol: float = 1e-6) -> dict:
    """Check every recorded reflection word at B0 and the closure of f around recorded loops."""
    rho0 = reflection_matrices(r.A, r.B0, r.C)
    words = []
    for name, w in r.words:
        prod = word_product(rho0, w)
        dist = lin.pauli_distance(prod, lin.ID2)
        entry = {"word": name, "distance_to_pm_id": dist, "ok": dist < tol}
        if k is not None:
            num = word_product(k.monodromies, w)
            entry["numeric_distance"] = lin.pauli_distance(num, lin.ID2)
            entry["ok"] = entry["ok"] and entry["numeric_distance"] < max(tol, 1e-6)
        words.append(entry)
    loops = []
    if k is not None and k.lift is not None and r.loops:
        lift = k.lift
        D = k.rescale
        f0 = lin.hermitian_from_lift(D @ lift.F_base)
        b0 = lin.ball_coords_array(f0)
        for p, path in r.loop_paths(lift.base):
            run = lift.run(path)
            f1 = lin.hermitian_from_lift(D @ run.F_end)
            disp = float(np.max(np.abs(lin.ball_coords_array(f1) - b0)))
            loops.append({"puncture": [complex(p).real, complex(p).imag] if not isinstance(p, list) else p,
                          "displacement": disp, "ok": disp < loop_tol})
    ok = all(w["ok"] for w in words) and all(lp["ok"] for lp in loops)
    return {"ok": ok, "words": words, "loops": loops}


# ---------------------------------------------------------------------------
# irreducibility


def v2_loop(r: SurfaceRecipe, radius: Optional[float] = None) -> PathPlan:
    """Circle around V2 starting inside D."""
    v2 = r.vertices[2]
    if radius is None:
        others = [abs(v2 - c) for c in r.vertex_copies() if abs(v2 - c) > 1e-12]
        others += [abs(v2 - r.vertices[j]) for j in (1, 3)]
        radius = min(0.3, 0.5 * min(others))
    lo, hi = r.vertex_sector(2)
    th = 0.5 * (lo + hi)
    return analysis.circle(v2, radius, th)


def irreducibility_certificate(r: SurfaceRecipe, loop: Optional[PathPlan] = None,
                               germ: Optional[DevelopingMapGerm] = None) -> dict:
    """Nonvanishing of the first-order monodromy around V2 at B0, plus ``A != pi/2 mod pi``."""
    if germ is None:
        germ = r.germ(algebraic=True) if r.base_g_expr is not None else r.germ()
    loop = v2_loop(r) if loop is None else loop
    fine = analysis.contour_integral_matrix(germ, r.q, loop, rtol=1e-13, atol=1e-15)
    coarse = analysis.contour_integral_matrix(germ, r.q, loop, rtol=1e-10, atol=1e-12)
    err = float(np.max(np.abs(fine - coarse)))
    norm = float(np.max(np.abs(fine)))
    x = r.A / math.pi - 0.5
    angle_ok = abs(x - round(x)) > 1e-8
    nonzero = norm > 1e-8 and norm > 10 * err
    return {"nonzero_integral": bool(nonzero), "angle_condition": bool(angle_ok),
            "certified": bool(nonzero and angle_ok), "value": fine, "norm": norm,
            "error_estimate": err}


def dihedral_residue_oracle(n: int, m: int):
    """Exact ``Res_{z=1} (z^n - 1)^(-2(m+1))`` as a Fraction (Laurent expansion at z = 1)."""
    from fractions import Fraction
    from math import comb

    M = 2 * (m + 1)
    # z^n - 1 = e * h(e) with e = z - 1, h(e) = sum_k C(n, k+1) e^k
    h = [Fraction(comb(n, k + 1)) for k in range(n)]
    N = M  # need the coefficient of e^(M-1) in h^(-M)
    inv = [Fraction(0)] * N
    inv[0] = 1 / h[0]
    for k in range(1, N):
        s = sum(h[j] * inv[k - j] for j in range(1, min(k, len(h) - 1) + 1))
        inv[k] = -s / h[0]
    power = [Fraction(1)] + [Fraction(0)] * (N - 1)
    for _ in range(M):
        power = [sum(power[i] * inv[k - i] for i in range(k + 1)) for k in range(N)]
    return power[M - 1]


def dihedral_first_order_entry(n: int, m: int, radius: float = 0.25) -> complex:
    """(2,1) entry of the V2-loop integral for the unnormalized ``g = z^(n(m+1)-1)``."""
    N = n * (m + 1) - 1
    raw = analysis.RawMap(lambda z: z**N, lambda z: N * z ** (N - 1))
    q = lambda z: z ** (n * (m + 1) - 2) / (z**n - 1) ** (2 * (m + 1))
    val = analysis.contour_integral_matrix(raw, q, analysis.circle(1.0, radius))
    return complex(val[1, 0])


@dataclass
class RepresentationClass:
    tag: str
    max_commutator: float
    all_pm_id: bool


def classify_representation(generators: Sequence[np.ndarray], tol: float = 1e-8) -> RepresentationClass:
    gens = [np.asarray(g, dtype=complex) for g in generators]
    for g in gens:
        if np.max(np.abs(g @ lin.star(g) - lin.ID2)) > 1e-6:
            raise MonodromyError("generator is not unitary")
    pm = all(lin.pauli_distance(g, lin.ID2) < tol for g in gens)
    comm = 0.0
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            comm = max(comm, float(np.max(np.abs(gens[i] @ gens[j] - gens[j] @ gens[i]))))
    if pm:
        tag = "H3_reducible"
    elif comm < tol:
        tag = "H1_reducible"
    else:
        tag = "irreducible"
    return RepresentationClass(tag, comm, pm)

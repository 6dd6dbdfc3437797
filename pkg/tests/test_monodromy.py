import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest

from cmc1_forge import lin, monodromy
from cmc1_forge.monodromy import (MonodromyError, classify_representation, compute_edge_monodromies,
                                  dihedral_first_order_entry, dihedral_residue_oracle,
                                  irreducibility_certificate, kill_period, verify_single_valuedness)
from cmc1_forge.triangle import TriangleError, reflection_matrices


@pytest.mark.parametrize("which", ["dihedral31", "tetra1"])
@pytest.mark.parametrize("t,dB", [(0.0, 0.03), (0.015, -0.04), (-0.02, 0.05)])
def test_edge_monodromy_identities(which, t, dB, request):
    r = request.getfixturevalue(which)
    B = r.B0 + dB
    em = compute_edge_monodromies(r, None, t, B)
    rho = reflection_matrices(r.A, B, r.C)
    assert np.max(np.abs(em.sigma1 - lin.ID2)) < 1e-7
    assert np.max(np.abs(em.sigma2 - rho.rho2)) < 1e-7
    assert np.max(np.abs(np.conj(em.sigma3) @ em.sigma3 - lin.ID2)) < 1e-7
    assert abs(em.p.imag - math.cos(r.A)) < 1e-6
    if t == 0.0:
        assert np.max(np.abs(em.sigma3 - rho.rho3)) < 1e-8


def test_torus_trace_uses_general_c(torus):
    em = compute_edge_monodromies(torus, None, 0.001, torus.B0)
    assert abs(em.p.imag - math.cos(torus.A) / math.sin(torus.C)) < 1e-8


def test_kill_at_zero_returns_b0(dihedral31):
    k = kill_period(dihedral31, 0.0)
    assert abs(k.B_t - dihedral31.B0) < 1e-12 and k.u_t == 1.0


def test_h_derivative_is_sin_b0(dihedral31):
    r = dihedral31
    g = r.germ()
    eps = 1e-5
    hp = compute_edge_monodromies(r, r.germ(r.B0 + eps), 0.0, r.B0 + eps).p.real
    hm = compute_edge_monodromies(r, r.germ(r.B0 - eps), 0.0, r.B0 - eps).p.real
    assert abs((hp - hm) / (2 * eps) - math.sin(r.B0)) < 1e-6
    assert g is not None


def test_kill_rescales_to_b0(dihedral31, dihedral_kill):
    k = dihedral_kill
    rho0 = reflection_matrices(dihedral31.A, dihedral31.B0, dihedral31.C)
    assert k.raw.nu1 * k.raw.nu2 > 0
    for j in (1, 2, 3):
        assert np.max(np.abs(k.monodromies[j] - rho0[j])) < 1e-6
        s = k.monodromies[j]
        assert np.max(np.abs(s @ lin.star(s) - lin.ID2)) < 1e-7
    assert abs(k.B_t - dihedral31.B0) > 1e-9


def test_kill_is_odd_in_t_to_first_order(dihedral31):
    kp, km = kill_period(dihedral31, 0.005), kill_period(dihedral31, -0.005)
    dp, dm = kp.B_t - dihedral31.B0, km.B_t - dihedral31.B0
    assert dp * dm < 0
    assert abs(dp + dm) < 1e-2 * abs(dp)


def test_kill_outside_the_deformation_range_fails(torus):
    with pytest.raises((MonodromyError, TriangleError)):
        kill_period(torus, 0.01)


def test_single_valuedness_dihedral(dihedral31, dihedral_kill):
    rep = verify_single_valuedness(dihedral31, dihedral_kill)
    assert rep["ok"]
    assert len(rep["loops"]) == 3
    assert all(lp["displacement"] < 1e-6 for lp in rep["loops"])


def test_single_valuedness_torus(torus, torus_kill):
    rep = verify_single_valuedness(torus, torus_kill)
    assert rep["ok"] and len(rep["words"]) == 5 and len(rep["loops"]) == 4


@pytest.mark.parametrize("n,m", [(3, 1), (4, 1), (3, 2)])
def test_dihedral_first_order_entry_matches_laurent_oracle(n, m):
    oracle = 2j * math.pi / (n * (m + 1) - 1) * float(dihedral_residue_oracle(n, m))
    val = dihedral_first_order_entry(n, m)
    assert abs(val - oracle) < 1e-6 * abs(oracle)


def test_laurent_oracle_small_case():
    # (z^2 - 1)^-2 at z = 1: 1/(e^2 (2 + e)^2) -> coefficient of e^-1 is -1/4
    assert dihedral_residue_oracle(2, 0) == Fraction(-1, 4)


@pytest.mark.parametrize("which", ["dihedral31", "tetra1", "torus"])
def test_irreducibility_certificates(which, request):
    cert = irreducibility_certificate(request.getfixturevalue(which))
    assert cert["certified"] and cert["nonzero_integral"] and cert["angle_condition"]


@pytest.mark.parametrize("which", ["dihedral31", "tetra1"])
def test_first_order_monodromy_matches_contour_integral(which, request):
    r = request.getfixturevalue(which)
    g = r.germ()
    h = 1e-4
    words = [np.linalg.matrix_power(np.conj(compute_edge_monodromies(r, g, t, r.B0).sigma3), r.k)
             for t in (h, -h)]
    deriv = (words[0] - words[1]) / (2 * h)
    loop = irreducibility_certificate(r, germ=g)["value"]
    rho3 = reflection_matrices(r.A, r.B0, r.C).rho3
    expected = loop @ np.linalg.matrix_power(np.conj(rho3), r.k)
    assert np.max(np.abs(deriv - expected)) < 1e-6 * np.max(np.abs(expected))


def test_degenerate_angle_fails_the_certificate(dihedral31):
    r = dataclasses.replace(dihedral31, angles=(3 * math.pi / 2,) + tuple(dihedral31.angles[1:]))
    cert = irreducibility_certificate(r, germ=dihedral31.germ())
    assert not cert["angle_condition"] and not cert["certified"]


def test_classify_representation():
    rho = reflection_matrices(5 * math.pi / 3, math.pi / 2)
    assert classify_representation([lin.ID2, -lin.ID2]).tag == "H3_reducible"
    diag = [lin.mat(1j, 0, 0, -1j), lin.mat(math.cos(0.3) + 1j * math.sin(0.3), 0, 0, math.cos(0.3) - 1j * math.sin(0.3))]
    assert classify_representation(diag).tag == "H1_reducible"
    assert classify_representation([rho.rho2, rho.rho3]).tag == "irreducible"
    with pytest.raises(MonodromyError):
        classify_representation([lin.mat(2, 0, 0, 0.5)])


def test_eigenvalue_rigidity_along_the_kill_curve(dihedral31):
    for t in (-0.02, 0.01):
        k = kill_period(dihedral31, t)
        assert abs(k.raw.p.imag - math.cos(dihedral31.A)) < 1e-8

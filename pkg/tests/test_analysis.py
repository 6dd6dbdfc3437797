import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmc1_forge import analysis, lin
from cmc1_forge.analysis import (Arc, Curve, Line, PathError, RawMap, circle, contour_integral_matrix,
                                 integrate_null_ode, keyhole, laurent_order, null_generator,
                                 numerical_schwarzian, polyline, residue)


def test_path_pieces_connect():
    p = polyline([0, 1, 1 + 1j])
    assert p.start == 0 and p.end == 1 + 1j and not p.closed
    assert (p + p.reversed()).closed
    with pytest.raises(PathError):
        analysis.PathPlan([Line(0, 1), Line(2, 3)])


def test_keyhole_is_closed_and_circles_once():
    k = keyhole([0.1j, 0.8 + 0.1j], 1.0)
    assert k.closed
    winding = sum(cmath.phase((seg.point(s + 0.01) - 1) / (seg.point(s) - 1))
                  for seg in k.segments for s in np.arange(0, 0.99, 0.01))
    assert abs(winding - 2 * math.pi) < 0.05


def test_path_check_flags_singularities():
    with pytest.raises(PathError):
        polyline([-1, 1], min_pole_distance=0.01).check([0j])
    assert polyline([-1, 1]).check([1j]) == pytest.approx(1.0, abs=1e-2)


def test_curve_velocity_and_reversal():
    c = Curve(lambda s: s**2 + 1j * s, lambda s: 2 * s + 1j)
    r = c.reversed()
    assert r.start == c.end and r.velocity(0.25) == -c.velocity(0.75)


@pytest.mark.parametrize("p,order", [(0.0, 1), (0.3 + 0.1j, 3)])
def test_residue_of_known_poles(p, order):
    f = lambda z: cmath.exp(z) / (z - p) ** order
    exact = cmath.exp(p) / math.factorial(order - 1)
    assert abs(residue(f, p, 0.5) - exact) < 1e-12


def test_schwarzian_of_moebius_vanishes_and_of_power_is_known():
    assert abs(numerical_schwarzian(lambda z: (2 * z + 1) / (z + 3), 0.5 + 0.2j)) < 1e-7
    a = 2.5
    z = 0.7 + 0.3j
    assert abs(numerical_schwarzian(lambda w: w**a, z) - (1 - a * a) / (2 * z * z)) < 1e-7


@pytest.mark.parametrize("k", [-6, -3, -1, 2])
def test_laurent_order_fit(k):
    fit = laurent_order(lambda z: (1 + z) * z**k, 0j)
    assert fit["ok"] and fit["order"] == k


def test_null_generator_is_nilpotent():
    G = null_generator(0.3 + 0.1j, 1.2 - 0.4j, 0.7j, 2.0)
    assert np.max(np.abs(G @ G)) < 1e-14
    assert abs(np.trace(G)) < 1e-15


def _power_map(N):
    return RawMap(lambda z: z**N, lambda z: N * z ** (N - 1))


def test_contour_integral_of_power_map_matches_residues():
    N = 5
    raw = _power_map(N)
    q = lambda z: z ** (N - 1) / (z - 1) ** 4
    val = contour_integral_matrix(raw, q, circle(1.0, 0.3))
    # (2,1) entry: q / g' = 1/(N (z-1)^4) has zero residue; (1,1): z^N/(N (z-1)^4)
    assert abs(val[1, 0]) < 1e-10
    res11 = 2j * math.pi * math.comb(N, 3) / N
    assert abs(val[0, 0] - res11) < 1e-9 * abs(res11)


@given(st.floats(-0.5, 0.5))
@settings(max_examples=10, deadline=None)
def test_null_ode_keeps_unit_determinant(t):
    raw = _power_map(3)
    q = lambda z: 1.0 / (z - 2) ** 2
    run = integrate_null_ode(raw, q, t, polyline([0.5, 0.5 + 0.5j, 1j]))
    assert run.det_drift < 1e-12
    if t == 0.0:
        assert np.array_equal(run.F_end, lin.ID2)


def test_null_ode_reverse_path_inverts():
    raw = _power_map(3)
    q = lambda z: 1.0 / (z - 2) ** 2
    path = polyline([0.5, 0.5 + 0.5j, 1j])
    fwd = integrate_null_ode(raw, q, 0.3, path, rtol=1e-12, atol=1e-14)
    back = integrate_null_ode(raw, q, 0.3, path.reversed(), F0=fwd.F_end, rtol=1e-12, atol=1e-14)
    assert np.max(np.abs(back.F_end - lin.ID2)) < 1e-10


def test_null_ode_samples_are_recorded():
    raw = _power_map(3)
    run = integrate_null_ode(raw, lambda z: 1.0, 0.1, polyline([0.5, 1]), sample_params=[[0.25, 0.5, 1.0]])
    assert [s for _, s, *_ in run.samples] == [0.25, 0.5, 1.0]
    assert np.allclose(run.samples[-1][3], run.F_end, atol=1e-12)


def test_arc_velocity_matches_difference_quotient():
    a = Arc(0.5j, 2.0, 0.1, 1.3)
    h = 1e-6
    fd = (a.point(0.4 + h) - a.point(0.4 - h)) / (2 * h)
    assert abs(fd - a.velocity(0.4)) < 1e-6

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmc1_forge import lin

finite = st.floats(-3, 3, allow_nan=False)


@st.composite
def sl2(draw):
    a, b, c, d = (complex(draw(finite), draw(finite)) for _ in range(4))
    m = lin.mat(a, b, c, d)
    if abs(lin.det(m)) < 1e-2:
        m = m + 2 * lin.ID2
    if abs(lin.det(m)) < 1e-2:
        m = lin.ID2.astype(complex)
    return lin.renormalize(m)


def test_infinity_is_a_singleton():
    assert lin.is_inf(lin.INF)
    assert not lin.is_inf(1e300)
    assert lin.moebius_apply(lin.mat(1, 0, 1, 0), 0) is lin.INF
    assert lin.moebius_apply(lin.mat(2, 1, 1, 1), lin.INF) == 2


def test_as_sl2_rejects_wrong_determinant():
    with pytest.raises(lin.IntegrityError):
        lin.as_sl2(lin.mat(2, 0, 0, 1))


@given(sl2())
def test_renormalize_and_inverse(a):
    assert abs(lin.det(a) - 1) < 1e-9
    assert np.max(np.abs(a @ lin.inverse(a) - lin.ID2)) < 1e-8 * max(1, np.max(np.abs(a)) ** 2)


@given(sl2())
def test_lift_lands_in_hyperbolic_space(F):
    X = lin.hermitian_from_lift(F)
    lin.check_hermitian(X, tol=1e-7, in_h3=True)
    v = lin.minkowski_coords(X, tol=1e-7)
    assert abs(v.lorentz_norm() + 1) < 1e-6 * max(1, v.t**2)
    b = lin.ball_project(v)
    assert b.b1**2 + b.b2**2 + b.b3**2 < 1


@given(sl2(), sl2(), sl2())
@settings(max_examples=40)
def test_isometries_preserve_distance(a, F1, F2):
    _check_distance_invariance(a, F1, F2)


def test_distance_of_coincident_points_under_a_large_isometry():
    a = np.array([[0, 6.53197265 + 6.53197265j], [-0.07654655 + 0.07654655j, 3.26598632 + 22.86190427j]])
    a = a / np.sqrt(np.linalg.det(a))
    F = np.diag([1.32287566, 1 / 1.32287566]).astype(complex)
    _check_distance_invariance(a, F, F)


def _check_distance_invariance(a, F1, F2):
    X, Y = lin.hermitian_from_lift(F1), lin.hermitian_from_lift(F2)
    d = lin.hyperbolic_distance(X, Y)
    d2 = lin.hyperbolic_distance(lin.isometry_apply(a, X), lin.isometry_apply(a, Y))
    assert abs(d - d2) < 1e-6 * max(1.0, d)


def test_conjugate_flip_is_a_reflection():
    X = lin.hermitian_from_lift(lin.mat(1, 1j, 0, 1))
    Y = lin.conjugate_flip(X)
    lin.check_hermitian(Y, in_h3=True)
    assert np.allclose(lin.conjugate_flip(Y), X)


def test_pauli_distance_ignores_sign():
    assert lin.pauli_distance(-lin.ID2, lin.ID2) == 0.0


def test_antidiagonal_decomposition():
    A = math.pi * 5 / 3
    q = 1j * math.cos(A)
    delta = math.sqrt(1 - abs(q) ** 2)
    d = lin.check_antidiagonal_form(lin.mat(q, 1j * delta, 1j * delta, np.conj(q)))
    assert abs(d["p"] - q) < 1e-15 and abs(d["g1"] - delta) < 1e-15 and abs(d["g2"] - delta) < 1e-15


def test_ball_coordinates_vectorized_match_scalar():
    rng = np.random.default_rng(3)
    Fs = [lin.renormalize(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) for _ in range(5)]
    X = np.array([lin.hermitian_from_lift(F) for F in Fs])
    arr = lin.ball_coords_array(X)
    for x, row in zip(X, arr):
        b = lin.ball_project(lin.minkowski_coords(x))
        assert np.allclose(row, [b.b1, b.b2, b.b3], atol=1e-12)

import json
import math

import numpy as np
import pytest
import sympy as sp

from cmc1_forge import exprs
from cmc1_forge.exprs import Z
from cmc1_forge.recipes import (PLATONIC_ROWS, RecipeError, SurfaceRecipe, check_theorem_hypotheses,
                                classify_ends, dihedral_recipe, platonic_recipe, q_symmetry_residual,
                                recipe_by_name, schwarzian_expr, table_rows, tetrahedral_g0,
                                tetrahedral_g1, tetrahedral_g1_residue, tetrahedral_q,
                                tetrahedral_q0, tetrahedral_q1_closed_form, tetrahedral_recipe)


def test_tetrahedral_q1_matches_closed_form_symbolically():
    assert sp.cancel(tetrahedral_q(1) - tetrahedral_q1_closed_form()) == 0


def test_tetrahedral_schwarzian_closed_form():
    S = schwarzian_expr(tetrahedral_g0())
    assert sp.cancel(S - 96 * (Z**3 - 1) / (Z**2 * (Z**3 + 8) ** 2)) == 0


def test_tetrahedral_q1_numeric_at_random_points():
    f = sp.lambdify(Z, tetrahedral_q(1, simplify=False))
    g = sp.lambdify(Z, tetrahedral_q1_closed_form())
    rng = np.random.default_rng(7)
    for z in rng.normal(size=30) + 1j * rng.normal(size=30):
        assert abs(f(z) - g(z)) < 1e-9 * abs(g(z))


def test_tetrahedral_primitive_is_rational_and_differentiates_back():
    g1 = tetrahedral_g1()
    assert not g1.has(sp.log)
    integrand = (Z**3 + 8) ** 4 / (Z**6 * (Z**3 - 16) ** 2)
    assert sp.cancel(sp.diff(g1, Z) - integrand) == 0
    assert sp.cancel(g1 - (5 * Z**9 - 240 * Z**6 + 384 * Z**3 + 256) / (5 * Z**5 * (Z**3 - 16))) == 0


def test_tetrahedral_residue_changes_sign_at_16():
    lo, mid, hi = (tetrahedral_g1_residue(s) for s in (15, 16, 17))
    assert lo < 0 < hi and abs(mid) < 1e-12
    assert tetrahedral_g1_residue(16, exact=True) == 0
    assert abs(float(tetrahedral_g1_residue(15, exact=True)) - lo) < 1e-12


def test_dihedral_data(dihedral31):
    r = dihedral31
    assert r.A == pytest.approx(5 * math.pi / 3)
    assert r.B0 == pytest.approx(math.pi / 2) and r.C == pytest.approx(math.pi / 2)
    assert r.copies_total == 12 and r.end_order == -4


@pytest.mark.parametrize("make,order,regular", [
    (lambda: dihedral_recipe(3, 0), -2, True),
    (lambda: dihedral_recipe(3, 1), -4, False),
    (lambda: dihedral_recipe(5, 2), -6, False),
    (lambda: tetrahedral_recipe(1), -5, False),
    (lambda: tetrahedral_recipe(2), -8, False),
])
def test_end_classification(make, order, regular):
    ends = classify_ends(make())
    assert all(e.ord_Q == order and e.regular == regular for e in ends)


def test_torus_ends(torus):
    ends = classify_ends(torus)
    assert [e.ord_Q for e in ends] == [-6] * 4 and not any(e.regular for e in ends)


@pytest.mark.parametrize("which", ["dihedral31", "tetra1", "torus"])
def test_q_is_reflection_symmetric(which, request):
    assert q_symmetry_residual(request.getfixturevalue(which)) < 1e-9


@pytest.mark.parametrize("which", ["dihedral31", "tetra1", "torus"])
def test_theorem_hypotheses_hold(which, request):
    rep = check_theorem_hypotheses(request.getfixturevalue(which))
    assert rep["ok"], rep


def test_corrupted_recipe_fails_hypotheses(dihedral31):
    d = json.loads(dihedral31.to_json())
    d["end_order"] = -3
    assert not check_theorem_hypotheses(SurfaceRecipe.from_json(json.dumps(d)))["ok"]


@pytest.mark.parametrize("which", ["dihedral31", "tetra1", "torus"])
def test_json_round_trip(which, request):
    r = request.getfixturevalue(which)
    r2 = SurfaceRecipe.from_json(r.to_json())
    z = r.chart.interior_point()
    assert abs(r2.q(z) - r.q(z)) < 1e-12 * abs(r.q(z))
    assert abs(r2.u(z) - r.u(z)) < 1e-12 * max(1, abs(r.u(z)))
    assert r2.words == r.words or [tuple(w) for _, w in r2.words] == [tuple(w) for _, w in r.words]


def test_expression_serialization_with_wp():
    e = exprs.wp_prime(Z) ** 2 + sp.Rational(3, 7) * sp.exp(sp.I * sp.pi * Z)
    back = exprs.from_json(exprs.to_json(e))
    assert sp.simplify(back - e) == 0
    f = exprs.compile_expr(sp.diff(exprs.wp(Z), Z))
    assert abs(f(0.3 + 0.2j) - exprs.compile_expr(exprs.wp_prime(Z))(0.3 + 0.2j)) < 1e-14


def test_table_rows_validate():
    for row in table_rows(1, 3):
        assert row.validate()["valid"], row.row


def test_table_integer_data():
    rows = {d.row: d for d in table_rows(1, 3)}
    assert rows["dihedral"].ord_q_Qm == 3 * 2 - 2
    assert rows["icosahedral-12/20"].B0 == pytest.approx(math.pi / 5)
    assert rows["tetrahedral"].ord_p_Qm == -5
    for name in PLATONIC_ROWS:
        d = rows[name]
        assert d.copies_at_ends * d.n_ends == d.copies_total


def test_octahedral_angle_mismatch_is_exposed():
    d = platonic_recipe("octahedral-8/6", 1)
    assert abs(d.angle_relation_residual()) > 0.1
    for name in ("tetrahedral", "octahedral-6/8", "icosahedral-20/12", "icosahedral-12/20"):
        assert abs(platonic_recipe(name, 1).angle_relation_residual()) < 1e-12


def test_recipe_lookup_errors():
    with pytest.raises(RecipeError):
        recipe_by_name("octahedral-8/6")
    with pytest.raises(RecipeError):
        recipe_by_name("cube")
    with pytest.raises(RecipeError):
        tetrahedral_recipe(0)


def test_words_are_identity_at_b0(torus):
    from cmc1_forge.triangle import reflection_matrices, word_product
    from cmc1_forge import lin
    rho = reflection_matrices(torus.A, torus.B0, torus.C)
    for _, w in torus.words:
        assert lin.pauli_distance(word_product(rho, w), lin.ID2) < 1e-12

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from carnot.algebra import AlgebraMismatch, StratifiedAlgebra, bracket, preset, validate
from carnot.exact import TowerMismatch

from conftest import PRESETS, PRESET_IDS, each_preset, vectors


def test_heisenberg_bracket(h1):
    x1, x2, x3 = (h1.basis(j) for j in range(3))
    assert bracket(x1, x2) == x3
    assert bracket(x2, x1) == -x3
    assert bracket(x1, x1).is_zero()


def test_engel_double_bracket(engel):
    x1, x2 = engel.basis(0), engel.basis(1)
    assert bracket(x1, bracket(x1, x2)) == engel.basis(3)


def test_preset_shapes():
    assert preset("heisenberg", 1).layer_dims == (2, 1)
    assert preset("abelian", 2).step == 1 and preset("abelian", 2).brackets == ()
    assert preset("free_step2", 3).dim == 6
    e = preset("engel")
    assert (e.dim, e.step) == (4, 3)
    with pytest.raises(ValueError):
        preset("sl2", 1)
    with pytest.raises(ValueError):
        preset("abelian", 0)


@pytest.mark.parametrize("alg", PRESETS, ids=PRESET_IDS)
def test_presets_validate(alg):
    rep = validate(alg)
    assert rep.passed, rep.to_dict()


def test_abelian_generation_vacuous():
    rep = validate(preset("abelian", 3))
    assert rep.passed and rep.checks["generation"].detail.startswith("vacuous")


def test_broken_antisymmetry_witness():
    bad = StratifiedAlgebra.from_brackets((2, 1), [(0, 1, 2, 1), (1, 0, 2, 1)])
    rep = validate(bad)
    assert not rep.checks["antisymmetry"].passed
    assert rep.to_dict()["checks"]["antisymmetry"]["witness"] == [1, 2, 3]


def test_generation_failure():
    # [X1, X2] = 0 leaves V_2 ungenerated
    rep = validate(StratifiedAlgebra((2, 1), ()))
    assert not rep.checks["generation"].passed


def test_jacobi_failure():
    # free step 2 on X1, X2, X3 plus a top layer with only [X1, [X2, X3]] = Z
    brackets = [(0, 1, 3, 1), (0, 2, 4, 1), (1, 2, 5, 1), (0, 5, 6, 1)]
    rep = validate(StratifiedAlgebra.from_brackets((3, 3, 1), brackets))
    assert rep.checks["antisymmetry"].passed and rep.checks["grading"].passed
    assert not rep.checks["jacobi"].passed
    assert rep.checks["jacobi"].witness is not None


def test_grading_failure():
    alg = StratifiedAlgebra.from_brackets((2, 1), [(0, 1, 0, 1)])
    assert not validate(alg).checks["grading"].passed


def test_mismatches(h1, engel):
    with pytest.raises(AlgebraMismatch):
        bracket(h1.basis(0), engel.basis(0))
    with pytest.raises(TowerMismatch):
        bracket(h1.basis(0), h1.basis(1).as_float())


def test_float_scalar_on_exact_vector(h1):
    with pytest.raises(TowerMismatch):
        h1.basis(0) * 0.5
    assert (h1.basis(0) * Fraction(1, 2)).coeffs[0] == Fraction(1, 2)


def test_quotient_drops_top_layer(engel):
    q = engel.quotient()
    assert q.layer_dims == (2, 1)
    assert validate(q).passed


@each_preset
@given(data=st.data())
def test_jacobi_random_vectors(alg, data):
    x, y, z = (data.draw(vectors(alg)) for _ in range(3))
    jac = bracket(x, bracket(y, z)) + bracket(y, bracket(z, x)) + bracket(z, bracket(x, y))
    assert jac.is_zero()


@each_preset
@given(data=st.data())
def test_bracket_bilinear_antisymmetric(alg, data):
    x, y, z = (data.draw(vectors(alg)) for _ in range(3))
    a = data.draw(st.fractions(-3, 3, max_denominator=5))
    assert bracket(x * a + y, z) == bracket(x, z) * a + bracket(y, z)
    assert bracket(x, y) == -bracket(y, x)


@each_preset
@given(data=st.data())
def test_grading_of_homogeneous_brackets(alg, data):
    i = data.draw(st.integers(1, alg.step))
    j = data.draw(st.integers(1, alg.step))
    x = data.draw(vectors(alg))
    y = data.draw(vectors(alg))
    xi = alg.vector([c if alg.degrees[k] == i else 0 for k, c in enumerate(x.coeffs)])
    yj = alg.vector([c if alg.degrees[k] == j else 0 for k, c in enumerate(y.coeffs)])
    b = bracket(xi, yj)
    if i + j > alg.step:
        assert b.is_zero()
    else:
        assert b.support_layers() <= {i + j}

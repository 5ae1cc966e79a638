from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from carnot.algebra import preset
from carnot.group import (
    GroupPoint,
    batch_bch,
    batch_hom_norm,
    bch,
    dilate,
    dynkin_words,
    exp,
    hom_norm,
    identity,
    inverse,
    multiply,
    point,
    product,
    project_horizontal,
    vector_field,
)
from carnot.exact import TowerMismatch

from conftest import each_preset, float_points, points, positive_rationals, vectors

F = Fraction


def test_dynkin_low_orders():
    words = dict(dynkin_words(3))
    assert words[(0, 1)] == F(1, 2)
    assert words[(0, 0, 1)] == F(1, 12)
    assert words[(1, 0, 1)] == F(-1, 12)


def test_abelian_bch_is_sum():
    a = preset("abelian", 3)
    x, y = a.vector([1, 2, 3]), a.vector(["1/2", 0, -1])
    assert bch(x, y) == x + y


def test_h1_product_example(h1):
    assert multiply(point(h1, [1, 0, 0]), point(h1, [0, 1, 0])).coords == (1, 1, F(1, 2))
    assert multiply(point(h1, [1, 2, 3]), point(h1, [-1, -2, -3])).is_identity()
    comm = product([point(h1, c) for c in ([1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0])])
    assert comm.coords == (0, 0, 1)


@each_preset
@given(data=st.data())
def test_step2_closed_form(alg, data):
    if alg.step != 2:
        return
    x, y = data.draw(vectors(alg)), data.draw(vectors(alg))
    assert bch(x, y) == x + y + x.bracket(y) * F(1, 2)


@given(x=points(preset("heisenberg", 1)), y=points(preset("heisenberg", 1)))
def test_h1_group_law_formula(x, y):
    (a, b, t), (a2, b2, t2) = x.coords, y.coords
    assert multiply(x, y).coords == (a + a2, b + b2, t + t2 + F(1, 2) * (a * b2 - a2 * b))


@each_preset
@given(data=st.data())
def test_group_axioms(alg, data):
    x, y, z = (data.draw(points(alg)) for _ in range(3))
    assert multiply(multiply(x, y), z) == multiply(x, multiply(y, z))
    assert multiply(x, inverse(x)).is_identity()
    assert multiply(identity(alg), x) == x


@each_preset
@given(data=st.data())
def test_truncation_is_idempotent(alg, data):
    x, y = data.draw(vectors(alg)), data.draw(vectors(alg))
    assert bch(x, y) == bch(x, y, order=alg.step + 2)


@each_preset
@given(data=st.data())
def test_dilation_is_automorphism(alg, data):
    x, y = data.draw(points(alg)), data.draw(points(alg))
    lam = data.draw(positive_rationals)
    assert dilate(lam, multiply(x, y)) == multiply(dilate(lam, x), dilate(lam, y))
    assert dilate(1, x) == x


def test_dilation_examples(h1):
    assert dilate(2, point(h1, [1, 1, 1])).coords == (2, 2, 4)
    e = h1.horizontal([1, "1/3"])
    assert dilate(3, exp(e * 2)) == exp(e * 6)
    with pytest.raises(ValueError):
        dilate(0, point(h1, [1, 1, 1]))
    with pytest.raises(TowerMismatch):
        dilate(0.5, point(h1, [1, 1, 1]))


def test_hom_norm_examples(h1):
    assert hom_norm(point(h1, [0, 0, 1])) == 1.0
    x, y, t = 0.3, -1.2, 2.5
    assert hom_norm(point(h1, [x, y, t])) == pytest.approx(((x * x + y * y) ** 2 + t * t) ** 0.25, rel=1e-15)
    a = preset("abelian", 3)
    assert hom_norm(point(a, [3, 4, 12])) == pytest.approx(13.0, rel=1e-15)
    assert hom_norm(identity(h1)) == 0.0


@each_preset
@given(data=st.data())
def test_hom_norm_homogeneous_and_symmetric(alg, data):
    x = data.draw(float_points(alg))
    lam = data.draw(st.floats(0.01, 100.0))
    n = hom_norm(x)
    assert hom_norm(dilate(lam, x)) == pytest.approx(lam * n, rel=1e-12, abs=1e-300)
    assert hom_norm(inverse(x)) == pytest.approx(n, rel=1e-12, abs=0)


def test_hom_norm_extreme_scales(alg=preset("engel")):
    x = np.array([[1e-200, 0, 0, 1e-250], [1e200, 0, 1e150, 0], [0, 0, 0, 1e-300]])
    got = batch_hom_norm(alg, x)
    assert got[0] == pytest.approx(1e-250 ** (1 / 3), rel=1e-12)
    assert got[1] == pytest.approx(1e200, rel=1e-12)
    assert got[2] == pytest.approx(1e-100, rel=1e-12)


@each_preset
def test_quasi_triangle_constant_is_finite(alg):
    rng = np.random.default_rng(0)
    x, y = rng.standard_normal((2, 2000, alg.dim))
    k = batch_hom_norm(alg, batch_bch(alg, x, y)) / (batch_hom_norm(alg, x) + batch_hom_norm(alg, y))
    assert np.isfinite(k.max()) and k.max() < 10


def test_vector_field_examples(h1):
    assert vector_field(0, identity(h1)) == h1.basis(0)
    x, y, t = F(1, 3), F(-2), F(5)
    assert vector_field(0, point(h1, [x, y, t])).coeffs == (1, 0, -y / 2)
    assert vector_field(1, point(h1, [x, y, t])).coeffs == (0, 1, x / 2)
    with pytest.raises(IndexError):
        vector_field(2, identity(h1))


@each_preset
@given(data=st.data())
def test_vector_field_projection_invariant(alg, data):
    x, y = data.draw(points(alg)), data.draw(points(alg))
    for j in range(alg.rank):
        assert vector_field(j, x).coeffs[: alg.rank] == vector_field(j, y).coeffs[: alg.rank]


@each_preset
def test_vector_field_matches_finite_difference(alg):
    rng = np.random.default_rng(1)
    x = GroupPoint(alg, tuple(rng.standard_normal(alg.dim)))
    h = 1e-6
    for j in range(alg.rank):
        e = alg.basis(j).as_float()
        fd = (np.array(multiply(x, exp(e * h)).coords) - np.array(multiply(x, exp(e * -h)).coords)) / (2 * h)
        assert np.allclose(vector_field(j, x).to_array(), fd, atol=1e-6)


@each_preset
@given(data=st.data())
def test_projection_is_additive(alg, data):
    x, y = data.draw(points(alg)), data.draw(points(alg))
    lam = data.draw(positive_rationals)
    pxy = project_horizontal(multiply(x, y))
    assert pxy == tuple(a + b for a, b in zip(project_horizontal(x), project_horizontal(y)))
    assert project_horizontal(dilate(lam, x)) == tuple(lam * a for a in project_horizontal(x))


def test_batch_matches_exact(alg=preset("engel")):
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = [F(int(v), 7) for v in rng.integers(-20, 20, alg.dim)]
        b = [F(int(v), 5) for v in rng.integers(-20, 20, alg.dim)]
        exact = multiply(point(alg, a), point(alg, b)).to_array()
        fast = batch_bch(alg, np.array([float(v) for v in a]), np.array([float(v) for v in b]))
        assert np.allclose(exact, fast, rtol=1e-13, atol=1e-13)


def test_float_points_stay_float(h1):
    p = multiply(point(h1, [0.5, 1, 0]), point(h1, [1, 0.25, 0]))
    assert not p.exact
    assert p.coords[2] == pytest.approx(0.5 * (0.5 * 0.25 - 1.0))

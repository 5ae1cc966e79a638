from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from carnot.algebra import preset
from carnot.group import GroupPoint, exp, hom_norm, identity, inverse, multiply, point
from carnot.metric import (
    HorizontalWord,
    NonHorizontal,
    cc_upper,
    check_conjugation_bound,
    check_flow_distance,
    conjugation_ratios,
    estimate_norm_equivalence,
    flow,
    word_length,
)

from conftest import each_preset, horizontals, points, rationals

F = Fraction


def square_word(alg):
    x1, x2 = alg.basis(0), alg.basis(1)
    return HorizontalWord.build(alg, [(1, x1), (1, x2), (-1, x1), (-1, x2)])


def test_square_reaches_vertical(h1):
    assert flow(identity(h1), square_word(h1)).coords == (0, 0, 1)
    assert word_length(square_word(h1)) == 4.0


def test_word_rejects_vertical_step(h1):
    with pytest.raises(NonHorizontal):
        HorizontalWord.build(h1, [(1, h1.basis(2))])


def test_empty_word_is_identity_map(h1):
    x = point(h1, [1, 2, 3])
    assert flow(x, HorizontalWord(h1)) == x
    assert word_length(HorizontalWord(h1)) == 0.0


@each_preset
@given(data=st.data())
def test_flow_is_right_action(alg, data):
    x = data.draw(points(alg))
    steps = [(data.draw(rationals), data.draw(horizontals(alg))) for _ in range(3)]
    w1 = HorizontalWord.build(alg, steps[:2])
    w2 = HorizontalWord.build(alg, steps[2:])
    assert flow(x, w1 + w2) == flow(flow(x, w1), w2)
    assert flow(flow(x, w1), w1.inverse()) == x


@each_preset
@given(data=st.data())
def test_flow_subdivision(alg, data):
    t = data.draw(rationals)
    e = data.draw(horizontals(alg))
    x = data.draw(points(alg))
    whole = HorizontalWord.build(alg, [(t, e)])
    halves = HorizontalWord.build(alg, [(t / 2, e), (t / 2, e)])
    assert flow(x, whole) == flow(x, halves)


@each_preset
@given(data=st.data())
def test_flow_left_invariant(alg, data):
    g, x = data.draw(points(alg)), data.draw(points(alg))
    w = HorizontalWord.build(alg, [(data.draw(rationals), data.draw(horizontals(alg))) for _ in range(2)])
    assert flow(multiply(g, x), w) == multiply(g, flow(x, w))


def test_word_length_uses_omega(h1):
    w = HorizontalWord.build(h1, [(2, h1.horizontal([3, 4])), (F(-1, 2), h1.basis(0))])
    assert word_length(w) == pytest.approx(10.5)


def test_cc_upper_abelian_is_euclidean():
    a = preset("abelian", 3)
    b = cc_upper(identity(a), point(a, [1, 2, 2]))
    assert b.value == pytest.approx(3.0, rel=1e-6)
    assert b.converged


def test_cc_upper_vertical_h1(h1):
    b = cc_upper(identity(h1), point(h1, [0, 0, 1]), seed=0)
    # the sub-Riemannian distance to (0, 0, 1) is 2 sqrt(pi) ~ 3.545
    assert 2 * np.sqrt(np.pi) - 1e-6 <= b.value <= 4.0
    assert flow(identity(h1), b.word) == point(h1, [0, 0, 1])


def test_cc_upper_left_invariant_and_trivial(h1):
    x, y = point(h1, [1, -1, 2]), point(h1, [F(1, 2), 1, 0])
    assert cc_upper(x, x).value == 0.0
    b = cc_upper(x, y, seed=3)
    assert flow(x, b.word) == y
    assert b.value >= b.projection_floor - 1e-12


def test_cc_upper_bad_args(h1):
    with pytest.raises(ValueError):
        cc_upper(identity(h1), point(h1, [1, 0, 0]), segments=0)


def test_conjugation_trivial_cases(h1):
    x = np.array([[0.3, -0.2, 0.1]])
    assert conjugation_ratios(h1, x, np.zeros((1, 3)))[0] == 0.0
    assert conjugation_ratios(preset("abelian", 3), x, x)[0] == pytest.approx(1 / 3)


def test_conjugation_and_flow_reports(h1):
    c = check_conjugation_bound(2000, h1, seed=1)
    assert 0 < c.max_ratio < 10 and c.constant == "C"
    f = check_flow_distance(2000, h1, seed=1, lam=0.1)
    assert 0 < f.max_ratio < 10 and f.witness["ratio"] == f.max_ratio
    with pytest.raises(ValueError):
        check_flow_distance(10, h1, lam=1.5)
    with pytest.raises(ValueError):
        check_conjugation_bound(0, h1)


def test_abelian_conjugation_ratio_at_most_one():
    a = preset("abelian", 4)
    assert check_conjugation_bound(5000, a, seed=2).max_ratio <= 1.0


def test_norm_equivalence_upper_side(h1):
    r = estimate_norm_equivalence(4, h1, seed=0)
    assert r.max_ratio >= 1.0 - 1e-9  # horizontal points have equal norm and distance
    assert r.max_ratio < 5.0

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from carnot.algebra import StratifiedAlgebra, preset
from carnot.decompose import (
    InvalidAlgebra,
    basis_bracket_table,
    bracket_word,
    commutator_word_length,
    free_lie_family,
    nested_bracket,
    path_decompose,
    path_report,
    path_step_bound,
    split_constant,
    split_sum,
)
from carnot.exact import rank
from carnot.group import GroupPoint, dilate, exp, identity, point
from carnot.metric import NonHorizontal, flow

from conftest import each_preset, horizontals, points, positive_rationals

F = Fraction


def endpoint(word):
    return flow(identity(word.algebra), word)


def steps_of(word):
    return [(t, tuple(e.coeffs)) for t, e in word.steps]


# --- frozen oracles -------------------------------------------------------------

def test_h1_split_frozen(h1):
    u, v = h1.basis(0), h1.basis(1)
    w = split_sum(u, v)
    assert steps_of(w) == [
        (1, (1, 0, 0)), (1, (0, 1, 0)),
        (F(-1, 2), (1, 0, 0)), (1, (0, 1, 0)), (F(1, 2), (1, 0, 0)), (-1, (0, 1, 0)),
    ]
    assert endpoint(w).coords == (1, 1, 0)


def test_h1_path_frozen(h1):
    w = path_decompose(point(h1, [0, 0, 1]))
    assert steps_of(w) == [(1, (1, 0, 0)), (1, (0, 1, 0)), (1, (-1, 0, 0)), (1, (0, -1, 0))]
    assert w.total_time() == 4


def test_engel_bracket_word_frozen(engel):
    x1, x2 = engel.basis(0), engel.basis(1)
    w = bracket_word([x2, x1, x1])
    assert len(w) == 10 == commutator_word_length(3)
    assert endpoint(w).coords == (0, 0, 0, 1)
    assert nested_bracket([x2, x1, x1]) == engel.basis(3)


def test_split_constants():
    assert split_constant(preset("heisenberg", 1)) == 6
    assert split_constant(preset("engel")) == 26
    assert split_constant(preset("abelian", 3)) == 2
    assert free_lie_family(2) == ((1, 0),)
    assert len(free_lie_family(3)) == 2


def test_free_lie_family_dimensions():
    # Witt dimensions for two letters
    assert [len(free_lie_family(d)) for d in range(1, 6)] == [2, 1, 2, 3, 6]


def test_path_counts(engel):
    assert path_step_bound(engel) == 16
    assert path_step_bound(preset("heisenberg", 1)) == 6


def test_bracket_table_examples(h1, engel):
    assert basis_bracket_table(h1) == {2: ((1, (1, 0)),)}
    t = basis_bracket_table(engel)
    for k, terms in t.items():
        total = sum((nested_bracket([engel.basis(e) for e in ent]) * c for c, ent in terms), engel.vector([0] * 4))
        assert total == engel.basis(k)


def test_table_rejects_ungenerated_layer():
    # V_2 has a direction no first-layer bracket reaches
    alg = StratifiedAlgebra.from_brackets((2, 2), [(0, 1, 2, 1)])
    with pytest.raises(InvalidAlgebra):
        basis_bracket_table(alg)


# --- errors ---------------------------------------------------------------------

def test_bracket_word_errors(h1, engel):
    with pytest.raises(ValueError):
        bracket_word([engel.basis(0), engel.basis(1)])
    with pytest.raises(NonHorizontal):
        bracket_word([h1.basis(0), h1.basis(2)])
    with pytest.raises(ValueError):
        bracket_word([])


def test_split_rejects_vertical(h1):
    with pytest.raises(NonHorizontal):
        split_sum(h1.basis(0), h1.basis(2))


# --- properties -----------------------------------------------------------------

@each_preset
@given(data=st.data())
def test_split_is_exact(alg, data):
    u, v = data.draw(horizontals(alg)), data.draw(horizontals(alg))
    w = split_sum(u, v)
    assert endpoint(w) == exp(u + v)
    assert all(e == u or e == v for _, e in w.steps)


@each_preset
@given(data=st.data())
def test_split_length_is_constant(alg, data):
    u, v = data.draw(horizontals(alg)), data.draw(horizontals(alg))
    assume(rank([list(u.coeffs[: alg.rank]), list(v.coeffs[: alg.rank])]) == 2)
    assert len(split_sum(u, v)) == split_constant(alg)


@given(k=st.fractions(-4, 4, max_denominator=6))
def test_split_dependent_inputs(k):
    alg = preset("heisenberg", 1)
    u = alg.horizontal([2, -1])
    w = split_sum(u, u * k)
    assert endpoint(w) == exp(u * (1 + k))
    assert len(w) <= 1


@each_preset
@given(data=st.data())
def test_split_homogeneous(alg, data):
    u, v = data.draw(horizontals(alg)), data.draw(horizontals(alg))
    r = data.draw(positive_rationals)
    assume(rank([list(u.coeffs[: alg.rank]), list(v.coeffs[: alg.rank])]) == 2)
    w, wr = split_sum(u, v), split_sum(u * r, v * r)
    assert endpoint(wr) == dilate(r, endpoint(w))


@each_preset
@given(data=st.data())
def test_split_quotient_coherence(alg, data):
    if alg.step < 2:
        return
    u, v = data.draw(horizontals(alg)), data.draw(horizontals(alg))
    q = alg.quotient()
    n = q.dim
    w = split_sum(u, v)
    pq = endpoint(w).coords[:n]
    uq, vq = q.vector(u.coeffs[:n]), q.vector(v.coeffs[:n])
    assert pq == exp(uq + vq).coords


@each_preset
@given(data=st.data())
def test_path_is_exact(alg, data):
    h = data.draw(points(alg))
    w = path_decompose(h)
    assert endpoint(w) == h
    assert len(w) <= path_step_bound(alg)
    m = alg.rank
    for t, e in w.steps:
        assert t > 0
        nz = [c for c in e.coeffs if c != 0]
        assert len(nz) == 1 and abs(nz[0]) == 1 and e.coeffs.index(nz[0]) < m


@each_preset
@given(data=st.data())
def test_path_total_time_scales(alg, data):
    h = data.draw(points(alg))
    lam = data.draw(positive_rationals)
    assert path_decompose(dilate(lam, h)).total_time() == lam * path_decompose(h).total_time()


@each_preset
@given(data=st.data())
def test_bracket_word_endpoint(alg, data):
    entries = [data.draw(horizontals(alg)) for _ in range(alg.step)]
    w = bracket_word(entries)
    assert endpoint(w) == exp(nested_bracket(entries))
    assert len(w) == commutator_word_length(alg.step)


def test_path_float_input(h1):
    h = GroupPoint(h1, (0.25, -1.0, 0.3))
    w = path_decompose(h)
    end = flow(GroupPoint(h1, (0.0, 0.0, 0.0)), w)
    assert np.allclose(end.to_array(), h.to_array(), atol=1e-12)
    assert all(isinstance(t, float) for t, _ in w.steps)


def test_path_non_canonical_mode(engel):
    h = point(engel, [0, 0, F(2, 3), F(5, 7)])
    w = path_decompose(h, canonical=False)
    assert endpoint(w) == h


def test_path_report_keys(h1):
    r = path_report(point(h1, [0, 0, 1]))
    assert r == {"M": 4, "M_bound": 6, "sum_t": 4, "sum_t_over_norm": 4.0, "exact": True}
    assert path_report(identity(h1))["M"] == 0

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carnot.algebra import preset
from carnot.analysis import (
    IncompatibleSamples,
    NonConvergent,
    ScalarField,
    corpus,
    directional_derivative,
    heisenberg_sample_set,
    horizontal_gradient,
    linearity_defect,
    mcshane_extend,
    membership_A,
    min_lipschitz,
    pansu_quotient,
    porosity_probe,
    regularity_defect,
)
from carnot.group import batch_distance, batch_hom_norm

H1 = preset("heisenberg", 1)
finite = st.floats(-3, 3, allow_nan=False)
h1_points = st.tuples(finite, finite, finite).map(np.array)


# --- corpus ---------------------------------------------------------------------

def test_corpus_values():
    assert corpus("min2")(np.array([3.0, 5.0])) == 3.0
    assert corpus("heis-sqrt")(np.array([0.0, 0.0, 4.0])) == pytest.approx(2.0, abs=1e-12)
    assert corpus("heis-sqrt")(np.array([1.0, 0.0, 0.0])) == 0.0
    assert corpus("linear-v")(np.array([1.0, 1.0, 7.0])) == 3.0
    assert corpus("quadratic")(np.array([2.0, 1.0, 0.0])) == 6.0
    with pytest.raises(KeyError):
        corpus("nope")
    with pytest.raises(ValueError):
        corpus("product", algebra=preset("abelian", 1))


def test_heisenberg_sample_set_shape():
    pts, vals = heisenberg_sample_set()
    assert pts.shape == (len(vals), 3)
    on_axis = (pts[:, 0] == 0) & (pts[:, 1] == 0)
    assert np.allclose(vals[on_axis], np.sqrt(np.abs(pts[on_axis, 2])))
    assert np.all(vals[~on_axis] == 0) and np.all(pts[~on_axis, 2] == 0)
    with pytest.raises(ValueError):
        heisenberg_sample_set(rays=12)


# --- directional derivatives ------------------------------------------------------

@settings(max_examples=25)
@given(x=h1_points, e=st.tuples(finite, finite))
def test_linear_field_derivative_is_exact(x, e):
    f = corpus("linear-v")
    d = directional_derivative(f, x, np.array(e))
    assert d.converged
    assert d.value == pytest.approx(e[0] + 2 * e[1], abs=1e-8)
    assert d.lipschitz_ok


@pytest.mark.parametrize("s", [2.0, -1.0, 0.5])
def test_derivative_scales_with_direction(s):
    f = corpus("quadratic")
    x, e = np.array([0.4, -0.7, 1.3]), np.array([0.6, 0.8])
    base = directional_derivative(f, x, e)
    scaled = directional_derivative(f, x, s * e)
    assert scaled.converged and base.converged
    assert scaled.value == pytest.approx(s * base.value, abs=1e-8)


def test_gradient_of_quadratic():
    g = horizontal_gradient(corpus("quadratic"), np.array([0.5, -1.0, 2.0]))
    assert g.all_converged
    assert np.allclose(g.vector, [0.0, 0.5], atol=1e-8)


def test_min2_kink():
    f = corpus("min2")
    d = directional_derivative(f, np.zeros(2), np.array([1.0, 0.0]))
    assert not d.converged
    assert d.plus == pytest.approx(0.0) and d.minus == pytest.approx(1.0)
    assert d.plus_converged and d.minus_converged


def test_scale_validation():
    f = corpus("x1")
    with pytest.raises(ValueError):
        directional_derivative(f, np.zeros(3), [1.0, 0.0], scales=(0.1, 0.2))
    with pytest.raises(ValueError):
        directional_derivative(f, np.zeros(3), [0.0, 0.0, 1.0])


def test_linearity_defect_readings():
    f = corpus("min2")
    u, v = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    with pytest.raises(NonConvergent):
        linearity_defect(f, np.zeros(2), u, v)
    one = linearity_defect(f, np.zeros(2), u, v, reading="one-sided")
    assert float(one) == pytest.approx(1.0, abs=1e-9)
    lin = linearity_defect(corpus("linear-v"), np.array([1.0, 2.0, 3.0]), [1.0, 0.0], [0.0, 1.0])
    assert lin.value <= 1e-8
    with pytest.raises(ValueError):
        linearity_defect(f, np.zeros(2), u, v, reading="sideways")


# --- probes -----------------------------------------------------------------------

def test_regularity_of_linear_field_is_roundoff():
    r = regularity_defect(corpus("linear-v"), np.array([0.3, 0.1, -0.2]), [1.0, 0.0])
    assert max(r.defects) <= 1e-12
    assert not r.verdict["irregular_evidence"]


def test_regularity_of_heis_sqrt_stays_large():
    r = regularity_defect(corpus("heis-sqrt"), np.zeros(3), [1.0, 0.0], extra_u=[[0.0, 0.0, 1.0]])
    assert all(d > 0.1 for d in r.defects)
    assert r.verdict["irregular_evidence"]


def test_pansu_verdicts():
    q = pansu_quotient(corpus("quadratic"), np.array([0.2, 0.5, -1.0]))
    assert q.verdict["differentiable_evidence"]
    assert all(b < a for a, b in zip(q.defects, q.defects[1:]))
    lin = pansu_quotient(corpus("linear-v"), np.array([1.0, -1.0, 0.5]))
    assert max(lin.defects) <= 1e-12
    s = pansu_quotient(corpus("heis-sqrt"), np.zeros(3), directions=[[0.0, 0.0, 1.0]])
    assert s.defects == pytest.approx([1.0] * 4, abs=1e-9)
    assert not s.verdict["differentiable_evidence"]


def test_porosity_slab_and_ball():
    slab = lambda z: np.abs(z[..., 0]) <= 0.01 * batch_hom_norm(H1, z)
    p = porosity_probe(slab, np.zeros(3), H1, seed=1)
    assert p.verdict["porous_evidence"] and min(p.defects) >= 0.5
    ball = lambda z: batch_hom_norm(H1, z) <= 1.0
    b = porosity_probe(ball, np.zeros(3), H1, seed=1)
    assert b.defects == (0.0,) * 4 and not b.verdict["porous_evidence"]
    with pytest.raises(ValueError):
        porosity_probe(ball, np.array([5.0, 0.0, 0.0]), H1)


# --- membership ---------------------------------------------------------------

def test_membership_min2():
    f = corpus("min2")
    r = membership_A(f, np.zeros(2), [1.0, 0.0], [0.0, 1.0], 0.0, 0.0, eps=0.1, delta=1.0, one_sided=True)
    assert r.c2 == 2.0
    assert r.ugood and r.vgood and r.uvbad and r.member
    two = membership_A(f, np.zeros(2), [1.0, 0.0], [0.0, 1.0], 0.0, 0.0, eps=0.1, delta=1.0)
    assert not two.ugood and not two.member


def test_membership_fails_once_eps_reaches_lipschitz():
    f = corpus("min2")
    r = membership_A(f, np.zeros(2), [1.0, 0.0], [0.0, 1.0], 0.0, 0.0, eps=1.0, delta=1.0, one_sided=True)
    assert not r.uvbad and not r.member


@given(e1=st.floats(0.01, 2), e2=st.floats(0.01, 2))
def test_good_masks_monotone_in_eps(e1, e2):
    lo, hi = sorted((e1, e2))
    f = corpus("quadratic")
    x = np.array([0.3, -0.4, 0.0])
    a = membership_A(f, x, [1.0, 0.0], [0.0, 1.0], 0.2, 0.3, eps=lo, delta=0.5)
    b = membership_A(f, x, [1.0, 0.0], [0.0, 1.0], 0.2, 0.3, eps=hi, delta=0.5)
    assert all(bb or not aa for aa, bb in zip(a.ugood_mask, b.ugood_mask))
    assert all(aa or not bb for aa, bb in zip(a.uvbad_mask, b.uvbad_mask))


def test_membership_rejects_bad_parameters():
    f = corpus("min2")
    with pytest.raises(ValueError):
        membership_A(f, np.zeros(2), [1, 0], [0, 1], 0, 0, eps=0, delta=1)
    with pytest.raises(ValueError):
        membership_A(f, np.zeros(2), [1, 0], [0, 1], 0, 0, eps=0.1, delta=1, grid=[2.0])


# --- McShane ---------------------------------------------------------------------

def test_mcshane_single_sample():
    a = np.array([[1.0, 0.0, 0.5]])
    F = mcshane_extend(a, [2.0], H1, lipschitz=3.0)
    x = np.array([0.0, 1.0, -1.0])
    assert F(x) == pytest.approx(2.0 + 3.0 * batch_distance(H1, a[0], x))
    assert F(a[0]) == 2.0


def test_mcshane_incompatible_samples():
    pts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    with pytest.raises(IncompatibleSamples, match="samples 0 and 1"):
        mcshane_extend(pts, [0.0, 2.0], H1, lipschitz=1.0)
    with pytest.raises(IncompatibleSamples):
        mcshane_extend(np.zeros((2, 3)), [0.0, 1.0], H1)


def test_mcshane_lipschitz_audit():
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((200, 3))
    vals = corpus("linear-v")(pts)
    L = min_lipschitz(H1, pts, vals)
    assert 0 < L <= np.sqrt(5) + 1e-12
    F = mcshane_extend(pts, vals, H1)
    assert F.lipschitz == L
    assert np.allclose(F(pts), vals)


def test_mcshane_nested_samples_converge():
    rng = np.random.default_rng(1)
    f = corpus("linear-v")
    pts = rng.uniform(-1, 1, (4000, 3))
    vals = f(pts)
    probe = rng.uniform(-0.5, 0.5, (50, 3))
    errs = []
    for n in (50, 500, 4000):
        F = mcshane_extend(pts[:n], vals[:n], H1, lipschitz=np.sqrt(5.0))
        err = F(probe) - f(probe)
        assert np.all(err >= -1e-12)
        errs.append(float(err.max()))
    assert errs[0] >= errs[1] >= errs[2]
    assert errs[2] < errs[0] / 2


def test_scalar_field_shapes():
    f = ScalarField(lambda x: x[..., 0] * 2, H1)
    assert f(np.array([1.0, 0.0, 0.0])) == 2.0
    assert f(np.ones((4, 3))).shape == (4,)
    with pytest.raises(ValueError):
        f(np.ones(2))


# --- further anchors ---------------------------------------------------------------

def test_first_coordinate_derivative_is_one():
    for alg in (preset("abelian", 3), H1, preset("engel")):
        d = directional_derivative(corpus("x1", alg), np.linspace(-1, 1, alg.dim), [1.0] + [0.0] * (alg.rank - 1))
        assert d.converged and d.value == pytest.approx(1.0, abs=1e-12)


def test_min2_diagonal_derivative():
    d = directional_derivative(corpus("min2"), np.zeros(2), [1.0, 1.0])
    assert d.converged and d.value == pytest.approx(1.0, abs=1e-12)


def test_gradients_at_anchors():
    g = horizontal_gradient(corpus("heis-sqrt"), np.zeros(3))
    assert g.all_converged and np.allclose(g.vector, 0.0, atol=1e-9)
    lin = horizontal_gradient(corpus("linear-v"), np.array([3.0, -2.0, 8.0]))
    assert np.allclose(lin.vector, [1.0, 2.0], atol=1e-10)
    kink = horizontal_gradient(corpus("min2"), np.zeros(2))
    assert not kink.all_converged


def test_product_linearity_defect_small():
    rng = np.random.default_rng(5)
    for x in rng.uniform(-1, 1, (5, 3)):
        d = linearity_defect(corpus("product"), x, [1.0, 0.0], [0.0, 1.0])
        assert d.value <= 1e-6


def test_group_linear_membership_is_false():
    f = corpus("linear-v")
    for eps in (1e-3, 0.1, 5.0):
        r = membership_A(f, np.array([0.2, 0.1, 0.4]), [1.0, 0.0], [0.0, 1.0], 1.0, 2.0, eps=eps, delta=1.0)
        assert not r.uvbad and not r.member


def test_mcshane_from_origin_is_distance():
    F = mcshane_extend(np.zeros((1, 3)), [0.0], H1, lipschitz=1.0)
    x = np.random.default_rng(2).standard_normal((20, 3))
    assert np.allclose(F(x), batch_hom_norm(H1, x))


@pytest.mark.parametrize("t", [1e-1, 1e-2, 1e-3])
def test_heis_sqrt_vertical_growth(t):
    f = corpus("heis-sqrt")
    assert f(np.array([0.0, 0.0, t * t])) == pytest.approx(t, rel=1e-9)

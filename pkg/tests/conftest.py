from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from carnot.algebra import preset
from carnot.group import GroupPoint

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

PRESET_ARGS = [("abelian", 3), ("heisenberg", 1), ("heisenberg", 2), ("free_step2", 3), ("engel", None)]
PRESET_IDS = [f"{n}({p})" if p is not None else n for n, p in PRESET_ARGS]


PRESETS = [preset(n, p) for n, p in PRESET_ARGS]
each_preset = pytest.mark.parametrize("alg", PRESETS, ids=PRESET_IDS)


@pytest.fixture
def h1():
    return preset("heisenberg", 1)


@pytest.fixture
def engel():
    return preset("engel")


rationals = st.fractions(min_value=-5, max_value=5, max_denominator=12)
nonzero_rationals = rationals.filter(lambda q: q != 0)


def points(alg):
    return st.tuples(*[rationals] * alg.dim).map(lambda c: GroupPoint(alg, c))


def vectors(alg):
    return st.tuples(*[rationals] * alg.dim).map(lambda c: alg.vector(list(c)))


def horizontals(alg):
    return st.tuples(*[rationals] * alg.rank).map(lambda c: alg.horizontal(list(c)))


def float_points(alg, bound=3.0):
    return st.tuples(*[st.floats(-bound, bound, allow_nan=False)] * alg.dim).map(lambda c: GroupPoint(alg, c))


positive_rationals = st.fractions(min_value=Fraction(1, 9), max_value=10, max_denominator=9).filter(lambda q: q > 0)

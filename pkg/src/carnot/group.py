"""The Carnot group in exponential coordinates.

The product is ``exp(X) exp(Y) = exp(bch(X, Y))``. BCH is evaluated with
Dynkin's formula, aggregated per right-nested word in the letters X, Y and
truncated at the step: brackets longer than the step vanish, so the
truncation is exact.

Exact (``Fraction``) and float paths share the same word table. The
``batch_*`` functions are the vectorised float path used by the numerical
probes; they take arrays of shape ``(..., n)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .algebra import AlgebraMismatch, LieVector, StratifiedAlgebra, bracket
from .exact import TowerMismatch, coerce_tower, parse_scalar, solve


@lru_cache(maxsize=None)
def dynkin_words(order: int) -> tuple[tuple[tuple[int, ...], Fraction], ...]:
    """Coefficients of ``log(e^X e^Y)`` on right-nested words up to ``order``.

    A word ``(a_1, ..., a_k)`` over {0: X, 1: Y} stands for
    ``[a_1, [a_2, ... [a_{k-1}, a_k]]]``. Words whose last two letters agree
    are dropped, their bracket is zero; words ending in ``Y, X`` are folded
    into ``X, Y`` with a sign.
    """
    coef: dict[tuple[int, ...], Fraction] = {}
    for k in range(1, order + 1):
        sign = Fraction((-1) ** (k - 1), k)
        # k blocks X^{r_i} Y^{s_i}, r_i + s_i >= 1, total degree <= order
        blocks = [(r, s) for r in range(order + 1) for s in range(order + 1) if 1 <= r + s <= order]
        for combo in itertools.product(blocks, repeat=k):
            n = sum(r + s for r, s in combo)
            if n > order:
                continue
            word: list[int] = []
            denom = 1
            for r, s in combo:
                word += [0] * r + [1] * s
                denom *= math.factorial(r) * math.factorial(s)
            c = sign / (denom * n)
            if len(word) >= 2:
                if word[-1] == word[-2]:
                    continue
                if word[-1] == 0:
                    # [.., Y, X] = -[.., X, Y]
                    word[-2:] = [0, 1]
                    c = -c
            w = tuple(word)
            coef[w] = coef.get(w, Fraction(0)) + c
    return tuple(sorted(((w, c) for w, c in coef.items() if c != 0), key=lambda t: (len(t[0]), t[0])))


def bch(x: LieVector, y: LieVector, order: int | None = None) -> LieVector:
    """``X <> Y`` with ``exp(X) exp(Y) = exp(X <> Y)``.

    Exact when both inputs are exact. ``order`` defaults to the step; larger
    orders give the same result since longer brackets vanish.
    """
    x._check(y)
    alg = x.algebra
    order = alg.step if order is None else order
    letters = (x, y)
    nested: dict[tuple[int, ...], LieVector] = {}

    def nest(w):
        if len(w) == 1:
            return letters[w[0]]
        v = nested.get(w)
        if v is None:
            v = bracket(letters[w[0]], nest(w[1:]))
            nested[w] = v
        return v

    out = list(x.coeffs)
    for i, c in enumerate(y.coeffs):
        out[i] += c
    exact = x.exact
    for w, c in dynkin_words(order):
        if len(w) == 1:
            continue
        v = nest(w)
        if v.is_zero():
            continue
        cc = c if exact else float(c)
        for i, vi in enumerate(v.coeffs):
            if vi != 0:
                out[i] += cc * vi
    return LieVector(alg, tuple(out))


# --- group points -----------------------------------------------------------

@dataclass(frozen=True)
class GroupPoint:
    """Point ``exp(x_1 X_1 + ... + x_n X_n)`` of the group."""

    algebra: StratifiedAlgebra
    coords: tuple

    def __post_init__(self):
        if len(self.coords) != self.algebra.dim:
            raise ValueError(f"expected {self.algebra.dim} coordinates, got {len(self.coords)}")

    @property
    def exact(self) -> bool:
        return all(not isinstance(c, float) for c in self.coords)

    def log(self) -> LieVector:
        return LieVector(self.algebra, self.coords)

    def __mul__(self, other: "GroupPoint") -> "GroupPoint":
        return multiply(self, other)

    def inverse(self) -> "GroupPoint":
        return inverse(self)

    def is_identity(self) -> bool:
        return all(c == 0 for c in self.coords)

    def as_float(self) -> "GroupPoint":
        return GroupPoint(self.algebra, tuple(float(c) for c in self.coords))

    def to_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.coords])


def point(alg: StratifiedAlgebra, coords) -> GroupPoint:
    return GroupPoint(alg, coerce_tower(coords))


def exp(v: LieVector) -> GroupPoint:
    return GroupPoint(v.algebra, v.coeffs)


def identity(alg: StratifiedAlgebra) -> GroupPoint:
    return GroupPoint(alg, (Fraction(0),) * alg.dim)


def multiply(x: GroupPoint, y: GroupPoint) -> GroupPoint:
    return exp(bch(x.log(), y.log()))


def inverse(x: GroupPoint) -> GroupPoint:
    # every bracket term of bch(X, -X) vanishes, so exp(X)^{-1} = exp(-X)
    return GroupPoint(x.algebra, tuple(-c for c in x.coords))


def product(points, alg: StratifiedAlgebra | None = None) -> GroupPoint:
    points = list(points)
    if not points:
        if alg is None:
            raise ValueError("empty product needs an algebra")
        return identity(alg)
    acc = points[0]
    for p in points[1:]:
        acc = multiply(acc, p)
    return acc


def _check_lambda(lam):
    lam = parse_scalar(lam)
    if lam <= 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    return lam


def dilate(lam, x: GroupPoint) -> GroupPoint:
    """``delta_lam``: coordinate ``j`` scales by ``lam ** d_j``."""
    lam = _check_lambda(lam)
    if isinstance(lam, float) and x.exact:
        raise TowerMismatch("float dilation factor applied to an exact point")
    if not isinstance(lam, float) and not x.exact:
        lam = float(lam)
    d = x.algebra.degrees
    return GroupPoint(x.algebra, tuple(lam ** dj * c for dj, c in zip(d, x.coords)))


def dilate_vector(lam, v: LieVector) -> LieVector:
    return dilate(lam, exp(v)).log()


def hom_norm(x: GroupPoint) -> float:
    """``(sum_i |x^i| ** (2 s!/i)) ** (1/(2 s!))``, ``|x^i|`` Euclidean on layer ``i``."""
    return float(batch_hom_norm(x.algebra, x.to_array()))


def project_horizontal(x: GroupPoint | LieVector) -> tuple:
    coords = x.coords if isinstance(x, GroupPoint) else x.coeffs
    return tuple(coords[: x.algebra.rank])


def vector_field(j: int, x: GroupPoint) -> LieVector:
    """Left-invariant field ``X_j`` at ``x`` as a coordinate vector.

    This is the ``t``-linear coefficient of ``bch(log x, t X_j)``. The
    polynomial has degree at most ``s`` in ``t``; it is sampled at
    ``t = 0..s`` and the linear coefficient recovered by an exact solve.
    """
    alg = x.algebra
    if not 0 <= j < alg.rank:
        raise IndexError(f"vector_field index {j} must be a first-layer index < {alg.rank}")
    s = alg.step
    ts = [Fraction(t) for t in range(s + 1)]
    X = x.log()
    e = alg.basis(j)
    if not x.exact:
        e = e.as_float()
    samples = [bch(X, e * (t if x.exact else float(t))).coeffs for t in ts]
    if not x.exact:
        vander = np.array([[float(t) ** p for p in range(s + 1)] for t in ts])
        vals = np.array(samples, dtype=float)
        coef = np.linalg.solve(vander, vals)
        return LieVector(alg, tuple(float(c) for c in coef[1]))
    cols = [[t ** p for t in ts] for p in range(s + 1)]
    out = []
    for k in range(alg.dim):
        sol = solve(cols, [samples[i][k] for i in range(s + 1)])
        out.append(sol[1])
    return LieVector(alg, tuple(out))


# --- vectorised float path ----------------------------------------------------

def batch_bracket(alg: StratifiedAlgebra, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # structure constants are sparse, so a loop over them beats a dense einsum
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    out = np.zeros(x.shape)
    for i, j, k, c in alg.brackets:
        out[..., k] += float(c) * x[..., i] * y[..., j]
    return out


def batch_bch(alg: StratifiedAlgebra, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    out = x + y
    if alg.step == 1 or not alg.brackets:
        return out
    letters = (x, y)
    nested: dict[tuple[int, ...], np.ndarray] = {}

    def nest(w):
        if len(w) == 1:
            return letters[w[0]]
        v = nested.get(w)
        if v is None:
            v = batch_bracket(alg, letters[w[0]], nest(w[1:]))
            nested[w] = v
        return v

    for w, c in dynkin_words(alg.step):
        if len(w) > 1:
            out = out + float(c) * nest(w)
    return out


def batch_multiply(alg: StratifiedAlgebra, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return batch_bch(alg, x, y)


def batch_conjugate(alg: StratifiedAlgebra, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``x^{-1} y x``."""
    return batch_bch(alg, batch_bch(alg, -np.asarray(x, float), y), x)


def batch_dilate(alg: StratifiedAlgebra, lam, x: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    d = np.array(alg.degrees)
    return np.asarray(x, float) * lam[..., None] ** d


def layer_gauges(alg: StratifiedAlgebra, x: np.ndarray) -> np.ndarray:
    """``|x^i| ** (1/i)`` per layer, shape ``(..., s)``; each is 1-homogeneous."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(1, alg.step + 1):
        block = x[..., alg.layer_slice(i)]
        m = np.abs(block).max(axis=-1)
        safe = np.where(m > 0, m, 1.0)
        norm = m * np.linalg.norm(block / safe[..., None], axis=-1)
        cols.append(norm ** (1.0 / i))
    return np.stack(cols, axis=-1)


def _stable_hom_norm(alg: StratifiedAlgebra, x: np.ndarray) -> np.ndarray:
    a = layer_gauges(alg, x)
    sigma2 = 2 * math.factorial(alg.step)
    top = a.max(axis=-1)
    safe = np.where(top > 0, top, 1.0)
    r = (a / safe[..., None]) ** sigma2
    return np.where(top > 0, top * r.sum(axis=-1) ** (1.0 / sigma2), 0.0)


def batch_hom_norm(alg: StratifiedAlgebra, x: np.ndarray) -> np.ndarray:
    """Vectorised :func:`hom_norm`.

    The direct sum of ``|x^i| ** (2 s!/i)`` is used when it neither overflows
    nor underflows; otherwise the max-rescaled form is evaluated.
    """
    x = np.asarray(x, dtype=float)
    sigma = math.factorial(alg.step)
    total = np.zeros(x.shape[:-1])
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        for i in range(1, alg.step + 1):
            block = x[..., alg.layer_slice(i)]
            sq = np.einsum("...k,...k->...", block, block)
            total = total + sq ** (sigma // i)
        out = total ** (1.0 / (2 * sigma))
    bad = ~np.isfinite(total) | ((total < 1e-290) & np.any(x != 0, axis=-1))
    if np.any(bad):
        out = np.where(bad, _stable_hom_norm(alg, np.where(bad[..., None], x, 0.0)), out)
    return out


def batch_distance(alg: StratifiedAlgebra, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Left-invariant ``||x^{-1} y||``."""
    return batch_hom_norm(alg, batch_bch(alg, -np.asarray(x, float), y))


def batch_exp_step(alg: StratifiedAlgebra, x: np.ndarray, t, e: np.ndarray) -> np.ndarray:
    """``x exp(t E)``."""
    t = np.asarray(t, dtype=float)
    return batch_bch(alg, x, t[..., None] * np.asarray(e, float))


def sample_unit_sphere(alg: StratifiedAlgebra, rng: np.random.Generator, size: int) -> np.ndarray:
    """Points of hom-norm one: Gaussian coordinates pushed to the sphere by dilation."""
    z = rng.standard_normal((size, alg.dim))
    r = batch_hom_norm(alg, z)
    return batch_dilate(alg, 1.0 / r, z)


def sample_ball(alg: StratifiedAlgebra, rng: np.random.Generator, size: int, radius: float = 1.0) -> np.ndarray:
    """Points with hom-norm at most ``radius``; radii uniform in ``[0, radius]``."""
    u = sample_unit_sphere(alg, rng, size)
    return batch_dilate(alg, radius * rng.uniform(0.0, 1.0, size), u)


def check_same_algebra(*objs):
    algs = [o.algebra for o in objs]
    for a in algs[1:]:
        if a is not algs[0] and a != algs[0]:
            raise AlgebraMismatch("objects belong to different algebras")

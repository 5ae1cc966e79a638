"""Horizontal words, flows, Carnot-Caratheodory upper bounds and lemma probes.

A horizontal word is a finite list of steps ``(t_j, E_j)`` with ``E_j`` in
``V_1``; step ``j`` moves ``x`` to ``x exp(t_j E_j)``. Piecewise-constant
controls integrate exactly to such products, so flows are computed with the
group law and never with an ODE solver.

Every metric quantity in the probes is the homogeneous norm, not the CC
distance. The CC distance itself is only bounded from above (``cc_upper``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy import optimize

from .algebra import LieVector, StratifiedAlgebra
from .exact import format_rational, parse_scalar
from .group import (
    GroupPoint,
    batch_bch,
    batch_conjugate,
    batch_dilate,
    batch_hom_norm,
    exp,
    identity,
    inverse,
    multiply,
    sample_ball,
)


class NonHorizontal(ValueError):
    pass


@dataclass(frozen=True)
class HorizontalWord:
    algebra: StratifiedAlgebra
    steps: tuple[tuple[object, LieVector], ...] = ()

    def __post_init__(self):
        for t, e in self.steps:
            if e.algebra != self.algebra:
                raise ValueError("word step from a different algebra")
            if not e.is_horizontal():
                raise NonHorizontal(f"step direction {e.coeffs} is not in V_1")

    @classmethod
    def build(cls, alg: StratifiedAlgebra, steps: Iterable[tuple[object, LieVector]]) -> "HorizontalWord":
        return cls(alg, tuple((parse_scalar(t), e) for t, e in steps))

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __add__(self, other: "HorizontalWord") -> "HorizontalWord":
        if other.algebra != self.algebra:
            raise ValueError("cannot concatenate words from different algebras")
        return HorizontalWord(self.algebra, self.steps + other.steps)

    def inverse(self) -> "HorizontalWord":
        """Reversed word with negated times; flows to the inverse element."""
        return HorizontalWord(self.algebra, tuple((-t, e) for t, e in reversed(self.steps)))

    def scaled(self, r) -> "HorizontalWord":
        """Multiply every time by ``r``; the endpoint is dilated by ``r > 0``."""
        return HorizontalWord(self.algebra, tuple((r * t, e) for t, e in self.steps))

    def total_time(self):
        """``sum |t_j|`` (exact when the times are)."""
        return sum((abs(t) for t, _ in self.steps), Fraction(0))

    def max_abs_time(self):
        return max((abs(t) for t, _ in self.steps), default=Fraction(0))

    def to_dict(self) -> dict:
        def scal(v):
            return format_rational(v) if isinstance(v, Fraction) else float(v)

        return {
            "steps": [{"t": scal(t), "E": [scal(c) for c in e.coeffs[: self.algebra.rank]]} for t, e in self.steps],
            "N": len(self.steps),
        }


def flow(x: GroupPoint, word: HorizontalWord) -> GroupPoint:
    """``x exp(t_1 E_1) ... exp(t_N E_N)``, exact for exact input."""
    if word.algebra != x.algebra:
        raise ValueError("point and word belong to different algebras")
    acc = x
    for t, e in word.steps:
        if not e.is_horizontal():
            raise NonHorizontal(f"step direction {e.coeffs} is not in V_1")
        acc = multiply(acc, exp(e * t))
    return acc


def word_length(word: HorizontalWord) -> float:
    """Horizontal length ``sum |t_j| omega(E_j)``."""
    return math.fsum(abs(float(t)) * e.omega() for t, e in word.steps)


def _flow_controls(alg: StratifiedAlgebra, controls: np.ndarray) -> np.ndarray:
    """Endpoint from the identity of unit-time segments with V_1 velocities ``controls``."""
    n, m = alg.dim, alg.rank
    pts = np.zeros(controls.shape[:-2] + (n,))
    step = np.zeros(controls.shape[:-2] + (n,))
    for k in range(controls.shape[-2]):
        step[..., :m] = controls[..., k, :]
        pts = batch_bch(alg, pts, step)
    return pts


# --- CC distance upper bound --------------------------------------------------

@dataclass
class CCBound:
    value: float
    word: HorizontalWord
    converged: bool
    mismatch: float
    closure_length: float
    projection_floor: float
    segments: int
    starts: int
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "converged": self.converged,
            "endpoint_mismatch": self.mismatch,
            "closure_length": self.closure_length,
            "projection_floor": self.projection_floor,
            "segments": self.segments,
            "starts": self.starts,
            "word": self.word.to_dict(),
            "config": self.config,
        }


def _to_exact(x: GroupPoint) -> GroupPoint:
    return GroupPoint(x.algebra, tuple(Fraction(c) for c in x.coords))


def cc_upper(
    x: GroupPoint,
    y: GroupPoint,
    segments: int | None = None,
    budget: int = 4,
    tol: float = 1e-8,
    seed: int = 0,
    initial: np.ndarray | None = None,
    maxiter: int = 200,
) -> CCBound:
    """Upper bound for ``d(x, y)`` over ``segments``-piece constant controls.

    Controls minimise the energy ``sum |u_k|^2 / K`` subject to hitting
    ``x^{-1} y`` (SLSQP with finite-difference gradients, ``budget`` starts),
    then a Gauss-Newton polish drives the endpoint error to round-off. The
    leftover error is closed exactly with a basis-path word, so the returned
    word reaches ``y`` exactly and ``value`` is its true length. ``mismatch``
    is the hom-norm error before closure; ``converged`` requires it below
    ``tol``.

    ``initial`` (shape ``(K, m)``, velocities per unit-time segment) seeds the
    first start; the remaining ``budget - 1`` starts are random.
    """
    from .decompose import path_decompose

    alg = x.algebra
    K = 2 * alg.dim if segments is None else int(segments)
    if K < 1:
        raise ValueError("segments must be >= 1")
    if budget < 1:
        raise ValueError("budget must be positive")
    m = alg.rank
    target = multiply(inverse(_to_exact(x)), _to_exact(y))
    g = target.to_array()
    scale = max(float(batch_hom_norm(alg, g)), 1e-12)
    floor = float(np.linalg.norm(g[:m]))
    rng = np.random.default_rng(seed)

    def residual(flat):
        # velocities u_k over time 1/K <=> unit-time steps u_k / K
        return _flow_controls(alg, flat.reshape(K, m) / K) - g

    def energy(flat):
        return float(flat @ flat) / K

    def energy_grad(flat):
        return 2.0 * flat / K

    def polish(flat):
        for _ in range(12):
            r = residual(flat)
            if np.max(np.abs(r)) <= 1e-16 * max(1.0, scale):
                break
            h = 1e-7 * max(1.0, scale)
            jac = np.empty((alg.dim, flat.size))
            for i in range(flat.size):
                dp = flat.copy()
                dm = flat.copy()
                dp[i] += h
                dm[i] -= h
                jac[:, i] = (residual(dp) - residual(dm)) / (2 * h)
            delta, *_ = np.linalg.lstsq(jac, -r, rcond=None)
            flat = flat + delta
        return flat

    starts = []
    if initial is not None:
        init = np.asarray(initial, dtype=float)
        if init.shape != (K, m):
            raise ValueError(f"initial controls must have shape {(K, m)}")
        starts.append(init.ravel())
    base = np.tile(g[:m], K)
    while len(starts) < budget:
        starts.append(base + scale * rng.standard_normal(K * m))

    best = None
    any_success = False
    for flat0 in starts:
        try:
            res = optimize.minimize(
                energy,
                flat0,
                jac=energy_grad,
                method="SLSQP",
                constraints=[{"type": "eq", "fun": residual}],
                options={"maxiter": maxiter, "ftol": 1e-12},
            )
            flat = res.x
            ok = bool(res.success)
        except (ValueError, np.linalg.LinAlgError):
            flat, ok = flat0, False
        if not np.all(np.isfinite(flat)):
            continue
        flat = polish(flat)
        end = _flow_controls(alg, flat.reshape(K, m) / K)
        mis = float(batch_hom_norm(alg, batch_bch(alg, -end, g)))
        length = float(np.sum(np.linalg.norm(flat.reshape(K, m), axis=1))) / K
        cand = (length + mis, length, mis, flat, ok)
        any_success |= ok and mis <= tol
        if best is None or cand[0] < best[0]:
            best = cand

    # exact closure of the optimised word
    if best is not None:
        _, _, mis, flat, ok = best
        u = flat.reshape(K, m)
        steps = [(Fraction(1, K), alg.horizontal([Fraction(float(c)) for c in u[k]])) for k in range(K)]
        word = HorizontalWord(alg, tuple(steps))
        reached = flow(identity(alg), word)
        closure = path_decompose(multiply(inverse(reached), target), canonical=False)
        word = word + closure
        closure_len = word_length(closure)
    else:
        mis = math.inf
        word = HorizontalWord(alg)
        closure_len = math.inf

    fallback = path_decompose(target, canonical=False)
    value = word_length(word)
    if word_length(fallback) < value:
        word, value, closure_len = fallback, word_length(fallback), 0.0
    return CCBound(
        value=value,
        word=word,
        converged=any_success,
        mismatch=mis,
        closure_length=closure_len,
        projection_floor=floor,
        segments=K,
        starts=len(starts),
        config={"segments": K, "budget": budget, "tol": tol, "seed": seed, "maxiter": maxiter},
    )


# --- empirical constants --------------------------------------------------------

@dataclass
class ConstantsReport:
    constant: str
    samples: int
    max_ratio: float
    mean_ratio: float
    config: dict
    metric: str = "hom_norm"
    notes: str = ""
    witness: dict | None = None

    def __post_init__(self):
        if self.samples <= 0:
            raise ValueError("sample count must be positive")

    def to_dict(self) -> dict:
        return {
            "constant": self.constant,
            "samples": self.samples,
            "max_ratio": self.max_ratio,
            "mean_ratio": self.mean_ratio,
            "metric": self.metric,
            "config": self.config,
            "notes": self.notes,
            "witness": self.witness,
        }


def conjugation_ratios(alg: StratifiedAlgebra, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``||x^{-1} y x|| / (||y|| + ||x||^{1/s} ||y||^{(s-1)/s} + ||x||^{(s-1)/s} ||y||^{1/s})``.

    Pairs with a vanishing left side get ratio 0.
    """
    s = alg.step
    lhs = batch_hom_norm(alg, batch_conjugate(alg, x, y))
    nx = batch_hom_norm(alg, x)
    ny = batch_hom_norm(alg, y)
    rhs = ny + nx ** (1.0 / s) * ny ** ((s - 1.0) / s) + nx ** ((s - 1.0) / s) * ny ** (1.0 / s)
    return np.divide(lhs, rhs, out=np.zeros_like(lhs), where=lhs > 0)


def _witness(arr_named: dict, idx: int) -> dict:
    return {k: (v[idx].tolist() if isinstance(v, np.ndarray) and v.ndim > 1 else float(v[idx])) for k, v in arr_named.items()}


def check_conjugation_bound(samples: int, algebra: StratifiedAlgebra, seed: int = 0, radius: float = 1.0) -> ConstantsReport:
    """Empirical constant of the conjugation estimate over pairs in a hom-norm ball."""
    if samples <= 0:
        raise ValueError("sample count must be positive")
    rng = np.random.default_rng(seed)
    x = sample_ball(algebra, rng, samples, radius)
    y = sample_ball(algebra, rng, samples, radius)
    ratios = conjugation_ratios(algebra, x, y)
    i = int(np.argmax(ratios))
    return ConstantsReport(
        constant="C",
        samples=samples,
        max_ratio=float(ratios[i]),
        mean_ratio=float(ratios.mean()),
        config={"algebra": algebra.name, "seed": seed, "radius": radius},
        notes="empirical surrogate; the lemma's constant is existential",
        witness=_witness({"x": x, "y": y, "ratio": ratios}, i),
    )


def flow_distance_ratios(alg, x, y, t, u) -> np.ndarray:
    """``||(y exp(tU))^{-1} (x exp(tU))|| / (|t| max(1, omega(U)))``.

    Callers divide by ``lam ** (1/s)`` to get the flow-distance ratio.
    """
    m = alg.rank
    e = np.zeros(u.shape[:-1] + (alg.dim,))
    e[..., :m] = u
    step = t[..., None] * e
    a = batch_bch(alg, x, step)
    b = batch_bch(alg, y, step)
    lhs = batch_hom_norm(alg, batch_bch(alg, -b, a))
    om = np.linalg.norm(u, axis=-1)
    return lhs / (np.abs(t) * np.maximum(1.0, om))


def check_flow_distance(
    samples: int,
    algebra: StratifiedAlgebra,
    seed: int = 0,
    lam: float | None = None,
    max_omega: float = 2.0,
) -> ConstantsReport:
    """Empirical constant of the flow-distance estimate.

    Samples ``t`` in (-1, 1), ``U`` in ``V_1`` with ``omega(U) < max_omega``,
    ``y`` in the unit ball and ``x = y delta_{lam |t|}(v)`` with ``||v|| <= 1``,
    so ``||y^{-1} x|| <= lam |t|``. ``lam`` is drawn from (0, 1) per sample
    unless fixed.
    """
    if samples <= 0:
        raise ValueError("sample count must be positive")
    alg = algebra
    rng = np.random.default_rng(seed)
    s = alg.step
    lams = rng.uniform(0.0, 1.0, samples) if lam is None else np.full(samples, float(lam))
    if np.any((lams <= 0) | (lams >= 1)):
        raise ValueError("lambda must lie in (0, 1)")
    t = rng.uniform(-1.0, 1.0, samples)
    t = np.where(t == 0, 0.5, t)
    dirs = rng.standard_normal((samples, alg.rank))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    u = dirs * rng.uniform(0.0, max_omega, samples)[:, None]
    y = sample_ball(alg, rng, samples)
    v = sample_ball(alg, rng, samples)
    x = batch_bch(alg, y, batch_dilate(alg, lams * np.abs(t), v))
    ratios = flow_distance_ratios(alg, x, y, t, u) / lams ** (1.0 / s)
    i = int(np.argmax(ratios))
    return ConstantsReport(
        constant="C1",
        samples=samples,
        max_ratio=float(ratios[i]),
        mean_ratio=float(ratios.mean()),
        config={"algebra": alg.name, "seed": seed, "lambda": lam, "max_omega": max_omega},
        notes="empirical surrogate in hom_norm; the lemma's constant is existential",
        witness=_witness({"x": x, "y": y, "t": t, "U": u, "lambda": lams, "ratio": ratios}, i),
    )


def estimate_norm_equivalence(
    samples: int,
    algebra: StratifiedAlgebra,
    segments: int | None = None,
    seed: int = 0,
    budget: int = 2,
) -> ConstantsReport:
    """Max of ``cc_upper(0, x) / ||x||`` over unit-sphere samples.

    Only the upper side of the equivalence is estimated; a lower constant
    cannot be certified from upper bounds.
    """
    from .group import sample_unit_sphere

    if samples <= 0:
        raise ValueError("sample count must be positive")
    alg = algebra
    rng = np.random.default_rng(seed)
    pts = sample_unit_sphere(alg, rng, samples)
    zero = identity(alg)
    ratios = []
    for k, p in enumerate(pts):
        gp = GroupPoint(alg, tuple(float(c) for c in p))
        b = cc_upper(zero, gp, segments=segments, budget=budget, seed=seed + k)
        ratios.append(b.value / float(batch_hom_norm(alg, p)))
    ratios = np.array(ratios)
    i = int(np.argmax(ratios))
    return ConstantsReport(
        constant="c",
        samples=samples,
        max_ratio=float(ratios[i]),
        mean_ratio=float(ratios.mean()),
        config={"algebra": alg.name, "seed": seed, "segments": segments or 2 * alg.dim, "budget": budget},
        notes="upper side only: cc_upper(0,x)/||x||; the lower constant is not certifiable from upper bounds",
        witness={"x": pts[i].tolist(), "ratio": float(ratios[i])},
    )

"""Numerical differentiability probes for Lipschitz functions on a Carnot group.

Functions are :class:`ScalarField` oracles evaluated on float arrays of
exponential coordinates. Every distance used here is the homogeneous norm
``rho(a, b) = ||a^{-1} b||``; reports record this as ``metric``.

Limits ``t -> 0`` are read off a ladder of dyadic scales. A ladder is called
convergent when its quotients contract and both one-sided limits agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .algebra import LieVector, StratifiedAlgebra, preset
from .group import (
    GroupPoint,
    batch_bch,
    batch_dilate,
    batch_distance,
    batch_exp_step,
    batch_hom_norm,
    sample_ball,
    sample_unit_sphere,
)

METRIC = "hom_norm"
DEFAULT_SCALES = (2.0 ** -6, 2.0 ** -7, 2.0 ** -8, 2.0 ** -9)
DEFAULT_TOL = 1e-6


class NonConvergent(ArithmeticError):
    """A limit required by a probe did not converge on its ladder."""


class IncompatibleSamples(ValueError):
    """McShane samples violate the Lipschitz bound for the given constant."""


@dataclass(frozen=True)
class ScalarField:
    """``f: G -> R`` evaluated on arrays of shape ``(..., n)``."""

    func: Callable[[np.ndarray], np.ndarray]
    algebra: StratifiedAlgebra
    lipschitz: float | None = None
    provenance: str = "user"
    name: str = ""

    def __call__(self, x) -> np.ndarray | float:
        if isinstance(x, GroupPoint):
            return float(self.func(x.to_array()[None, :])[0])
        arr = np.asarray(x, dtype=float)
        if arr.shape[-1] != self.algebra.dim:
            raise ValueError(f"expected points of dimension {self.algebra.dim}")
        if arr.ndim == 1:
            return float(self.func(arr[None, :])[0])
        return np.asarray(self.func(arr), dtype=float)


def _point_array(x, alg: StratifiedAlgebra) -> np.ndarray:
    arr = x.to_array() if isinstance(x, GroupPoint) else np.asarray(x, dtype=float)
    if arr.shape != (alg.dim,):
        raise ValueError(f"expected a point of dimension {alg.dim}")
    return arr


def _direction_array(e, alg: StratifiedAlgebra) -> np.ndarray:
    if isinstance(e, LieVector):
        if not e.is_horizontal():
            raise ValueError(f"direction {e.coeffs} is not in V_1")
        return e.to_array()
    arr = np.asarray(e, dtype=float)
    if arr.shape == (alg.rank,):
        out = np.zeros(alg.dim)
        out[: alg.rank] = arr
        return out
    if arr.shape == (alg.dim,) and not np.any(arr[alg.rank:]):
        return arr
    raise ValueError("direction must be a first-layer vector")


def _check_scales(scales) -> tuple[float, ...]:
    scales = tuple(float(s) for s in scales)
    if any(s <= 0 for s in scales):
        raise ValueError("scales must be positive")
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly decreasing")
    return scales


# --- directional derivatives -----------------------------------------------------

def _richardson(values: Sequence[float], scales: Sequence[float], powers: Sequence[int]) -> tuple[float, float]:
    """Neville-style elimination of the error terms ``h**p`` for ``p`` in ``powers``.

    Returns the most extrapolated value and the last change, used as an error
    estimate.
    """
    rows = [list(values)]
    h = np.asarray(scales)
    for level, p in enumerate(powers[: len(values) - 1], start=1):
        prev = rows[-1]
        cur = []
        for k in range(len(prev) - 1):
            ratio = (h[k] / h[k + level]) ** p
            cur.append((ratio * prev[k + 1] - prev[k]) / (ratio - 1.0))
        rows.append(cur)
    best = rows[-1][0]
    below = rows[-2]
    err = abs(best - below[-1]) if len(rows) > 1 else math.inf
    return float(best), float(err)


def _contracts(values: Sequence[float], tol: float) -> bool:
    deltas = np.abs(np.diff(values))
    if np.all(deltas <= tol):
        return True
    return bool(np.all(deltas[1:] <= deltas[:-1] * (1.0 + 1e-9) + 1e-15))


@dataclass
class DerivativeEstimate:
    value: float
    plus: float
    minus: float
    error: float
    converged: bool
    plus_converged: bool
    minus_converged: bool
    scales: tuple[float, ...]
    forward: tuple[float, ...]
    backward: tuple[float, ...]
    lipschitz_ok: bool | None = None

    @property
    def centered(self) -> tuple[float, ...]:
        return tuple(0.5 * (a + b) for a, b in zip(self.forward, self.backward))

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "plus": self.plus,
            "minus": self.minus,
            "error": self.error,
            "converged": self.converged,
            "plus_converged": self.plus_converged,
            "minus_converged": self.minus_converged,
            "scales": list(self.scales),
            "forward": list(self.forward),
            "backward": list(self.backward),
            "lipschitz_ok": self.lipschitz_ok,
        }


def directional_derivative(
    f: ScalarField,
    x,
    e,
    scales: Sequence[float] = DEFAULT_SCALES,
    tol: float = DEFAULT_TOL,
) -> DerivativeEstimate:
    """Estimate ``Ef(x) = lim (f(x exp(tE)) - f(x)) / t``.

    Forward (``t -> 0+``) and backward (``t -> 0-``) quotients are
    extrapolated separately (error series in ``t``), the centered quotient with
    an error series in ``t**2``. The two-sided estimate converges when both
    one-sided ladders contract, their limits agree within ``tol`` and the
    extrapolation error is below ``tol``.
    """
    alg = f.algebra
    scales = _check_scales(scales)
    if len(scales) < 2:
        raise ValueError("a ladder needs at least two scales")
    x0 = _point_array(x, alg)
    e = _direction_array(e, alg)
    t = np.asarray(scales)
    fx = f(x0)
    fwd = (f(batch_exp_step(alg, x0, t, e)) - fx) / t
    bwd = (f(batch_exp_step(alg, x0, -t, e)) - fx) / (-t)
    k = len(scales)
    plus, err_p = _richardson(fwd, t, list(range(1, k)))
    minus, err_m = _richardson(bwd, t, list(range(1, k)))
    centered = 0.5 * (fwd + bwd)
    value, err_c = _richardson(centered, t, list(range(2, 2 * k, 2)))
    plus_ok = _contracts(fwd, tol) and err_p <= tol
    minus_ok = _contracts(bwd, tol) and err_m <= tol
    converged = plus_ok and minus_ok and abs(plus - minus) <= tol and err_c <= tol
    lip_ok = None
    if f.lipschitz is not None:
        bound = f.lipschitz * float(np.linalg.norm(e[: alg.rank])) * (1.0 + 1e-9) + 1e-12
        lip_ok = bool(np.all(np.abs(fwd) <= bound) and np.all(np.abs(bwd) <= bound))
    return DerivativeEstimate(
        value=value,
        plus=plus,
        minus=minus,
        error=max(err_c, abs(plus - minus)),
        converged=converged,
        plus_converged=plus_ok,
        minus_converged=minus_ok,
        scales=scales,
        forward=tuple(float(v) for v in fwd),
        backward=tuple(float(v) for v in bwd),
        lipschitz_ok=lip_ok,
    )


@dataclass
class GradientEstimate:
    vector: tuple[float, ...]
    converged: tuple[bool, ...]
    components: tuple[DerivativeEstimate, ...]

    @property
    def all_converged(self) -> bool:
        return all(self.converged)

    def to_dict(self) -> dict:
        return {
            "gradient": list(self.vector),
            "converged": list(self.converged),
            "components": [c.to_dict() for c in self.components],
        }


def horizontal_gradient(f: ScalarField, x, scales: Sequence[float] = DEFAULT_SCALES, tol: float = DEFAULT_TOL) -> GradientEstimate:
    """``(X_1 f(x), ..., X_m f(x))`` with a convergence flag per component."""
    alg = f.algebra
    comps = []
    for j in range(alg.rank):
        e = np.zeros(alg.dim)
        e[j] = 1.0
        comps.append(directional_derivative(f, x, e, scales, tol))
    return GradientEstimate(
        vector=tuple(c.value for c in comps),
        converged=tuple(c.converged for c in comps),
        components=tuple(comps),
    )


@dataclass
class LinearityDefect:
    value: float
    error: float
    reading: str
    derivatives: dict

    def __float__(self) -> float:
        return self.value

    def to_dict(self) -> dict:
        return {"defect": self.value, "error": self.error, "reading": self.reading, "derivatives": self.derivatives}


def linearity_defect(
    f: ScalarField,
    x,
    u,
    v,
    scales: Sequence[float] = DEFAULT_SCALES,
    tol: float = DEFAULT_TOL,
    reading: str = "two-sided",
) -> LinearityDefect:
    """``|(U+V)f(x) - Uf(x) - Vf(x)|``.

    ``reading="two-sided"`` uses the two-sided limits; ``"one-sided"`` uses
    only ``t -> 0+``. Raises :class:`NonConvergent` if a needed limit fails.
    """
    if reading not in ("two-sided", "one-sided"):
        raise ValueError("reading must be 'two-sided' or 'one-sided'")
    alg = f.algebra
    du, dv = _direction_array(u, alg), _direction_array(v, alg)
    ests = {name: directional_derivative(f, x, d, scales, tol) for name, d in (("U", du), ("V", dv), ("U+V", du + dv))}
    vals, errs = {}, {}
    for name, est in ests.items():
        if reading == "two-sided":
            if not est.converged:
                raise NonConvergent(f"two-sided derivative along {name} did not converge (plus {est.plus}, minus {est.minus})")
            vals[name], errs[name] = est.value, est.error
        else:
            if not est.plus_converged:
                raise NonConvergent(f"one-sided derivative along {name} did not converge")
            vals[name] = est.plus
            errs[name] = abs(est.forward[-1] - est.forward[-2])
    return LinearityDefect(
        value=abs(vals["U+V"] - vals["U"] - vals["V"]),
        error=sum(errs.values()),
        reading=reading,
        derivatives={k: est.to_dict() for k, est in ests.items()},
    )


# --- scale probes ------------------------------------------------------------------

@dataclass
class ProbeReport:
    kind: str
    point: tuple[float, ...]
    params: dict
    scales: tuple[float, ...]
    defects: tuple[float, ...]
    verdict: dict
    metric: str = METRIC
    notes: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_scales(self.scales)
        if any(not d >= 0 for d in self.defects):
            raise ValueError("defects must be non-negative")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "point": list(self.point),
            "params": self.params,
            "scales": list(self.scales),
            "defects": list(self.defects),
            "verdict": self.verdict,
            "metric": self.metric,
            "notes": self.notes,
            **self.extra,
        }


def _as_dirs(alg: StratifiedAlgebra, dirs) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(dirs, dtype=float))
    if arr.shape[-1] != alg.dim:
        raise ValueError(f"directions must have dimension {alg.dim}")
    return arr


def regularity_defect(
    f: ScalarField,
    x,
    e,
    scales: Sequence[float] = (2.0 ** -2, 2.0 ** -4, 2.0 ** -6, 2.0 ** -8),
    samples: int = 64,
    seed: int = 0,
    extra_u=None,
    threshold: float = 1e-3,
    derivative: DerivativeEstimate | None = None,
) -> ProbeReport:
    """Sup over ``u`` of ``|(f(x d_t(u) exp(tE)) - f(x d_t(u))) / t - Ef(x)|`` per scale ``t``.

    ``u`` is drawn from the hom-norm unit ball (standing in for ``d(u) <= 1``),
    plus any ``extra_u``. Verdict ``irregular_evidence`` when the sup stays
    above ``threshold`` at every scale and does not halve across the ladder.
    """
    alg = f.algebra
    scales = _check_scales(scales)
    x0 = _point_array(x, alg)
    ev = _direction_array(e, alg)
    if derivative is None:
        derivative = directional_derivative(f, x0, ev)
    if not derivative.converged:
        raise NonConvergent("Ef(x) did not converge; the regularity defect is undefined")
    rng = np.random.default_rng(seed)
    us = sample_ball(alg, rng, samples)
    if extra_u is not None:
        us = np.vstack([us, _as_dirs(alg, extra_u)])
    defects = []
    for t in scales:
        base = batch_bch(alg, x0, batch_dilate(alg, np.full(len(us), t), us))
        moved = batch_exp_step(alg, base, np.full(len(us), t), ev)
        q = (f(moved) - f(base)) / t
        defects.append(float(np.max(np.abs(q - derivative.value))))
    irregular = all(d > threshold for d in defects) and defects[-1] > 0.5 * defects[0]
    return ProbeReport(
        kind="regularity",
        point=tuple(float(c) for c in x0),
        params={"E": ev[: alg.rank].tolist(), "samples": samples, "seed": seed, "threshold": threshold,
                "extra_u": None if extra_u is None else _as_dirs(alg, extra_u).tolist(), "Ef": derivative.value},
        scales=scales,
        defects=tuple(defects),
        verdict={"irregular_evidence": irregular},
        notes="u sampled from the hom-norm unit ball in place of d(u) <= 1",
    )


def pansu_quotient(
    f: ScalarField,
    x,
    scales: Sequence[float] = (2.0 ** -2, 2.0 ** -3, 2.0 ** -4, 2.0 ** -5),
    samples: int = 64,
    seed: int = 0,
    directions=None,
    tol: float = DEFAULT_TOL,
    gradient: GradientEstimate | None = None,
) -> ProbeReport:
    """Sup over ``h`` with ``||h|| = r`` of ``|f(xh) - f(x) - <p(h), grad_H f(x)>| / ||h||`` per ``r``.

    ``h = d_r(u)`` for a fixed set of unit-sphere directions ``u`` (random or
    given), so successive scales probe the same rays. Verdict
    ``differentiable_evidence`` iff the residual is non-increasing and either
    reaches ``tol`` or contracts by at least a quarter across the ladder.
    """
    alg = f.algebra
    scales = _check_scales(scales)
    x0 = _point_array(x, alg)
    if gradient is None:
        gradient = horizontal_gradient(f, x0, tol=tol)
    if not gradient.all_converged:
        raise NonConvergent(f"horizontal gradient did not converge: {gradient.converged}")
    grad = np.asarray(gradient.vector)
    if directions is None:
        us = sample_unit_sphere(alg, np.random.default_rng(seed), samples)
    else:
        us = _as_dirs(alg, directions)
        norms = batch_hom_norm(alg, us)
        if np.any(norms == 0):
            raise ValueError("directions must be nonzero")
        us = batch_dilate(alg, 1.0 / norms, us)
    fx = f(x0)
    defects = []
    for r in scales:
        h = batch_dilate(alg, np.full(len(us), r), us)
        resid = np.abs(f(batch_bch(alg, x0, h)) - fx - h[:, : alg.rank] @ grad)
        defects.append(float(np.max(resid / batch_hom_norm(alg, h))))
    d = np.asarray(defects)
    monotone = bool(np.all(d[1:] <= d[:-1] * (1.0 + 1e-9) + 1e-15))
    reaches = bool(d[-1] <= tol)
    contracts = bool(d[-1] <= 0.75 * d[0])
    return ProbeReport(
        kind="pansu",
        point=tuple(float(c) for c in x0),
        params={"samples": len(us), "seed": seed, "tol": tol, "directions": None if directions is None else us.tolist()},
        scales=scales,
        defects=tuple(defects),
        verdict={
            "differentiable_evidence": monotone and (reaches or contracts),
            "monotone": monotone,
            "below_tol": reaches,
        },
        notes="candidate map L(h) = <p(h), grad_H f(x)>",
        extra={"gradient": list(gradient.vector)},
    )


def porosity_probe(
    membership: Callable[[np.ndarray], np.ndarray],
    a,
    algebra: StratifiedAlgebra,
    lambdas: Sequence[float] = (0.05, 0.1, 0.25, 0.5, 0.75, 0.9),
    scales: Sequence[float] = (2.0 ** -1, 2.0 ** -3, 2.0 ** -5, 2.0 ** -7),
    centers: int = 64,
    ball_samples: int = 256,
    seed: int = 0,
) -> ProbeReport:
    """Largest grid ``lambda`` per scale ``r`` with an apparently empty ball.

    Centers ``x = a d_rho(u)`` have ``rho(a, x)`` uniform in ``[r/2, r]``; the
    ball ``B(x, lambda rho(a, x))`` counts as empty when none of its
    ``ball_samples`` points is a member. Monte-Carlo only: an empty verdict
    is not a certificate, and sets of measure zero are never hit by samples.
    ``membership`` maps arrays ``(..., n)`` to booleans. Scales with no
    passing ``lambda`` report 0.
    """
    alg = algebra
    scales = _check_scales(scales)
    lambdas = sorted(float(l) for l in lambdas)
    a0 = _point_array(a, alg)
    if not bool(np.asarray(membership(a0[None, :]))[0]):
        raise ValueError("the base point must belong to the set")
    rng = np.random.default_rng(seed)
    best = []
    for r in scales:
        u = sample_unit_sphere(alg, rng, centers)
        rho = rng.uniform(0.5 * r, r, centers)
        x = batch_bch(alg, a0, batch_dilate(alg, rho, u))
        offsets = sample_ball(alg, rng, centers * ball_samples).reshape(centers, ball_samples, alg.dim)
        found = 0.0
        for lam in lambdas:
            radius = np.repeat((lam * rho)[:, None], ball_samples, axis=1)
            z = batch_bch(alg, x[:, None, :], batch_dilate(alg, radius, offsets))
            hit = np.asarray(membership(z), dtype=bool).any(axis=1)
            if not np.all(hit):
                found = lam
        best.append(found)
    return ProbeReport(
        kind="porosity",
        point=tuple(float(c) for c in a0),
        params={"lambdas": lambdas, "centers": centers, "ball_samples": ball_samples, "seed": seed},
        scales=scales,
        defects=tuple(best),
        verdict={"porous_evidence": all(b > 0 for b in best), "certifying": False},
        notes="Monte-Carlo, non-certifying: defects are the largest lambda with a sampled-empty ball",
    )


# --- membership in the exceptional sets -------------------------------------------

@dataclass
class MembershipResult:
    member: bool
    ugood: bool
    vgood: bool
    uvbad: bool
    witness_t: float | None
    c2: float
    grid: tuple[float, ...]
    ugood_mask: tuple[bool, ...]
    vgood_mask: tuple[bool, ...]
    uvbad_mask: tuple[bool, ...]

    def to_dict(self) -> dict:
        return {
            "member": self.member,
            "ugood": self.ugood,
            "vgood": self.vgood,
            "uvbad": self.uvbad,
            "witness_t": self.witness_t,
            "C2_surrogate": self.c2,
            "grid": list(self.grid),
        }


def split_constant_surrogate(alg: StratifiedAlgebra, u: np.ndarray, v: np.ndarray) -> float:
    """``max(N, max |rho_i|)`` of the exact splitting word for ``(U, V)``."""
    from fractions import Fraction

    from .decompose import split_sum

    uu = alg.horizontal([Fraction(c) for c in u[: alg.rank]])
    vv = alg.horizontal([Fraction(c) for c in v[: alg.rank]])
    word = split_sum(uu, vv)
    return float(max(len(word), word.max_abs_time()))


def membership_A(
    f: ScalarField,
    x,
    u,
    v,
    y: float,
    z: float,
    eps: float,
    delta: float,
    grid: Sequence[float] | None = None,
    one_sided: bool = False,
    c2: float | None = None,
) -> MembershipResult:
    """Test ``x`` against the set ``A(U, V, y, z, eps, delta)`` on a grid of ``t``.

    (Ugood) ``|f(x exp(tU)) - f(x) - ty| <= eps |t|`` and (Vgood), the same
    with ``V, z``, must hold at every grid ``t`` with ``0 < |t| < delta``.
    (UVbad) ``|f(x exp(t(U+V))) - f(x) - t(y+z)| > 2 eps C2 |t|`` must hold
    at some grid ``t`` below every grid scale, i.e. at the finest one.
    ``C2`` defaults to the splitting-word surrogate. The grid defaults to
    ``delta * 2**-k`` for ``k = 1..24``; ``one_sided`` drops negative ``t``.
    """
    alg = f.algebra
    if eps <= 0 or delta <= 0:
        raise ValueError("eps and delta must be positive")
    x0 = _point_array(x, alg)
    du, dv = _direction_array(u, alg), _direction_array(v, alg)
    ts = np.asarray(sorted((float(t) for t in grid), reverse=True) if grid is not None else delta * 2.0 ** -np.arange(1, 25))
    if np.any(ts <= 0) or np.any(ts >= delta):
        raise ValueError("grid values must lie in (0, delta)")
    if c2 is None:
        c2 = split_constant_surrogate(alg, du, dv)
    signs = (1.0,) if one_sided else (1.0, -1.0)
    fx = f(x0)

    def excess(d, slope, bound):
        out = []
        for sg in signs:
            t = sg * ts
            val = np.abs(f(batch_exp_step(alg, x0, t, d)) - fx - t * slope)
            out.append(val - bound * np.abs(t))
        return np.stack(out)

    ug = np.all(excess(du, y, eps) <= 0, axis=0)
    vg = np.all(excess(dv, z, eps) <= 0, axis=0)
    bad = np.any(excess(du + dv, y + z, 2 * eps * c2) > 0, axis=0)
    # bad somewhere below each grid scale <=> bad in every suffix
    suffix = np.flip(np.logical_or.accumulate(np.flip(bad)))
    uvbad = bool(np.all(suffix))
    ugood, vgood = bool(np.all(ug)), bool(np.all(vg))
    witness = float(ts[np.nonzero(bad)[0][-1]]) if bad.any() else None
    return MembershipResult(
        member=ugood and vgood and uvbad,
        ugood=ugood,
        vgood=vgood,
        uvbad=uvbad,
        witness_t=witness,
        c2=float(c2),
        grid=tuple(float(t) for t in ts),
        ugood_mask=tuple(bool(b) for b in ug),
        vgood_mask=tuple(bool(b) for b in vg),
        uvbad_mask=tuple(bool(b) for b in bad),
    )


# --- McShane extension ---------------------------------------------------------------

def _pair_blocks(alg: StratifiedAlgebra, pts: np.ndarray, vals: np.ndarray, chunk: int):
    """Yield ``(i0, |f_i - f_j|, rho(p_i, p_j))`` for row blocks ``i0:i0+chunk``
    against columns ``j >= i0``; ``rho`` is symmetric so that covers every pair.
    """
    for i0 in range(0, len(pts), chunk):
        d = batch_distance(alg, pts[i0:i0 + chunk, None, :], pts[None, i0:, :])
        df = np.abs(vals[i0:i0 + chunk, None] - vals[None, i0:])
        if np.any((d == 0) & (df > 0)):
            i, j = np.argwhere((d == 0) & (df > 0))[0]
            raise IncompatibleSamples(f"samples {i0 + i} and {i0 + j} coincide with different values")
        yield i0, df, d


def min_lipschitz(alg: StratifiedAlgebra, pts: np.ndarray, vals: np.ndarray, chunk: int = 512) -> float:
    """Smallest ``L`` with ``|f(a) - f(b)| <= L rho(a, b)`` on the samples."""
    best = 0.0
    for _, df, d in _pair_blocks(alg, pts, vals, chunk):
        r = np.divide(df, d, out=np.zeros_like(df), where=d > 0)
        best = max(best, float(r.max()))
    return best


def mcshane_extend(
    points,
    values,
    algebra: StratifiedAlgebra,
    lipschitz: float | None = None,
    validate: bool = True,
    chunk: int = 512,
    name: str = "mcshane",
) -> ScalarField:
    """``F(x) = min_a (f(a) + L rho(x, a))`` over the samples.

    With ``lipschitz=None`` the smallest compatible ``L`` is computed. With a
    given ``L`` the samples are checked pairwise; a violation raises
    :class:`IncompatibleSamples` naming the pair.
    """
    alg = algebra
    pts = np.asarray([p.to_array() if isinstance(p, GroupPoint) else p for p in points], dtype=float)
    vals = np.asarray(values, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != alg.dim or len(vals) != len(pts) or len(pts) == 0:
        raise ValueError("need a non-empty (N, n) point array and N values")
    if lipschitz is None:
        L = min_lipschitz(alg, pts, vals, chunk)
    else:
        L = float(lipschitz)
        if L < 0:
            raise ValueError("Lipschitz constant must be non-negative")
        if validate:
            for i0, df, d in _pair_blocks(alg, pts, vals, chunk):
                bad = df - L * d > 1e-12 * (1.0 + np.abs(vals[i0:i0 + len(df), None]) + np.abs(vals[None, i0:]))
                if bad.any():
                    i, j = np.argwhere(bad)[0]
                    raise IncompatibleSamples(
                        f"samples {i0 + i} and {i0 + j} violate L={L}: |df| = {df[i, j]!r}, rho = {d[i, j]!r}"
                    )

    def func(x: np.ndarray) -> np.ndarray:
        flat = x.reshape(-1, alg.dim)
        out = np.empty(len(flat))
        step = max(1, (1 << 20) // len(pts))
        for q0 in range(0, len(flat), step):
            q = flat[q0:q0 + step]
            d = batch_distance(alg, pts[None, :, :], q[:, None, :])
            out[q0:q0 + step] = np.min(vals[None, :] + L * d, axis=1)
        return out.reshape(x.shape[:-1])

    return ScalarField(func, alg, lipschitz=L, provenance="mcshane", name=name)


# --- corpus ---------------------------------------------------------------------------------

def heisenberg_sample_set(rays: int = 64, radii: int = 120, vertical: int = 600) -> tuple[np.ndarray, np.ndarray]:
    """Samples of ``A = (R^2 x {0}) u ({0} x R)`` in the Heisenberg group with the
    values ``f(x, y, 0) = 0`` and ``f(0, 0, t) = sqrt|t|``.

    Planar points sit on ``rays`` equally spaced rays (``rays`` divisible by
    8, so the diagonal and axis directions are rays) at log-spaced radii and
    every dyadic radius ``2**-k``, ``k = 0..24``. Vertical points use
    log-spaced heights, ``+-t**2`` for ``t = 10**-k`` and dyadic heights.
    """
    if rays % 8:
        raise ValueError("rays must be divisible by 8")
    rad = np.unique(np.concatenate([np.logspace(-6, 1, radii), 2.0 ** -np.arange(25)]))
    ang = 2 * np.pi * np.arange(rays) / rays
    c, s = np.cos(ang), np.sin(ang)
    # exact axis values avoid cos(pi/2) round-off
    c[np.isclose(c, 0, atol=1e-15)] = 0.0
    s[np.isclose(s, 0, atol=1e-15)] = 0.0
    planar = np.stack(
        [np.outer(rad, c).ravel(), np.outer(rad, s).ravel(), np.zeros(rad.size * rays)], axis=1
    )
    heights = np.concatenate([
        np.logspace(-12, 2, vertical),
        (10.0 ** -np.arange(1, 7)) ** 2,
        2.0 ** -np.arange(0, 40),
    ])
    heights = np.unique(np.concatenate([heights, -heights]))
    vert = np.stack([np.zeros(heights.size), np.zeros(heights.size), heights], axis=1)
    pts = np.vstack([np.zeros((1, 3)), planar, vert])
    vals = np.concatenate([[0.0], np.zeros(len(planar)), np.sqrt(np.abs(heights))])
    return pts, vals


@lru_cache(maxsize=4)
def _heis_sqrt(rays: int, radii: int, vertical: int, validate: bool) -> ScalarField:
    pts, vals = heisenberg_sample_set(rays, radii, vertical)
    return mcshane_extend(pts, vals, preset("heisenberg", 1), lipschitz=1.0, validate=validate, name="heis-sqrt")


def corpus(name: str, algebra: StratifiedAlgebra | None = None, **params) -> ScalarField:
    """Builtin fields.

    * ``min2``: ``min(x_1, x_2)`` on ``abelian(2)``.
    * ``heis-sqrt``: McShane extension (``L = 1``) of ``0`` on the plane and
      ``sqrt|t|`` on the vertical axis of ``heisenberg(1)``.
    * ``linear-v``: ``<p(x), v>``, group-linear; ``v`` defaults to ``(1, 2)``.
    * ``x1``, ``square`` (``x_1^2``), ``product`` (``x_1 x_2``) and
      ``quadratic`` (``x_1^2 + x_1 x_2``): functions of ``p(x)``.
    """
    if name == "min2":
        alg = algebra or preset("abelian", 2)
        return ScalarField(lambda x: np.minimum(x[..., 0], x[..., 1]), alg, 1.0, "builtin", name)
    if name == "heis-sqrt":
        if algebra is not None and algebra != preset("heisenberg", 1):
            raise ValueError("heis-sqrt lives on heisenberg(1)")
        return _heis_sqrt(params.get("rays", 64), params.get("radii", 120), params.get("vertical", 600),
                          params.get("validate", True))
    alg = algebra or preset("heisenberg", 1)
    if name == "linear-v":
        v = np.asarray(params.get("v", (1.0, 2.0)), dtype=float)
        if v.shape != (alg.rank,):
            raise ValueError(f"v must have {alg.rank} entries")
        return ScalarField(lambda x: x[..., : alg.rank] @ v, alg, float(np.linalg.norm(v)), "builtin", name)
    if name == "x1":
        return ScalarField(lambda x: x[..., 0], alg, 1.0, "builtin", name)
    if alg.rank < 2 and name in ("product", "quadratic"):
        raise ValueError(f"{name} needs a first layer of dimension >= 2")
    smooth = {
        "square": lambda x: x[..., 0] ** 2,
        "product": lambda x: x[..., 0] * x[..., 1],
        "quadratic": lambda x: x[..., 0] ** 2 + x[..., 0] * x[..., 1],
    }
    if name in smooth:
        return ScalarField(smooth[name], alg, None, "builtin", name)
    raise KeyError(f"unknown corpus field {name!r}; known: {', '.join(CORPUS)}")


CORPUS = ("min2", "heis-sqrt", "linear-v", "x1", "square", "product", "quadratic")

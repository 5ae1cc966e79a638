"""The acceptance criteria as runnable checks.

Each criterion returns a :class:`CriterionResult` with the measured value,
the threshold it is compared against and a pass flag. Suites group the
criteria; results are always ordered by criterion id.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .algebra import StratifiedAlgebra, preset, validate
from .analysis import (
    corpus,
    directional_derivative,
    linearity_defect,
    membership_A,
    pansu_quotient,
    porosity_probe,
)
from .decompose import basis_bracket_table, bracket_word, nested_bracket, path_decompose, split_sum
from .exact import rank
from .group import GroupPoint, batch_dilate, batch_hom_norm, dilate, hom_norm, identity, multiply
from .metric import check_conjugation_bound, check_flow_distance, flow

ALGEBRA_PRESETS = (("abelian", 3), ("heisenberg", 1), ("heisenberg", 2), ("free_step2", 3), ("engel", None))


@dataclass
class CriterionResult:
    id: int
    name: str
    measured: object
    threshold: object
    passed: bool
    details: dict = field(default_factory=dict)
    runtime_limit: float | None = None
    runtime: float | None = None

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] criterion {self.id}: {self.name} (measured {self.measured}, threshold {self.threshold})"

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "id": self.id,
            "name": self.name,
            "measured": self.measured,
            "threshold": self.threshold,
            "passed": self.passed,
            "details": self.details,
            "runtime_limit_s": self.runtime_limit,
        }
        if timing:
            out["runtime_s"] = self.runtime
        return out


def presets() -> list[StratifiedAlgebra]:
    return [preset(n, p) for n, p in ALGEBRA_PRESETS]


def random_rational(rng: np.random.Generator, num: int = 20, den: int = 9) -> Fraction:
    return Fraction(int(rng.integers(-num, num + 1)), int(rng.integers(1, den + 1)))


def random_point(alg: StratifiedAlgebra, rng: np.random.Generator) -> GroupPoint:
    return GroupPoint(alg, tuple(random_rational(rng) for _ in range(alg.dim)))


def random_horizontal(alg: StratifiedAlgebra, rng: np.random.Generator):
    return alg.horizontal([random_rational(rng) for _ in range(alg.rank)])


def _timed(limit: float | None):
    def wrap(fn):
        def run(seed: int) -> CriterionResult:
            t0 = time.perf_counter()
            res = fn(seed)
            res.runtime = time.perf_counter() - t0
            res.runtime_limit = limit
            if limit is not None and res.runtime > limit:
                res.passed = False
                res.details["runtime_exceeded"] = True
            return res

        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


# --- algebra ---------------------------------------------------------------------

@_timed(10.0)
def criterion_1(seed: int) -> CriterionResult:
    """Exact group law on H^1 against the closed formula; associativity on every preset."""
    rng = np.random.default_rng(seed)
    h1 = preset("heisenberg", 1)
    formula_bad = 0
    for _ in range(1000):
        p, q = random_point(h1, rng), random_point(h1, rng)
        (x, y, t), (x2, y2, t2) = p.coords, q.coords
        want = (x + x2, y + y2, t + t2 + Fraction(1, 2) * (x * y2 - x2 * y))
        formula_bad += multiply(p, q).coords != want
    assoc_bad = {}
    for alg in presets():
        bad = 0
        for _ in range(1000):
            a, b, c = (random_point(alg, rng) for _ in range(3))
            bad += multiply(multiply(a, b), c) != multiply(a, multiply(b, c))
        assoc_bad[alg.name] = bad
    failures = formula_bad + sum(assoc_bad.values())
    return CriterionResult(1, "exact group law and associativity", failures, 0, failures == 0,
                           {"formula_mismatches": formula_bad, "associativity_failures": assoc_bad})


@_timed(None)
def criterion_2(seed: int) -> CriterionResult:
    """Homogeneity of the norm and the H^1 closed form."""
    rng = np.random.default_rng(seed)
    worst = {}
    for alg in presets():
        x = rng.standard_normal((1000, alg.dim)) * rng.uniform(0.01, 10.0, (1000, 1))
        lam = rng.uniform(0.05, 20.0, 1000)
        lhs = batch_hom_norm(alg, batch_dilate(alg, lam, x))
        rhs = lam * batch_hom_norm(alg, x)
        worst[alg.name] = float(np.max(np.abs(lhs - rhs) / rhs))
    h1 = preset("heisenberg", 1)
    x = rng.standard_normal((1000, 3)) * rng.uniform(0.01, 10.0, (1000, 1))
    closed = ((x[:, 0] ** 2 + x[:, 1] ** 2) ** 2 + x[:, 2] ** 2) ** 0.25
    formula_err = float(np.max(np.abs(batch_hom_norm(h1, x) - closed) / closed))
    anchor = hom_norm(GroupPoint(h1, (Fraction(0), Fraction(0), Fraction(1))))
    measured = max(max(worst.values()), formula_err)
    ok = max(worst.values()) <= 1e-12 and formula_err <= 8 * np.finfo(float).eps and anchor == 1.0
    return CriterionResult(2, "norm homogeneity and H^1 closed form", measured, 1e-12, ok,
                           {"homogeneity_rel_err": worst, "closed_form_rel_err": formula_err,
                            "closed_form_tol": 8 * float(np.finfo(float).eps), "norm_of_(0,0,1)": anchor})


# --- lemmas ----------------------------------------------------------------------

@_timed(30.0)
def criterion_3(seed: int) -> CriterionResult:
    """split_sum is exact with a constant word length."""
    rng = np.random.default_rng(seed)
    bad = 0
    lengths = {}
    rho = {}
    for alg in presets():
        ns = set()
        rmax = Fraction(0)
        for _ in range(100):
            u, v = random_horizontal(alg, rng), random_horizontal(alg, rng)
            w = split_sum(u, v)
            bad += flow(identity(alg), w).coords != (u + v).coeffs
            if rank([u.coeffs[: alg.rank], v.coeffs[: alg.rank]]) == 2:
                ns.add(len(w))
            rmax = max(rmax, w.max_abs_time())
        lengths[alg.name] = sorted(ns)
        rho[alg.name] = rmax
    h1 = preset("heisenberg", 1)
    x1, x2 = h1.basis(0), h1.basis(1)
    w = split_sum(x1, x2)
    half = Fraction(1, 2)
    anchor = [(t, tuple(e.coeffs[:2])) for t, e in w.steps] == [
        (1, (1, 0)), (1, (0, 1)), (-half, (1, 0)), (1, (0, 1)), (half, (1, 0)), (-1, (0, 1))
    ] and flow(identity(h1), w).coords == (1, 1, 0)
    # dependent draws take the short degenerate path and are left out of N
    const = all(len(ns) == 1 for ns in lengths.values())
    ok = bad == 0 and anchor and const
    return CriterionResult(3, "splitting word exact, N constant", bad, 0, ok,
                           {"N_per_preset": lengths, "max_abs_rho": rho, "h1_six_step_word": anchor})


@_timed(30.0)
def criterion_4(seed: int) -> CriterionResult:
    """path_decompose is exact and commutes with dilations."""
    rng = np.random.default_rng(seed)
    bad_exact = 0
    bad_scale = 0
    worst_ratio_drift = 0.0
    ratios = {}
    for alg in presets():
        rmax = 0.0
        for _ in range(100):
            h = random_point(alg, rng)
            w = path_decompose(h)
            bad_exact += flow(identity(alg), w) != h
            if h.is_identity():
                continue
            total = w.total_time()
            ratio = float(total) / hom_norm(h)
            rmax = max(rmax, ratio)
            for lam in (Fraction(1, 2), Fraction(2), Fraction(5)):
                hl = dilate(lam, h)
                wl = path_decompose(hl)
                bad_scale += wl.total_time() != lam * total or flow(identity(alg), wl) != hl
                worst_ratio_drift = max(worst_ratio_drift, abs(float(wl.total_time()) / hom_norm(hl) - ratio) / ratio)
        ratios[alg.name] = rmax
    h1 = preset("heisenberg", 1)
    h = GroupPoint(h1, (Fraction(0), Fraction(0), Fraction(1)))
    w = path_decompose(h)
    anchor = w.total_time() / Fraction(hom_norm(h)) if hom_norm(h) == 1.0 else None
    ok = bad_exact == 0 and bad_scale == 0 and anchor == 4 and len(w) == 4
    return CriterionResult(4, "path decomposition exact and homogeneous", bad_exact + bad_scale, 0, ok,
                           {"exactness_failures": bad_exact, "scaling_failures": bad_scale,
                            "float_ratio_drift": worst_ratio_drift, "max_sum_t_over_norm": ratios,
                            "h1_vertical_ratio": anchor})


@_timed(None)
def criterion_5(seed: int) -> CriterionResult:
    """Top-layer table brackets are reproduced by commutator words."""
    checked = {}
    bad = 0
    for alg in (preset("heisenberg", 1), preset("engel")):
        table = basis_bracket_table(alg)
        top = alg.layer_slice(alg.step)
        for k in range(top.start, top.stop):
            for coef, entries in table[k]:
                vecs = [alg.basis(e) for e in entries]
                w = bracket_word(vecs)
                end = flow(identity(alg), w)
                bad += end.coords != nested_bracket(vecs).coeffs
                checked[f"{alg.name}:X{k + 1}"] = {"entries": [e + 1 for e in entries], "coefficient": coef,
                                                   "steps": len(w), "endpoint": list(end.coords)}
    h1_ok = checked.get("heisenberg(1):X3", {}).get("endpoint") == [0, 0, 1]
    engel_ok = checked.get("engel:X4", {}).get("endpoint") == [0, 0, 0, 1]
    ok = bad == 0 and h1_ok and engel_ok
    return CriterionResult(5, "commutator words for table brackets", bad, 0, ok, {"words": checked})


@_timed(None)
def criterion_8(seed: int) -> CriterionResult:
    """Empirical lemma constants are finite and seed-stable on H^1; abelian ratios obey the trivial bound."""
    h1 = preset("heisenberg", 1)
    seeds = [seed + k for k in range(5)]
    conj = [check_conjugation_bound(10_000, h1, seed=s).max_ratio for s in seeds]
    flowd = [check_flow_distance(10_000, h1, seed=s).max_ratio for s in seeds]

    def spread(v):
        return (max(v) - min(v)) / max(v)

    ab = preset("abelian", 3)
    ab_conj = check_conjugation_bound(10_000, ab, seed=seed).max_ratio
    ab_flow = check_flow_distance(10_000, ab, seed=seed).max_ratio
    finite = all(math.isfinite(v) and v > 0 for v in conj + flowd)
    measured = max(spread(conj), spread(flowd))
    ok = finite and measured < 0.10 and ab_conj <= 1.0 and ab_flow <= 1.0
    return CriterionResult(8, "metric lemma constants", measured, 0.10, ok,
                           {"C_per_seed": conj, "C1_per_seed": flowd, "C_spread": spread(conj),
                            "C1_spread": spread(flowd), "abelian_C": ab_conj, "abelian_C1": ab_flow,
                            "seeds": seeds})


# --- counterexamples and controls ----------------------------------------------

@_timed(None)
def criterion_6(seed: int) -> CriterionResult:
    """min(x, y) at the origin."""
    f = corpus("min2")
    d = linearity_defect(f, [0.0, 0.0], [1.0, 0.0], [0.0, 1.0], reading="one-sided")
    m = membership_A(f, [0.0, 0.0], [1.0, 0.0], [0.0, 1.0], 0.0, 0.0, 0.1, 1.0, one_sided=True)
    diag = directional_derivative(f, [0.0, 0.0], [1.0, 1.0])
    ok = abs(d.value - 1.0) <= 1e-6 and m.member
    return CriterionResult(6, "min(x,y) linearity defect and membership", d.value, "1 +- 1e-6", ok,
                           {"one_sided_defect": d.value, "membership_A": m.to_dict(),
                            "derivative_along_(1,1)": diag.value})


@_timed(60.0)
def criterion_7(seed: int) -> CriterionResult:
    """Heisenberg counterexample: zero derivatives, Pansu ratio one."""
    from .analysis import heisenberg_sample_set

    f = corpus("heis-sqrt")
    n_samples = len(heisenberg_sample_set()[0])
    derivs = []
    for k in range(8):
        th = k * math.pi / 4
        e = [math.cos(th), math.sin(th)]
        est = directional_derivative(f, [0.0, 0.0, 0.0], e)
        derivs.append({"angle_over_pi": k / 4, "value": est.value, "converged": est.converged})
    dd_err = max(abs(d["value"]) for d in derivs)
    probe = pansu_quotient(f, [0.0, 0.0, 0.0], scales=(1e-1, 1e-2, 1e-3), directions=[[0.0, 0.0, 1.0]])
    ratio_err = max(abs(r - 1.0) for r in probe.defects)
    ok = (n_samples >= 10_000 and dd_err <= 1e-3 and all(d["converged"] for d in derivs) and ratio_err <= 0.1
          and not probe.verdict["differentiable_evidence"])
    return CriterionResult(7, "Heisenberg sqrt|t| counterexample", {"max_abs_derivative": dd_err, "pansu_ratios": list(probe.defects)},
                           {"derivative": 1e-3, "ratio": "1 +- 0.1"}, ok,
                           {"samples": n_samples, "derivatives": derivs, "pansu": probe.to_dict()})


@_timed(None)
def criterion_9(seed: int) -> CriterionResult:
    """x1^2 + x1 x2 is Pansu differentiable at random points."""
    h1 = preset("heisenberg", 1)
    f = corpus("quadratic", h1)
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((10, 3))
    rows = []
    for x in pts:
        r = pansu_quotient(f, x, seed=seed)
        d = np.asarray(r.defects)
        rows.append({"point": x.tolist(), "residuals": list(r.defects), "verdict": r.verdict["differentiable_evidence"],
                     "strictly_decreasing": bool(np.all(np.diff(d) < 0))})
    ok = all(r["verdict"] and r["strictly_decreasing"] for r in rows)
    return CriterionResult(9, "Pansu differentiability positive control", sum(r["verdict"] for r in rows), 10, ok,
                           {"points": rows})


def _hyperplane_slab(z):
    # dilation-invariant thickening of {x1 = 0}; a literal hyperplane is never sampled
    return np.abs(z[..., 0]) <= 0.01 * np.linalg.norm(z, axis=-1)


def _unit_disc(z):
    return np.linalg.norm(z, axis=-1) < 1.0


@_timed(None)
def criterion_10(seed: int) -> CriterionResult:
    """Porosity probe finds holes beside a hyperplane and none inside a ball."""
    ab = preset("abelian", 2)
    scales = (2.0 ** -1, 2.0 ** -3, 2.0 ** -5, 2.0 ** -7)
    runs = {}
    for s in (seed, seed + 1):
        hyp = porosity_probe(_hyperplane_slab, [0.0, 0.0], ab, scales=scales, seed=s)
        lit = porosity_probe(lambda z: z[..., 0] == 0.0, [0.0, 0.0], ab, scales=scales, seed=s)
        # containment: |x| <= r and ball radius <= 0.9 r stay inside the unit disc for r <= 1/2
        ball = porosity_probe(_unit_disc, [0.0, 0.0], ab, scales=scales, seed=s)
        runs[s] = {
            "hyperplane": list(hyp.defects),
            "hyperplane_literal": list(lit.defects),
            "ball": list(ball.defects),
            "verdicts": (all(v >= 0.5 for v in hyp.defects), all(v == 0 for v in ball.defects)),
        }
    verdicts = [r["verdicts"] for r in runs.values()]
    stable = all(v == verdicts[0] for v in verdicts)
    ok = stable and all(verdicts[0])
    first = runs[seed]
    return CriterionResult(10, "porosity probe sanity", {"hyperplane_min_lambda": min(first["hyperplane"]),
                                                         "ball_max_lambda": max(first["ball"])},
                           {"hyperplane": ">= 0.5", "ball": "0"}, ok,
                           {"runs": {str(k): {kk: vv for kk, vv in v.items() if kk != "verdicts"} for k, v in runs.items()},
                            "seed_stable": stable, "scales": list(scales),
                            "note": "Monte-Carlo, non-certifying"})


CRITERIA: dict[int, Callable[[int], CriterionResult]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
}

SUITES = {
    "algebra": (1, 2),
    "lemmas": (3, 4, 5, 8),
    "counterexamples": (6, 7, 9, 10),
    "all": tuple(range(1, 11)),
}


def run_criteria(ids, seed: int = 0, threads: int = 1) -> list[CriterionResult]:
    ids = sorted(set(ids))
    unknown = [i for i in ids if i not in CRITERIA]
    if unknown:
        raise KeyError(f"unknown criteria {unknown}")
    if threads <= 1:
        return [CRITERIA[i](seed) for i in ids]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {i: pool.submit(CRITERIA[i], seed) for i in ids}
        return [futures[i].result() for i in ids]


def suite(name: str, seed: int = 0, threads: int = 1) -> list[CriterionResult]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return run_criteria(SUITES[name], seed, threads)


def summary(results: list[CriterionResult], timing: bool = False) -> dict:
    return {
        "criteria": [r.to_dict(timing) for r in results],
        "passed": all(r.passed for r in results),
        "pass_vector": [r.passed for r in results],
    }


def validate_presets() -> dict:
    return {alg.name: validate(alg).passed for alg in presets()}

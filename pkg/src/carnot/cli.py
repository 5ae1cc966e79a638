"""Command line entry point: ``carnot <command> ...``.

Every command prints one JSON report (``group eval`` prints JSON lines).
Exit codes: 0 pass, 1 failed check, 2 usage or parse error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .acceptance import SUITES, summary, suite as run_suite
from .algebra import validate
from .analysis import (
    CORPUS,
    IncompatibleSamples,
    NonConvergent,
    corpus,
    directional_derivative,
    horizontal_gradient,
    linearity_defect,
    mcshane_extend,
    membership_A,
    pansu_quotient,
    porosity_probe,
    regularity_defect,
)
from .decompose import InvariantViolation, path_decompose, path_report, split_sum
from .exact import TowerMismatch
from .group import hom_norm, identity, inverse, multiply
from .io import ConfigError, dumps, group_hash, group_to_dict, load_group, parse_horizontal, parse_point, read_json
from .metric import cc_upper, check_conjugation_bound, check_flow_distance, estimate_norm_equivalence, flow

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def env_seed() -> int:
    raw = os.environ.get("CARNOT_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"CARNOT_SEED must be an integer, got {raw!r}") from None


def _group_from(cfg: dict):
    if "group" in cfg:
        return load_group(cfg["group"])
    if "preset" in cfg:
        return load_group({k: cfg[k] for k in ("preset", "n", "m", "param") if k in cfg})
    return None


def _field_from(spec, alg):
    """A corpus name or a McShane sample file ``{"L": ..., "samples": [{"point", "value"}]}``."""
    if isinstance(spec, str) and spec in CORPUS:
        return corpus(spec, alg)
    data = read_json(spec)
    if not isinstance(data, dict) or "samples" not in data:
        raise ConfigError(f"field {spec!r} is neither a corpus name ({', '.join(CORPUS)}) nor a sample file")
    falg = load_group(data["group"]) if "group" in data else alg
    if falg is None:
        raise ConfigError("field file needs a group")
    pts = [parse_point(falg, s["point"]).to_array() for s in data["samples"]]
    vals = [float(Fraction(s["value"])) if isinstance(s["value"], str) else float(s["value"]) for s in data["samples"]]
    return mcshane_extend(np.array(pts), vals, falg, lipschitz=data.get("L"), name=str(spec))


def _float_vec(raw, name):
    try:
        return [float(Fraction(v)) if isinstance(v, str) else float(v) for v in raw]
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad {name} {raw!r}") from exc


# --- tasks -------------------------------------------------------------------------------
# each task takes a resolved config dict and returns (result, passed)

def task_validate(cfg, alg, seed):
    rep = validate(alg)
    return rep.to_dict(), rep.passed


def task_eval(cfg, alg, seed):
    pts = [parse_point(alg, p) for p in cfg["points"]]
    rows = []
    acc = identity(alg) if all(p.exact for p in pts) else identity(alg).as_float()
    for i, p in enumerate(pts):
        acc = multiply(acc, p)
        rows.append({"index": i, "point": p, "hom_norm": hom_norm(p), "inverse": inverse(p), "running_product": acc})
    return rows, True


def task_split(cfg, alg, seed):
    u, v = parse_horizontal(alg, cfg["U"]), parse_horizontal(alg, cfg["V"])
    w = split_sum(u, v)
    end = flow(identity(alg), w)
    exact = end.coords == (u + v).coeffs if u.exact and v.exact else None
    ok = exact is not False
    return {"word": w.to_dict(), "N": len(w), "max_abs_rho": w.max_abs_time(), "exact": exact,
            "endpoint": end}, ok


def task_path(cfg, alg, seed):
    h = parse_point(alg, cfg["point"])
    w = path_decompose(h)
    rep = path_report(h, w)
    ok = rep["exact"] is not False
    return {"word": w.to_dict(), **rep}, ok


def task_cc(cfg, alg, seed):
    x = parse_point(alg, cfg.get("x", [0] * alg.dim))
    y = parse_point(alg, cfg["y"])
    b = cc_upper(x, y, segments=cfg.get("segments"), budget=cfg.get("budget", 4), tol=cfg.get("tol", 1e-8), seed=seed)
    return b.to_dict(), True


def task_probe(cfg, alg, seed):
    lemma = cfg["lemma"]
    n = int(cfg.get("samples", 10_000))
    if lemma == "conjugation":
        rep = check_conjugation_bound(n, alg, seed=seed)
    elif lemma == "flow-distance":
        rep = check_flow_distance(n, alg, seed=seed, lam=cfg.get("lambda"))
    elif lemma == "equivalence":
        rep = estimate_norm_equivalence(n, alg, segments=cfg.get("segments"), seed=seed, budget=cfg.get("budget", 2))
    else:
        raise UsageError(f"unknown lemma {lemma!r}")
    return rep.to_dict(), True


def _scales(cfg, key="scales"):
    return tuple(float(s) for s in cfg[key]) if key in cfg else None


def task_analyze(cfg, alg, seed):
    kind = cfg["task"]
    f = _field_from(cfg["field"], alg)
    alg = f.algebra
    x = _float_vec(cfg.get("point", [0] * alg.dim), "point")
    tol = float(cfg.get("tol", 1e-6))
    kw = {"scales": _scales(cfg)} if "scales" in cfg else {}
    if kind == "dd":
        est = directional_derivative(f, x, _float_vec(cfg["direction"], "direction"), tol=tol, **kw)
        return est.to_dict(), True
    if kind == "grad":
        g = horizontal_gradient(f, x, tol=tol, **kw)
        return g.to_dict(), True
    if kind == "linearity":
        d = linearity_defect(f, x, _float_vec(cfg["U"], "U"), _float_vec(cfg["V"], "V"), tol=tol,
                             reading=cfg.get("reading", "two-sided"), **kw)
        return d.to_dict(), True
    if kind == "regularity":
        rep = regularity_defect(f, x, _float_vec(cfg["direction"], "direction"), samples=int(cfg.get("samples", 64)),
                                seed=seed, extra_u=cfg.get("extra_u"), threshold=float(cfg.get("threshold", 1e-3)), **kw)
        return rep.to_dict(), True
    if kind == "pansu":
        rep = pansu_quotient(f, x, samples=int(cfg.get("samples", 64)), seed=seed, directions=cfg.get("directions"),
                             tol=tol, **kw)
        out = rep.to_dict()
        out["verdict_label"] = "differentiable evidence" if rep.verdict["differentiable_evidence"] else "not differentiable"
        return out, True
    if kind == "memberA":
        res = membership_A(f, x, _float_vec(cfg["U"], "U"), _float_vec(cfg["V"], "V"), float(cfg.get("y", 0.0)),
                           float(cfg.get("z", 0.0)), float(cfg["eps"]), float(cfg.get("delta", 1.0)),
                           grid=cfg.get("grid"), one_sided=bool(cfg.get("one_sided", False)))
        return res.to_dict(), True
    raise UsageError(f"unknown analysis task {kind!r}")


def task_porosity(cfg, alg, seed):
    """Porosity of a named set: ``hyperplane`` (coordinate ``axis``, optionally
    thickened by ``width`` times the distance to ``a``) or ``ball`` (hom-norm
    ball of ``radius`` about the identity)."""
    from .group import batch_hom_norm

    kind = cfg.get("set", "hyperplane")
    a = np.asarray(_float_vec(cfg.get("point", [0] * alg.dim), "point"))
    if kind == "hyperplane":
        axis = int(cfg.get("axis", 1)) - 1
        width = float(cfg.get("width", 0.0))

        def member(z):
            return np.abs(z[..., axis] - a[axis]) <= width * np.linalg.norm(z - a, axis=-1)
    elif kind == "ball":
        radius = float(cfg.get("radius", 1.0))

        def member(z):
            return batch_hom_norm(alg, z) < radius
    else:
        raise UsageError(f"unknown set {kind!r}; use hyperplane or ball")
    kw = {}
    if "scales" in cfg:
        kw["scales"] = _scales(cfg)
    if "lambdas" in cfg:
        kw["lambdas"] = tuple(float(v) for v in cfg["lambdas"])
    rep = porosity_probe(member, a, alg, centers=int(cfg.get("centers", 64)),
                         ball_samples=int(cfg.get("ball_samples", 256)), seed=seed, **kw)
    return rep.to_dict(), True


def task_suite(cfg, alg, seed):
    results = run_suite(cfg.get("suite", "all"), seed=seed, threads=int(cfg.get("threads", 1)))
    rep = summary(results, timing=bool(cfg.get("timing", False)))
    return rep, rep["passed"]


TASKS = {
    "validate": task_validate,
    "eval": task_eval,
    "split": task_split,
    "path": task_path,
    "cc": task_cc,
    "probe": task_probe,
    "dd": task_analyze,
    "grad": task_analyze,
    "linearity": task_analyze,
    "regularity": task_analyze,
    "pansu": task_analyze,
    "memberA": task_analyze,
    "porosity": task_porosity,
    "suite": task_suite,
}

NEEDS_GROUP = {"validate", "eval", "split", "path", "cc", "probe", "porosity"}


def execute(cfg: dict, seed: int | None = None, timing: bool = False) -> tuple[dict, int]:
    """Run one task config; returns the report and the exit code."""
    if not isinstance(cfg, dict) or "task" not in cfg:
        raise UsageError("task spec must be a JSON object with a 'task' field")
    task = cfg["task"]
    if task not in TASKS:
        raise UsageError(f"unknown task {task!r}; known: {', '.join(TASKS)}")
    seed = int(cfg.get("seed", env_seed() if seed is None else seed))
    alg = _group_from(cfg)
    if alg is None and task in NEEDS_GROUP:
        raise UsageError(f"task {task!r} needs 'group' or 'preset'")
    t0 = time.perf_counter()
    result, passed = TASKS[task](cfg, alg, seed)
    resolved = dict(cfg)
    resolved["seed"] = seed
    report = {
        "version": __version__,
        "task": task,
        "seed": seed,
        "config": resolved,
        "group": None if alg is None else group_to_dict(alg),
        "group_hash": None if alg is None else group_hash(alg),
        "result": result,
        "passed": passed,
    }
    if timing:
        report["wall_time_s"] = time.perf_counter() - t0
    return report, EXIT_OK if passed else EXIT_FAIL


# --- argument parsing ------------------------------------------------------------------------

def _add_common(p, group=True):
    if group:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--group", help="group config JSON file")
        g.add_argument("--preset", help="preset name: abelian, heisenberg, free_step2, engel")
        p.add_argument("--param", type=int, help="preset parameter (n or m)")
    p.add_argument("--seed", type=int, default=None, help="random seed (default: $CARNOT_SEED or 0)")
    p.add_argument("--json", dest="out", help="also write the report to this file")
    p.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical reports)")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="cap on parallel workers")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="carnot", description="Exact Carnot group computations and differentiability probes.")
    ap.add_argument("--version", action="version", version=f"carnot {__version__}")
    ap.add_argument("--threads", type=int, default=1, help="cap on parallel workers")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the stratification axioms")
    _add_common(p)

    p = sub.add_parser("group", help="group operations")
    gs = p.add_subparsers(dest="action", required=True)
    q = gs.add_parser("eval", help="norms, inverses and running products of a points file (JSON lines)")
    _add_common(q)
    q.add_argument("--input", required=True, help="points JSON file")

    p = sub.add_parser("metric", help="metric probes")
    ms = p.add_subparsers(dest="action", required=True)
    q = ms.add_parser("probe", help="empirical lemma constants")
    _add_common(q)
    q.add_argument("--lemma", required=True, choices=["conjugation", "flow-distance", "equivalence"])
    q.add_argument("--samples", type=int, default=10_000)
    q.add_argument("--segments", type=int)
    q.add_argument("--lambda", dest="lam", type=float)
    q = ms.add_parser("cc", help="upper bound for the CC distance from x to y")
    _add_common(q)
    q.add_argument("--x", help="start point as a JSON array (default identity)")
    q.add_argument("--y", required=True, help="end point as a JSON array")
    q.add_argument("--segments", type=int)
    q.add_argument("--budget", type=int, default=4)
    q.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("decompose", help="horizontal word decompositions")
    ds = p.add_subparsers(dest="action", required=True)
    q = ds.add_parser("split", help="split exp(U+V) into exp(rho U_i) factors")
    _add_common(q)
    q.add_argument("--input", help='JSON file or literal: {"U": [...], "V": [...]} or a list of them')
    q.add_argument("--U")
    q.add_argument("--V")
    q = ds.add_parser("path", help="basis path for group elements")
    _add_common(q)
    q.add_argument("--input", required=True, help="points JSON file or literal")

    p = sub.add_parser("analyze", help="differentiability probes")
    an = p.add_subparsers(dest="action", required=True)
    for name in ("dd", "grad", "pansu", "linearity", "regularity", "porosity", "memberA"):
        q = an.add_parser(name)
        _add_common(q)
        if name != "porosity":
            q.add_argument("--field", required=True, help=f"corpus name ({', '.join(CORPUS)}) or McShane sample file")
        q.add_argument("--point", help="base point as a JSON array (default identity)")
        q.add_argument("--scales", help="JSON array of strictly decreasing scales")
        if name in ("dd", "regularity"):
            q.add_argument("--direction", required=True, help="first-layer direction as a JSON array")
        if name in ("linearity", "memberA"):
            q.add_argument("--U", required=True)
            q.add_argument("--V", required=True)
        if name in ("dd", "grad", "pansu", "linearity"):
            q.add_argument("--tol", type=float, default=1e-6)
        if name == "linearity":
            q.add_argument("--reading", choices=["two-sided", "one-sided"], default="two-sided")
        if name in ("regularity", "pansu"):
            q.add_argument("--samples", type=int, default=64)
        if name == "regularity":
            q.add_argument("--extra-u", help="JSON array of extra u points")
            q.add_argument("--threshold", type=float, default=1e-3)
        if name == "pansu":
            q.add_argument("--directions", help="JSON array of h directions (normalised to unit norm)")
        if name == "memberA":
            q.add_argument("--y", type=float, default=0.0)
            q.add_argument("--z", type=float, default=0.0)
            q.add_argument("--eps", type=float, required=True)
            q.add_argument("--delta", type=float, default=1.0)
            q.add_argument("--one-sided", action="store_true")
        if name == "porosity":
            q.add_argument("--set", choices=["hyperplane", "ball"], default="hyperplane")
            q.add_argument("--axis", type=int, default=1, help="1-based coordinate normal to the hyperplane")
            q.add_argument("--width", type=float, default=0.0, help="relative thickening of the hyperplane")
            q.add_argument("--radius", type=float, default=1.0)
            q.add_argument("--lambdas", help="JSON array of lambda grid values")
            q.add_argument("--centers", type=int, default=64)
            q.add_argument("--ball-samples", type=int, default=256)

    p = sub.add_parser("suite", help="run acceptance criteria")
    p.add_argument("name", choices=sorted(SUITES))
    _add_common(p, group=False)

    p = sub.add_parser("run", help="run a JSON task spec")
    p.add_argument("spec", help="task spec JSON file or literal")
    _add_common(p, group=False)
    return ap


def _config_from_args(args) -> dict:
    cfg: dict = {}
    if getattr(args, "group", None):
        cfg["group"] = read_json(args.group)
    elif getattr(args, "preset", None):
        cfg["preset"] = args.preset
        if args.param is not None:
            cfg["param"] = args.param
    cmd = args.command
    if cmd == "validate":
        cfg["task"] = "validate"
    elif cmd == "group":
        cfg["task"] = "eval"
        data = read_json(args.input)
        cfg["points"] = data.get("points") if isinstance(data, dict) else data
    elif cmd == "metric" and args.action == "probe":
        cfg.update(task="probe", lemma=args.lemma, samples=args.samples)
        if args.segments is not None:
            cfg["segments"] = args.segments
        if args.lam is not None:
            cfg["lambda"] = args.lam
    elif cmd == "metric":
        cfg.update(task="cc", y=read_json(args.y), budget=args.budget, tol=args.tol)
        if args.x:
            cfg["x"] = read_json(args.x)
        if args.segments is not None:
            cfg["segments"] = args.segments
    elif cmd == "decompose" and args.action == "split":
        if args.input:
            cfg["task"] = "split"
            cfg["input"] = read_json(args.input)
        elif args.U and args.V:
            cfg.update(task="split", U=read_json(args.U), V=read_json(args.V))
        else:
            raise UsageError("decompose split needs --input or both --U and --V")
    elif cmd == "decompose":
        cfg["task"] = "path"
        data = read_json(args.input)
        cfg["input"] = data.get("points") if isinstance(data, dict) else data
    elif cmd == "analyze":
        cfg["task"] = args.action
        for key in ("field", "point", "scales", "direction", "U", "V", "directions", "extra_u", "lambdas"):
            val = getattr(args, key, None)
            if val is not None:
                cfg[key] = val if key == "field" else read_json(val)
        for key in ("tol", "reading", "samples", "threshold", "y", "z", "eps", "delta", "one_sided", "set", "axis",
                    "width", "radius", "centers", "ball_samples"):
            val = getattr(args, key, None)
            if val is not None:
                cfg[key] = val
    elif cmd == "suite":
        cfg.update(task="suite", suite=args.name)
    return cfg


def _batch(cfg, single_key, seed, timing):
    """Run ``split``/``path`` over an input list, one report with all items."""
    items = cfg.pop("input")
    if isinstance(items, dict):
        items = [items]
    elif items and not isinstance(items[0], (list, dict)):
        items = [items]
    reports, code = [], EXIT_OK
    for item in items:
        sub = dict(cfg)
        if isinstance(item, dict):
            sub.update(item)
        else:
            sub[single_key] = item
        rep, c = execute(sub, seed, timing)
        reports.append(rep)
        code = max(code, c)
    return reports, code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        seed = args.seed if args.seed is not None else env_seed()
        if args.command == "run":
            cfg = read_json(args.spec)
            if isinstance(cfg, dict) and cfg.get("task") == "suite":
                cfg.setdefault("threads", args.threads)
            report, code = execute(cfg, seed if args.seed is not None else None, args.timing)
            out = dumps(report)
        else:
            cfg = _config_from_args(args)
            if cfg["task"] == "suite":
                cfg["threads"] = args.threads
                cfg["timing"] = args.timing
            if "input" in cfg:
                reports, code = _batch(cfg, "point", seed, args.timing)
                out = dumps(reports if len(reports) > 1 else reports[0])
            else:
                report, code = execute(cfg, seed, args.timing)
                if cfg["task"] == "eval":
                    out = "\n".join(dumps({"version": report["version"], "group_hash": report["group_hash"], **row}, indent=None)
                                    for row in report["result"])
                else:
                    out = dumps(report)
                if cfg["task"] == "suite":
                    for r in report["result"]["criteria"]:
                        flag = "PASS" if r["passed"] else "FAIL"
                        print(f"[{flag}] criterion {r['id']}: {r['name']}", file=sys.stderr)
    except NonConvergent as exc:
        print(f"carnot: check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ConfigError, UsageError, KeyError, TowerMismatch, IncompatibleSamples, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        print(f"carnot: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (InvariantViolation, AssertionError) as exc:
        print(f"carnot: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    print(out)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(out + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())

"""JSON input and output: group configs, point files and deterministic reports.

Rationals are written as ``"p/q"`` strings and floats with 17 significant
digits, so a report round-trips every double and is byte-stable.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import is_dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .algebra import StratifiedAlgebra, preset
from .exact import coerce_tower, format_rational, parse_scalar
from .group import GroupPoint


class ConfigError(ValueError):
    """Malformed config or input file."""


def read_json(source) -> object:
    """Parse a path, a JSON string or an already decoded object."""
    if isinstance(source, (dict, list)):
        return source
    text = source
    where = "<string>"
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith(("{", "["))):
        where = str(source)
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {where}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{where}: {exc.msg} at line {exc.lineno}, column {exc.colno}") from exc


_PRESET_PARAM = {"abelian": "n", "heisenberg": "n", "free_step2": "m", "engel": None}


def load_group(source) -> StratifiedAlgebra:
    """Build an algebra from ``{"preset": ..., "n": ...}`` or an explicit table.

    Explicit tables use 1-based indices:
    ``{"step": s, "layer_dims": [...], "brackets": [[i, j, k, "p/q"], ...]}``.
    Missing antisymmetric partners are filled in; conflicting ones are kept
    so that :func:`validate` can report them.
    """
    cfg = read_json(source)
    if not isinstance(cfg, dict):
        raise ConfigError("group config must be a JSON object")
    if "preset" in cfg:
        name = cfg["preset"]
        if name not in _PRESET_PARAM:
            raise ConfigError(f"unknown preset {name!r}; known: {', '.join(_PRESET_PARAM)}")
        key = _PRESET_PARAM[name]
        param = cfg.get(key, cfg.get("param")) if key else None
        try:
            return preset(name, param)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
    try:
        dims = tuple(int(d) for d in cfg["layer_dims"])
        entries = cfg.get("brackets", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("explicit group config needs 'layer_dims' and 'brackets'") from exc
    if "step" in cfg and int(cfg["step"]) != len(dims):
        raise ConfigError(f"step {cfg['step']} does not match {len(dims)} layer dimensions")
    n = sum(dims)
    triples = []
    for e in entries:
        if len(e) != 4:
            raise ConfigError(f"bracket entry {e!r} must be [i, j, k, coefficient]")
        i, j, k = (int(v) for v in e[:3])
        if not all(1 <= v <= n for v in (i, j, k)):
            raise ConfigError(f"bracket entry {e!r} has an index outside 1..{n}")
        c = parse_scalar(e[3])
        if isinstance(c, float):
            raise ConfigError(f"structure constant {e[3]!r} must be rational (integer or 'p/q' string)")
        triples.append((i - 1, j - 1, k - 1, c))
    try:
        return StratifiedAlgebra.from_brackets(dims, triples, name=cfg.get("name", "custom"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def group_to_dict(alg: StratifiedAlgebra) -> dict:
    return {
        "step": alg.step,
        "layer_dims": list(alg.layer_dims),
        "brackets": [[i + 1, j + 1, k + 1, format_rational(c)] for i, j, k, c in sorted(alg.brackets)],
    }


def group_hash(alg: StratifiedAlgebra) -> str:
    """Short SHA-256 of the canonical group table; presets and equal tables agree."""
    blob = json.dumps(group_to_dict(alg), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def parse_point(alg: StratifiedAlgebra, raw) -> GroupPoint:
    if not isinstance(raw, list):
        raise ConfigError(f"a point must be a JSON array, got {raw!r}")
    if len(raw) != alg.dim:
        raise ConfigError(f"point {raw!r} has {len(raw)} coordinates, expected {alg.dim}")
    try:
        return GroupPoint(alg, coerce_tower(raw))
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad point {raw!r}: {exc}") from exc


def parse_horizontal(alg: StratifiedAlgebra, raw):
    if not isinstance(raw, list) or len(raw) not in (alg.rank, alg.dim):
        raise ConfigError(f"horizontal vector {raw!r} needs {alg.rank} coefficients")
    try:
        vals = coerce_tower(raw)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad vector {raw!r}: {exc}") from exc
    if len(vals) == alg.dim:
        if any(v != 0 for v in vals[alg.rank:]):
            raise ConfigError(f"vector {raw!r} is not horizontal")
        vals = vals[: alg.rank]
    return alg.horizontal(vals)


def load_points(alg: StratifiedAlgebra, source) -> list[GroupPoint]:
    data = read_json(source)
    if isinstance(data, dict):
        data = data.get("points")
    if not isinstance(data, list):
        raise ConfigError("points file must be a JSON array or an object with 'points'")
    if data and not isinstance(data[0], list):
        data = [data]
    return [parse_point(alg, p) for p in data]


# --- output ---------------------------------------------------------------------

def _float(x: float) -> str:
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    if x == int(x) and abs(x) < 1e16:
        return f"{int(x)}.0"
    return format(x, ".17g")


def to_jsonable(obj):
    """Recursively convert library values to plain JSON data."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, StratifiedAlgebra):
        return group_to_dict(obj)
    if isinstance(obj, GroupPoint):
        return to_jsonable(list(obj.coords))
    if obj is None or isinstance(obj, str):
        return obj
    if is_dataclass(obj):
        raise TypeError(f"dataclass {type(obj).__name__} has no to_dict")
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    """Deterministic JSON with 17-digit floats and sorted keys."""
    data = to_jsonable(obj)

    def enc(v, level):
        pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
        end = "" if indent is None else "\n" + " " * (indent * level)
        sep = ","
        colon = ":" if indent is None else ": "
        if isinstance(v, dict):
            if not v:
                return "{}"
            items = [pad + json.dumps(k) + colon + enc(v[k], level + 1) for k in sorted(v)]
            return "{" + sep.join(items) + end + "}"
        if isinstance(v, list):
            if not v:
                return "[]"
            if all(not isinstance(x, (list, dict)) for x in v):
                return "[" + (", " if indent is not None else ",").join(enc(x, level + 1) for x in v) + "]"
            return "[" + sep.join(pad + enc(x, level + 1) for x in v) + end + "]"
        if isinstance(v, bool) or v is None:
            return json.dumps(v)
        if isinstance(v, float):
            return _float(v)
        return json.dumps(v)

    return enc(data, 0)

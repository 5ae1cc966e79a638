"""Stratified Lie algebras given by structure constants in an adapted basis.

Indices are 0-based in code. The JSON group-config format is 1-based; see
:mod:`carnot.io`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .exact import TowerMismatch, coerce_tower, is_exact, parse_scalar, rank


class AlgebraMismatch(ValueError):
    pass


@dataclass(frozen=True)
class StratifiedAlgebra:
    """Lie algebra ``V_1 + ... + V_s`` with ``[X_i, X_j] = sum_k c[i, j, k] X_k``.

    ``brackets`` holds the nonzero constants as sorted ``(i, j, k, c)`` tuples.
    Both orientations are stored; :func:`from_brackets` fills ``(j, i, k)``
    from ``(i, j, k)`` when only one is given.
    """

    layer_dims: tuple[int, ...]
    brackets: tuple[tuple[int, int, int, Fraction], ...]
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if not self.layer_dims or any(int(m) < 1 for m in self.layer_dims):
            raise ValueError(f"layer dims must be positive, got {self.layer_dims}")
        n = sum(self.layer_dims)
        for i, j, k, _ in self.brackets:
            if not (0 <= i < n and 0 <= j < n and 0 <= k < n):
                raise ValueError(f"bracket index out of range: {(i, j, k)}")

    @classmethod
    def from_brackets(
        cls,
        layer_dims: Iterable[int],
        brackets: Mapping[tuple[int, int, int], object] | Iterable[tuple[int, int, int, object]],
        name: str = "custom",
    ) -> "StratifiedAlgebra":
        items = brackets.items() if isinstance(brackets, Mapping) else (((i, j, k), c) for i, j, k, c in brackets)
        table: dict[tuple[int, int, int], Fraction] = {}
        for (i, j, k), c in items:
            c = parse_scalar(c)
            if not is_exact(c):
                raise TowerMismatch("structure constants must be exact rationals")
            table[(i, j, k)] = table.get((i, j, k), Fraction(0)) + c
        given = set(table)
        for (i, j, k), c in list(table.items()):
            if (j, i, k) not in given and i != j:
                table[(j, i, k)] = -c
        entries = tuple(sorted((i, j, k, c) for (i, j, k), c in table.items() if c != 0))
        return cls(tuple(int(m) for m in layer_dims), entries, name)

    # --- layer data ---------------------------------------------------------

    @property
    def step(self) -> int:
        return len(self.layer_dims)

    @property
    def dim(self) -> int:
        return sum(self.layer_dims)

    @property
    def rank(self) -> int:
        """Dimension ``m`` of the first layer."""
        return self.layer_dims[0]

    @cached_property
    def cumulative(self) -> tuple[int, ...]:
        """``(h_0, h_1, ..., h_s)`` with ``h_0 = 0``."""
        return (0, *itertools.accumulate(self.layer_dims))

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(i + 1 for i, m in enumerate(self.layer_dims) for _ in range(m))

    def layer_slice(self, layer: int) -> slice:
        """Coordinates of layer ``layer`` (1-based layer number)."""
        h = self.cumulative
        return slice(h[layer - 1], h[layer])

    @cached_property
    def _table(self) -> dict[tuple[int, int], tuple[tuple[int, Fraction], ...]]:
        t: dict[tuple[int, int], list] = {}
        for i, j, k, c in self.brackets:
            t.setdefault((i, j), []).append((k, c))
        return {key: tuple(v) for key, v in t.items()}

    @cached_property
    def _by_left(self) -> dict[int, tuple[tuple[int, int, Fraction], ...]]:
        t: dict[int, list] = {}
        for i, j, k, c in self.brackets:
            t.setdefault(i, []).append((j, k, c))
        return {key: tuple(v) for key, v in t.items()}

    @cached_property
    def tensor(self) -> np.ndarray:
        """Dense float structure tensor ``C[i, j, k]``."""
        c = np.zeros((self.dim,) * 3)
        for i, j, k, v in self.brackets:
            c[i, j, k] = float(v)
        return c

    def constant(self, i: int, j: int, k: int) -> Fraction:
        return dict(self._table.get((i, j), ())).get(k, Fraction(0))

    # --- constructors -------------------------------------------------------

    def vector(self, coeffs) -> "LieVector":
        return LieVector(self, coerce_tower(coeffs))

    def zero(self) -> "LieVector":
        return LieVector(self, (Fraction(0),) * self.dim)

    def basis(self, j: int) -> "LieVector":
        """Basis vector ``X_j`` (0-based ``j``)."""
        if not 0 <= j < self.dim:
            raise IndexError(f"basis index {j} out of range for dim {self.dim}")
        return LieVector(self, tuple(Fraction(int(i == j)) for i in range(self.dim)))

    def horizontal(self, coeffs) -> "LieVector":
        """Vector of ``V_1`` from its ``m`` first-layer coefficients."""
        coeffs = coerce_tower(coeffs)
        if len(coeffs) != self.rank:
            raise ValueError(f"expected {self.rank} horizontal coefficients")
        zero = 0.0 if coeffs and isinstance(coeffs[0], float) else Fraction(0)
        return LieVector(self, tuple(coeffs) + (zero,) * (self.dim - self.rank))

    def quotient(self) -> "StratifiedAlgebra":
        """The step ``s-1`` algebra obtained by dropping the top layer."""
        if self.step == 1:
            raise ValueError("a step-1 algebra has no proper quotient")
        q = self.cumulative[-2]
        entries = tuple(e for e in self.brackets if e[0] < q and e[1] < q and e[2] < q)
        return StratifiedAlgebra(self.layer_dims[:-1], entries, f"{self.name}/V{self.step}")


@dataclass(frozen=True)
class LieVector:
    """Element of the algebra as coefficients in the adapted basis."""

    algebra: StratifiedAlgebra
    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) != self.algebra.dim:
            raise ValueError(f"expected {self.algebra.dim} coefficients, got {len(self.coeffs)}")

    @property
    def exact(self) -> bool:
        return all(not isinstance(c, float) for c in self.coeffs)

    def _check(self, other: "LieVector"):
        if other.algebra is not self.algebra and other.algebra != self.algebra:
            raise AlgebraMismatch("vectors belong to different algebras")
        if self.exact != other.exact:
            raise TowerMismatch("cannot combine exact and float vectors")

    def __add__(self, other: "LieVector") -> "LieVector":
        self._check(other)
        return LieVector(self.algebra, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "LieVector") -> "LieVector":
        self._check(other)
        return LieVector(self.algebra, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "LieVector":
        return LieVector(self.algebra, tuple(-a for a in self.coeffs))

    def __mul__(self, scalar) -> "LieVector":
        s = parse_scalar(scalar)
        if isinstance(s, float) and self.exact:
            raise TowerMismatch("float scalar applied to an exact vector")
        if not isinstance(s, float) and not self.exact:
            s = float(s)
        return LieVector(self.algebra, tuple(s * a for a in self.coeffs))

    __rmul__ = __mul__

    def bracket(self, other: "LieVector") -> "LieVector":
        return bracket(self, other)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def layer(self, i: int) -> tuple:
        return self.coeffs[self.algebra.layer_slice(i)]

    def support_layers(self) -> set[int]:
        d = self.algebra.degrees
        return {d[j] for j, c in enumerate(self.coeffs) if c != 0}

    def is_horizontal(self) -> bool:
        return self.support_layers() <= {1}

    def omega(self) -> float:
        """Euclidean norm of the first-layer coefficients."""
        return math.sqrt(sum(float(c) ** 2 for c in self.coeffs[: self.algebra.rank]))

    def as_float(self) -> "LieVector":
        return LieVector(self.algebra, tuple(float(c) for c in self.coeffs))

    def to_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs])


def bracket(x: LieVector, y: LieVector) -> LieVector:
    """Lie bracket through the structure constants."""
    x._check(y)
    alg = x.algebra
    zero = Fraction(0) if x.exact else 0.0
    out = [zero] * alg.dim
    by_left = alg._by_left
    yc = y.coeffs
    for i, xi in enumerate(x.coeffs):
        if xi == 0:
            continue
        for j, k, c in by_left.get(i, ()):
            yj = yc[j]
            if yj != 0:
                out[k] += xi * yj * (c if x.exact else float(c))
    return LieVector(alg, tuple(out))


# --- validation -------------------------------------------------------------

@dataclass
class AxiomCheck:
    passed: bool
    witness: tuple | None = None
    detail: str = ""


@dataclass
class ValidationReport:
    algebra: str
    checks: dict[str, AxiomCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def to_dict(self) -> dict:
        return {
            "algebra": self.algebra,
            "passed": self.passed,
            "checks": {
                name: {"passed": c.passed, "witness": None if c.witness is None else [i + 1 for i in c.witness], "detail": c.detail}
                for name, c in self.checks.items()
            },
        }


def validate(alg: StratifiedAlgebra) -> ValidationReport:
    """Check antisymmetry, Jacobi, grading and generation exactly.

    Witness triples are reported with 0-based indices (``to_dict`` shifts
    them to 1-based).
    """
    n = alg.dim
    checks: dict[str, AxiomCheck] = {}

    witness = None
    for i, j, k in itertools.product(range(n), repeat=3):
        if alg.constant(i, j, k) + alg.constant(j, i, k) != 0:
            witness = (i, j, k)
            break
    checks["antisymmetry"] = AxiomCheck(witness is None, witness)

    basis = [alg.basis(i) for i in range(n)]
    witness = None
    for i, j, k in itertools.product(range(n), repeat=3):
        a, b, c = basis[i], basis[j], basis[k]
        jac = bracket(a, bracket(b, c)) + bracket(b, bracket(c, a)) + bracket(c, bracket(a, b))
        if not jac.is_zero():
            witness = (i, j, k)
            break
    checks["jacobi"] = AxiomCheck(witness is None, witness)

    d = alg.degrees
    s = alg.step
    witness = None
    for i, j, k, c in alg.brackets:
        if d[k] != d[i] + d[j]:
            witness = (i, j, k)
            break
    checks["grading"] = AxiomCheck(witness is None, witness, f"layers must satisfy d_k = d_i + d_j <= {s}")

    witness = None
    detail = "vacuous (step 1)" if s == 1 else ""
    h = alg.cumulative
    for layer in range(1, s):
        rows = []
        for a in range(h[0], h[1]):
            for b in range(h[layer - 1], h[layer]):
                v = bracket(basis[a], basis[b])
                rows.append(list(v.layer(layer + 1)))
        r = rank(rows) if rows else 0
        if r != alg.layer_dims[layer]:
            witness = (layer, layer + 1, r)
            detail = f"[V1, V{layer}] has rank {r}, expected dim V{layer + 1} = {alg.layer_dims[layer]}"
            break
    checks["generation"] = AxiomCheck(witness is None, witness, detail)
    return ValidationReport(alg.name, checks)


# --- presets ----------------------------------------------------------------

def abelian(n: int) -> StratifiedAlgebra:
    if n < 1:
        raise ValueError("abelian(n) needs n >= 1")
    return StratifiedAlgebra((n,), (), f"abelian({n})")


def heisenberg(n: int = 1) -> StratifiedAlgebra:
    """``H^n`` with basis ``X_1..X_n, Y_1..Y_n, T`` and ``[X_i, Y_i] = T``."""
    if n < 1:
        raise ValueError("heisenberg(n) needs n >= 1")
    t = 2 * n
    return StratifiedAlgebra.from_brackets((2 * n, 1), {(i, n + i, t): 1 for i in range(n)}, f"heisenberg({n})")


def free_step2(m: int) -> StratifiedAlgebra:
    """Free step-2 nilpotent algebra on ``m`` generators.

    ``V_2`` has one basis vector per pair ``a < b`` (lexicographic), equal to
    ``[X_a, X_b]``.
    """
    if m < 2:
        raise ValueError("free_step2(m) needs m >= 2")
    pairs = list(itertools.combinations(range(m), 2))
    table = {(a, b, m + idx): 1 for idx, (a, b) in enumerate(pairs)}
    return StratifiedAlgebra.from_brackets((m, len(pairs)), table, f"free_step2({m})")


def engel() -> StratifiedAlgebra:
    """Engel algebra: ``[X1, X2] = X3``, ``[X1, X3] = X4``."""
    return StratifiedAlgebra.from_brackets((2, 1, 1), {(0, 1, 2): 1, (0, 2, 3): 1}, "engel")


PRESETS = {
    "abelian": abelian,
    "heisenberg": heisenberg,
    "free_step2": free_step2,
    "engel": engel,
}


def preset(name: str, param: int | None = None) -> StratifiedAlgebra:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    if name == "engel":
        if param not in (None,):
            raise ValueError("engel takes no parameter")
        return factory()
    if param is None:
        if name == "heisenberg":
            param = 1
        else:
            raise ValueError(f"preset {name!r} needs an integer parameter")
    if isinstance(param, bool) or not isinstance(param, int):
        raise ValueError(f"preset parameter must be an integer, got {param!r}")
    return factory(param)

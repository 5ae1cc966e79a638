"""Exact rational arithmetic helpers: parsing, linear algebra over Q, root splitting."""

from __future__ import annotations

import numbers
from fractions import Fraction
from typing import Iterable, Sequence

import sympy


class TowerMismatch(TypeError):
    """Exact and floating scalars were combined in one value or call."""


def parse_scalar(value):
    """Convert an input scalar to ``Fraction`` (exact) or ``float``.

    Strings are read as rationals ("3", "-1/2", "0.25"). Integers become
    fractions. Floats stay floats.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, numbers.Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, numbers.Real):
        return float(value)
    raise TypeError(f"not a real scalar: {value!r}")


def is_exact(value) -> bool:
    return isinstance(value, Fraction)


def coerce_tower(values: Iterable) -> tuple:
    """Parse scalars and check they live in a single tower.

    Integers (and integer strings) are tower-neutral: they join whichever
    tower the other entries use. Any genuine mix of rationals and floats
    raises ``TowerMismatch``.
    """
    raw = list(values)
    parsed = [parse_scalar(v) for v in raw]
    has_float = any(isinstance(p, float) for p in parsed)
    if not has_float:
        return tuple(parsed)
    out = []
    for r, p in zip(raw, parsed):
        if isinstance(p, float):
            out.append(p)
        elif p.denominator == 1 and not isinstance(r, (str, Fraction)):
            out.append(float(p))
        else:
            raise TowerMismatch(f"exact scalar {r!r} mixed with floats")
    return tuple(out)


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# --- linear algebra over Q -------------------------------------------------

def rref(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form with exact arithmetic; returns (matrix, pivot columns)."""
    a = [[Fraction(v) for v in row] for row in rows]
    if not a:
        return a, []
    ncols = len(a[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = 1 / a[r][c]
        a[r] = [v * inv for v in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    return a, pivots


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    return len(rref(rows)[1])


def solve(columns: Sequence[Sequence[Fraction]], target: Sequence[Fraction]) -> list[Fraction] | None:
    """Solve ``sum_j x_j * columns[j] == target`` exactly.

    Returns the pivot solution (free unknowns set to zero), or ``None`` when
    the system is inconsistent. Pivots are the earliest independent columns,
    so column order decides which solution is returned.
    """
    nrows = len(target)
    ncols = len(columns)
    aug = [[columns[j][i] for j in range(ncols)] + [target[i]] for i in range(nrows)]
    red, pivots = rref(aug)
    if ncols in pivots:
        return None
    x = [Fraction(0)] * ncols
    for row, c in zip(red, pivots):
        x[c] = row[ncols]
    return x


# --- canonical i-th roots --------------------------------------------------

def power_split(c: Fraction, degree: int) -> tuple[Fraction, Fraction]:
    """Write ``c = sign * q**degree * d`` with ``q >= 0`` rational and ``d`` a
    ``degree``-th-power-free positive integer; returns ``(sign * d, q)``.

    The split is canonical: ``power_split(lam**degree * c)`` has the same
    ``d`` and ``q`` multiplied by ``|lam|``, so words built from it scale
    linearly under dilations.
    """
    if degree < 1:
        raise ValueError("degree must be positive")
    if c == 0:
        return Fraction(0), Fraction(0)
    sign = 1 if c > 0 else -1
    c = abs(c)
    if degree == 1:
        return Fraction(sign), c
    q = Fraction(1)
    d = 1
    for value, exp_sign in ((c.numerator, 1), (c.denominator, -1)):
        for p, e in sympy.factorint(value).items():
            whole, rest = divmod(e, degree)
            q *= Fraction(p) ** (exp_sign * whole)
            if rest:
                if exp_sign > 0:
                    d *= p ** rest
                else:
                    # p^{-rest} = p^{-degree} * p^{degree-rest}
                    q /= p
                    d *= p ** (degree - rest)
    return Fraction(sign * d), q


def approx_root_split(c: Fraction, degree: int) -> tuple[Fraction, Fraction]:
    """Non-canonical variant of :func:`power_split` that avoids factoring.

    ``q`` is a rational approximation of ``|c|**(1/degree)`` and the returned
    multiplier absorbs the rest, so ``c == mult * q**degree`` still holds exactly.
    """
    if c == 0:
        return Fraction(0), Fraction(0)
    q = Fraction(abs(float(c)) ** (1.0 / degree)).limit_denominator(1 << 40)
    if q == 0:
        q = Fraction(1)
    return c / q ** degree, q

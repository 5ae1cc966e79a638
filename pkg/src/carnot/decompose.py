"""Constructive decompositions into horizontal words.

* ``bracket_word``: group commutators realising ``exp([E_q, ... [E_2, E_1]])``
  exactly at the top layer.
* ``split_sum``: ``exp(U + V)`` as a product of ``exp(rho_i U_i)`` with
  ``U_i`` in ``{U, V}``, by induction on the step through the quotient by the
  top layer.
* ``path_decompose``: any group element as a product of ``exp(t_j E_j)`` with
  ``t_j >= 0`` and ``E_j`` in ``{+-X_1, ..., +-X_m}``.

Entry order convention: ``entries = (E_1, ..., E_q)`` lists the innermost
entry first, so the bracket is ``[E_q, [E_{q-1}, ... [E_2, E_1]]]``.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .algebra import LieVector, StratifiedAlgebra, bracket
from .exact import approx_root_split, power_split, rank, solve
from .group import GroupPoint, exp, hom_norm, identity, inverse, multiply
from .metric import HorizontalWord, NonHorizontal, flow


class InvariantViolation(RuntimeError):
    """A construction that is guaranteed to succeed did not."""


class InvalidAlgebra(ValueError):
    pass


def _commutator_steps(entries: Sequence[tuple[object, object]]) -> list[tuple[object, object]]:
    """Steps ``(coef, direction)`` of the nested group commutator.

    ``w(E_1) = E_1`` and ``w([E_k, B]) = E_k . w(B) . E_k^{-1} . w(B)^{-1}``.
    The direction objects are opaque, so callers may pass labels or vectors.
    """
    (c, d), *rest = entries
    word = [(c, d)]
    for c, d in rest:
        inv = [(-t, e) for t, e in reversed(word)]
        word = [(c, d)] + word + [(-c, d)] + inv
    return word


def commutator_word_length(q: int) -> int:
    """Number of steps of the commutator word with ``q`` entries: ``3 * 2**(q-1) - 2``."""
    return 3 * 2 ** (q - 1) - 2


def nested_bracket(entries: Sequence[LieVector]) -> LieVector:
    """``[E_q, ... [E_2, E_1]]`` for ``entries = (E_1, ..., E_q)``."""
    acc = entries[0]
    for e in entries[1:]:
        acc = bracket(e, acc)
    return acc


def bracket_word(entries: Sequence[LieVector]) -> HorizontalWord:
    """Word with ``flow(0, w) = exp([E_q, ... [E_2, E_1]])`` for ``q`` equal to the step.

    For ``q < s`` the commutator word carries brackets of length ``> q`` as
    well, so it is refused here.
    """
    if not entries:
        raise ValueError("bracket_word needs at least one entry")
    alg = entries[0].algebra
    for e in entries:
        if not e.is_horizontal():
            raise NonHorizontal(f"entry {e.coeffs} is not in V_1")
    if len(entries) != alg.step:
        raise ValueError(
            f"bracket_word needs exactly s = {alg.step} entries; with {len(entries)} the word has a nonzero remainder"
        )
    one = Fraction(1) if all(e.exact for e in entries) else 1.0
    return HorizontalWord(alg, tuple(_commutator_steps([(one, e) for e in entries])))


# --- splitting -------------------------------------------------------------------

def _free_lie_expand(labels: Sequence[int]) -> dict[tuple[int, ...], int]:
    """Left-normed bracket of letters as a noncommutative polynomial."""
    poly = {(labels[0],): 1}
    for a in labels[1:]:
        new: dict[tuple[int, ...], int] = {}
        for w, c in poly.items():
            new[(a,) + w] = new.get((a,) + w, 0) + c
            new[w + (a,)] = new.get(w + (a,), 0) - c
        poly = {w: c for w, c in new.items() if c}
    return poly


@lru_cache(maxsize=None)
def free_lie_family(degree: int, letters: int = 2) -> tuple[tuple[int, ...], ...]:
    """Left-normed brackets spanning the degree-``degree`` part of the free Lie algebra.

    Each entry tuple is innermost-first. Candidates are scanned with the
    outermost letter varying slowest and kept when independent of those
    already kept, so for two letters and degree 2 the family is ``[U, V]``.
    """
    kept: list[tuple[int, ...]] = []
    rows: list[dict] = []
    for outer_first in itertools.product(range(letters), repeat=degree):
        labels = tuple(reversed(outer_first))
        poly = _free_lie_expand(labels)
        if not poly:
            continue
        keys = sorted(set().union(*rows, poly)) if rows else sorted(poly)
        mat = [[Fraction(r.get(k, 0)) for k in keys] for r in rows + [poly]]
        if rank(mat) == len(rows) + 1:
            kept.append(labels)
            rows.append(poly)
    return tuple(kept)


def _restrict(v: LieVector, alg: StratifiedAlgebra) -> LieVector:
    return LieVector(alg, v.coeffs[: alg.dim])


def _split_labels(alg: StratifiedAlgebra, u: LieVector, v: LieVector) -> list[tuple[Fraction, int]]:
    """Splitting word as ``(rho, label)`` with label 0 for U and 1 for V."""
    if alg.step == 1:
        return [(Fraction(1), 0), (Fraction(1), 1)]
    quo = alg.quotient()
    word = _split_labels(quo, _restrict(u, quo), _restrict(v, quo))
    vecs = (u, v)
    end = identity(alg)
    for rho, lab in word:
        end = multiply(end, exp(vecs[lab] * rho))
    z = end.log() - u - v
    top = alg.layer_slice(alg.step)
    if any(c != 0 for c in z.coeffs[: top.start]):
        raise InvariantViolation("lifted quotient word leaves a residual below the top layer")
    family = free_lie_family(alg.step)
    columns = [list(nested_bracket([vecs[lab] for lab in labels]).coeffs[top]) for labels in family]
    eta = solve(columns, list(z.coeffs[top]))
    if eta is None:
        raise InvariantViolation("top-layer residual is not a combination of length-s brackets of U and V")
    for labels, e in zip(family, eta):
        entries = [(Fraction(1), lab) for lab in labels]
        # -eta goes into the outermost slot: the bracket is linear in it
        entries[-1] = (-e, labels[-1])
        word.extend(_commutator_steps(entries))
    return word


def split_sum(u: LieVector, v: LieVector) -> HorizontalWord:
    """Word in the directions ``U`` and ``V`` only whose flow from 0 is ``exp(U + V)``.

    Zero-coefficient steps are kept, so for independent ``U``, ``V`` the
    number of steps depends only on the algebra. Dependent inputs are handled
    up front: ``exp(U + V) = exp((1 + k) U)`` when ``V = k U``.
    """
    alg = u.algebra
    u._check(v)
    for w in (u, v):
        if not w.is_horizontal():
            raise NonHorizontal(f"{w.coeffs} is not in V_1")
    is_float = not u.exact
    ue = LieVector(alg, tuple(Fraction(c) for c in u.coeffs))
    ve = LieVector(alg, tuple(Fraction(c) for c in v.coeffs))
    m = alg.rank

    def conv(t):
        return float(t) if is_float else t

    pu, pv = ue.coeffs[:m], ve.coeffs[:m]
    if rank([list(pu), list(pv)]) < 2:
        if ue.is_zero() and ve.is_zero():
            steps = []
        elif ue.is_zero():
            steps = [(conv(Fraction(1)), v)]
        else:
            j = next(i for i, c in enumerate(pu) if c != 0)
            kappa = pv[j] / pu[j]
            steps = [] if kappa == -1 else [(conv(1 + kappa), u)]
        return HorizontalWord(alg, tuple(steps))
    labels = _split_labels(alg, ue, ve)
    vecs = (u, v)
    return HorizontalWord(alg, tuple((conv(rho), vecs[lab]) for rho, lab in labels))


def split_constant(alg: StratifiedAlgebra) -> int:
    """Number of steps ``split_sum`` emits for independent inputs."""
    n = 2
    for s in range(2, alg.step + 1):
        n += len(free_lie_family(s)) * commutator_word_length(s)
    return n


# --- basis paths --------------------------------------------------------------------

@lru_cache(maxsize=None)
def basis_bracket_table(alg: StratifiedAlgebra) -> dict[int, tuple[tuple[Fraction, tuple[int, ...]], ...]]:
    """Each ``X_k`` above the first layer as a combination of left-normed brackets.

    Returns ``{k: ((coef, entries), ...)}`` where ``entries`` are first-layer
    indices, innermost first, and ``X_k = sum coef * [X_{e_i}, ... [X_{e_2}, X_{e_1}]]``
    with ``i`` the layer of ``k``. Candidates are scanned with the outermost
    index varying slowest; the pivot solution is returned.
    """
    m = alg.rank
    basis = [alg.basis(j) for j in range(m)]
    table: dict[int, tuple] = {}
    for layer in range(2, alg.step + 1):
        sl = alg.layer_slice(layer)
        cands = []
        for outer_first in itertools.product(range(m), repeat=layer):
            entries = tuple(reversed(outer_first))
            vec = nested_bracket([basis[e] for e in entries])
            if not vec.is_zero():
                cands.append((entries, list(vec.coeffs[sl])))
        cols = [c for _, c in cands]
        for k in range(sl.start, sl.stop):
            target = [Fraction(int(i == k)) for i in range(sl.start, sl.stop)]
            sol = solve(cols, target) if cols else None
            if sol is None:
                raise InvalidAlgebra(f"X_{k + 1} is not generated by brackets of the first layer")
            table[k] = tuple((c, cands[idx][0]) for idx, c in enumerate(sol) if c != 0)
    return table


def path_step_bound(alg: StratifiedAlgebra) -> int:
    """Largest number of steps ``path_decompose`` can emit for ``alg``."""
    table = basis_bracket_table(alg)
    total = alg.rank
    for k, terms in table.items():
        total += len(terms) * commutator_word_length(alg.degrees[k])
    return total


def path_decompose(h: GroupPoint, canonical: bool | None = None) -> HorizontalWord:
    """Word with ``t_j >= 0``, ``E_j`` in ``{+-X_i}`` and ``flow(0, w) == h`` exactly.

    Layer 1 is matched with one step per basis direction. Then, layer by
    layer, the exact residual's layer-``i`` component ``c X_k`` is written via
    the bracket table and each term ``c' [X_{e_i}, ..., X_{e_1}]`` becomes a
    commutator word whose inner slots carry ``q`` and outer slot ``d q`` with
    ``c' = d q^i``. Higher-layer by-products are absorbed at later layers.

    With ``canonical=True`` (default for exact input) ``q`` is the canonical
    rational ``i``-th root part, so the word for ``delta_lam(h)`` is the word
    for ``h`` with times scaled by ``lam``. ``canonical=False`` uses a rounded
    root instead and avoids integer factorisation.
    """
    alg = h.algebra
    exact_in = h.exact
    if canonical is None:
        canonical = exact_in
    target = GroupPoint(alg, tuple(Fraction(c) for c in h.coords))
    m = alg.rank
    basis = [alg.basis(j) for j in range(m)]
    steps: list[tuple[Fraction, int]] = [(target.coords[j], j) for j in range(m)]
    current = identity(alg)
    for t, j in steps:
        current = multiply(current, exp(basis[j] * t))
    table = basis_bracket_table(alg) if alg.step > 1 else {}
    split = power_split if canonical else approx_root_split
    for layer in range(2, alg.step + 1):
        resid = multiply(inverse(current), target)
        sl = alg.layer_slice(layer)
        if any(c != 0 for c in resid.coords[: sl.start]):
            raise InvariantViolation(f"residual has components below layer {layer}")
        new: list[tuple[Fraction, int]] = []
        for k in range(sl.start, sl.stop):
            c = resid.coords[k]
            if c == 0:
                continue
            for coef, entries in table[k]:
                mult, q = split(c * coef, layer)
                slots = [(q, e) for e in entries]
                slots[-1] = (mult * q, entries[-1])
                new.extend(_commutator_steps(slots))
        for t, j in new:
            if t != 0:
                current = multiply(current, exp(basis[j] * t))
        steps.extend(new)
    if current != target:
        raise InvariantViolation("path decomposition did not reach the target")
    word = []
    for t, j in steps:
        if t == 0:
            continue
        e = basis[j] if t > 0 else -basis[j]
        t = abs(t)
        word.append((float(t) if not exact_in else t, e.as_float() if not exact_in else e))
    return HorizontalWord(alg, tuple(word))


def path_report(h: GroupPoint, word: HorizontalWord | None = None) -> dict:
    word = path_decompose(h) if word is None else word
    total = word.total_time()
    norm = hom_norm(h)
    return {
        "M": len(word),
        "M_bound": path_step_bound(h.algebra),
        "sum_t": total,
        "sum_t_over_norm": float(total) / norm if norm > 0 else 0.0,
        "exact": flow(identity(h.algebra), word) == h if h.exact else None,
    }

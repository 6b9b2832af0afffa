"""Lipschitz functions on finite pointed spaces, all arithmetic exact.

A function is a value per row with value 0 at the base (row 0). The norm
is the largest absolute difference quotient; on a finite space that is a
maximum, so attainment questions become equalities between rationals.
"""

from __future__ import annotations

from dataclasses import dataclass

from .metric import FiniteMetricSpace, PreconditionError, StructureError
from .rational import Rat, ZERO, rat


@dataclass(frozen=True)
class LipFn:
    space: FiniteMetricSpace
    values: tuple

    def __post_init__(self):
        if len(self.values) != self.space.n_points:
            raise StructureError(
                f"{len(self.values)} values for a {self.space.n_points}-point space"
            )
        if self.values[self.space.base_index] != ZERO:
            raise PreconditionError("functions must vanish at the base point")

    def __call__(self, p: int) -> Rat:
        return self.values[p]


def lipfn(space: FiniteMetricSpace, values) -> LipFn:
    return LipFn(space, tuple(rat(v) for v in values))


def zero_fn(space: FiniteMetricSpace) -> LipFn:
    return LipFn(space, (ZERO,) * space.n_points)


def slope(f: LipFn, p: int, q: int) -> Rat:
    """Difference quotient of f over the ordered pair (p, q)."""
    if p == q:
        raise PreconditionError("slope needs two distinct points")
    return (f.values[q] - f.values[p]) / f.space.d(p, q)


def lip_norm(f: LipFn) -> Rat:
    best = ZERO
    n = f.space.n_points
    for p in range(n):
        for q in range(p + 1, n):
            s = slope(f, p, q)
            if s < ZERO:
                s = -s
            if s > best:
                best = s
    return best


def strong_pairs(f: LipFn):
    """All ordered pairs attaining the norm, oriented so the slope is +norm.

    The zero function attains nothing, so it gets an empty list.
    """
    norm = lip_norm(f)
    if norm == ZERO:
        return []
    pairs = []
    n = f.space.n_points
    for p in range(n):
        for q in range(p + 1, n):
            s = slope(f, p, q)
            if s == norm:
                pairs.append((p, q))
            elif -s == norm:
                pairs.append((q, p))
    pairs.sort()
    return pairs


def pointwise_sup(f: LipFn, p: int) -> Rat:
    """Largest absolute slope over pairs through p (a max, finitely)."""
    if f.space.n_points < 2:
        raise PreconditionError("pointwise sup needs at least two points")
    best = ZERO
    for q in f.space.points():
        if q == p:
            continue
        s = slope(f, p, q)
        if s < ZERO:
            s = -s
        if s > best:
            best = s
    return best


def defect(f: LipFn, p: int) -> Rat:
    """How far the norm exceeds what pairs through p can see; >= 0."""
    return lip_norm(f) - pointwise_sup(f, p)


def defect_sequence(fns, p: int):
    """Defects at row p across a list of functions (usually one per
    truncation size); the finite reading of attainment in the limit."""
    return [defect(f, p) for f in fns]


def add(f: LipFn, g: LipFn) -> LipFn:
    if f.space.dist != g.space.dist:
        raise PreconditionError("cannot add functions on different spaces")
    return LipFn(f.space, tuple(a + b for a, b in zip(f.values, g.values)))


def scale(f: LipFn, c) -> LipFn:
    c = rat(c)
    return LipFn(f.space, tuple(c * v for v in f.values))


def combine(fns, coeffs) -> LipFn:
    """Linear combination of the first len(coeffs) family members."""
    fns = list(fns)
    coeffs = [rat(c) for c in coeffs]
    if len(coeffs) > len(fns):
        raise PreconditionError(
            f"{len(coeffs)} coefficients for a family of {len(fns)}"
        )
    if not fns:
        raise PreconditionError("combine needs a nonempty family")
    out = zero_fn(fns[0].space)
    for c, f in zip(coeffs, fns):
        out = add(out, scale(f, c))
    return out

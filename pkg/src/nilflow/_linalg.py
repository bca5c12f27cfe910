"""Small exact linear-algebra helpers over the rationals.

Vectors are sequences of Fraction; matrices are lists of row lists.
Everything here is O(n^3) textbook Gaussian elimination, which is plenty
for Lie algebras of dimension <= a few dozen.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Vec = tuple[Fraction, ...]


def as_vec(entries: Iterable) -> Vec:
    return tuple(Fraction(e) for e in entries)


def zero_vec(dim: int) -> Vec:
    return tuple([Fraction(0)] * dim)


def unit_vec(dim: int, k: int) -> Vec:
    return tuple(Fraction(1) if i == k else Fraction(0) for i in range(dim))


def vec_add(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vec:
    return tuple(a + b for a, b in zip(u, v, strict=True))


def vec_scale(c, v: Sequence[Fraction]) -> Vec:
    c = Fraction(c)
    return tuple(c * a for a in v)


def is_zero_vec(v: Sequence[Fraction]) -> bool:
    return all(a == 0 for a in v)


def rref(rows: Sequence[Sequence[Fraction]]) -> tuple[list[Vec], list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    mat = [list(Fraction(e) for e in row) for row in rows]
    if not mat:
        return [], []
    ncols = len(mat[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        inv = 1 / mat[r][c]
        mat[r] = [e * inv for e in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    return [tuple(row) for row in mat[:r]], pivots


def span_basis(vectors: Sequence[Sequence[Fraction]]) -> list[Vec]:
    """A canonical (rref) basis of the span of the given vectors."""
    nonzero = [v for v in vectors if not is_zero_vec(v)]
    basis, _ = rref(nonzero)
    return basis


def span_dim(vectors: Sequence[Sequence[Fraction]]) -> int:
    return len(span_basis(vectors))


def in_span(v: Sequence[Fraction], basis: Sequence[Sequence[Fraction]]) -> bool:
    """True when v lies in the span of `basis`."""
    if is_zero_vec(v):
        return True
    before = span_dim(basis)
    after = span_dim(list(basis) + [tuple(v)])
    return before == after


def spans_equal(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> bool:
    return span_basis(a) == span_basis(b)

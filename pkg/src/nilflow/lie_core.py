"""Nilpotent Lie algebras from rational structure constants.

An algebra is entered by its nonzero brackets on an ordered basis
Z_1..Z_dim (1-based, matching the group-spec file grammar): the mapping
``{(a, b): {c: coeff}}`` declares [Z_a, Z_b] = sum_c coeff * Z_c for
a < b; the antisymmetric completion is implicit.  Validation checks the
Jacobi identity exactly and nilpotency through the lower central series.

A :class:`Splitting` singles out an abelian ideal A = span(Y_1..Y_m)
containing the derived subalgebra, a complement span(X_1..X_n), and the
number n1 of Y's that belong to the horizontal distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from . import _linalg as la

STEP_CAP = 10


class LieAlgebraError(ValueError):
    """Base class for algebra/splitting validation failures."""


class IndexOutOfRange(LieAlgebraError):
    pass


class JacobiViolation(LieAlgebraError):
    def __init__(self, triple: tuple[int, int, int], residual):
        self.triple = triple
        self.residual = residual
        super().__init__(f"Jacobi identity fails on basis triple {triple}")


class NotNilpotent(LieAlgebraError):
    pass


class StepCapExceeded(LieAlgebraError):
    pass


class NotAbelian(LieAlgebraError):
    pass


class DerivedNotContained(LieAlgebraError):
    pass


class BadPartition(LieAlgebraError):
    pass


class PrefixNotSubalgebra(LieAlgebraError):
    pass


class NotStratifiable(LieAlgebraError):
    pass


@dataclass(frozen=True)
class LieAlgebra:
    """Validated nilpotent Lie algebra with exact structure constants."""

    dim: int
    labels: tuple[str, ...]
    # table[a][b] = coefficient vector of [Z_a, Z_b]; 0-based, antisymmetric
    table: tuple[tuple[la.Vec, ...], ...]
    lcs_dims: tuple[int, ...] = field(default=(), compare=False)

    @property
    def step(self) -> int:
        return len(self.lcs_dims) - 1

    def bracket_basis(self, a: int, b: int) -> la.Vec:
        return self.table[a][b]

    def bracket(self, u: Sequence[Fraction], v: Sequence[Fraction]) -> la.Vec:
        out = [Fraction(0)] * self.dim
        for a, ua in enumerate(u):
            if ua == 0:
                continue
            for b, vb in enumerate(v):
                if vb == 0:
                    continue
                coers = self.table[a][b]
                f = ua * vb
                for c, w in enumerate(coers):
                    if w != 0:
                        out[c] += f * w
        return tuple(out)

    def ad_matrix(self, z: Sequence[Fraction]) -> list[list[Fraction]]:
        """Matrix of ad_z; column a holds [z, Z_a] in basis components."""
        cols = [self.bracket(z, la.unit_vec(self.dim, a)) for a in range(self.dim)]
        return [[cols[a][c] for a in range(self.dim)] for c in range(self.dim)]

    def structure_constant(self, a: int, b: int, c: int) -> Fraction:
        return self.table[a][b][c]

    def nonzero_brackets(self) -> dict[tuple[int, int], dict[int, Fraction]]:
        """1-based view of the stored brackets (a < b only)."""
        out: dict[tuple[int, int], dict[int, Fraction]] = {}
        for a in range(self.dim):
            for b in range(a + 1, self.dim):
                comp = {
                    c + 1: w for c, w in enumerate(self.table[a][b]) if w != 0
                }
                if comp:
                    out[(a + 1, b + 1)] = comp
        return out


def validate_algebra(
    constants: Mapping[tuple[int, int], Mapping[int, object]],
    dim: int,
    labels: Sequence[str] | None = None,
) -> LieAlgebra:
    """Build and validate a nilpotent Lie algebra.

    `constants` maps 1-based pairs (a, b), a < b, to {c: rational}.
    Raises IndexOutOfRange, JacobiViolation, NotNilpotent, StepCapExceeded.
    """
    if dim < 1:
        raise IndexOutOfRange(f"dimension must be positive, got {dim}")
    if labels is None:
        labels = tuple(f"Z{i}" for i in range(1, dim + 1))
    else:
        labels = tuple(labels)
        if len(labels) != dim:
            raise BadPartition(f"{len(labels)} labels for dimension {dim}")

    table = [[list(la.zero_vec(dim)) for _ in range(dim)] for _ in range(dim)]
    for (a, b), comps in constants.items():
        if not (1 <= a <= dim and 1 <= b <= dim):
            raise IndexOutOfRange(f"bracket key ({a},{b}) outside 1..{dim}")
        if a == b:
            raise IndexOutOfRange(f"diagonal bracket key ({a},{b}) is not allowed")
        if a > b:
            raise IndexOutOfRange(f"bracket key ({a},{b}) must have a < b")
        for c, coeff in comps.items():
            if not 1 <= c <= dim:
                raise IndexOutOfRange(f"bracket target {c} outside 1..{dim}")
            w = Fraction(coeff)
            table[a - 1][b - 1][c - 1] = w
            table[b - 1][a - 1][c - 1] = -w
    table_t = tuple(tuple(tuple(v) for v in row) for row in table)
    alg = LieAlgebra(dim=dim, labels=labels, table=table_t)

    for a in range(dim):
        for b in range(a + 1, dim):
            for c in range(b + 1, dim):
                ea, eb, ec = (la.unit_vec(dim, k) for k in (a, b, c))
                res = la.vec_add(
                    la.vec_add(
                        alg.bracket(alg.bracket(ea, eb), ec),
                        alg.bracket(alg.bracket(eb, ec), ea),
                    ),
                    alg.bracket(alg.bracket(ec, ea), eb),
                )
                if not la.is_zero_vec(res):
                    raise JacobiViolation((a + 1, b + 1, c + 1), res)

    dims = _lcs_dims(alg)
    object.__setattr__(alg, "lcs_dims", tuple(dims))
    return alg


def _lcs_dims(alg: LieAlgebra) -> list[int]:
    basis = [la.unit_vec(alg.dim, k) for k in range(alg.dim)]
    layer = list(basis)
    dims = [alg.dim]
    while True:
        nxt = la.span_basis(
            [alg.bracket(u, v) for u in basis for v in layer]
        )
        d = len(nxt)
        if d == dims[-1] and d > 0:
            raise NotNilpotent(
                f"lower central series stabilizes at dimension {d} > 0"
            )
        dims.append(d)
        if d == 0:
            return dims
        if len(dims) - 1 >= STEP_CAP:
            raise StepCapExceeded(f"nilpotency step exceeds cap {STEP_CAP}")
        layer = nxt


def lower_central_series(alg: LieAlgebra) -> list[list[la.Vec]]:
    """Bases of g = g^1 >= g^2 >= ... >= 0 (as rref row bases)."""
    basis = [la.unit_vec(alg.dim, k) for k in range(alg.dim)]
    out = [la.span_basis(basis)]
    layer = list(basis)
    while out[-1]:
        layer = la.span_basis([alg.bracket(u, v) for u in basis for v in layer])
        out.append(layer)
    return out


def derived_subalgebra(alg: LieAlgebra) -> list[la.Vec]:
    basis = [la.unit_vec(alg.dim, k) for k in range(alg.dim)]
    return la.span_basis([alg.bracket(u, v) for u in basis for v in basis])


def is_metabelian(alg: LieAlgebra) -> bool:
    """True when the derived subalgebra is abelian."""
    derived = derived_subalgebra(alg)
    for u in derived:
        for v in derived:
            if not la.is_zero_vec(alg.bracket(u, v)):
                return False
    return True


def is_abelian_span(alg: LieAlgebra, indices: Sequence[int]) -> bool:
    for a in indices:
        for b in indices:
            if not la.is_zero_vec(alg.bracket_basis(a, b)):
                return False
    return True


@dataclass(frozen=True)
class Splitting:
    """Adapted abelian splitting: indices are 1-based into the algebra basis.

    y_indices order fixes the Y-coordinates theta_1..theta_m; the first n1
    of them are horizontal (belong to the orthonormal distribution frame
    together with all the X's).  x_indices order fixes x_1..x_n.
    """

    y_indices: tuple[int, ...]
    x_indices: tuple[int, ...]
    n1: int

    @property
    def m(self) -> int:
        return len(self.y_indices)

    @property
    def n(self) -> int:
        return len(self.x_indices)


def check_adapted_splitting(alg: LieAlgebra, split: Splitting) -> None:
    """Validate a splitting against the algebra; raises on any defect."""
    ys = list(split.y_indices)
    xs = list(split.x_indices)
    if sorted(ys + xs) != list(range(1, alg.dim + 1)):
        raise BadPartition(
            f"splitting indices {sorted(ys + xs)} are not a partition of 1..{alg.dim}"
        )
    if not 0 <= split.n1 <= split.m:
        raise BadPartition(f"n1={split.n1} outside 0..{split.m}")
    y0 = [k - 1 for k in ys]
    if not is_abelian_span(alg, y0):
        raise NotAbelian("span(Y) is not abelian")
    y_basis = [la.unit_vec(alg.dim, k) for k in y0]
    for v in derived_subalgebra(alg):
        if not la.in_span(v, y_basis):
            raise DerivedNotContained("derived subalgebra not contained in span(Y)")
    # weak Malcev condition: each prefix of (Y_1..Y_m, X_n..X_1) spans a subalgebra
    order = [k - 1 for k in ys] + [k - 1 for k in reversed(xs)]
    for cut in range(1, alg.dim):
        prefix = order[:cut]
        span = [la.unit_vec(alg.dim, k) for k in prefix]
        for a in prefix:
            for b in prefix:
                if not la.in_span(alg.bracket_basis(a, b), span):
                    raise PrefixNotSubalgebra(
                        f"prefix of length {cut} is not a subalgebra "
                        f"(bracket of {alg.labels[a]},{alg.labels[b]} escapes)"
                    )


def malcev_order(alg: LieAlgebra, split: Splitting) -> list[str]:
    """Labels in weak Malcev order (Y_1..Y_m, X_n..X_1), after validation."""
    check_adapted_splitting(alg, split)
    order = [k - 1 for k in split.y_indices] + [
        k - 1 for k in reversed(split.x_indices)
    ]
    return [alg.labels[k] for k in order]


def stratify(alg: LieAlgebra, v1_indices: Sequence[int]) -> list[list[la.Vec]]:
    """Layers V_1, V_2, ... with V_1 = span of the given (1-based) indices.

    Checks that the layers direct-sum to the algebra and that
    [V_i, V_j] <= V_{i+j}; raises NotStratifiable otherwise.
    """
    v1 = [la.unit_vec(alg.dim, k - 1) for k in v1_indices]
    for k in v1_indices:
        if not 1 <= k <= alg.dim:
            raise IndexOutOfRange(f"index {k} outside 1..{alg.dim}")
    layers = [la.span_basis(v1)]
    if len(layers[0]) != len(v1):
        raise NotStratifiable("V_1 generators are linearly dependent")
    while True:
        nxt = la.span_basis(
            [alg.bracket(u, v) for u in layers[0] for v in layers[-1]]
        )
        if not nxt:
            break
        layers.append(nxt)
        if len(layers) > STEP_CAP:
            raise StepCapExceeded(f"stratification depth exceeds cap {STEP_CAP}")
    total = [v for layer in layers for v in layer]
    if len(total) != alg.dim or la.span_dim(total) != alg.dim:
        raise NotStratifiable(
            f"layers of dimensions {[len(l) for l in layers]} do not direct-sum "
            f"to dimension {alg.dim}"
        )
    for i, li in enumerate(layers, start=1):
        for j, lj in enumerate(layers, start=1):
            target = layers[i + j - 1] if i + j <= len(layers) else []
            for u in li:
                for v in lj:
                    w = alg.bracket(u, v)
                    if la.is_zero_vec(w):
                        continue
                    if i + j > len(layers) or not la.in_span(w, target):
                        raise NotStratifiable(
                            f"[V_{i}, V_{j}] escapes V_{i + j}"
                        )
    return layers


def exp_ad(alg: LieAlgebra, z: Sequence[Fraction] | int) -> list[list[Fraction]]:
    """Exact matrix exponential of ad_z (z a coefficient vector or 0-based index)."""
    if isinstance(z, int):
        z = la.unit_vec(alg.dim, z)
    m = alg.ad_matrix(z)
    dim = alg.dim
    out = [[Fraction(1) if i == j else Fraction(0) for j in range(dim)] for i in range(dim)]
    term = [row[:] for row in out]
    for k in range(1, dim + 1):
        term = _mat_mul(term, m)
        fact = Fraction(1, _factorial(k))
        nonzero = False
        for i in range(dim):
            for j in range(dim):
                if term[i][j] != 0:
                    nonzero = True
                    out[i][j] += fact * term[i][j]
        if not nonzero:
            break
    else:
        raise NotNilpotent("ad_z is not nilpotent within the algebra dimension")
    return out


def _mat_mul(a, b):
    n = len(a)
    return [
        [sum((a[i][k] * b[k][j] for k in range(n)), Fraction(0)) for j in range(n)]
        for i in range(n)
    ]


def _factorial(k: int) -> int:
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out

"""Second-type exponential coordinates and the polynomial frame.

Coordinates: a group element is written
    Phi(theta, x) = exp(theta_1 Y_1) ... exp(theta_m Y_m)
                    * exp(x_n X_n) ... exp(x_1 X_1),
where (Y_1..Y_m) spans the abelian ideal A and (X_1..X_n) the complement.

In these coordinates the left-invariant frame reads
    X_i = d/dx_i + sum_k A_i^k(x) d/dtheta_k
    Y_l =          sum_k beta_l^k(x) d/dtheta_k
with polynomial connection coefficients
    beta_l = Ad(x-stack) e_{Y_l},
    A_j    = (E_n ... E_j)((E_{j-1} ... E_1 - I) e_{X_j}),
    E_i    = exp(x_i ad_{X_i}).

`verify_frame_brackets` is the independent oracle for this construction:
it recomputes all frame brackets as differential-operator commutators and
compares against the structure constants, as exact polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import _linalg as la
from .lie_core import LieAlgebra, LieAlgebraError, Splitting, check_adapted_splitting
from .poly import Poly, VariableSpace, x_space


class NotMetabelian(LieAlgebraError):
    """Connection coefficients escaped the Y-coordinates."""


class FrameInconsistent(LieAlgebraError):
    def __init__(self, pair: tuple[int, int]):
        self.pair = pair
        super().__init__(
            f"frame bracket of basis pair {pair} disagrees with structure constants"
        )


PolyMat = list[list[Poly]]


def _identity(space: VariableSpace, d: int) -> PolyMat:
    one, zero = space.one(), space.zero()
    return [[one if i == j else zero for j in range(d)] for i in range(d)]


def _mat_mul(a: PolyMat, b: PolyMat) -> PolyMat:
    d = len(a)
    out = []
    for i in range(d):
        row = []
        arow = a[i]
        for j in range(d):
            acc = None
            for k in range(d):
                if arow[k].is_zero() or b[k][j].is_zero():
                    continue
                term = arow[k] * b[k][j]
                acc = term if acc is None else acc + term
            row.append(acc if acc is not None else arow[0].space.zero())
        out.append(row)
    return out


def _mat_vec(a: PolyMat, v: list[Poly]) -> list[Poly]:
    d = len(a)
    out = []
    for i in range(d):
        acc = a[0][0].space.zero()
        for k in range(d):
            if not (a[i][k].is_zero() or v[k].is_zero()):
                acc = acc + a[i][k] * v[k]
        out.append(acc)
    return out


def _exp_x_ad(alg: LieAlgebra, basis_index: int, xvar: Poly, space: VariableSpace) -> PolyMat:
    """exp(x * ad_{Z_basis_index}) as a polynomial matrix."""
    ad = alg.ad_matrix(la.unit_vec(alg.dim, basis_index))
    d = alg.dim
    out = _identity(space, d)
    term = [[space.const(ad[i][j]) for j in range(d)] for i in range(d)]
    k = 1
    xpow = xvar
    while any(not e.is_zero() for row in term for e in row):
        inv_fact = Fraction(1, _fact(k))
        for i in range(d):
            for j in range(d):
                if not term[i][j].is_zero():
                    out[i][j] = out[i][j] + term[i][j] * inv_fact * xpow
        # next power of ad
        nxt = [[space.zero()] * d for _ in range(d)]
        for i in range(d):
            for j in range(d):
                acc = space.zero()
                for t in range(d):
                    if ad[i][t] != 0 and not term[t][j].is_zero():
                        acc = acc + term[t][j] * ad[i][t]
                nxt[i][j] = acc
        term = nxt
        k += 1
        xpow = xpow * xvar
        if k > alg.dim + 1:
            raise LieAlgebraError("ad power did not nilpotize")  # pragma: no cover
    return out


def _fact(k: int) -> int:
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


@dataclass(frozen=True)
class Connection:
    """Connection coefficients of a validated splitting.

    A[i][k] and beta[l][k] are polynomials on x_space(n); i runs over the
    X's (0-based), l over the Y's, k over the Y-coordinates.
    """

    alg: LieAlgebra
    split: Splitting
    space: VariableSpace  # x_space(n)
    A: tuple[tuple[Poly, ...], ...]
    beta: tuple[tuple[Poly, ...], ...]

    @property
    def n(self) -> int:
        return self.split.n

    @property
    def m(self) -> int:
        return self.split.m

    def max_degree(self) -> int:
        degs = [p.degree() for row in self.A for p in row]
        degs += [p.degree() for row in self.beta for p in row]
        return max(degs)


def compute_connection(alg: LieAlgebra, split: Splitting) -> Connection:
    """Polynomial connection coefficients A_i, beta_l for the splitting."""
    check_adapted_splitting(alg, split)
    n, m, d = split.n, split.m, alg.dim
    xs = x_space(n)
    xvars = [xs.var(f"x{i}") for i in range(1, n + 1)]
    E = [
        _exp_x_ad(alg, split.x_indices[i] - 1, xvars[i], xs) for i in range(n)
    ]
    prefix = [_identity(xs, d)]  # prefix[j] = E_j ... E_1
    for j in range(n):
        prefix.append(_mat_mul(E[j], prefix[-1]))
    suffix: list = [None] * (n + 2)
    suffix[n + 1] = _identity(xs, d)
    for j in range(n, 0, -1):  # suffix[j] = E_n ... E_j
        suffix[j] = _mat_mul(suffix[j + 1], E[j - 1])
    ad_full = suffix[1] if n else _identity(xs, d)

    y_pos = [k - 1 for k in split.y_indices]
    x_pos = [k - 1 for k in split.x_indices]

    A_rows: list[tuple[Poly, ...]] = []
    for j in range(1, n + 1):
        ej = [xs.one() if t == x_pos[j - 1] else xs.zero() for t in range(d)]
        w = _mat_vec(prefix[j - 1], ej)
        w = [a - b for a, b in zip(w, ej)]
        vec = _mat_vec(suffix[j], w)
        for k in x_pos:
            if not vec[k].is_zero():
                raise NotMetabelian(
                    f"A_{j} has a component on {alg.labels[k]} outside span(Y)"
                )
        A_rows.append(tuple(vec[k] for k in y_pos))
    beta_rows: list[tuple[Poly, ...]] = []
    for l in range(m):
        el = [xs.one() if t == y_pos[l] else xs.zero() for t in range(d)]
        vec = _mat_vec(ad_full, el)
        for k in x_pos:
            if not vec[k].is_zero():
                raise NotMetabelian(
                    f"beta_{l + 1} has a component on {alg.labels[k]} outside span(Y)"
                )
        beta_rows.append(tuple(vec[k] for k in y_pos))
    return Connection(
        alg=alg, split=split, space=xs, A=tuple(A_rows), beta=tuple(beta_rows)
    )


@dataclass(frozen=True)
class Frame:
    """Left-invariant frame in coordinates, one field per basis element.

    Each field is (x_part, y_part): coefficient polynomials (over x only)
    of d/dx_1..d/dx_n and d/dtheta_1..d/dtheta_m.
    """

    conn: Connection
    # keyed by 0-based algebra basis index
    fields: tuple[tuple[tuple[Poly, ...], tuple[Poly, ...]], ...]

    def field(self, basis_index: int):
        return self.fields[basis_index]

    def display(self) -> str:
        alg, split = self.conn.alg, self.conn.split
        lines = []
        for k in range(alg.dim):
            x_part, y_part = self.fields[k]
            pieces = []
            for i, p in enumerate(x_part, start=1):
                pieces.extend(_field_terms(p, f"d/dx{i}"))
            for l, p in enumerate(y_part, start=1):
                pieces.extend(_field_terms(p, f"d/dt{l}"))
            lines.append(f"{alg.labels[k]} = " + (" + ".join(pieces) if pieces else "0"))
        return "\n".join(lines)


def _field_terms(p: Poly, direction: str) -> list[str]:
    if p.is_zero():
        return []
    if p == p.space.one():
        return [direction]
    text = p.text()
    if " " in text:
        text = f"({text})"
    return [f"{text}*{direction}"]


def coordinate_frame(conn: Connection) -> Frame:
    n, m = conn.n, conn.m
    xs = conn.space
    zero, one = xs.zero(), xs.one()
    fields: list = [None] * conn.alg.dim
    for i in range(n):
        x_part = tuple(one if t == i else zero for t in range(n))
        fields[conn.split.x_indices[i] - 1] = (x_part, conn.A[i])
    for l in range(m):
        fields[conn.split.y_indices[l] - 1] = ((zero,) * n, conn.beta[l])
    return Frame(conn=conn, fields=tuple(fields))


@dataclass(frozen=True)
class FrameCheckReport:
    ok: bool
    failures: tuple[tuple[int, int], ...]  # 1-based basis pairs

    def raise_if_failed(self) -> None:
        if not self.ok:
            raise FrameInconsistent(self.failures[0])


def verify_frame_brackets(alg: LieAlgebra, frame: Frame) -> FrameCheckReport:
    """Independent oracle: recompute [Z_a, Z_b] as vector-field commutators.

    The frame coefficients depend on x only, so the commutator of
    U = sum u_i d/dx_i + sum u'_k d/dtheta_k and V likewise has
    components sum_j (u_j d_j v_k - v_j d_j u_k), with j over x-variables.
    The result must match sum_c C_{ab}^c Z_c as exact polynomials.
    """
    n, m = frame.conn.n, frame.conn.m
    failures: list[tuple[int, int]] = []
    for a in range(alg.dim):
        for b in range(a + 1, alg.dim):
            ux, uy = frame.fields[a]
            vx, vy = frame.fields[b]
            comm_x = [
                _commutator_component(ux, vx, ux, vx, k, n) for k in range(n)
            ]
            comm_y = [
                _commutator_component(ux, vx, uy, vy, k, m) for k in range(m)
            ]
            struct = alg.bracket_basis(a, b)
            exp_x = [frame.conn.space.zero() for _ in range(n)]
            exp_y = [frame.conn.space.zero() for _ in range(m)]
            for c, w in enumerate(struct):
                if w == 0:
                    continue
                wx, wy = frame.fields[c]
                exp_x = [e + p * w for e, p in zip(exp_x, wx)]
                exp_y = [e + p * w for e, p in zip(exp_y, wy)]
            if any(not (p - q).is_zero() for p, q in zip(comm_x, exp_x)) or any(
                not (p - q).is_zero() for p, q in zip(comm_y, exp_y)
            ):
                failures.append((a + 1, b + 1))
    return FrameCheckReport(ok=not failures, failures=tuple(failures))


def _commutator_component(ux, vx, utarget, vtarget, k: int, size: int) -> Poly:
    """k-th target component of [U, V]: sum_j (u_j d_j v_k - v_j d_j u_k)."""
    space = ux[0].space if ux else utarget[0].space
    acc = space.zero()
    for j in range(len(ux)):
        var = space.names[j]
        if not ux[j].is_zero():
            acc = acc + ux[j] * vtarget[k].partial(var)
        if not vx[j].is_zero():
            acc = acc - vx[j] * utarget[k].partial(var)
    return acc

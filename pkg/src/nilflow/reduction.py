"""Normal Hamiltonian and its symplectic reductions, in closed polynomial form.

On the full phase space T*R^(n+m) (variables p_x, p_t, x, t):

    H = 1/2 sum_i (p_x_i + <p_t, A_i(x)>)^2 + 1/2 sum_{l<=n1} <p_t, beta_l(x)>^2.

H does not depend on theta, so p_t is conserved; substituting p_t = mu
gives the reduced Hamiltonian H_mu on T*R^n.  With symbolic mu the
substitution uses parameters a_1..a_m, reproducing closed-form families.

`build_group_from_potential` inverts the construction: any finite family
of polynomial potentials F_1..F_k on R^n is realized as <mu, beta_l> on a
concrete Carnot group, so that the reduction is 1/2|p|^2 + 1/2 sum F_l^2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .coords import Connection, compute_connection
from .lie_core import LieAlgebra, LieAlgebraError, Splitting, validate_algebra
from .poly import Poly, VariableSpace, phase_space, reduced_space

SYMBOLIC = "symbolic"


class EmptyPotential(LieAlgebraError):
    """build_group_from_potential needs at least one potential."""


def full_hamiltonian(conn: Connection) -> Poly:
    """The normal Hamiltonian on phase_space(n, m); free of theta."""
    n, m = conn.n, conn.m
    space = phase_space(n, m)
    p_x = [space.var(f"p_x{i}") for i in range(1, n + 1)]
    p_t = [space.var(f"p_t{l}") for l in range(1, m + 1)]
    H = space.zero()
    for i in range(n):
        term = p_x[i]
        for k in range(m):
            a = conn.A[i][k]
            if not a.is_zero():
                term = term + a.embed(space) * p_t[k]
        H = H + term * term * Fraction(1, 2)
    for l in range(conn.split.n1):
        term = space.zero()
        for k in range(m):
            b = conn.beta[l][k]
            if not b.is_zero():
                term = term + b.embed(space) * p_t[k]
        H = H + term * term * Fraction(1, 2)
    return H


def momentum_functions(conn: Connection) -> dict[str, Poly]:
    """Frame momenta P_Z = <p, Z> on the full phase space, keyed by label."""
    n, m = conn.n, conn.m
    space = phase_space(n, m)
    p_t = [space.var(f"p_t{l}") for l in range(1, m + 1)]
    out: dict[str, Poly] = {}
    for i in range(n):
        P = space.var(f"p_x{i + 1}")
        for k in range(m):
            a = conn.A[i][k]
            if not a.is_zero():
                P = P + a.embed(space) * p_t[k]
        out[conn.alg.labels[conn.split.x_indices[i] - 1]] = P
    for l in range(m):
        P = space.zero()
        for k in range(m):
            b = conn.beta[l][k]
            if not b.is_zero():
                P = P + b.embed(space) * p_t[k]
        out[conn.alg.labels[conn.split.y_indices[l] - 1]] = P
    return out


def momentum_of(point: Sequence[float], n: int, m: int) -> tuple:
    """The conserved momentum block p_t of a full phase point."""
    if len(point) != 2 * (n + m):
        raise ValueError(f"full phase point must have {2 * (n + m)} entries")
    return tuple(point[n : n + m])


MuLike = Union[str, Sequence]


@dataclass(frozen=True)
class ReducedSystem:
    """Reduced Hamiltonian data at momentum mu (numeric or symbolic).

    H lives on reduced_space(n) (plus parameters a_1..a_m when symbolic);
    V_mu = sum_{l<=n1} <mu,beta_l>^2 and F_i = sum_{l<=n1} <mu,beta_l> beta_l^i.
    """

    conn: Connection
    mu: tuple | None  # None when symbolic
    space: VariableSpace
    H: Poly
    V: Poly
    F_all: tuple[Poly, ...]  # i = 1..m, in Y-coordinate order

    @property
    def n(self) -> int:
        return self.conn.n

    @property
    def n1(self) -> int:
        return self.conn.split.n1

    @property
    def symbolic(self) -> bool:
        return self.mu is None

    def F_functions(self, widen: bool = False) -> tuple[Poly, ...]:
        """F_i for i = 1..n1 (default) or 1..m (widen=True)."""
        return self.F_all if widen else self.F_all[: self.n1]


def reduce(conn: Connection, mu: MuLike = SYMBOLIC) -> ReducedSystem:
    """Substitute p_t = mu into the normal Hamiltonian.

    mu: sequence of m rationals, or the string "symbolic" for parameters
    a_1..a_m.
    """
    n, m = conn.n, conn.m
    if isinstance(mu, str):
        if mu != SYMBOLIC:
            raise ValueError(f"unknown momentum spec {mu!r}")
        space = reduced_space(n, tuple(f"a{l}" for l in range(1, m + 1)))
        mu_vals: list = [space.var(f"a{l}") for l in range(1, m + 1)]
        mu_out = None
    else:
        mu_t = tuple(Fraction(v) for v in mu)
        if len(mu_t) != m:
            raise ValueError(f"momentum must have {m} components, got {len(mu_t)}")
        space = reduced_space(n)
        mu_vals = [space.const(v) for v in mu_t]
        mu_out = mu_t

    p_x = [space.var(f"p_x{i}") for i in range(1, n + 1)]

    def pair_with_mu(coeffs: Sequence[Poly]) -> Poly:
        acc = space.zero()
        for k in range(m):
            if not coeffs[k].is_zero():
                acc = acc + coeffs[k].embed(space) * mu_vals[k]
        return acc

    H = space.zero()
    for i in range(n):
        term = p_x[i] + pair_with_mu(conn.A[i])
        H = H + term * term * Fraction(1, 2)
    V = space.zero()
    mu_beta = [pair_with_mu(conn.beta[l]) for l in range(m)]
    for l in range(conn.split.n1):
        H = H + mu_beta[l] * mu_beta[l] * Fraction(1, 2)
        V = V + mu_beta[l] * mu_beta[l]
    F_all = []
    for i in range(m):
        acc = space.zero()
        for l in range(conn.split.n1):
            comp = conn.beta[l][i]
            if not comp.is_zero():
                acc = acc + mu_beta[l] * comp.embed(space)
        F_all.append(acc)
    return ReducedSystem(
        conn=conn, mu=mu_out, space=space, H=H, V=V, F_all=tuple(F_all)
    )


def reduce_from_full(H_full: Poly, n: int, m: int, mu: Sequence) -> Poly:
    """Alternative reduction path (used as a cross-check in tests):
    substitute p_t_l -> mu_l in the full Hamiltonian and re-embed."""
    mu_t = [Fraction(v) for v in mu]
    sub = {f"p_t{l}": mu_t[l - 1] for l in range(1, m + 1)}
    sub.update({f"t{l}": 0 for l in range(1, m + 1)})
    collapsed = H_full.substitute(sub)
    return collapsed.embed(reduced_space(n))


def _monomials_upto(nvars: int, maxdeg: int) -> list[tuple[int, ...]]:
    """All exponent multi-indices with |I| <= maxdeg, graded, I=0 first."""
    out: list[tuple[int, ...]] = []
    for d in range(maxdeg + 1):
        level = sorted(
            (
                exp
                for exp in itertools.product(range(d + 1), repeat=nvars)
                if sum(exp) == d
            ),
            reverse=True,
        )
        out.extend(level)
    return out


def build_group_from_potential(
    potentials: Sequence[Poly],
) -> tuple[LieAlgebra, Splitting, tuple[Fraction, ...]]:
    """Realize polynomial potentials F_1..F_k as <mu, beta_l> on a Carnot group.

    The potentials live on a common x_space(n).  Basis: X_1..X_n plus, for
    each l, one generator T_{l,I} per monomial x^I with |I| <= max degree;
    brackets [X_i, T_{l,I}] = (I_i + 1) T_{l,I+e_i}.  The splitting takes
    all T's as Y-coordinates with the k degree-zero ones first (n1 = k),
    and mu reads off the potentials' coefficients, so that
    <mu, beta_{Y_l}> = F_l and the reduction is 1/2|p|^2 + 1/2 sum F_l^2.
    """
    pots = list(potentials)
    if not pots:
        raise EmptyPotential("at least one potential is required")
    space = pots[0].space
    for f in pots[1:]:
        if f.space is not space:
            raise EmptyPotential("potentials must share one variable space")
    nvars = space.dim
    k = len(pots)
    maxdeg = max(max((f.degree() for f in pots)), 0)

    monos = _monomials_upto(nvars, maxdeg)
    mono_pos = {I: j for j, I in enumerate(monos)}
    n_mono = len(monos)

    # basis order: X_1..X_n, then Y_1..Y_k (the I=0 generators), then the
    # remaining T_{l,I} grouped by l, graded by |I|
    labels = [f"X{i}" for i in range(1, nvars + 1)]
    index_of: dict[tuple[int, int], int] = {}  # (l, mono idx) -> basis idx (0-based)
    for l in range(k):
        index_of[(l, 0)] = nvars + l
        labels.append(f"Y{l + 1}" if k > 1 else "Y1")
    for l in range(k):
        for j in range(1, n_mono):
            index_of[(l, j)] = len(labels)
            digits = "".join(str(e) for e in monos[j])
            labels.append(f"Y{l + 1}_{digits}")

    constants: dict[tuple[int, int], dict[int, Fraction]] = {}
    for i in range(nvars):
        for l in range(k):
            for j, I in enumerate(monos):
                if sum(I) + 1 > maxdeg:
                    continue
                target = list(I)
                target[i] += 1
                jt = mono_pos[tuple(target)]
                a = i + 1
                b = index_of[(l, j)] + 1
                key = (min(a, b), max(a, b))
                coeff = Fraction(I[i] + 1)
                if a > b:
                    coeff = -coeff
                constants.setdefault(key, {})[index_of[(l, jt)] + 1] = coeff

    dim = nvars + k * n_mono
    alg = validate_algebra(constants, dim, labels)
    y_indices = tuple(
        index_of[(l, 0)] + 1 for l in range(k)
    ) + tuple(
        index_of[(l, j)] + 1 for l in range(k) for j in range(1, n_mono)
    )
    split = Splitting(
        y_indices=y_indices, x_indices=tuple(range(1, nvars + 1)), n1=k
    )

    mu = [Fraction(0)] * len(y_indices)
    pos_in_y = {idx: pos for pos, idx in enumerate(y_indices)}
    for l, f in enumerate(pots):
        for exp, c in f.terms.items():
            j = mono_pos[exp]
            mu[pos_in_y[index_of[(l, j)] + 1]] = c
    return alg, split, tuple(mu)


def reduced_system_for_potentials(potentials: Sequence[Poly]) -> ReducedSystem:
    """Convenience: build the group and reduce at its defining momentum."""
    alg, split, mu = build_group_from_potential(potentials)
    conn = compute_connection(alg, split)
    return reduce(conn, mu)

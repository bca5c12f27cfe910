"""Built-in, pre-validated group definitions.

Every entry is checked on load: the structure constants pass the Jacobi
validator, the algebra is metabelian, the splitting is adapted, the
coordinate frame satisfies the bracket oracle, and — where a closed-form
reduced Hamiltonian is pinned — reduce() reproduces it exactly.

Names: heisenberg, f23, f24, n6_2_5a, eng(n) for n >= 1, and
potential(F1; F2; ...) where each F is a polynomial in x1..xn (bare x
means x1) with rational coefficients, e.g. potential(x^2) or
potential(x1*x2; 1/2*x1^2 - x2).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .coords import Connection, compute_connection, coordinate_frame, verify_frame_brackets
from .lie_core import (
    LieAlgebra,
    Splitting,
    check_adapted_splitting,
    is_metabelian,
    validate_algebra,
)
from .poly import Poly, VariableSpace, reduced_space, x_space
from .reduction import SYMBOLIC, ReducedSystem, build_group_from_potential, reduce


class UnknownEntry(KeyError):
    """No catalog entry under that name."""


class BadParameter(ValueError):
    """A parametric catalog name carries an unusable parameter."""


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    alg: LieAlgebra
    split: Splitting
    note: str
    golden: str | None  # canonical text of the pinned reduced Hamiltonian
    mu_default: tuple | None = None  # potential(...) entries fix a momentum
    _golden_poly: Poly | None = None

    def connection(self) -> Connection:
        return compute_connection(self.alg, self.split)

    def reduced(self, mu=SYMBOLIC) -> ReducedSystem:
        return reduce(self.connection(), mu)

    @property
    def dim(self) -> int:
        return self.alg.dim


# ---------------------------------------------------------------------------
# fixed entries
# ---------------------------------------------------------------------------


def _golden_space(n: int, m: int) -> VariableSpace:
    return reduced_space(n, tuple(f"a{l}" for l in range(1, m + 1)))


def _heisenberg() -> tuple[LieAlgebra, Splitting, Poly, str]:
    alg = validate_algebra({(1, 2): {3: 1}}, 3, ["X1", "X2", "Y1"])
    split = Splitting(y_indices=(3,), x_indices=(1, 2), n1=0)
    s = _golden_space(2, 1)
    p1, p2, x1, a1 = s.var("p_x1"), s.var("p_x2"), s.var("x1"), s.var("a1")
    w = p2 + a1 * x1
    golden = p1 * p1 * Fraction(1, 2) + w * w * Fraction(1, 2)
    return alg, split, golden, "rank-2 step-2 group, one bracket [X1,X2] = Y1"


def _f23() -> tuple[LieAlgebra, Splitting, Poly, str]:
    constants = {(1, 2): {3: 1}, (1, 3): {4: 1}, (2, 3): {5: 1}}
    alg = validate_algebra(constants, 5, ["X1", "X2", "Y1", "Y2", "Y3"])
    split = Splitting(y_indices=(3, 4, 5), x_indices=(1, 2), n1=0)
    s = _golden_space(2, 3)
    p1, p2 = s.var("p_x1"), s.var("p_x2")
    x1, x2 = s.var("x1"), s.var("x2")
    a1, a2, a3 = s.var("a1"), s.var("a2"), s.var("a3")
    w = p2 + a1 * x1 + a2 * x1 * x1 * Fraction(1, 2) + a3 * x1 * x2
    golden = p1 * p1 * Fraction(1, 2) + w * w * Fraction(1, 2)
    return alg, split, golden, "free-nilpotent of rank 2 and step 3 (Cartan group)"


def _n6_2_5a() -> tuple[LieAlgebra, Splitting, Poly, str]:
    constants = {
        (1, 2): {3: 1},
        (1, 3): {4: 1},
        (2, 3): {5: 1},
        (1, 4): {6: 1},
        (2, 5): {6: 1},
    }
    alg = validate_algebra(constants, 6, ["X1", "X2", "Y1", "Y2", "Y3", "Y4"])
    split = Splitting(y_indices=(3, 4, 5, 6), x_indices=(1, 2), n1=0)
    s = _golden_space(2, 4)
    p1, p2 = s.var("p_x1"), s.var("p_x2")
    x1, x2 = s.var("x1"), s.var("x2")
    a1, a2, a3, a4 = (s.var(f"a{k}") for k in range(1, 5))
    w = (
        p2
        + a1 * x1
        + a2 * x1 * x1 * Fraction(1, 2)
        + a3 * x1 * x2
        + a4 * (x1 * x1 * x1 * Fraction(1, 6) + x1 * x2 * x2 * Fraction(1, 2))
    )
    golden = p1 * p1 * Fraction(1, 2) + w * w * Fraction(1, 2)
    return alg, split, golden, "six-dimensional rank-2 step-4 Carnot group with fused top bracket"


def _f24() -> tuple[LieAlgebra, Splitting, Poly, str]:
    constants = {
        (1, 2): {3: 1},
        (1, 3): {4: 1},
        (2, 3): {5: 1},
        (1, 4): {6: 1},
        (1, 5): {7: 1},
        (2, 4): {7: 1},
        (2, 5): {8: 1},
    }
    labels = ["X1", "X2"] + [f"Y{k}" for k in range(1, 7)]
    alg = validate_algebra(constants, 8, labels)
    split = Splitting(y_indices=tuple(range(3, 9)), x_indices=(1, 2), n1=0)
    s = _golden_space(2, 6)
    p1, p2 = s.var("p_x1"), s.var("p_x2")
    x1, x2 = s.var("x1"), s.var("x2")
    a = {k: s.var(f"a{k}") for k in range(1, 7)}
    w = (
        p2
        + a[1] * x1
        + a[2] * x1 * x1 * Fraction(1, 2)
        + a[3] * x1 * x2
        + a[4] * x1 * x1 * x1 * Fraction(1, 6)
        + a[5] * x1 * x1 * x2 * Fraction(1, 2)
        + a[6] * x1 * x2 * x2 * Fraction(1, 2)
    )
    golden = p1 * p1 * Fraction(1, 2) + w * w * Fraction(1, 2)
    return alg, split, golden, "free-nilpotent of rank 2 and step 4"


def eng_group(n: int) -> tuple[LieAlgebra, Splitting]:
    """Engel-type group of rank n: [X_i, Y_0] = Y_i, [X_i, Y_i] = Y_{n+1}."""
    if not isinstance(n, int) or n < 1:
        raise BadParameter(f"eng(n) needs an integer n >= 1, got {n!r}")
    if n > 32:
        raise BadParameter(f"eng({n}) exceeds the catalog cap n <= 32")
    dim = 2 * n + 2
    labels = [f"X{i}" for i in range(1, n + 1)] + [f"Y{j}" for j in range(0, n + 2)]
    constants: dict[tuple[int, int], dict[int, int]] = {}
    for i in range(1, n + 1):
        constants[(i, n + 1)] = {n + 1 + i: 1}  # [X_i, Y_0] = Y_i
        constants[(i, n + 1 + i)] = {dim: 1}  # [X_i, Y_i] = Y_{n+1}
    alg = validate_algebra(constants, dim, labels)
    split = Splitting(
        y_indices=tuple(range(n + 1, dim + 1)), x_indices=tuple(range(1, n + 1)), n1=1
    )
    return alg, split


def _eng_entry(n: int) -> tuple[LieAlgebra, Splitting, Poly, str]:
    alg, split = eng_group(n)
    m = n + 2
    s = _golden_space(n, m)
    golden = s.zero()
    for i in range(1, n + 1):
        p = s.var(f"p_x{i}")
        golden = golden + p * p * Fraction(1, 2)
    w = s.var("a1")
    norm2 = s.zero()
    for i in range(1, n + 1):
        xi = s.var(f"x{i}")
        w = w + s.var(f"a{1 + i}") * xi
        norm2 = norm2 + xi * xi
    w = w + s.var(f"a{n + 2}") * norm2 * Fraction(1, 2)
    golden = golden + w * w * Fraction(1, 2)
    return alg, split, golden, f"Engel-type group of rank {n} (one horizontal Y)"


# ---------------------------------------------------------------------------
# potential(...) parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<var>x\d*)|(?P<op>[\^*+-]))")


def _parse_potential_expr(text: str) -> Poly:
    """Parse one polynomial in x1..xn (bare `x` = x1), rational coefficients.

    Grammar: sum of terms; term = factors joined by `*`; factor = rational
    or x<i>[^k].  No parentheses — this covers the monomial sums the
    potential construction takes.
    """
    tokens: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            if text[pos:].strip() == "":
                break
            raise BadParameter(f"cannot read potential near {text[pos:pos + 12]!r}")
        for kind in ("num", "var", "op"):
            if mt.group(kind):
                tokens.append((kind, mt.group(kind)))
        pos = mt.end()
    if not tokens:
        raise BadParameter("empty potential expression")

    max_var = 1
    for kind, val in tokens:
        if kind == "var":
            max_var = max(max_var, int(val[1:]) if len(val) > 1 else 1)
    space = x_space(max_var)

    out = space.zero()
    term: Poly | None = None
    sign = 1
    expect_factor = True
    i = 0
    while i < len(tokens):
        kind, val = tokens[i]
        if expect_factor:
            if kind == "op" and val in "+-":
                sign = -sign if val == "-" else sign
                i += 1
                continue
            if kind == "num":
                factor = space.const(Fraction(val))
            elif kind == "var":
                idx = int(val[1:]) if len(val) > 1 else 1
                factor = space.var(f"x{idx}")
                if i + 2 < len(tokens) and tokens[i + 1] == ("op", "^"):
                    k_kind, k_val = tokens[i + 2]
                    if k_kind != "num" or "/" in k_val:
                        raise BadParameter(f"exponent must be an integer, got {k_val!r}")
                    factor = factor ** int(k_val)
                    i += 2
            else:
                raise BadParameter(f"unexpected {val!r} in potential")
            term = factor if term is None else term * factor
            expect_factor = False
            i += 1
            continue
        if kind == "op" and val == "*":
            expect_factor = True
            i += 1
            continue
        if kind == "op" and val in "+-":
            out = out + term * sign
            term, sign, expect_factor = None, 1 if val == "+" else -1, True
            i += 1
            continue
        raise BadParameter(f"unexpected {val!r} in potential")
    if expect_factor or term is None:
        raise BadParameter("potential expression ends mid-term")
    return out + term * sign


def _potential_entry(body: str) -> CatalogEntry:
    parts = [p for p in body.split(";") if p.strip()]
    if not parts:
        raise BadParameter("potential(...) needs at least one polynomial")
    polys = [_parse_potential_expr(p) for p in parts]
    spaces = sorted({p.space.dim for p in polys})
    if len(spaces) > 1:
        target = x_space(spaces[-1])
        polys = [p.embed(target) for p in polys]
    alg, split, mu = build_group_from_potential(polys)
    if alg.dim > 64:
        raise BadParameter(f"potential group dimension {alg.dim} exceeds the cap 64")
    n = len(split.x_indices)
    space = reduced_space(n)
    golden = space.zero()
    for i in range(1, n + 1):
        p = space.var(f"p_x{i}")
        golden = golden + p * p * Fraction(1, 2)
    for f in polys:
        g = f.embed(space)
        golden = golden + g * g * Fraction(1, 2)
    name = f"potential({'; '.join(p.strip() for p in parts)})"
    return _validated(
        CatalogEntry(
            name=name,
            alg=alg,
            split=split,
            note=f"electric-potential construction on {len(polys)} polynomial(s)",
            golden=golden.text(),
            mu_default=mu,
            _golden_poly=golden,
        )
    )


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


def _validated(entry: CatalogEntry) -> CatalogEntry:
    if not is_metabelian(entry.alg):
        raise AssertionError(f"catalog entry {entry.name} is not metabelian")
    check_adapted_splitting(entry.alg, entry.split)
    conn = entry.connection()
    verify_frame_brackets(entry.alg, coordinate_frame(conn)).raise_if_failed()
    if entry._golden_poly is not None:
        system = reduce(conn, entry.mu_default if entry.mu_default is not None else SYMBOLIC)
        if system.H != entry._golden_poly:
            raise AssertionError(
                f"catalog entry {entry.name}: reduced Hamiltonian does not match its "
                f"pinned closed form\n  built:  {system.H.text()}\n  pinned: {entry.golden}"
            )
    return entry


_FIXED = {
    "heisenberg": _heisenberg,
    "f23": _f23,
    "f24": _f24,
    "n6_2_5a": _n6_2_5a,
}


def names() -> tuple[str, ...]:
    """Concrete entry names; eng(n) and potential(...) are parametric."""
    return ("heisenberg", "f23", "f24", "n6_2_5a", "eng(1)", "eng(2)")


@lru_cache(maxsize=64)
def get(name: str) -> CatalogEntry:
    key = name.strip().lower().replace(" ", "")
    if key in _FIXED:
        alg, split, golden, note = _FIXED[key]()
        return _validated(
            CatalogEntry(
                name=key,
                alg=alg,
                split=split,
                note=note,
                golden=golden.text(),
                _golden_poly=golden,
            )
        )
    m = re.fullmatch(r"eng\((\d+)\)", key)
    if m:
        n = int(m.group(1))
        alg, split, golden, note = _eng_entry(n)
        return _validated(
            CatalogEntry(
                name=f"eng({n})",
                alg=alg,
                split=split,
                note=note,
                golden=golden.text(),
                _golden_poly=golden,
            )
        )
    m = re.fullmatch(r"potential\((.*)\)", name.strip(), flags=re.IGNORECASE | re.DOTALL)
    if m:
        return _potential_entry(m.group(1))
    raise UnknownEntry(
        f"{name!r}; known: heisenberg, f23, f24, n6_2_5a, eng(n), potential(...)"
    )


def export_spec(entry: CatalogEntry) -> str:
    """Render an entry in the group-spec file format (round-trips through
    the command-line parser)."""
    lines = [f"# {entry.name}: {entry.note}", f"dim = {entry.alg.dim}"]
    lines.append("labels = " + " ".join(entry.alg.labels))
    for (a, b), column in sorted(entry.alg.nonzero_brackets().items()):
        for c, coeff in sorted(column.items()):
            lines.append(f"bracket {a} {b} {c} {coeff}")
    lines.append("splitting.y = " + " ".join(str(k) for k in entry.split.y_indices))
    lines.append("splitting.x = " + " ".join(str(k) for k in entry.split.x_indices))
    lines.append(f"splitting.n1 = {entry.split.n1}")
    return "\n".join(lines) + "\n"

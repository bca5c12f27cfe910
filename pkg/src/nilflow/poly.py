"""Exact sparse multivariate polynomial arithmetic over the rationals.

A :class:`Poly` is an immutable map from exponent tuples to ``Fraction``
coefficients, attached to a :class:`VariableSpace` that fixes the variable
order and declares which variables form canonically conjugate
(momentum, coordinate) pairs.  The Poisson bracket runs over those pairs
only; remaining variables act as symbolic parameters.

Canonical text output orders terms by graded reverse lexicographic order
(grevlex), descending, so equal polynomials always print identically.

All arithmetic is exact.  Total degrees are capped (default 64) to turn
runaway products into errors instead of memory exhaustion.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

DEGREE_CAP = 64

Rational = Union[int, Fraction, str]


class UnknownVariable(KeyError):
    """A variable name is not present in the target space."""


class DimensionMismatch(ValueError):
    """Operands live in different variable spaces or a point has wrong length."""


class DegreeCapExceeded(ArithmeticError):
    """A product pushed some monomial beyond the global degree cap."""


_space_cache: dict[tuple, "VariableSpace"] = {}


class VariableSpace:
    """Ordered variable set with optional conjugate (momentum, coordinate) pairs.

    Instances are interned: constructing the same (names, pairs) twice
    yields the same object, so space identity checks are cheap and
    reliable.
    """

    __slots__ = ("names", "pairs", "_index")

    def __new__(cls, names: Sequence[str], pairs: Sequence[tuple[int, int]] = ()):
        key = (tuple(names), tuple(tuple(p) for p in pairs))
        cached = _space_cache.get(key)
        if cached is not None:
            return cached
        self = object.__new__(cls)
        self.names = key[0]
        self.pairs = key[1]
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate variable names")
        for p, q in self.pairs:
            if not (0 <= p < len(self.names) and 0 <= q < len(self.names)):
                raise ValueError("conjugate pair index out of range")
        self._index = {n: i for i, n in enumerate(self.names)}
        _space_cache[key] = self
        return self

    @property
    def dim(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownVariable(name) from None

    def var(self, name: str) -> "Poly":
        exp = [0] * self.dim
        exp[self.index(name)] = 1
        return Poly(self, {tuple(exp): Fraction(1)})

    def vars(self) -> list["Poly"]:
        return [self.var(n) for n in self.names]

    def zero(self) -> "Poly":
        return Poly(self, {})

    def one(self) -> "Poly":
        return self.const(1)

    def const(self, c: Rational) -> "Poly":
        c = Fraction(c)
        if c == 0:
            return Poly(self, {})
        return Poly(self, {(0,) * self.dim: c})

    def __repr__(self) -> str:
        return f"VariableSpace({', '.join(self.names)})"


def phase_space(n: int, m: int) -> VariableSpace:
    """T*R^(n+m) with momenta (p_x1..p_xn, p_t1..p_tm) and coordinates (x, t)."""
    names = (
        [f"p_x{i}" for i in range(1, n + 1)]
        + [f"p_t{l}" for l in range(1, m + 1)]
        + [f"x{i}" for i in range(1, n + 1)]
        + [f"t{l}" for l in range(1, m + 1)]
    )
    pairs = [(i, n + m + i) for i in range(n + m)]
    return VariableSpace(names, pairs)


def reduced_space(n: int, params: Sequence[str] = ()) -> VariableSpace:
    """T*R^n with optional trailing symbolic parameters (no conjugates)."""
    names = (
        [f"p_x{i}" for i in range(1, n + 1)]
        + [f"x{i}" for i in range(1, n + 1)]
        + list(params)
    )
    pairs = [(i, n + i) for i in range(n)]
    return VariableSpace(names, pairs)


def x_space(n: int) -> VariableSpace:
    """Configuration-only space (x1..xn); used for connection coefficients."""
    return VariableSpace([f"x{i}" for i in range(1, n + 1)])


def _grevlex_key(exp: tuple[int, ...]) -> tuple:
    return (sum(exp), tuple(-e for e in reversed(exp)))


class Poly:
    """Immutable sparse polynomial over a :class:`VariableSpace`."""

    __slots__ = ("space", "terms")

    def __init__(self, space: VariableSpace, terms: Mapping[tuple[int, ...], Rational]):
        clean: dict[tuple[int, ...], Fraction] = {}
        for exp, c in terms.items():
            c = Fraction(c)
            if c != 0:
                clean[tuple(exp)] = c
        self.space = space
        self.terms = clean

    # -- inspection ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def coefficient(self, monomial: Mapping[str, int]) -> Fraction:
        exp = [0] * self.space.dim
        for name, k in monomial.items():
            exp[self.space.index(name)] = k
        return self.terms.get(tuple(exp), Fraction(0))

    def variables_used(self) -> set[str]:
        used: set[int] = set()
        for exp in self.terms:
            used.update(i for i, e in enumerate(exp) if e)
        return {self.space.names[i] for i in used}

    # -- arithmetic ---------------------------------------------------------

    def _check_space(self, other: "Poly") -> None:
        if self.space is not other.space:
            raise DimensionMismatch(
                f"operands in different spaces: {self.space!r} vs {other.space!r}"
            )

    def __add__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            other = self.space.const(other)
        self._check_space(other)
        terms = dict(self.terms)
        for exp, c in other.terms.items():
            s = terms.get(exp, Fraction(0)) + c
            if s == 0:
                terms.pop(exp, None)
            else:
                terms[exp] = s
        return Poly(self.space, terms)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(self.space, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            other = self.space.const(other)
        return self + (-other)

    def __rsub__(self, other) -> "Poly":
        return self.space.const(other) - self

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            c = Fraction(other)
            if c == 0:
                return self.space.zero()
            return Poly(self.space, {e: c * v for e, v in self.terms.items()})
        self._check_space(other)
        out: dict[tuple[int, ...], Fraction] = {}
        for ea, ca in self.terms.items():
            for eb, cb in other.terms.items():
                exp = tuple(a + b for a, b in zip(ea, eb))
                s = out.get(exp, Fraction(0)) + ca * cb
                if s == 0:
                    out.pop(exp, None)
                else:
                    out[exp] = s
        result = Poly(self.space, out)
        if result.degree() > DEGREE_CAP:
            raise DegreeCapExceeded(
                f"product degree {result.degree()} exceeds cap {DEGREE_CAP}"
            )
        return result

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        out = self.space.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            if isinstance(other, (int, Fraction)):
                return self == self.space.const(other)
            return NotImplemented
        return self.space is other.space and self.terms == other.terms

    __hash__ = None  # mutable-dict backed; equality is structural

    # -- calculus -----------------------------------------------------------

    def partial(self, var: Union[str, int]) -> "Poly":
        """Partial derivative with respect to a variable (by name or index)."""
        j = self.space.index(var) if isinstance(var, str) else var
        if not (0 <= j < self.space.dim):
            raise UnknownVariable(str(var))
        out: dict[tuple[int, ...], Fraction] = {}
        for exp, c in self.terms.items():
            e = exp[j]
            if e:
                new = list(exp)
                new[j] = e - 1
                out[tuple(new)] = c * e
        return Poly(self.space, out)

    def evaluate(self, point):
        """Evaluate at a point (sequence in variable order, or name mapping).

        Exact when every input is int/Fraction; float inputs give floats.
        """
        if isinstance(point, Mapping):
            values = [point[name] for name in self.space.names]
        else:
            values = list(point)
            if len(values) != self.space.dim:
                raise DimensionMismatch(
                    f"point has {len(values)} entries for {self.space.dim} variables"
                )
        total = Fraction(0)
        for exp, c in self.terms.items():
            term = c
            for v, e in zip(values, exp):
                if e:
                    term = term * v**e
            total = total + term
        return total

    def substitute(self, assignments: Mapping[str, Union["Poly", Rational]]) -> "Poly":
        """Simultaneous substitution of variables by polynomials or constants."""
        repl: dict[int, Poly] = {}
        for name, value in assignments.items():
            j = self.space.index(name)
            if not isinstance(value, Poly):
                value = self.space.const(value)
            else:
                self._check_space(value)
            repl[j] = value
        out = self.space.zero()
        for exp, c in self.terms.items():
            residual = list(exp)
            factor = self.space.const(c)
            for j, value in repl.items():
                e = residual[j]
                if e:
                    residual[j] = 0
                    factor = factor * value**e
            base = Poly(self.space, {tuple(residual): Fraction(1)})
            out = out + factor * base
        return out

    def embed(self, target: VariableSpace) -> "Poly":
        """Reinterpret in another space, matching variables by name."""
        if target is self.space:
            return self
        mapping = [target.index(name) if name in target._index else None for name in self.space.names]
        out: dict[tuple[int, ...], Fraction] = {}
        for exp, c in self.terms.items():
            new = [0] * target.dim
            for i, e in enumerate(exp):
                if e:
                    if mapping[i] is None:
                        raise UnknownVariable(self.space.names[i])
                    new[mapping[i]] = e
            new_t = tuple(new)
            out[new_t] = out.get(new_t, Fraction(0)) + c
        return Poly(target, out)

    def poisson(self, other: "Poly") -> "Poly":
        """Poisson bracket over the space's conjugate pairs.

        Convention: {f, g} = sum_i (df/dp_i dg/dq_i - df/dq_i dg/dp_i),
        under which the momentum of a frame field satisfies
        {P_Z, P_W} = P_[Z,W].
        """
        self._check_space(other)
        out = self.space.zero()
        for p, q in self.space.pairs:
            out = out + self.partial(p) * other.partial(q)
            out = out - self.partial(q) * other.partial(p)
        return out

    # -- rendering ----------------------------------------------------------

    def _monomial_text(self, exp: tuple[int, ...]) -> str:
        parts = []
        for name, e in zip(self.space.names, exp):
            if e == 1:
                parts.append(name)
            elif e > 1:
                parts.append(f"{name}^{e}")
        return "*".join(parts)

    def text(self) -> str:
        """Canonical rendering: grevlex-descending terms, exact coefficients."""
        if not self.terms:
            return "0"
        items = sorted(self.terms.items(), key=lambda kv: _grevlex_key(kv[0]), reverse=True)
        pieces: list[str] = []
        for k, (exp, c) in enumerate(items):
            mono = self._monomial_text(exp)
            mag = abs(c)
            if mono and mag == 1:
                body = mono
            elif mono:
                body = f"{mag}*{mono}"
            else:
                body = str(mag)
            if k == 0:
                pieces.append(body if c > 0 else f"-{body}")
            else:
                pieces.append(f"{' + ' if c > 0 else ' - '}{body}")
        return "".join(pieces)

    __str__ = text

    def __repr__(self) -> str:
        return f"Poly({self.text()})"


# -- module-level operation aliases ----------------------------------------


def add(f: Poly, g: Poly) -> Poly:
    return f + g


def mul(f: Poly, g: Poly) -> Poly:
    return f * g


def scale(c: Rational, f: Poly) -> Poly:
    return f * Fraction(c)


def power(f: Poly, k: int) -> Poly:
    return f**k


def partial(f: Poly, var: Union[str, int]) -> Poly:
    return f.partial(var)


def evaluate(f: Poly, point):
    return f.evaluate(point)


def poisson(f: Poly, g: Poly) -> Poly:
    return f.poisson(g)

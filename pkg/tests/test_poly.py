"""Exact polynomial layer: arithmetic, calculus, Poisson brackets.

Cross-oracle: sympy reimplements every operation independently; property
tests check the bracket axioms on random small polynomials.
"""

from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from nilflow.poly import (
    DegreeCapExceeded,
    DimensionMismatch,
    Poly,
    UnknownVariable,
    phase_space,
    reduced_space,
    x_space,
)

S = phase_space(2, 1)  # p_x1 p_x2 p_t1 x1 x2 t1


def v(name):
    return S.var(name)


# ---------------------------------------------------------------------------
# construction and exact arithmetic
# ---------------------------------------------------------------------------


def test_spaces_are_interned():
    assert phase_space(2, 1) is S
    assert x_space(3) is x_space(3)
    assert reduced_space(2, ("a1",)) is reduced_space(2, ("a1",))


def test_exact_fraction_arithmetic():
    p = v("x1") * Fraction(1, 3) + v("x2") * Fraction(1, 6)
    q = p * 6
    assert q == v("x1") * 2 + v("x2")
    assert (p - p).is_zero()
    assert p.evaluate({"p_x1": 0, "p_x2": 0, "p_t1": 0, "x1": 1, "x2": 2, "t1": 0}) == Fraction(2, 3)


def test_power_and_degree():
    p = (v("x1") + v("x2")) ** 3
    assert p.degree() == 3
    assert p.coefficient({"x1": 2, "x2": 1}) == 3
    assert (S.one() ** 0) == S.one()


def test_grevlex_text_ordering():
    p = v("x1") * v("x1") + v("x1") * v("x2") * 2 + v("x2") * v("x2") + v("x1") + S.one()
    assert p.text() == "x1^2 + 2*x1*x2 + x2^2 + x1 + 1"


def test_text_fractions_and_signs():
    p = v("p_x1") * v("p_x1") * Fraction(1, 2) - v("x1") * Fraction(3, 4)
    assert p.text() == "1/2*p_x1^2 - 3/4*x1"
    assert S.zero().text() == "0"


def test_cross_space_mismatch():
    other = x_space(2)
    with pytest.raises(DimensionMismatch):
        v("x1") + other.var("x1")


def test_unknown_variable():
    with pytest.raises(UnknownVariable):
        S.var("q7")
    with pytest.raises(UnknownVariable):
        v("x1").partial("q7")


def test_degree_cap():
    p = v("x1") ** 32
    with pytest.raises(DegreeCapExceeded):
        (p * p) * v("x1")


def test_substitute_and_embed():
    p = v("p_t1") * v("x1") + v("p_t1") ** 2
    q = p.substitute({"p_t1": S.const(Fraction(2))})
    assert q == v("x1") * 2 + 4
    small = x_space(1)
    r = small.var("x1") * Fraction(1, 2)
    assert r.embed(S) == v("x1") * Fraction(1, 2)
    with pytest.raises(UnknownVariable):
        v("p_x1").embed(small)


# ---------------------------------------------------------------------------
# sympy cross-oracle
# ---------------------------------------------------------------------------


def _to_sympy(p: Poly, syms):
    expr = sympy.Integer(0)
    for exp, c in p.terms.items():
        term = sympy.Rational(c.numerator, c.denominator)
        for s, e in zip(syms, exp):
            term *= s**e
        expr += term
    return sympy.expand(expr)


def _random_poly(rng, space, max_terms=5, max_exp=2):
    terms = {}
    for _ in range(rng.randrange(1, max_terms + 1)):
        exp = tuple(rng.randrange(0, max_exp + 1) for _ in range(len(space.names)))
        terms[exp] = Fraction(rng.randrange(-4, 5), rng.randrange(1, 4))
    return Poly(space, terms)


def test_sympy_product_partial_poisson_oracle():
    import random

    rng = random.Random(7)
    syms = sympy.symbols(list(S.names))
    for _ in range(25):
        f = _random_poly(rng, S)
        g = _random_poly(rng, S)
        sf, sg = _to_sympy(f, syms), _to_sympy(g, syms)
        assert _to_sympy(f * g, syms) == sympy.expand(sf * sg)
        assert _to_sympy(f.partial("x1"), syms) == sympy.expand(sympy.diff(sf, syms[3]))
        pb = sympy.Integer(0)
        for ip, iq in S.pairs:
            pb += sympy.diff(sf, syms[ip]) * sympy.diff(sg, syms[iq])
            pb -= sympy.diff(sf, syms[iq]) * sympy.diff(sg, syms[ip])
        assert _to_sympy(f.poisson(g), syms) == sympy.expand(pb)


# ---------------------------------------------------------------------------
# bracket axioms (property-based)
# ---------------------------------------------------------------------------

_exp = st.tuples(*([st.integers(min_value=0, max_value=2)] * len(S.names)))
_coeff = st.fractions(
    min_value=Fraction(-3), max_value=Fraction(3), max_denominator=3
).filter(lambda f: f != 0)
_poly = st.dictionaries(_exp, _coeff, min_size=1, max_size=3).map(
    lambda terms: Poly(S, terms)
)


@settings(max_examples=60, deadline=None)
@given(_poly, _poly)
def test_poisson_antisymmetry(f, g):
    assert f.poisson(g) == -(g.poisson(f))


@settings(max_examples=60, deadline=None)
@given(_poly, _poly, _poly)
def test_poisson_leibniz(f, g, h):
    assert f.poisson(g * h) == f.poisson(g) * h + g * f.poisson(h)


@settings(max_examples=40, deadline=None)
@given(_poly, _poly, _poly)
def test_poisson_jacobi(f, g, h):
    total = (
        f.poisson(g.poisson(h))
        + g.poisson(h.poisson(f))
        + h.poisson(f.poisson(g))
    )
    assert total.is_zero()


def test_canonical_pairs():
    assert v("p_x1").poisson(v("x1")) == S.one()
    assert v("p_x1").poisson(v("x2")).is_zero()
    assert v("p_t1").poisson(v("t1")) == S.one()
    assert v("x1").poisson(v("x2")).is_zero()

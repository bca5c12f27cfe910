"""Structure-constant layer: validation, series, splittings, exponentials."""

from fractions import Fraction

import pytest

from nilflow import (
    LieAlgebraError,
    Splitting,
    check_adapted_splitting,
    get,
    is_metabelian,
    lower_central_series,
    malcev_order,
    stratify,
    validate_algebra,
)
from nilflow.lie_core import (
    BadPartition,
    DerivedNotContained,
    IndexOutOfRange,
    JacobiViolation,
    NotAbelian,
    NotNilpotent,
    derived_subalgebra,
    exp_ad,
    is_abelian_span,
)

from _random_algebras import corpus

# strictly upper-triangular 5x5 matrices; smallest classical example whose
# derived subalgebra is NOT abelian ([E13, E35] = E15)
N5_CONSTANTS = {
    (1, 2): {5: 1},
    (1, 6): {8: 1},
    (1, 9): {10: 1},
    (2, 3): {6: 1},
    (2, 7): {9: 1},
    (3, 4): {7: 1},
    (3, 5): {8: -1},
    (4, 6): {9: -1},
    (4, 8): {10: -1},
    (5, 7): {10: 1},
}


def _lcs_dims(alg):
    return [len(layer) for layer in lower_central_series(alg)]


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def test_validate_rejects_bad_indices():
    with pytest.raises(IndexOutOfRange):
        validate_algebra({(1, 4): {3: 1}}, 3)
    with pytest.raises(LieAlgebraError):
        validate_algebra({(2, 1): {3: 1}}, 3)


def test_validate_rejects_jacobi_violation():
    # [X2,Y2] = Y5 removed from the rank-2 step-4 table breaks Jacobi on (1,2,3)
    constants = {
        (1, 2): {3: 1},
        (1, 3): {4: 1},
        (2, 3): {5: 1},
        (1, 4): {6: 1},
        (1, 5): {7: 1},
        (2, 5): {8: 1},
    }
    with pytest.raises(JacobiViolation) as err:
        validate_algebra(constants, 8)
    assert err.value.triple == (1, 2, 3)


def test_validate_rejects_non_nilpotent():
    # sl2-style loop: [Z1, Z2] = Z2 keeps reproducing Z2
    with pytest.raises(NotNilpotent):
        validate_algebra({(1, 2): {2: 1}}, 2)


def test_abelian_algebra_is_valid():
    alg = validate_algebra({}, 3)
    assert _lcs_dims(alg) == [3, 0]
    assert is_metabelian(alg)


# ---------------------------------------------------------------------------
# series and metabelian predicate
# ---------------------------------------------------------------------------


def test_lower_central_series_dims():
    assert _lcs_dims(get("heisenberg").alg) == [3, 1, 0]
    assert _lcs_dims(get("eng(1)").alg) == [4, 2, 1, 0]
    assert _lcs_dims(get("f23").alg) == [5, 3, 2, 0]
    assert _lcs_dims(get("f24").alg) == [8, 6, 5, 3, 0]


def test_derived_subalgebra_of_f23():
    rows = derived_subalgebra(get("f23").alg)
    assert len(rows) == 3
    supports = {tuple(i for i, c in enumerate(r) if c != 0) for r in rows}
    assert supports == {(2,), (3,), (4,)}


def test_n5_is_nilpotent_but_not_metabelian():
    alg = validate_algebra(N5_CONSTANTS, 10)
    assert _lcs_dims(alg) == [10, 6, 3, 1, 0]
    assert not is_metabelian(alg)


def test_every_catalog_group_is_metabelian():
    for name in ("heisenberg", "f23", "f24", "n6_2_5a", "eng(1)", "eng(3)"):
        assert is_metabelian(get(name).alg), name


def test_is_abelian_span():
    alg = get("heisenberg").alg
    assert not is_abelian_span(alg, [0, 1])
    assert is_abelian_span(alg, [1, 2])
    assert is_abelian_span(get("eng(1)").alg, [0])


# ---------------------------------------------------------------------------
# splittings
# ---------------------------------------------------------------------------


def test_adapted_splitting_accepts_catalog():
    for name in ("heisenberg", "f23", "f24", "n6_2_5a", "eng(2)"):
        e = get(name)
        check_adapted_splitting(e.alg, e.split)


def test_splitting_rejects_bad_partition():
    alg = get("heisenberg").alg
    with pytest.raises(BadPartition):
        check_adapted_splitting(alg, Splitting(y_indices=(3,), x_indices=(1,), n1=0))


def test_splitting_rejects_nonabelian_y():
    alg = get("f23").alg
    with pytest.raises(NotAbelian):
        check_adapted_splitting(
            alg, Splitting(y_indices=(1, 2, 3), x_indices=(4, 5), n1=0)
        )


def test_splitting_rejects_derived_not_contained():
    alg = get("f23").alg
    # span{Y2, Y3, X2} is abelian ([X2,Y2]=0, [X2,Y3]=0) but misses Y1 = [X1,X2]
    with pytest.raises(DerivedNotContained):
        check_adapted_splitting(
            alg, Splitting(y_indices=(2, 4, 5), x_indices=(1, 3), n1=0)
        )


def test_heisenberg_alternative_splitting():
    # the abelian pair (X2, Y1) also works, with X2 horizontal (n1 = 1)
    alg = get("heisenberg").alg
    check_adapted_splitting(alg, Splitting(y_indices=(2, 3), x_indices=(1,), n1=1))


def test_malcev_order():
    e = get("f23")
    assert malcev_order(e.alg, e.split) == ["Y1", "Y2", "Y3", "X2", "X1"]


def test_random_corpus_validates():
    for alg, split in corpus(25):
        assert is_metabelian(alg)
        check_adapted_splitting(alg, split)


# ---------------------------------------------------------------------------
# stratification and exponentials
# ---------------------------------------------------------------------------


def test_stratify_carnot_layers():
    layers = stratify(get("f23").alg, [1, 2])
    assert [len(t) for t in layers] == [2, 1, 2]
    layers = stratify(get("eng(2)").alg, [1, 2, 3])  # X1, X2, Y0
    assert [len(t) for t in layers] == [3, 2, 1]


def test_stratify_rejects_non_generating():
    from nilflow.lie_core import NotStratifiable

    with pytest.raises(NotStratifiable):
        stratify(get("f23").alg, [1])  # X1 alone does not generate


def test_exp_ad_nilpotent_exactness():
    alg = get("heisenberg").alg
    M = exp_ad(alg, 0)  # ad_{X1}
    # exp(ad X1) X2 = X2 + [X1, X2] = X2 + Y1
    col = [row[1] for row in M]
    assert col == [Fraction(0), Fraction(1), Fraction(1)]
    # exp(ad X1) X1 = X1
    assert [row[0] for row in M] == [Fraction(1), Fraction(0), Fraction(0)]


def test_exp_ad_inverse():
    alg = get("f24").alg
    plus = exp_ad(alg, [Fraction(1), Fraction(1, 2)] + [Fraction(0)] * 6)
    minus = exp_ad(alg, [Fraction(-1), Fraction(-1, 2)] + [Fraction(0)] * 6)
    n = alg.dim
    prod = [
        [sum(plus[i][k] * minus[k][j] for k in range(n)) for j in range(n)]
        for i in range(n)
    ]
    assert prod == [
        [Fraction(1) if i == j else Fraction(0) for j in range(n)] for i in range(n)
    ]

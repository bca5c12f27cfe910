"""Seeded generator of random metabelian algebras with adapted splittings.

Construction: R^k acting on an abelian W = R^w by commuting nilpotent
maps D_i = q_i(N) (polynomials without constant term in the one shift
N e_s = e_{s+1}), plus central brackets [X_i, X_j] = lambda_ij e_w.
Jacobi holds by construction: the D_i commute, and e_w lies in every
ker D_i.  Nilpotency step <= w <= 4; dimension k + w <= 8.
"""

from __future__ import annotations

import random
from fractions import Fraction

from nilflow import LieAlgebra, Splitting, validate_algebra


def random_metabelian(seed: int) -> tuple[LieAlgebra, Splitting]:
    rng = random.Random(seed)
    k = rng.randint(2, 4)
    w = rng.randint(2, min(4, 8 - k))
    dim = k + w

    constants: dict[tuple[int, int], dict[int, Fraction]] = {}

    # action coefficients: D_i = sum_d c[i][d] N^d, many zeros
    for i in range(1, k + 1):
        coeffs = {
            d: Fraction(rng.choice([-2, -1, -1, 1, 1, 2]), rng.choice([1, 1, 2]))
            for d in range(1, w)
            if rng.random() < 0.5
        }
        for s in range(1, w + 1):
            column = {
                k + s + d: c for d, c in coeffs.items() if s + d <= w
            }
            if column:
                constants[(i, k + s)] = column

    # central X-X brackets land on e_w (in every ker D_i)
    for i in range(1, k + 1):
        for j in range(i + 1, k + 1):
            lam = rng.choice([0, 0, 1, -1, 2])
            if lam:
                constants[(i, j)] = {dim: Fraction(lam)}

    labels = [f"X{i}" for i in range(1, k + 1)] + [f"Y{s}" for s in range(1, w + 1)]
    alg = validate_algebra(constants, dim, labels)
    split = Splitting(
        y_indices=tuple(range(k + 1, dim + 1)),
        x_indices=tuple(range(1, k + 1)),
        n1=0,
    )
    return alg, split


def corpus(count: int, seed0: int = 20260814) -> list[tuple[LieAlgebra, Splitting]]:
    return [random_metabelian(seed0 + j) for j in range(count)]

"""Integrability certificates, metric-line exclusion, Hill averages."""

import math
from fractions import Fraction

import numpy as np
import pytest

from nilflow import (
    Splitting,
    compute_connection,
    engel_integrals,
    full_hamiltonian,
    get,
    hill_average,
    integrate_reduced,
    involution_and_independence,
    metric_line_test,
    momentum_functions,
    reduce,
    reduced_system_for_potentials,
    validate_algebra,
    verify_prime_integral,
)
from nilflow.analysis import NotUnitEnergy, PreconditionXNotAbelian
from nilflow.poly import x_space

# ---------------------------------------------------------------------------
# single prime-integral certificates
# ---------------------------------------------------------------------------


def test_f23_reduced_meromorphic_integral():
    system = get("f23").reduced()  # symbolic a1 a2 a3
    s = system.H.space
    p1, p2, x2 = s.var("p_x1"), s.var("p_x2"), s.var("x2")
    a1, a2, a3 = s.var("a1"), s.var("a2"), s.var("a3")
    C = a3 * p1 - a2 * p2 + a1 * a3 * x2 + a3 * a3 * x2 * x2 * Fraction(1, 2)
    assert verify_prime_integral(C, system.H).is_zero()


def test_non_integral_has_residual():
    system = reduce(get("heisenberg").connection(), (1,))
    x1 = system.H.space.var("x1")
    assert not verify_prime_integral(x1, system.H).is_zero()


def test_n6_2_5a_stated_integral():
    conn = get("n6_2_5a").connection()
    P = momentum_functions(conn)
    H = full_hamiltonian(conn)
    I = P["X1"] * P["Y3"] - P["X2"] * P["Y2"] + P["Y1"] * P["Y1"] * Fraction(1, 2)
    assert verify_prime_integral(I, H).is_zero()
    for l in range(1, 5):
        assert I.poisson(H.space.var(f"p_t{l}")).is_zero()


def test_residual_invariant_under_theta_relabeling():
    # same Engel-type algebra with the two middle Y's swapped in basis order
    n = 2
    a, b = 3, 4  # basis positions of Y1, Y2 in eng(2): X1 X2 Y0 Y1 Y2 Y3
    constants = {
        (1, 3): {4: 1},
        (2, 3): {5: 1},
        (1, 4): {6: 1},
        (2, 5): {6: 1},
    }
    swapped = {
        (1, 3): {5: 1},
        (2, 3): {4: 1},
        (1, 5): {6: 1},
        (2, 4): {6: 1},
    }
    for table in (constants, swapped):
        alg = validate_algebra(table, 6, ["X1", "X2", "Y0", "Y1", "Y2", "Y3"])
        split = Splitting(y_indices=(3, 4, 5, 6), x_indices=(1, 2), n1=1)
        conn = compute_connection(alg, split)
        P = momentum_functions(conn)
        H = full_hamiltonian(conn)
        L12 = P["X1"] * P["Y2"] - P["X2"] * P["Y1"]
        if table is swapped:  # labels follow basis order, pairing swaps too
            L12 = P["X1"] * P["Y1"] - P["X2"] * P["Y2"]
        assert verify_prime_integral(L12, H).is_zero()


# ---------------------------------------------------------------------------
# Engel-type bracket identities (exact, n = 2..5)
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_engel_identities(n):
    fam = engel_integrals(n)
    H = fam.H
    top = fam.P(f"Y{n + 1}")
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]

    L = {(i, j): fam.L(i, j) for i, j in pairs}

    def Lsym(i, j):
        if i == j:
            return H.space.zero()
        return L[(i, j)] if i < j else -L[(j, i)]

    def delta(i, j):
        return 1 if i == j else 0

    # {L_ij, H} = 0 and {C_N, H} = 0
    for i, j in pairs:
        assert L[(i, j)].poisson(H).is_zero(), (n, i, j)
    for N in range(2, n + 1):
        assert fam.C(N).poisson(H).is_zero(), (n, N)

    # {L_ij, L_kl} = P_top (d_ik L_jl + d_jl L_ik - d_il L_jk - d_jk L_il)
    for i, j in pairs:
        for k, l in pairs:
            lhs = L[(i, j)].poisson(L[(k, l)])
            rhs = top * (
                Lsym(j, l) * delta(i, k)
                + Lsym(i, k) * delta(j, l)
                - Lsym(j, k) * delta(i, l)
                - Lsym(i, l) * delta(j, k)
            )
            assert (lhs - rhs).is_zero(), (n, (i, j), (k, l))

    # {C_N, L_kl} = 0 when k < l <= N and when N < k < l; at the boundary
    # k = N < l the bracket equals -2 P_top sum_{i<N} L_iN L_il instead
    for N in range(2, n + 1):
        CN = fam.C(N)
        for k, l in pairs:
            got = CN.poisson(L[(k, l)])
            if l <= N or k > N:
                assert got.is_zero(), (n, N, k, l)
            elif k == N:
                boundary = H.space.zero()
                for i in range(1, N):
                    boundary = boundary + Lsym(i, N) * Lsym(i, l)
                assert (got + top * boundary * 2).is_zero(), (n, N, k, l)

    # {P_Xi, L_kl} = P_top (P_Xk d_il - P_Xl d_ik)
    for i in range(1, n + 1):
        PX = fam.P(f"X{i}")
        for k, l in pairs:
            lhs = PX.poisson(L[(k, l)])
            rhs = top * (fam.P(f"X{k}") * delta(i, l) - fam.P(f"X{l}") * delta(i, k))
            assert (lhs - rhs).is_zero(), (n, i, k, l)

    # {P_Yj, L_kl} = P_top (-P_Yl d_jk + P_Yk d_jl)
    for j in range(1, n + 1):
        PY = fam.P(f"Y{j}")
        for k, l in pairs:
            lhs = PY.poisson(L[(k, l)])
            rhs = top * (
                -fam.P(f"Y{l}") * delta(j, k) + fam.P(f"Y{k}") * delta(j, l)
            )
            assert (lhs - rhs).is_zero(), (n, j, k, l)


def test_engel_family_sizes():
    assert [name for name, _ in engel_integrals(1).members] == ["H"]
    assert [name for name, _ in engel_integrals(2).members] == ["H", "L(1,2)"]
    assert [name for name, _ in engel_integrals(3).members] == ["H", "L(2,3)", "C(3)"]
    assert [name for name, _ in engel_integrals(4).members] == [
        "H",
        "L(1,2)",
        "L(3,4)",
        "C(4)",
    ]
    assert [name for name, _ in engel_integrals(5).members] == [
        "H",
        "L(2,3)",
        "L(4,5)",
        "C(3)",
        "C(5)",
    ]
    for n in (1, 2, 3, 4, 5):
        fam = engel_integrals(n)
        assert len(fam.all_functions()) == 2 * n + 2


# ---------------------------------------------------------------------------
# involution + independence
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3])
def test_engel_family_certified(n):
    fam = engel_integrals(n)
    report = involution_and_independence(fam.all_functions(), sample_count=40, seed=1)
    assert report.verdict == "certified"
    assert report.involutive
    assert report.bracket_residuals == ()
    assert report.success_fraction >= 0.9
    assert report.rank_target == 2 * n + 2


def test_duplicated_function_not_certified():
    fam = engel_integrals(2)
    report = involution_and_independence(
        [("H", fam.H), ("H again", fam.H)], sample_count=20, seed=0
    )
    assert report.verdict == "not-certified"
    assert report.involutive  # {H, H} = 0; the failure is independence
    assert not report.ok


def test_noncommuting_pair_reported():
    fam = engel_integrals(2)
    PX1, PY1 = fam.P("X1"), fam.P("Y1")
    report = involution_and_independence(
        [("P_X1", PX1), ("P_Y1", PY1)], sample_count=20, seed=0
    )
    assert not report.involutive
    assert report.verdict == "not-certified"
    assert len(report.bracket_residuals) == 1
    a, b, residual = report.bracket_residuals[0]
    assert {a, b} == {"P_X1", "P_Y1"}
    assert residual == fam.P("Y3")


def test_heisenberg_codim1_automatic():
    # splitting with A = span{X2, Y1}: dim A = 2 = dim G - 1
    alg = get("heisenberg").alg
    split = Splitting(y_indices=(2, 3), x_indices=(1,), n1=1)
    conn = compute_connection(alg, split)
    H = full_hamiltonian(conn)
    funcs = [("H", H), ("p_t1", H.space.var("p_t1")), ("p_t2", H.space.var("p_t2"))]
    report = involution_and_independence(funcs, sample_count=30, seed=2, conn=conn)
    assert report.verdict == "codim1-automatic"
    assert report.ok


def test_involution_seed_determinism():
    fam = engel_integrals(2)
    r1 = involution_and_independence(fam.all_functions(), sample_count=25, seed=9)
    r2 = involution_and_independence(fam.all_functions(), sample_count=25, seed=9)
    assert r1.rank_samples == r2.rank_samples


# ---------------------------------------------------------------------------
# hill averages
# ---------------------------------------------------------------------------


def _oscillator(T=40.0, step=1e-3):
    system = reduce(get("heisenberg").connection(), (1,))
    return system, integrate_reduced(system, [1.0, 0.0], [0.0, 0.0], T, step)


def test_hill_average_zero_momentum_line():
    system = reduce(get("heisenberg").connection(), (0,))
    traj = integrate_reduced(system, [1.0, 0.0], [0.0, 0.0], 10.0, 1e-3)
    hill = hill_average(traj, system)
    assert hill.value == pytest.approx(0.0, abs=1e-12)


def test_hill_average_full_speed_is_zero_on_oscillator():
    system, traj = _oscillator(T=20 * 2 * math.pi)
    hill = hill_average(traj, system)
    # |xdot|^2 = cos^2 + sin^2 = 1 along the unit-energy oscillator
    assert hill.value < 1e-6


def test_hill_average_one_component_projection():
    system, traj = _oscillator(T=100 * 2 * math.pi, step=2e-3)
    hill = hill_average(traj, system, indices=(1,))
    # sqrt(1 - cos^2 t) = |sin t| averages to 2/pi
    assert abs(hill.value - 2 / math.pi) < 1e-3
    assert 0.0 <= hill.value <= 1.0
    assert hill.limsup_estimate <= 1.0


def test_hill_average_trapped_orbit_strictly_below_one():
    system = reduce(get("eng(1)").connection(), (0, 0, 1))
    traj = integrate_reduced(system, [1.0], [0.0], 80.0, 1e-3)
    hill = hill_average(traj, system)
    assert hill.limsup_estimate < 1 - 1e-3
    assert hill.value > 0.1


# ---------------------------------------------------------------------------
# metric-line exclusion
# ---------------------------------------------------------------------------


def test_excluded_by_condition_1_quartic_well():
    system = reduce(get("eng(1)").connection(), (0, 0, 1))
    traj = integrate_reduced(system, [1.0], [0.0], 40.0, 1e-3)
    verdict = metric_line_test(traj, system)
    assert verdict.outcome == "excluded-by-1"
    assert verdict.evidence["trapped"]
    assert verdict.evidence["level_samples"] > 0
    assert verdict.evidence["min_grad_on_level"] > 1e-6


def test_excluded_by_condition_1_double_well_barrier():
    # mu = (-1, 0, 2): V = (x^2 - 1)^2, barrier V(0) = 1 = 2E
    system = reduce(get("eng(1)").connection(), (-1, 0, 2))
    traj = integrate_reduced(system, [1.0], [1.0], 40.0, 1e-3)
    verdict = metric_line_test(traj, system)
    assert verdict.outcome == "excluded-by-1"


def test_excluded_by_condition_2_asymmetric_potentials():
    s = x_space(1)
    x = s.var("x1")
    F1 = (x ** 4 - x ** 2 * 2 + 3) * Fraction(3, 10)
    F2 = (x ** 3 - x * 3) * Fraction(2, 5)
    system = reduced_system_for_potentials([F1, F2])
    # V = F1^2 + F2^2 >= 0.81 everywhere: the 1/2-level set is empty, so
    # condition (1) cannot fire; the heteroclinic x: -1 <- 0 -> +1 gives
    # F2 limits -4/5 and +4/5.  T stays below the ~43 time units after which
    # roundoff lets the numeric orbit creep past the saddle at x = 1.
    p0 = math.sqrt(0.19)
    traj = integrate_reduced(system, [p0], [0.0], 40.0, 1e-3)
    verdict = metric_line_test(traj, system)
    assert verdict.outcome == "excluded-by-2"
    assert verdict.evidence["level_samples"] == 0
    d = verdict.evidence["F_windows"]["F2"]
    assert abs(d["forward_mean"] - (-0.8)) < 1e-2
    assert abs(d["backward_mean"] - 0.8) < 1e-2


def test_zero_momentum_inconclusive_on_all_catalog_groups():
    for name in ("heisenberg", "f23", "f24", "n6_2_5a", "eng(1)", "eng(2)"):
        e = get(name)
        conn = e.connection()
        system = reduce(conn, (0,) * conn.m)
        n = conn.n
        p0 = [0.0] * n
        p0[0] = 1.0
        traj = integrate_reduced(system, p0, [0.0] * n, 5.0, 1e-3)
        verdict = metric_line_test(traj, system)
        assert verdict.outcome == "inconclusive", name
        assert "metric line" in verdict.reason


def test_metric_line_requires_unit_energy():
    system = reduce(get("eng(1)").connection(), (0, 0, 1))
    traj = integrate_reduced(system, [2.0], [0.0], 5.0, 1e-3)
    with pytest.raises(NotUnitEnergy):
        metric_line_test(traj, system)


def test_metric_line_requires_abelian_complement():
    system = reduce(get("f23").connection(), (1, 0, 0))
    traj = integrate_reduced(system, [1.0, 0.0], [0.0, 0.0], 5.0, 1e-3)
    with pytest.raises(PreconditionXNotAbelian):
        metric_line_test(traj, system)


def test_symmetric_crossing_orbit_does_not_fire_condition_2():
    # mu = (-1/2, 0, 1): V = (x^2/2 - 1/2)^2 with barrier V(0) = 1/4 < 1,
    # so the unit-energy orbit crosses both wells periodically.  F1 keeps
    # oscillating (no limits), so condition (2) must not fire; condition (1)
    # fires legitimately (trapped orbit, regular 1/2-level).
    system = reduce(get("eng(1)").connection(), (Fraction(-1, 2), 0, 1))
    traj = integrate_reduced(system, [math.sqrt(0.75)], [0.0], 60.0, 1e-3)
    verdict = metric_line_test(traj, system)
    assert verdict.outcome == "excluded-by-1"

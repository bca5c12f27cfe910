"""Evaluation kernel: compiled/pure parity, statuses, record bookkeeping."""

import numpy as np
import pytest

from nilflow import get, reduce
from nilflow._kernel import (
    COMPILED,
    METHOD_MIDPOINT,
    METHOD_RK4,
    STATUS_NO_CONVERGENCE,
    STATUS_NONFINITE,
    STATUS_OK,
    PolySystem,
    _pykern,
    eval_states,
    n_records,
    record_times,
    run_fixed_steps,
)
from nilflow.dynamics import hamiltonian_vector_field
from nilflow.poly import reduced_space

try:
    from nilflow._kernel import _fastkern
except ImportError:
    _fastkern = None

needs_compiled = pytest.mark.skipif(_fastkern is None, reason="extension not built")


def _field_system(name, mu):
    system = reduce(get(name).connection(), mu)
    field = hamiltonian_vector_field(system.H)
    return PolySystem.compile(field, len(field))


def test_eval_states_matches_exact_evaluation():
    system = reduce(get("f23").connection(), (1, -2, 3))
    field = hamiltonian_vector_field(system.H)
    ps = PolySystem.compile(field, len(field))
    rng = np.random.default_rng(3)
    pts = rng.standard_normal((40, 4))
    out = eval_states(ps, pts)
    for r, point in enumerate(pts):
        for c, poly in enumerate(field):
            exact = float(poly.evaluate([float(v) for v in point]))
            assert abs(out[r, c] - exact) < 1e-12 * max(1.0, abs(exact))


@needs_compiled
def test_backend_parity_eval():
    ps = _field_system("f24", (1, 1, 1, 1, 1, 1))
    rng = np.random.default_rng(0)
    pts = np.ascontiguousarray(rng.standard_normal((200, ps.n_vars)))
    a = _pykern.eval_states(ps.offsets, ps.coeffs, ps.exps, pts)
    b = _fastkern.eval_states(ps.offsets, ps.coeffs, ps.exps, pts)
    # identical math up to floating-point summation order
    assert np.max(np.abs(a - b)) < 1e-13 * max(1.0, float(np.max(np.abs(a))))


@needs_compiled
@pytest.mark.parametrize("method", [METHOD_RK4, METHOD_MIDPOINT])
def test_backend_parity_run(method):
    ps = _field_system("f23", (1, 0, 1))
    y0 = np.array([1.0, 0.0, 0.1, -0.2])
    args = (ps.offsets, ps.coeffs, ps.exps, y0, 1e-3, 2000, 10, method, 1e-13, 50)
    ra, sa, ka = _pykern.run_fixed_steps(*args)
    rb, sb, kb = _fastkern.run_fixed_steps(*args)
    assert sa == sb == STATUS_OK and ka == kb == 2000
    assert np.max(np.abs(ra - rb)) < 1e-11


def test_record_every_layout():
    ps = _field_system("heisenberg", (1,))
    y0 = np.array([1.0, 0.0, 0.0, 0.0])
    rec, status, done = run_fixed_steps(ps, y0, 1e-2, 25, 10, METHOD_RK4)
    assert status == STATUS_OK and done == 25
    assert rec.shape[0] == n_records(25, 10) == 4  # steps 0, 10, 20, 25
    times = record_times(0.0, 1e-2, 25, 10)
    assert np.allclose(times, [0.0, 0.1, 0.2, 0.25])


def test_nonfinite_status():
    # dx/dt = x^2 blows up; a giant step drives it non-finite fast
    # (variable order in reduced_space(1) is p_x1, x1)
    s = reduced_space(1)
    y = s.var("x1")
    ps = PolySystem.compile([s.zero(), y * y], 2)
    rec, status, done = run_fixed_steps(
        ps, np.array([0.0, 10.0]), 50.0, 20, 1, METHOD_RK4
    )
    assert status == STATUS_NONFINITE
    assert done < 20


def test_midpoint_no_convergence_status():
    # dx/dt = 8 x with h = 1: fixed-point iteration has ratio 4 > 1
    s = reduced_space(1)
    y = s.var("x1")
    ps = PolySystem.compile([s.zero(), y * 8], 2)
    rec, status, done = run_fixed_steps(
        ps, np.array([0.0, 1.0]), 1.0, 5, 1, METHOD_MIDPOINT, 1e-14, 30
    )
    assert status == STATUS_NO_CONVERGENCE


def test_midpoint_symplectic_energy_boundedness():
    # harmonic oscillator: implicit midpoint keeps H bounded over long runs
    system = reduce(get("heisenberg").connection(), (1,))
    field = hamiltonian_vector_field(system.H)
    ps = PolySystem.compile(field, len(field))
    y0 = np.array([1.0, 0.0, 0.0, 0.0])
    rec, status, done = run_fixed_steps(ps, y0, 0.05, 20_000, 100, METHOD_MIDPOINT)
    assert status == STATUS_OK
    H = 0.5 * rec[:, 0] ** 2 + 0.5 * (rec[:, 1] + rec[:, 2]) ** 2
    assert np.max(np.abs(H - 0.5)) < 1e-4


def test_compiled_flag_matches_import():
    if _fastkern is None:
        assert COMPILED is False
    # when the extension exists, COMPILED may still be False under NILFLOW_PURE=1

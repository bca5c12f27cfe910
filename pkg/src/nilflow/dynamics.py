"""Numeric integration of the reduced/full Hamilton equations, trajectory
lifting, period detection, and the cut-time bound.

The Hamiltonian vector field is generated symbolically (exact partial
derivatives of the polynomial Hamiltonian over its conjugate pairs) and
compiled once to a flattened system evaluated by the numeric kernel.
Finite differences never enter the integrator; they exist only as a test
oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, quad

from . import _kernel as kern
from .coords import Connection
from .lie_core import is_abelian_span
from .poly import DimensionMismatch, Poly, phase_space
from .reduction import ReducedSystem, full_hamiltonian, momentum_functions

RK4 = "rk4"
IMPLICIT_MIDPOINT = "implicit-midpoint"
_METHOD_CODES = {RK4: kern.METHOD_RK4, IMPLICIT_MIDPOINT: kern.METHOD_MIDPOINT}


class EnergyDriftExceeded(RuntimeError):
    def __init__(self, time: float, drift: float, tol: float):
        self.time = time
        self.drift = drift
        super().__init__(
            f"relative energy drift {drift:.3e} exceeds {tol:.1e} at t={time:.6g}"
        )


class NonFiniteState(RuntimeError):
    def __init__(self, time: float):
        self.time = time
        super().__init__(f"non-finite state at t={time:.6g}")


class GridTooCoarse(RuntimeError):
    pass


@dataclass
class Trajectory:
    """Uniform-grid trajectory with energy (and momentum) telemetry."""

    times: np.ndarray
    states: np.ndarray  # (N, dim), columns in variable-space order
    var_names: tuple[str, ...]
    mu: tuple | None
    method: str
    step: float
    H_values: np.ndarray
    n: int
    m: int = 0  # 0 for reduced trajectories
    drift_flag_time: float | None = None

    @property
    def is_full(self) -> bool:
        return self.m > 0

    @property
    def p_theta(self) -> np.ndarray | None:
        if not self.is_full:
            return None
        return self.states[:, self.n : self.n + self.m]

    def momentum_drift(self) -> float:
        pt = self.p_theta
        if pt is None:
            return 0.0
        return float(np.max(np.abs(pt - pt[0])))

    def energy_drift(self) -> float:
        h0 = self.H_values[0]
        return float(np.max(np.abs(self.H_values - h0)) / max(1.0, abs(h0)))

    def x_block(self) -> np.ndarray:
        start = self.n + self.m
        return self.states[:, start : start + self.n]

    def p_x_block(self) -> np.ndarray:
        return self.states[:, : self.n]

    def project_reduced(self) -> np.ndarray:
        """(p_x, x) columns, in reduced-space order."""
        return np.hstack([self.p_x_block(), self.x_block()])

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t," + ",".join(self.var_names) + ",H\n")
            for t, row, h in zip(self.times, self.states, self.H_values):
                cells = [f"{t:.17g}"] + [f"{v:.17g}" for v in row] + [f"{h:.17g}"]
                fh.write(",".join(cells) + "\n")

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "variables": list(self.var_names),
            "mu": None if self.mu is None else [str(v) for v in self.mu],
            "method": self.method,
            "step": self.step,
            "times": [float(t) for t in self.times],
            "states": [[float(v) for v in row] for row in self.states],
            "H": [float(h) for h in self.H_values],
            "energy_drift": self.energy_drift(),
            "momentum_drift": self.momentum_drift() if self.is_full else None,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")

    def write_gnuplot(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# t " + " ".join(self.var_names) + " H\n")
            for t, row, h in zip(self.times, self.states, self.H_values):
                cells = [f"{t:.17g}"] + [f"{v:.17g}" for v in row] + [f"{h:.17g}"]
                fh.write(" ".join(cells) + "\n")


def hamiltonian_vector_field(H: Poly) -> list[Poly]:
    """d/dt of every space variable: (q_dot, p_dot) from exact partials."""
    space = H.space
    paired = {i for pq in space.pairs for i in pq}
    used = H.variables_used()
    loose = [n for n in used if space.index(n) not in paired]
    if loose:
        raise DimensionMismatch(
            f"cannot integrate: symbolic coefficients present ({', '.join(sorted(loose))})"
        )
    field: list[Poly] = [space.zero()] * space.dim
    for p, q in space.pairs:
        field[q] = H.partial(p)
        field[p] = -H.partial(q)
    return field


def _compile_field(H: Poly) -> kern.PolySystem:
    return kern.PolySystem.compile(hamiltonian_vector_field(H), H.space.dim)


def _compile_scalar(f: Poly) -> kern.PolySystem:
    return kern.PolySystem.compile([f], f.space.dim)


def integrate(
    H: Poly,
    start: Sequence[float],
    T: float,
    step: float,
    method: str = RK4,
    energy_tol: float = 1e-6,
    record_every: int = 1,
    on_drift: str = "raise",
) -> Trajectory:
    """Fixed-step integration of the Hamiltonian flow of H from `start`.

    `start` lists values for every space variable, in space order.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if T <= 0:
        raise ValueError("duration must be positive")
    if method not in _METHOD_CODES:
        raise ValueError(f"unknown method {method!r}")
    nsteps = max(1, int(round(T / step)))
    y0 = np.asarray([float(v) for v in start], dtype=np.float64)
    if y0.shape != (H.space.dim,):
        raise DimensionMismatch(
            f"start must provide {H.space.dim} values, got {y0.shape[0]}"
        )
    system = _compile_field(H)
    states, status, done = kern.run_fixed_steps(
        system, y0, step, nsteps, record_every, _METHOD_CODES[method]
    )
    times = kern.record_times(0.0, step, nsteps, record_every)
    if status == kern.STATUS_NONFINITE:
        raise NonFiniteState(done * step)
    if status == kern.STATUS_NO_CONVERGENCE:
        raise RuntimeError(
            f"implicit-midpoint fixed-point iteration stalled at t={done * step:.6g}"
        )
    H_vals = kern.eval_states(_compile_scalar(H), states)[:, 0]
    n, m = _space_shape(H.space)
    traj = Trajectory(
        times=times,
        states=states,
        var_names=H.space.names,
        mu=None,
        method=method,
        step=step,
        H_values=H_vals,
        n=n,
        m=m,
    )
    drift = np.abs(H_vals - H_vals[0]) / max(1.0, abs(float(H_vals[0])))
    bad = np.nonzero(drift > energy_tol)[0]
    if bad.size:
        t_bad = float(times[bad[0]])
        if on_drift == "raise":
            raise EnergyDriftExceeded(t_bad, float(drift[bad[0]]), energy_tol)
        traj.drift_flag_time = t_bad
    return traj


def _space_shape(space) -> tuple[int, int]:
    n = sum(1 for name in space.names if name.startswith("p_x"))
    m = sum(1 for name in space.names if name.startswith("p_t"))
    return n, m


def integrate_reduced(
    system: ReducedSystem,
    p0: Sequence[float],
    x0: Sequence[float],
    T: float,
    step: float,
    method: str = RK4,
    energy_tol: float = 1e-6,
    record_every: int = 1,
    on_drift: str = "raise",
) -> Trajectory:
    if system.symbolic:
        raise DimensionMismatch("reduce at a numeric momentum before integrating")
    start = list(p0) + list(x0)
    traj = integrate(
        system.H, start, T, step, method, energy_tol, record_every, on_drift
    )
    traj.mu = system.mu
    return traj


def lift(
    reduced: Trajectory,
    conn: Connection,
    mu: Sequence,
    theta0: Sequence[float] | None = None,
    tol: float = 1e-6,
) -> Trajectory:
    """Lift a reduced trajectory to a full normal extremal.

    theta_i is obtained by quadrature (composite Simpson on the grid, with
    a half-resolution self-check) of
        theta_dot_i = sum_j (p_xj + <mu, A_j>) A_j^i
                      + sum_{l<=n1} <mu, beta_l> beta_l^i,
    and p_theta is the constant mu.
    """
    n, m = conn.n, conn.m
    mu_t = tuple(Fraction(v) for v in mu)
    if len(mu_t) != m:
        raise ValueError(f"momentum must have {m} components")
    theta0 = [0.0] * m if theta0 is None else [float(v) for v in theta0]
    if len(theta0) != m:
        raise ValueError(f"theta0 must have {m} components")
    if reduced.states.shape[0] < 3:
        raise GridTooCoarse("need at least three samples for the lift quadrature")

    from .reduction import reduce as _reduce  # local import to avoid cycle at import time

    system = _reduce(conn, mu_t)
    space = system.space
    p_x = [space.var(f"p_x{i}") for i in range(1, n + 1)]
    mu_A = []
    for j in range(n):
        acc = space.zero()
        for k in range(m):
            if not conn.A[j][k].is_zero():
                acc = acc + conn.A[j][k].embed(space) * space.const(mu_t[k])
        mu_A.append(acc)
    mu_beta = []
    for l in range(m):
        acc = space.zero()
        for k in range(m):
            if not conn.beta[l][k].is_zero():
                acc = acc + conn.beta[l][k].embed(space) * space.const(mu_t[k])
        mu_beta.append(acc)
    integrands = []
    for i in range(m):
        g = space.zero()
        for j in range(n):
            if not conn.A[j][i].is_zero():
                g = g + (p_x[j] + mu_A[j]) * conn.A[j][i].embed(space)
        for l in range(conn.split.n1):
            if not conn.beta[l][i].is_zero():
                g = g + mu_beta[l] * conn.beta[l][i].embed(space)
        integrands.append(g)

    sysk = kern.PolySystem.compile(integrands, space.dim)
    samples = kern.eval_states(sysk, reduced.states)  # (N, m)
    h = float(reduced.times[1] - reduced.times[0])
    theta = cumulative_simpson(samples, dx=h, axis=0, initial=0.0)

    # Richardson self-check at half resolution
    if reduced.states.shape[0] >= 5:
        coarse = cumulative_simpson(samples[::2], dx=2 * h, axis=0, initial=0.0)
        err = float(np.max(np.abs(theta[::2] - coarse)))
        if err > tol:
            raise GridTooCoarse(
                f"lift quadrature self-check error {err:.3e} exceeds {tol:.1e}"
            )

    N = reduced.states.shape[0]
    full = np.empty((N, 2 * (n + m)), dtype=np.float64)
    full[:, :n] = reduced.states[:, :n]
    full[:, n : n + m] = np.asarray([float(v) for v in mu_t])[None, :]
    full[:, n + m : 2 * n + m] = reduced.states[:, n:]
    full[:, 2 * n + m :] = theta + np.asarray(theta0)[None, :]

    H_full = full_hamiltonian(conn)
    H_vals = kern.eval_states(_compile_scalar(H_full), full)[:, 0]
    return Trajectory(
        times=reduced.times.copy(),
        states=full,
        var_names=phase_space(n, m).names,
        mu=mu_t,
        method=f"{reduced.method}+simpson",
        step=reduced.step,
        H_values=H_vals,
        n=n,
        m=m,
    )


def _hermite_eval(t, t0, h, y0, y1, f0, f1):
    """Cubic Hermite interpolation on [t0, t0+h] with endpoint derivatives."""
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def detect_period(
    reduced: Trajectory, tol: float = 1e-4, H: Poly | None = None, system: ReducedSystem | None = None
) -> float | None:
    """Smallest recurrence time of the full reduced phase point, or None.

    Grid scan for a close return, then local refinement on a cubic Hermite
    interpolant (derivatives from the exact field) by golden-section search.
    Constant trajectories return None (no isolated recurrence).
    """
    if system is not None:
        H = system.H
    if H is None:
        raise ValueError("pass the reduced Hamiltonian (H=...) or system=...")
    S = reduced.states
    t = reduced.times
    d = np.max(np.abs(S - S[0]), axis=1)
    scale = float(np.max(d))
    if scale == 0.0:
        return None
    # wait until the state has moved away, then look for close returns
    away = np.nonzero(d >= 0.5 * scale)[0]
    if not away.size:
        return None
    k_start = int(away[0])
    thresh = max(tol, 0.05 * scale)
    best_k = None
    for k in range(k_start + 1, len(d) - 1):
        if d[k] <= d[k - 1] and d[k] <= d[k + 1] and d[k] < thresh:
            best_k = k
            break
    if best_k is None:
        return None

    field = _compile_field(H)

    def dist2(tq: float) -> float:
        k = min(int((tq - t[0]) / (t[1] - t[0])), len(t) - 2)
        k = max(k, 0)
        h = float(t[k + 1] - t[k])
        f0 = kern.eval_states(field, S[k])[0]
        f1 = kern.eval_states(field, S[k + 1])[0]
        y = _hermite_eval(tq, float(t[k]), h, S[k], S[k + 1], f0, f1)
        delta = y - S[0]
        return float(np.dot(delta, delta))

    a, b = float(t[best_k - 1]), float(t[best_k + 1])
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    c, dd = b - phi * (b - a), a + phi * (b - a)
    fc, fd = dist2(c), dist2(dd)
    for _ in range(90):
        if fc < fd:
            b, dd, fd = dd, c, fc
            c = b - phi * (b - a)
            fc = dist2(c)
        else:
            a, c, fc = c, dd, fd
            dd = a + phi * (b - a)
            fd = dist2(dd)
    L = 0.5 * (a + b)
    if math.sqrt(dist2(L)) > tol * max(1.0, scale):
        return None
    return L


def period_quadrature_1d(system: ReducedSystem, energy: float, x0: float = 0.0) -> float:
    """Oscillation period of a 1-DOF reduction by the turning-point integral
    T = 2 * integral dx / sqrt(2E - V(x)) between the turning points
    bracketing x0 (independent oracle for detect_period)."""
    if system.n != 1 or system.symbolic:
        raise ValueError("period quadrature needs a numeric 1-DOF reduction")
    V = system.V
    deg = V.degree()
    coeffs = [float(V.coefficient({"x1": k})) for k in range(deg, -1, -1)]
    coeffs[-1] -= 2.0 * energy
    roots = np.roots(coeffs)
    real = sorted(float(r.real) for r in roots if abs(r.imag) < 1e-9)
    lo = [r for r in real if r <= x0 + 1e-12]
    hi = [r for r in real if r >= x0 - 1e-12]
    if not lo or not hi:
        raise ValueError("x0 is not bracketed by turning points at this energy")
    x_minus, x_plus = lo[-1], hi[0]
    Vp = V.partial("x1")
    for xt in (x_minus, x_plus):
        if abs(float(Vp.evaluate([0.0, xt]))) < 1e-8:
            raise ValueError(f"degenerate turning point at x={xt:.6g}")
    c, r = 0.5 * (x_minus + x_plus), 0.5 * (x_plus - x_minus)
    Vsys = _compile_scalar(V)

    def integrand(u: float) -> float:
        x = c + r * math.sin(u)
        val = 2.0 * energy - float(kern.eval_states(Vsys, np.array([0.0, x]))[0, 0])
        if val <= 0.0:
            return 0.0
        return r * math.cos(u) / math.sqrt(val)

    T, _ = quad(integrand, -math.pi / 2, math.pi / 2, limit=200)
    return 2.0 * T


@dataclass(frozen=True)
class CutTimeReport:
    period: float | None
    condition: str | None  # "abelian-horizontal-complement" | "initial-covector-vanishes-on-x"
    bound: float | None
    reason: str

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "period": self.period,
            "condition": self.condition,
            "bound": self.bound,
            "reason": self.reason,
        }


def cut_time_bound(
    conn: Connection,
    full_start: Sequence[float] | Trajectory,
    L: float,
    tol: float = 1e-9,
) -> CutTimeReport:
    """Bound t_cut <= L for an extremal whose reduction is L-periodic.

    Fires when (a) span(X) is abelian (structure-constant check), or
    (b) every P_{X_i} vanishes at the initial covector (within tol).
    """
    state = full_start.states[0] if isinstance(full_start, Trajectory) else np.asarray(
        [float(v) for v in full_start]
    )
    alg, split = conn.alg, conn.split
    if is_abelian_span(alg, [k - 1 for k in split.x_indices]):
        return CutTimeReport(
            period=L,
            condition="abelian-horizontal-complement",
            bound=L,
            reason="span(X) is an abelian subalgebra",
        )
    momenta = momentum_functions(conn)
    values = []
    for i in split.x_indices:
        label = alg.labels[i - 1]
        values.append(abs(float(momenta[label].evaluate([float(v) for v in state]))))
    if max(values) <= tol:
        return CutTimeReport(
            period=L,
            condition="initial-covector-vanishes-on-x",
            bound=L,
            reason=f"max_i |P_X_i(lambda(0))| = {max(values):.3e} <= {tol:.1e}",
        )
    return CutTimeReport(
        period=L,
        condition=None,
        bound=None,
        reason=(
            "no bound: span(X) is not abelian and "
            f"max_i |P_X_i(lambda(0))| = {max(values):.3e} > {tol:.1e}"
        ),
    )

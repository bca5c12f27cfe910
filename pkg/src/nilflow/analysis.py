"""Integrability certificates (exact) and metric-line exclusion (numeric).

Symbolic side: Poisson-bracket residuals of candidate first integrals are
computed exactly; the Engel-type families {H, L-chain, C-chain} are built
in closed form.  Numeric side: independence ranks at random sample points,
the two exclusion criteria for metric lines (trapped orbit with a regular
one-half level of the reduced potential; distinct tail averages of the
F-functions), and the Hill-type running average of sqrt(1 - |xdot|^2).

The exclusion test is one-sided by design: it can certify that a normal
trajectory is NOT a metric line, and otherwise reports inconclusive.  It
never claims that a curve is a metric line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import ndimage

from . import _kernel as kern
from .coords import Connection, compute_connection
from .dynamics import Trajectory, integrate
from .lie_core import is_abelian_span
from .poly import DimensionMismatch, Poly
from .reduction import ReducedSystem, full_hamiltonian, momentum_functions


class BadDimension(ValueError):
    """Engel-type family requested for a dimension that has none."""


class PreconditionXNotAbelian(ValueError):
    """Metric-line exclusion needs the horizontal complement of the
    splitting to be an abelian subalgebra."""


class NotUnitEnergy(ValueError):
    def __init__(self, energy: float, tol: float):
        self.energy = energy
        super().__init__(
            f"trajectory energy {energy!r} is not 1/2 within {tol:.1e}; "
            "metric-line criteria assume arc-length normalization"
        )


# ---------------------------------------------------------------------------
# symbolic certificates
# ---------------------------------------------------------------------------


def verify_prime_integral(f: Poly, H: Poly) -> Poly:
    """Exact residual {f, H}; the zero polynomial certifies conservation."""
    return f.poisson(H)


@dataclass
class EngelFamily:
    """First integrals of the Engel-type group of rank n.

    `members` is the parity-split family {H, L-chain, C-chain} (n entries);
    `momenta` are the n+2 vertical momenta p_t1..p_t(n+2), which commute
    with every theta-free function.  Together: 2n + 2 integrals.
    """

    n: int
    conn: Connection
    H: Poly
    members: tuple[tuple[str, Poly], ...]
    momenta: tuple[tuple[str, Poly], ...]
    _P: dict[str, Poly]

    def P(self, label: str) -> Poly:
        """Momentum function of a basis element, by label (X1, Y0, ...)."""
        return self._P[label]

    def L(self, i: int, j: int) -> Poly:
        """L_ij = P_Xi P_Yj - P_Xj P_Yi (antisymmetric in i, j)."""
        n = self.n
        if not (1 <= i <= n and 1 <= j <= n and i != j):
            raise BadDimension(f"L({i},{j}) needs distinct indices in 1..{n}")
        Px, Py = self._P, self._P
        return Px[f"X{i}"] * Py[f"Y{j}"] - Px[f"X{j}"] * Py[f"Y{i}"]

    def C(self, N: int) -> Poly:
        """C_N = 1/2 sum_{i != j <= N} L_ij^2 = sum_{i < j <= N} L_ij^2."""
        if not (2 <= N <= self.n):
            raise BadDimension(f"C({N}) needs 2 <= N <= {self.n}")
        out = self.H.space.zero()
        for i in range(1, N + 1):
            for j in range(i + 1, N + 1):
                Lij = self.L(i, j)
                out = out + Lij * Lij
        return out

    def all_functions(self) -> tuple[tuple[str, Poly], ...]:
        return self.members + self.momenta


@lru_cache(maxsize=None)
def _eng_connection(n: int) -> Connection:
    from .catalog import eng_group  # deferred: catalog builds the algebra

    alg, split = eng_group(n)
    return compute_connection(alg, split)


def engel_integrals(n: int) -> EngelFamily:
    """The integral family of the Engel-type group of rank n.

    n = 2v:     H, L(1,2), ..., L(2v-1,2v), C(4), C(6), ..., C(2v)
    n = 2v+1:   H, L(2,3), ..., L(2v,2v+1), C(3), C(5), ..., C(2v+1)
    n = 1:      H alone (no index pairs).

    The chains are chosen so every (C_N, L_kl) pair satisfies k < l <= N or
    N < k < l, the exact range on which {C_N, L_kl} = 0: at the boundary
    k = N the bracket is -2 P_Y(n+1) sum_{i<N} L_iN L_il, which is nonzero,
    so an even C-chain cannot accompany the even-start L-chain.
    """
    if not isinstance(n, int) or n < 1:
        raise BadDimension(f"Engel-type rank must be a positive integer, got {n!r}")
    conn = _eng_connection(n)
    H = full_hamiltonian(conn)
    P = momentum_functions(conn)
    fam = EngelFamily(n=n, conn=conn, H=H, members=(), momenta=(), _P=P)

    members: list[tuple[str, Poly]] = [("H", H)]
    if n % 2 == 0:
        v = n // 2
        for k in range(1, v + 1):
            members.append((f"L({2 * k - 1},{2 * k})", fam.L(2 * k - 1, 2 * k)))
        for N in range(4, 2 * v + 1, 2):
            members.append((f"C({N})", fam.C(N)))
    elif n >= 3:
        v = (n - 1) // 2
        for k in range(1, v + 1):
            members.append((f"L({2 * k},{2 * k + 1})", fam.L(2 * k, 2 * k + 1)))
        for N in range(3, 2 * v + 2, 2):
            members.append((f"C({N})", fam.C(N)))
    momenta = tuple(
        (f"p_t{l}", H.space.var(f"p_t{l}")) for l in range(1, conn.m + 1)
    )
    fam.members = tuple(members)
    fam.momenta = momenta
    return fam


# ---------------------------------------------------------------------------
# involution + independence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntegrabilityReport:
    verdict: str  # "certified" | "codim1-automatic" | "not-certified"
    names: tuple[str, ...]
    integrals: tuple[Poly, ...]
    bracket_residuals: tuple[tuple[str, str, Poly], ...]  # nonzero ones only
    involutive: bool
    rank_target: int
    rank_samples: tuple[int, ...]
    success_fraction: float

    @property
    def ok(self) -> bool:
        return self.verdict in ("certified", "codim1-automatic")

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "verdict": self.verdict,
            "names": list(self.names),
            "involutive": self.involutive,
            "nonzero_brackets": [
                {"pair": [a, b], "residual": r.text()}
                for a, b, r in self.bracket_residuals
            ],
            "rank_target": self.rank_target,
            "rank_samples": list(self.rank_samples),
            "success_fraction": self.success_fraction,
        }


def involution_and_independence(
    funcs,
    sample_count: int = 100,
    seed: int = 0,
    conn: Connection | None = None,
    rank_tol: float = 1e-8,
    min_success: float = 0.9,
) -> IntegrabilityReport:
    """Exact pairwise Poisson residuals + numeric Jacobian rank at random points.

    `funcs` is a list of Poly or of (name, Poly) pairs sharing one space.
    Certified when every bracket is the zero polynomial and the gradient
    rank equals len(funcs) at >= `min_success` of the sample points.  When
    `conn` is supplied and its horizontal complement has dimension 1
    (dim A = dim G - 1), the verdict is codim1-automatic regardless.
    """
    named: list[tuple[str, Poly]] = []
    for k, f in enumerate(funcs):
        if isinstance(f, Poly):
            named.append((f"f{k + 1}", f))
        else:
            named.append((str(f[0]), f[1]))
    if not named:
        raise ValueError("need at least one function")
    space = named[0][1].space
    for _, f in named:
        if f.space is not space:
            raise DimensionMismatch("functions live in different variable spaces")

    residuals = []
    involutive = True
    for a in range(len(named)):
        for b in range(a + 1, len(named)):
            r = named[a][1].poisson(named[b][1])
            if not r.is_zero():
                involutive = False
                residuals.append((named[a][0], named[b][0], r))

    dim = space.dim
    grads: list[Poly] = []
    for _, f in named:
        grads.extend(f.partial(j) for j in range(dim))
    gsys = kern.PolySystem.compile(grads, dim)
    rng = np.random.default_rng(seed)
    points = rng.standard_normal((sample_count, dim))
    values = kern.eval_states(gsys, points).reshape(sample_count, len(named), dim)
    ranks = []
    for J in values:
        s = np.linalg.svd(J, compute_uv=False)
        ranks.append(int(np.sum(s > rank_tol * s[0])) if s[0] > 0 else 0)
    target = len(named)
    success = sum(1 for r in ranks if r == target) / sample_count

    if conn is not None and conn.n == 1:
        verdict = "codim1-automatic"
    elif involutive and success >= min_success:
        verdict = "certified"
    else:
        verdict = "not-certified"
    return IntegrabilityReport(
        verdict=verdict,
        names=tuple(name for name, _ in named),
        integrals=tuple(f for _, f in named),
        bracket_residuals=tuple(residuals),
        involutive=involutive,
        rank_target=target,
        rank_samples=tuple(ranks),
        success_fraction=success,
    )


# ---------------------------------------------------------------------------
# hill average
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HillReport:
    times: np.ndarray
    series: np.ndarray  # running average s(t)
    value: float  # s(T)
    limsup_estimate: float  # sup of s over the trailing half

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "value": self.value,
            "limsup_estimate": self.limsup_estimate,
        }


def hill_average(
    reduced: Trajectory, system: ReducedSystem, indices=None
) -> HillReport:
    """Running average s(T) = (1/T) int_0^T sqrt(max(0, 1 - |xdot|^2)) dt.

    xdot_i = dH/dp_xi along the samples; `indices` restricts the squared
    speed to a subset of x-coordinates (default: all of them), matching a
    choice of projection of the horizontal curve.
    """
    from scipy.integrate import cumulative_simpson

    n = system.n
    idx = tuple(range(1, n + 1)) if indices is None else tuple(indices)
    for i in idx:
        if not (1 <= i <= n):
            raise ValueError(f"index {i} outside 1..{n}")
    xdot = [system.H.partial(f"p_x{i}") for i in idx]
    vals = kern.eval_states(kern.PolySystem.compile(xdot, system.space.dim), reduced.states)
    speed2 = np.sum(vals * vals, axis=1)
    integrand = np.sqrt(np.maximum(0.0, 1.0 - speed2))
    t = reduced.times
    acc = cumulative_simpson(integrand, x=t, initial=0.0)
    series = np.empty_like(acc)
    series[0] = integrand[0]
    series[1:] = acc[1:] / t[1:]
    tail = series[len(series) // 2 :]
    return HillReport(
        times=t,
        series=series,
        value=float(series[-1]),
        limsup_estimate=float(np.max(tail)),
    )


# ---------------------------------------------------------------------------
# metric-line exclusion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricLineVerdict:
    outcome: str  # "excluded-by-1" | "excluded-by-2" | "inconclusive"
    reason: str
    evidence: dict

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "outcome": self.outcome,
            "reason": self.reason,
            "evidence": self.evidence,
        }


def _grid_axes(lo: np.ndarray, hi: np.ndarray, grid: int) -> list[np.ndarray]:
    return [np.linspace(lo[i], hi[i], grid) for i in range(len(lo))]


def _grid_points(axes: list[np.ndarray]) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _eval_on_x(system: ReducedSystem, polys: list[Poly], x_pts: np.ndarray) -> np.ndarray:
    """Evaluate x-only polynomials of the reduced space on bare x points."""
    n = system.n
    states = np.zeros((x_pts.shape[0], system.space.dim))
    states[:, n : 2 * n] = x_pts
    return kern.eval_states(kern.PolySystem.compile(polys, system.space.dim), states)


def _trapped_certificate(
    system: ReducedSystem,
    x0: np.ndarray,
    bound: float,
    box_lo: np.ndarray,
    box_hi: np.ndarray,
    grid: int,
) -> tuple[bool, str]:
    """Certify that the component of {V <= bound} containing x0 is bounded.

    1-D: bracketing real roots of V - bound around x0 (a trajectory at this
    energy cannot cross a potential barrier).  2-D/3-D: connected-component
    labeling of the sub-level set on the sampling grid; certification fails
    if the component reaches the grid boundary.  Higher dimensions: only
    finite-horizon evidence exists, no certificate.
    """
    n = system.n
    V = system.V
    if n == 1:
        deg = V.degree()
        coeffs = [float(V.coefficient({"x1": k})) for k in range(max(deg, 0), -1, -1)]
        coeffs[-1] -= bound
        if len(coeffs) < 2:
            return False, "potential is constant; sub-level set is unbounded"
        roots = np.roots(coeffs)
        real = sorted(
            float(r.real) for r in roots if abs(r.imag) <= 1e-6 * max(1.0, abs(r.real))
        )
        c = float(x0[0])
        lo = [r for r in real if r <= c]
        hi = [r for r in real if r >= c]
        if not lo or not hi:
            side = "left" if not lo else "right"
            return False, f"sub-level component unbounded to the {side} of x0"
        return True, f"component [{lo[-1]:.6g}, {hi[0]:.6g}] of the sub-level set"
    if n > 3:
        return False, f"no grid certificate for x-dimension {n} > 3"
    axes = _grid_axes(box_lo, box_hi, grid)
    pts = _grid_points(axes)
    vals = _eval_on_x(system, [V], pts)[:, 0].reshape((grid,) * n)
    mask = vals <= bound
    idx0 = tuple(int(np.argmin(np.abs(axes[i] - x0[i]))) for i in range(n))
    if not mask[idx0]:
        return False, "grid node nearest x0 lies above the energy bound"
    labels, _ = ndimage.label(mask, structure=np.ones((3,) * n, dtype=int))
    lab0 = labels[idx0]
    comp = labels == lab0
    touches = any(
        comp.take(0, axis=ax).any() or comp.take(-1, axis=ax).any()
        for ax in range(n)
    )
    if touches:
        return False, "sub-level component reaches the sampling box boundary"
    return True, f"grid-certified bounded component ({grid} nodes/axis, full connectivity)"


def _level_samples(
    system: ReducedSystem,
    box_lo: np.ndarray,
    box_hi: np.ndarray,
    grid: int,
    level: float,
    eps: float,
) -> np.ndarray:
    """Points on (or within eps of) the level set {V = level} inside the box.

    Grid nodes with |V - level| <= eps, plus bisection refinements on every
    grid edge where V - level changes sign (the band alone can miss a
    steep level at this resolution).  1-D additionally contributes the
    real polynomial roots of V - level in closed form.
    """
    n = system.n
    V = system.V
    out: list[np.ndarray] = []
    if n == 1:
        deg = V.degree()
        coeffs = [float(V.coefficient({"x1": k})) for k in range(max(deg, 0), -1, -1)]
        coeffs[-1] -= level
        if len(coeffs) >= 2:
            roots = np.roots(coeffs)
            real = [
                float(r.real)
                for r in roots
                if abs(r.imag) <= 1e-6 * max(1.0, abs(r.real))
                and box_lo[0] <= r.real <= box_hi[0]
            ]
            if real:
                out.append(np.asarray(real)[:, None])
    if n <= 3:
        axes = _grid_axes(box_lo, box_hi, grid)
        pts = _grid_points(axes)
        vals = _eval_on_x(system, [V], pts)[:, 0]
        band = pts[np.abs(vals - level) <= eps]
        if band.size:
            out.append(band)
        g = vals.reshape((grid,) * n) - level
        cube = pts.reshape((grid,) * n + (n,))
        for ax in range(n):
            sl_a = [slice(None)] * n
            sl_b = [slice(None)] * n
            sl_a[ax] = slice(0, -1)
            sl_b[ax] = slice(1, None)
            ga, gb = g[tuple(sl_a)], g[tuple(sl_b)]
            crossing = (ga * gb) < 0
            if not crossing.any():
                continue
            a_pts = cube[tuple(sl_a)][crossing]
            b_pts = cube[tuple(sl_b)][crossing]
            fa = ga[crossing].copy()
            for _ in range(40):
                mid = 0.5 * (a_pts + b_pts)
                fm = _eval_on_x(system, [V], mid)[:, 0] - level
                go_left = (fa * fm) <= 0
                b_pts = np.where(go_left[:, None], mid, b_pts)
                a_pts = np.where(go_left[:, None], a_pts, mid)
                fa = np.where(go_left, fa, fm)
            out.append(0.5 * (a_pts + b_pts))
    if not out:
        return np.empty((0, n))
    return np.vstack(out)


def metric_line_test(
    reduced: Trajectory,
    system: ReducedSystem,
    grid: int = 64,
    eps_level: float = 1e-3,
    delta_grad: float = 1e-6,
    osc_tol: float = 1e-4,
    gap_tol: float = 1e-3,
    dilation: float = 1.25,
    margin: float = 0.5,
    widen: bool = False,
    energy_tol: float = 1e-9,
) -> MetricLineVerdict:
    """Apply the two metric-line exclusion criteria to a reduced trajectory.

    (1) The orbit is certified trapped in a compact region and 1/2 is a
        (numerically) regular value of V on a dilation of that region,
        witnessed by nonempty level samples with min |grad V| > delta.
    (2) The tail averages of some F_i over dyadic windows converge on both
        time directions and their limits differ.

    `reduced` is the forward leg; the backward leg is integrated here from
    (-p0, x0), which is exact because the preconditions force the
    connection coefficients to vanish (H is even in p).  Never claims that
    a trajectory IS a metric line.
    """
    if system.symbolic:
        raise DimensionMismatch("metric-line test needs a numeric momentum")
    if reduced.m != 0 or reduced.n != system.n:
        raise DimensionMismatch("pass the reduced trajectory of this system")
    H0 = float(reduced.H_values[0])
    if abs(H0 - 0.5) > energy_tol:
        raise NotUnitEnergy(H0, energy_tol)
    evidence: dict = {"energy": H0}
    # The zero-momentum reduction is a straight line on every group, and
    # lines are metric lines; answer before the structural precondition so
    # this never misfires regardless of the algebra.
    if all(v == 0 for v in system.mu):
        return MetricLineVerdict(
            outcome="inconclusive",
            reason="zero dual momentum: the reduction is a straight line, which is a metric line",
            evidence=evidence,
        )
    conn = system.conn
    alg, split = conn.alg, conn.split
    if not is_abelian_span(alg, [k - 1 for k in split.x_indices]):
        raise PreconditionXNotAbelian(
            "span(X) is not an abelian subalgebra; the exclusion criteria do not apply"
        )
    for row in conn.A:
        for entry in row:
            if not entry.is_zero():  # abelian span(X) forces vanishing connection terms
                raise RuntimeError("connection coefficients nonzero despite abelian span(X)")

    n = system.n

    p0 = reduced.states[0, :n].copy()
    x0 = reduced.states[0, n:].copy()
    T = float(reduced.times[-1])
    backward = integrate(
        system.H,
        np.concatenate([-p0, x0]),
        T,
        reduced.step,
        method=reduced.method if reduced.method in ("rk4", "implicit-midpoint") else "rk4",
        energy_tol=1e-5,
        on_drift="flag",
    )
    x_all = np.vstack([reduced.x_block(), backward.x_block()])
    box_lo, box_hi = x_all.min(axis=0), x_all.max(axis=0)
    evidence["box"] = [[float(a), float(b)] for a, b in zip(box_lo, box_hi)]

    center = 0.5 * (box_lo + box_hi)
    half = 0.5 * (box_hi - box_lo) * dilation + margin
    u_lo, u_hi = center - half, center + half

    trapped, trap_note = _trapped_certificate(system, x0, 2.0 * H0, u_lo, u_hi, grid)
    evidence["trapped"] = trapped
    evidence["trapped_note"] = trap_note

    level_pts = _level_samples(system, u_lo, u_hi, grid, 0.5, eps_level)
    evidence["level_samples"] = int(level_pts.shape[0])
    min_grad = None
    if level_pts.shape[0]:
        grad = _eval_on_x(system, [system.V.partial(f"x{i}") for i in range(1, n + 1)], level_pts)
        min_grad = float(np.min(np.linalg.norm(grad, axis=1)))
    evidence["min_grad_on_level"] = min_grad

    hill = hill_average(reduced, system)
    evidence["hill_running"] = hill.value
    evidence["hill_limsup"] = hill.limsup_estimate

    if trapped and min_grad is not None and min_grad > delta_grad:
        return MetricLineVerdict(
            outcome="excluded-by-1",
            reason=(
                f"orbit trapped ({trap_note}) and 1/2 is a regular value of V on the "
                f"sampled neighborhood (min |grad V| = {min_grad:.3e} > {delta_grad:.1e})"
            ),
            evidence=evidence,
        )

    F_polys = system.F_functions(widen=widen)
    t = reduced.times
    last = t >= T / 2
    prev = (t >= T / 4) & (t < T / 2)
    F_diag = {}
    fired = None
    if F_polys:
        sysF = kern.PolySystem.compile(list(F_polys), system.space.dim)
        F_fwd = kern.eval_states(sysF, reduced.states)
        F_bwd = kern.eval_states(sysF, backward.states)
        for i in range(len(F_polys)):
            mf_last, mf_prev = float(F_fwd[last, i].mean()), float(F_fwd[prev, i].mean())
            mb_last, mb_prev = float(F_bwd[last, i].mean()), float(F_bwd[prev, i].mean())
            osc_f, osc_b = abs(mf_last - mf_prev), abs(mb_last - mb_prev)
            gap = abs(mf_last - mb_last)
            F_diag[f"F{i + 1}"] = {
                "forward_mean": mf_last,
                "backward_mean": mb_last,
                "osc_forward": osc_f,
                "osc_backward": osc_b,
                "gap": gap,
            }
            converged = osc_f < osc_tol and osc_b < osc_tol
            if converged and gap > max(gap_tol, 10.0 * max(osc_f, osc_b)) and fired is None:
                fired = i + 1
    evidence["F_windows"] = F_diag
    if fired is not None:
        d = F_diag[f"F{fired}"]
        return MetricLineVerdict(
            outcome="excluded-by-2",
            reason=(
                f"F{fired} tail averages converge to distinct limits "
                f"({d['forward_mean']:.6g} vs {d['backward_mean']:.6g}, "
                f"gap {d['gap']:.3e})"
            ),
            evidence=evidence,
        )

    bits = []
    if not trapped:
        bits.append(f"no trapping certificate ({trap_note})")
    elif min_grad is None:
        bits.append("no samples found on the V = 1/2 level inside the search box")
    else:
        bits.append(f"min |grad V| = {min_grad:.3e} on the level samples is below {delta_grad:.1e}")
    bits.append("no F-function showed convergent, distinct tail averages")
    return MetricLineVerdict(
        outcome="inconclusive", reason="; ".join(bits), evidence=evidence
    )

"""Numeric evaluation kernel with compiled/pure backend selection.

Polynomial systems are flattened to (offsets, coeffs, exps) arrays; the
backend evaluates them at floating-point states and runs fixed-step
integrators over them.  The Cython backend (`_fastkern`) is used when the
extension built; `NILFLOW_PURE=1` (or a missing extension) selects the
numpy fallback (`_pykern`).  Both expose the same two entry points and
are covered by parity tests.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

if os.environ.get("NILFLOW_PURE") == "1":
    from . import _pykern as backend

    COMPILED = False
else:
    try:
        from . import _fastkern as backend  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        from . import _pykern as backend

        COMPILED = False

METHOD_RK4 = 0
METHOD_MIDPOINT = 1

STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_NO_CONVERGENCE = 2


@dataclass(frozen=True)
class PolySystem:
    """Flattened polynomial system: n_out polynomials in n_vars variables."""

    n_vars: int
    n_out: int
    offsets: np.ndarray  # int64, shape (n_out + 1,)
    coeffs: np.ndarray  # float64, shape (T,)
    exps: np.ndarray  # int64, shape (T, n_vars)

    @classmethod
    def compile(cls, polys: Sequence, n_vars: int) -> "PolySystem":
        offsets = [0]
        coeffs: list[float] = []
        exps: list[tuple[int, ...]] = []
        for p in polys:
            if p.terms:
                for exp, c in sorted(p.terms.items()):
                    coeffs.append(float(c))
                    exps.append(exp)
            else:
                # keep every segment nonempty so segment sums stay aligned
                coeffs.append(0.0)
                exps.append((0,) * n_vars)
            offsets.append(len(coeffs))
        return cls(
            n_vars=n_vars,
            n_out=len(polys),
            offsets=np.asarray(offsets, dtype=np.int64),
            coeffs=np.asarray(coeffs, dtype=np.float64),
            exps=np.ascontiguousarray(np.asarray(exps, dtype=np.int64).reshape(len(coeffs), n_vars)),
        )


def eval_states(system: PolySystem, states: np.ndarray) -> np.ndarray:
    """Evaluate all polynomials at each row of `states` ((N, n_vars) -> (N, n_out))."""
    states = np.ascontiguousarray(states, dtype=np.float64)
    if states.ndim == 1:
        states = states[None, :]
    if states.shape[1] != system.n_vars:
        raise ValueError(
            f"states have {states.shape[1]} columns, system expects {system.n_vars}"
        )
    return backend.eval_states(
        system.offsets, system.coeffs, system.exps, states
    )


def run_fixed_steps(
    system: PolySystem,
    y0: np.ndarray,
    h: float,
    nsteps: int,
    record_every: int,
    method: int,
    fp_tol: float = 1e-12,
    fp_maxit: int = 50,
) -> tuple[np.ndarray, int, int]:
    """Integrate dy/dt = system(y) with a fixed step.

    Returns (recorded states, status, steps_completed): rows are the state
    at steps 0, record_every, 2*record_every, ..., nsteps.  status is one
    of STATUS_*; on a nonzero status the trailing rows are unfilled.
    """
    if system.n_out != system.n_vars:
        raise ValueError("vector field must have one component per variable")
    y0 = np.ascontiguousarray(y0, dtype=np.float64)
    if y0.shape != (system.n_vars,):
        raise ValueError(f"start state must have shape ({system.n_vars},)")
    if nsteps < 1:
        raise ValueError("nsteps must be >= 1")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    return backend.run_fixed_steps(
        system.offsets,
        system.coeffs,
        system.exps,
        y0,
        float(h),
        int(nsteps),
        int(record_every),
        int(method),
        float(fp_tol),
        int(fp_maxit),
    )


def n_records(nsteps: int, record_every: int) -> int:
    out = nsteps // record_every + 1
    if nsteps % record_every:
        out += 1
    return out


def record_times(t0: float, h: float, nsteps: int, record_every: int) -> np.ndarray:
    ks = list(range(0, nsteps + 1, record_every))
    if ks[-1] != nsteps:
        ks.append(nsteps)
    return t0 + h * np.asarray(ks, dtype=np.float64)

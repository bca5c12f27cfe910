"""Pure-numpy backend for the evaluation kernel.

Mirrors the `_fastkern` extension API exactly; selected when the
extension is unavailable or NILFLOW_PURE=1 is set.
"""

from __future__ import annotations

import numpy as np

_STATUS_OK = 0
_STATUS_NONFINITE = 1
_STATUS_NO_CONVERGENCE = 2


def eval_states(offsets, coeffs, exps, states):
    # (N, 1, nv) ** (1, T, nv) -> prod over nv -> (N, T); then segment sums
    with np.errstate(over="ignore", invalid="ignore"):
        powers = states[:, None, :] ** exps[None, :, :]
        terms = coeffs[None, :] * powers.prod(axis=2)
        out = np.add.reduceat(terms, offsets[:-1], axis=1)
    return out


def _eval_one(offsets, coeffs, exps, y):
    return eval_states(offsets, coeffs, exps, y[None, :])[0]


def run_fixed_steps(
    offsets, coeffs, exps, y0, h, nsteps, record_every, method, fp_tol, fp_maxit
):
    dim = y0.shape[0]
    ks = list(range(0, nsteps + 1, record_every))
    if ks[-1] != nsteps:
        ks.append(nsteps)
    rec = np.empty((len(ks), dim), dtype=np.float64)
    rec[0] = y0
    rec_i = 1
    next_rec = ks[1] if len(ks) > 1 else None

    def f(y):
        return _eval_one(offsets, coeffs, exps, y)

    y = y0.copy()
    for k in range(1, nsteps + 1):
        if method == 0:  # RK4
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:  # implicit midpoint with fixed-point iteration
            z = y + h * f(y)
            converged = False
            for _ in range(fp_maxit):
                znew = y + h * f(0.5 * (y + z))
                if np.max(np.abs(znew - z)) <= fp_tol:
                    z = znew
                    converged = True
                    break
                z = znew
            if not converged:
                return rec, _STATUS_NO_CONVERGENCE, k - 1
            y = z
        if k == next_rec:
            rec[rec_i] = y
            if not np.all(np.isfinite(y)):
                return rec, _STATUS_NONFINITE, k
            rec_i += 1
            next_rec = ks[rec_i] if rec_i < len(ks) else None
    return rec, _STATUS_OK, nsteps

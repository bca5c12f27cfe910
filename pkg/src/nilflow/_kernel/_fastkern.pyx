# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the evaluation kernel (see _pykern for the contract)."""

import numpy as np

cimport cython
from libc.math cimport fabs, isfinite


cdef inline void _eval_into(
    const long long[::1] offsets,
    const double[::1] coeffs,
    const long long[:, ::1] exps,
    const double[::1] y,
    double[::1] out,
) noexcept nogil:
    cdef Py_ssize_t n_out = offsets.shape[0] - 1
    cdef Py_ssize_t nv = exps.shape[1]
    cdef Py_ssize_t i, t, v
    cdef long long e
    cdef double acc, term
    for i in range(n_out):
        acc = 0.0
        for t in range(offsets[i], offsets[i + 1]):
            term = coeffs[t]
            for v in range(nv):
                e = exps[t, v]
                while e > 0:
                    term *= y[v]
                    e -= 1
            acc += term
        out[i] = acc


def eval_states(offsets, coeffs, exps, states):
    cdef const long long[::1] offs = offsets
    cdef const double[::1] cs = coeffs
    cdef const long long[:, ::1] es = exps
    cdef double[:, ::1] st = np.ascontiguousarray(states, dtype=np.float64)
    cdef Py_ssize_t n = st.shape[0]
    out_arr = np.empty((n, offsets.shape[0] - 1), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t r
    with nogil:
        for r in range(n):
            _eval_into(offs, cs, es, st[r], out[r])
    return out_arr


def run_fixed_steps(
    offsets, coeffs, exps, y0, double h, long long nsteps,
    long long record_every, int method, double fp_tol, int fp_maxit
):
    cdef const long long[::1] offs = offsets
    cdef const double[::1] cs = coeffs
    cdef const long long[:, ::1] es = exps
    cdef Py_ssize_t dim = y0.shape[0]

    ks = list(range(0, nsteps + 1, record_every))
    if ks[len(ks) - 1] != nsteps:
        ks.append(nsteps)
    rec_arr = np.empty((len(ks), dim), dtype=np.float64)
    cdef double[:, ::1] rec = rec_arr
    cdef long long[::1] rec_steps = np.asarray(ks, dtype=np.int64)
    cdef Py_ssize_t n_rec = rec_steps.shape[0]

    y_arr = np.ascontiguousarray(y0, dtype=np.float64).copy()
    cdef double[::1] y = y_arr
    scratch = np.empty((6, dim), dtype=np.float64)
    cdef double[::1] k1 = scratch[0]
    cdef double[::1] k2 = scratch[1]
    cdef double[::1] k3 = scratch[2]
    cdef double[::1] k4 = scratch[3]
    cdef double[::1] tmp = scratch[4]
    cdef double[::1] z = scratch[5]

    cdef Py_ssize_t rec_i = 1
    cdef long long k
    cdef Py_ssize_t v
    cdef int it, converged
    cdef double diff, maxdiff
    cdef int status = 0
    cdef long long done = nsteps

    rec[0, :] = y

    with nogil:
        for k in range(1, nsteps + 1):
            if method == 0:
                _eval_into(offs, cs, es, y, k1)
                for v in range(dim):
                    tmp[v] = y[v] + 0.5 * h * k1[v]
                _eval_into(offs, cs, es, tmp, k2)
                for v in range(dim):
                    tmp[v] = y[v] + 0.5 * h * k2[v]
                _eval_into(offs, cs, es, tmp, k3)
                for v in range(dim):
                    tmp[v] = y[v] + h * k3[v]
                _eval_into(offs, cs, es, tmp, k4)
                for v in range(dim):
                    y[v] = y[v] + (h / 6.0) * (k1[v] + 2.0 * k2[v] + 2.0 * k3[v] + k4[v])
            else:
                _eval_into(offs, cs, es, y, k1)
                for v in range(dim):
                    z[v] = y[v] + h * k1[v]
                converged = 0
                for it in range(fp_maxit):
                    for v in range(dim):
                        tmp[v] = 0.5 * (y[v] + z[v])
                    _eval_into(offs, cs, es, tmp, k2)
                    maxdiff = 0.0
                    for v in range(dim):
                        k3[v] = y[v] + h * k2[v]
                        diff = fabs(k3[v] - z[v])
                        if diff > maxdiff:
                            maxdiff = diff
                        z[v] = k3[v]
                    if maxdiff <= fp_tol:
                        converged = 1
                        break
                if not converged:
                    status = 2
                    done = k - 1
                    break
                for v in range(dim):
                    y[v] = z[v]
            if rec_i < n_rec and k == rec_steps[rec_i]:
                for v in range(dim):
                    rec[rec_i, v] = y[v]
                    if not isfinite(y[v]):
                        status = 1
                if status == 1:
                    done = k
                    break
                rec_i += 1

    return rec_arr, status, done

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the loops in ``_pykernels``; same signatures, same results."""

import numpy as np
from libc.math cimport exp, INFINITY

cdef enum:
    STOP_MAX_ITERS = 0
    STOP_TARGET = 1
    STOP_CUTOFF = 2
    STOP_STUCK = -1


cdef inline void _flip(const double[:, ::1] W, unsigned char[::1] x,
                       double[::1] delta, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0], m
    cdef double si = 1.0 - 2.0 * x[i]
    cdef double d_i = delta[i]
    for m in range(n):
        delta[m] += si * (1.0 - 2.0 * x[m]) * W[i, m]
    delta[i] = -d_i
    x[i] ^= 1


def flip_update(const double[:, ::1] W, unsigned char[::1] x, double[::1] delta, Py_ssize_t i):
    _flip(W, x, delta, i)


def tabu_run(const double[:, ::1] W, unsigned char[::1] x, double[::1] delta,
             long long[::1] tabu, double f_ts, double f_best, unsigned char[::1] best_x,
             long long tenure, const long long[::1] tenure_draws, Py_ssize_t max_iters,
             double target, Py_ssize_t cutoff, double[::1] out_fts, double[::1] out_fbest,
             long long[::1] out_flip):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t it, i, j, draw = 0, stall = 0
    cdef double best
    cdef bint aspiration
    with nogil:
        for it in range(max_iters):
            j = -1
            best = INFINITY
            for i in range(n):
                if tabu[i] == 0 and delta[i] < best:
                    best = delta[i]
                    j = i
            if j < 0:
                for i in range(n):
                    if f_ts + delta[i] < f_best and delta[i] < best:
                        best = delta[i]
                        j = i
                if j < 0:
                    with gil:
                        return it, STOP_STUCK, f_ts, f_best
            f_ts += delta[j]
            _flip(W, x, delta, j)
            aspiration = f_ts < f_best
            if aspiration:
                f_best = f_ts
                best_x[:] = x
                stall = 0
            else:
                stall += 1
            for i in range(n):
                if tabu[i] > 0:
                    tabu[i] -= 1
            if aspiration:
                tabu[j] = 0
            else:
                tabu[j] = tenure + tenure_draws[draw]
                draw += 1
            out_fts[it] = f_ts
            out_fbest[it] = f_best
            out_flip[it] = j
            if f_best <= target:
                with gil:
                    return it + 1, STOP_TARGET, f_ts, f_best
            if cutoff > 0 and stall >= cutoff:
                with gil:
                    return it + 1, STOP_CUTOFF, f_ts, f_best
    return max_iters, STOP_MAX_ITERS, f_ts, f_best


def sa_run(const double[:, ::1] W, const double[::1] lin, double offset,
           const unsigned char[:, ::1] starts, const double[:, ::1] uniforms,
           double temperature):
    cdef Py_ssize_t r = starts.shape[0], k = starts.shape[1], steps = uniforms.shape[1]
    cdef Py_ssize_t c, t, i, a, b
    cdef double e, d, acc
    best_e_arr = np.empty(r, dtype=np.float64)
    best_x_arr = np.empty((r, k), dtype=np.uint8)
    x_arr = np.empty(k, dtype=np.uint8)
    cdef double[::1] best_e = best_e_arr
    cdef unsigned char[:, ::1] best_x = best_x_arr
    cdef unsigned char[::1] x = x_arr
    with nogil:
        for c in range(r):
            x[:] = starts[c]
            e = offset
            for a in range(k):
                if x[a]:
                    e += lin[a]
                    for b in range(a + 1, k):
                        if x[b]:
                            e += W[a, b]
            best_e[c] = e
            best_x[c] = x
            for t in range(steps):
                i = t % k
                acc = lin[i]
                for b in range(k):
                    if x[b]:
                        acc += W[i, b]
                d = (1.0 - 2.0 * x[i]) * acc
                if d <= 0 or uniforms[c, t] < exp(-d / temperature):
                    x[i] ^= 1
                    e += d
                    if e < best_e[c]:
                        best_e[c] = e
                        best_x[c] = x
    return best_e_arr, best_x_arr

# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled backend for the bursty traffic stepping kernel.

Mirror image of _engine_py.advance_bursty: identical arithmetic expression
order and identical (ascending user index) reading-time draw order, so the
two backends produce bit-identical trajectories.
"""

from libc.math cimport INFINITY

import numpy as np

cimport numpy as cnp


def advance_bursty(double[::1] se, long[::1] serving, int num_cells,
                   double bandwidth_hz, double tti_s, int n_ttis, double t0_s,
                   double file_bytes, double mean_read_s,
                   double[::1] backlog, double[::1] next_arrival,
                   double[::1] bytes_served, double[::1] active_time,
                   object rng):
    cdef Py_ssize_t n_users = se.shape[0]
    cdef Py_ssize_t i, n
    cdef int c
    cdef double t, share, tmp, cap, served
    cdef double bytes_factor = tti_s / 8.0
    cdef long[::1] counts = np.zeros(num_cells, dtype=np.int64)
    cdef unsigned char[::1] active = np.zeros(n_users, dtype=np.uint8)
    rng_exponential = rng.exponential

    for i in range(n_ttis):
        t = t0_s + i * tti_s

        for n in range(n_users):
            if next_arrival[n] <= t:
                backlog[n] += file_bytes
                next_arrival[n] = INFINITY

        for c in range(num_cells):
            counts[c] = 0
        for n in range(n_users):
            if backlog[n] > 0.0:
                active[n] = 1
                counts[serving[n]] += 1
            else:
                active[n] = 0

        for n in range(n_users):
            if active[n]:
                share = bandwidth_hz / counts[serving[n]]
                tmp = share * se[n]
                cap = tmp * bytes_factor
                served = backlog[n] if backlog[n] < cap else cap
                backlog[n] -= served
                bytes_served[n] += served
                active_time[n] += tti_s
                # a fully drained backlog is exactly 0.0 (x - x == 0)
                if backlog[n] <= 0.0:
                    next_arrival[n] = t + rng_exponential(mean_read_s)

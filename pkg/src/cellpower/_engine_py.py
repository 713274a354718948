"""Pure-numpy backend for the bursty traffic stepping kernel.

Kept operation-for-operation in lockstep with _engine_cy.pyx so both
backends produce bit-identical trajectories: per-user arithmetic uses the
same expression order and reading-time draws happen in ascending user
index. Do not "simplify" the expressions here without mirroring the
change in the Cython kernel.
"""

import numpy as np


def advance_bursty(se, serving, num_cells, bandwidth_hz, tti_s, n_ttis, t0_s,
                   file_bytes, mean_read_s, backlog, next_arrival,
                   bytes_served, active_time, rng):
    """Run n_ttis TTIs of bursty traffic, mutating the state arrays in place.

    se is per-user spectral efficiency (bit/s/Hz), constant while powers are
    fixed; arrivals due at a TTI start land before service; a buffer that
    empties schedules its next file one exponential reading time later.
    """
    bytes_factor = tti_s / 8.0
    for i in range(n_ttis):
        t = t0_s + i * tti_s

        due = next_arrival <= t
        if due.any():
            backlog[due] += file_bytes
            next_arrival[due] = np.inf

        active = backlog > 0.0
        counts = np.bincount(serving[active], minlength=num_cells)
        counts_safe = np.maximum(counts, 1)  # inactive users' shares are unused
        share = bandwidth_hz / counts_safe[serving]
        cap = share * se * bytes_factor
        served = np.where(active, np.minimum(backlog, cap), 0.0)

        backlog -= served
        bytes_served += served
        active_time[active] += tti_s

        emptied = active & (backlog <= 0.0)
        for n in np.nonzero(emptied)[0]:
            next_arrival[n] = t + rng.exponential(mean_read_s)

"""TTI-stepping engine with compiled core and pure-Python fallback.

The bursty traffic inner loop runs once per 1 ms TTI and dominates the
runtime of bursty scenarios, so it lives in a Cython kernel when the
extension built; otherwise the numpy fallback is selected at import.
Set CELLPOWER_PURE_PY=1 to force the fallback. Full-buffer windows have a
closed form (rates are constant while powers are constant) and never step
TTIs at all.
"""

import math
import os

import numpy as np

from . import _engine_py


def _load_backend():
    if os.environ.get("CELLPOWER_PURE_PY", "0") not in ("", "0"):
        return _engine_py, "pure-python"
    try:
        from . import _engine_cy
        return _engine_cy, "compiled"
    except ImportError:
        return _engine_py, "pure-python"


_backend, BACKEND_NAME = _load_backend()
advance_bursty = _backend.advance_bursty


def get_backend(name):
    """Explicit backend lookup, used by tests and the benchmark."""
    if name == "pure-python":
        return _engine_py
    if name == "compiled":
        from . import _engine_cy
        return _engine_cy
    raise ValueError("unknown backend %r" % name)


def advance_full_buffer(se, serving, counts, bandwidth_hz, duration_s,
                        bytes_served, active_time):
    """Closed-form window advance for full-buffer traffic.

    All users are always backlogged, so each holds rate W/N_c * se for the
    whole window regardless of TTI boundaries.
    """
    rate = (bandwidth_hz / counts[serving]) * se
    bytes_served += rate * (duration_s / 8.0)
    active_time += duration_s
    return rate


class TrafficState:
    """Per-drop traffic arrays plus the dispatch between traffic modes."""

    def __init__(self, traffic_config, serving, num_cells, bandwidth_hz,
                 tti_s, rng):
        n = len(serving)
        self.config = traffic_config
        self.serving = np.ascontiguousarray(serving, dtype=np.int64)
        self.num_cells = int(num_cells)
        self.bandwidth_hz = float(bandwidth_hz)
        self.tti_s = float(tti_s)
        self.rng = rng
        self.counts = np.bincount(self.serving, minlength=self.num_cells)
        self.bytes_served = np.zeros(n)
        self.active_time = np.zeros(n)
        if traffic_config.mode == "bursty":
            self.backlog = np.full(n, traffic_config.file_size_bytes)
            self.next_arrival = np.full(n, np.inf)
        else:
            self.backlog = np.full(n, np.inf)
            self.next_arrival = np.full(n, np.inf)

    def advance(self, se, t0_s, n_ttis):
        """Advance n_ttis TTIs under per-user spectral efficiencies se."""
        if self.config.mode == "full_buffer":
            advance_full_buffer(se, self.serving, self.counts,
                                self.bandwidth_hz, n_ttis * self.tti_s,
                                self.bytes_served, self.active_time)
        else:
            advance_bursty(np.ascontiguousarray(se, dtype=np.float64),
                           self.serving, self.num_cells, self.bandwidth_hz,
                           self.tti_s, int(n_ttis), float(t0_s),
                           self.config.file_size_bytes,
                           self.config.mean_reading_time_s,
                           self.backlog, self.next_arrival,
                           self.bytes_served, self.active_time, self.rng)

    def snapshot(self):
        return self.bytes_served.copy(), self.active_time.copy()

    def window_since(self, snap):
        """(bits served, active seconds) per user since a snapshot."""
        bytes0, active0 = snap
        return (self.bytes_served - bytes0) * 8.0, self.active_time - active0

"""Per-user traffic: full-buffer and bursty file downloads with reading time.

step_traffic is the single-user, single-TTI reference semantics; the
simulation loop runs the same rules vectorized through cellpower.engine.
Both must stay in lockstep (tests enforce bit-equality), so any change
here needs the matching change in _engine_py.py and _engine_cy.pyx.
"""

import math
from dataclasses import dataclass


@dataclass
class TrafficConfig:
    mode: str = "full_buffer"  # or "bursty"
    file_size_bytes: float = 100_000.0  # 0.1 MB downloads in bursty mode
    mean_reading_time_s: float = 0.1

    def __post_init__(self):
        if self.mode not in ("full_buffer", "bursty"):
            raise ValueError("unknown traffic mode %r" % self.mode)
        if self.mode == "bursty":
            if self.file_size_bytes <= 0.0:
                raise ValueError("bursty mode requires file_size_bytes > 0")
            if self.mean_reading_time_s <= 0.0:
                raise ValueError("bursty mode requires mean_reading_time_s > 0")


@dataclass
class UserBuffer:
    backlog_bytes: float = 0.0
    next_arrival_time_s: float = math.inf  # inf = no arrival pending
    bytes_served_total: float = 0.0
    active_time_s: float = 0.0

    def is_active(self):
        return self.backlog_bytes > 0.0


def new_buffer(config):
    """Drop-start buffer state: bursty users begin with one full file."""
    if config.mode == "full_buffer":
        return UserBuffer(backlog_bytes=math.inf)
    return UserBuffer(backlog_bytes=config.file_size_bytes)


def step_traffic(buffer, config, now_s, tti_s, served_bytes, rng):
    """Advance one user buffer by one TTI, mutating it in place.

    Order of events, mirrored exactly by the vectorized engines:
    an arrival due at or before now_s lands first, then served_bytes are
    drained, then a buffer that just emptied schedules the next file one
    exponentially distributed reading time after now_s.
    """
    if config.mode == "bursty" and buffer.next_arrival_time_s <= now_s:
        buffer.backlog_bytes += config.file_size_bytes
        buffer.next_arrival_time_s = math.inf

    if config.mode == "full_buffer":
        buffer.bytes_served_total += served_bytes
        buffer.active_time_s += tti_s
        return buffer

    if served_bytes > buffer.backlog_bytes * (1.0 + 1e-12):
        raise ValueError(
            "scheduler bug: served %.1f B > backlog %.1f B"
            % (served_bytes, buffer.backlog_bytes)
        )
    was_active = buffer.backlog_bytes > 0.0
    buffer.backlog_bytes -= served_bytes
    buffer.bytes_served_total += served_bytes
    if was_active:
        buffer.active_time_s += tti_s
        if buffer.backlog_bytes <= 0.0:
            buffer.backlog_bytes = 0.0
            buffer.next_arrival_time_s = now_s + rng.exponential(config.mean_reading_time_s)
    return buffer


def user_throughput(bits_served, window_s, mode, active_time_s=None, floor_bps=1000.0):
    """Throughput estimate over a measurement window, in bit/s.

    Full buffer divides by the window; bursty divides by the time the user
    actually had data queued so reading gaps do not register as zero rate.
    The floor keeps downstream log/harmonic rewards finite.
    """
    if window_s <= 0.0:
        raise ValueError("window_s must be > 0")
    if mode == "full_buffer":
        tput = bits_served / window_s
    else:
        denom = active_time_s if active_time_s is not None else 0.0
        tput = bits_served / denom if denom > 0.0 else 0.0
    return max(tput, floor_bps)

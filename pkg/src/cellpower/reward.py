"""Alpha-fair utility family and network-wide reward aggregation.

The general form is r(x) = 1/(1-alpha) * sum_i w_i * (x_i^(1-alpha) - 1)
with the alpha = 1 case replaced by its analytic limit sum_i w_i*log(x_i).
Six canonical (alpha, weight) instantiations get named shortcuts; those
names are also the values accepted in config files.
"""

import math
from dataclasses import dataclass

import numpy as np

# canonical_kind -> (alpha, weight_mode)
CANONICAL_KINDS = {
    "mean_user_tput": (0.0, "uniform_1_over_X"),
    "sum_cell_tput": (0.0, "unit"),
    "mean_log_tput": (1.0, "uniform_1_over_X"),
    "sum_log_tput": (1.0, "unit"),
    "harmonic_mean_tput": (2.0, "uniform_1_over_X"),
    "inverse_sum_inverse_tput": (2.0, "unit"),
}


@dataclass
class RewardConfig:
    alpha: float = 2.0
    weight_mode: str = "uniform_1_over_X"
    aggregation: str = "network_pool"  # or "sum_of_cell_rewards"
    canonical_kind: str = None

    def __post_init__(self):
        if self.alpha < 0.0:
            raise ValueError("alpha must be >= 0")
        if self.weight_mode not in ("uniform_1_over_X", "unit"):
            raise ValueError("unknown weight_mode %r" % self.weight_mode)
        if self.aggregation not in ("network_pool", "sum_of_cell_rewards"):
            raise ValueError("unknown aggregation %r" % self.aggregation)
        if self.canonical_kind is not None:
            if self.canonical_kind not in CANONICAL_KINDS:
                raise ValueError("unknown canonical kind %r" % self.canonical_kind)
            alpha, mode = CANONICAL_KINDS[self.canonical_kind]
            if alpha != self.alpha or mode != self.weight_mode:
                raise ValueError(
                    "canonical kind %r inconsistent with alpha=%g weight_mode=%s"
                    % (self.canonical_kind, self.alpha, self.weight_mode)
                )

    @classmethod
    def from_kind(cls, kind, aggregation="network_pool"):
        alpha, mode = CANONICAL_KINDS[kind]
        return cls(alpha=alpha, weight_mode=mode, aggregation=aggregation,
                   canonical_kind=kind)

    def weights(self, n):
        if self.weight_mode == "uniform_1_over_X":
            return np.full(n, 1.0 / n)
        return np.ones(n)


def alpha_fair(values, alpha, weights):
    """Alpha-fair utility of strictly positive values.

    alpha = 1 uses the log limit; other alphas use the closed form. Raises
    on nonpositive inputs: flooring is the caller's job.
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.shape != w.shape:
        raise ValueError("values and weights must have matching length")
    if np.any(v <= 0.0):
        raise ValueError("alpha_fair requires strictly positive values")
    if alpha < 0.0:
        raise ValueError("alpha must be >= 0")
    if alpha == 1.0:
        return float(np.sum(w * np.log(v)))
    return float(np.sum(w * (v ** (1.0 - alpha) - 1.0)) / (1.0 - alpha))


def canonical_reward(kind, throughputs):
    """One of the six closed-form instantiations, evaluated directly."""
    x = np.asarray(throughputs, dtype=float)
    if x.size == 0:
        raise ValueError("empty throughput list")
    if np.any(x <= 0.0):
        raise ValueError("throughputs must be strictly positive")
    if kind == "mean_user_tput":
        return float(np.mean(x))
    if kind == "sum_cell_tput":
        return float(np.sum(x))
    if kind == "mean_log_tput":
        return float(np.mean(np.log(x)))
    if kind == "sum_log_tput":
        return float(np.sum(np.log(x)))
    if kind == "harmonic_mean_tput":
        return float(x.size / np.sum(1.0 / x))
    if kind == "inverse_sum_inverse_tput":
        return float(1.0 / np.sum(1.0 / x))
    raise ValueError("unknown canonical kind %r" % kind)


def network_reward(per_cell_throughputs, config):
    """Aggregate per-cell throughput lists into the scalar learning signal.

    network_pool concatenates every user's throughput and applies the
    reward once network-wide; sum_of_cell_rewards applies it per cell and
    sums. Uses the canonical shortcut when one is configured, otherwise
    the general alpha-fair form.
    """
    lists = [np.asarray(t, dtype=float) for t in per_cell_throughputs if len(t) > 0]
    if not lists:
        raise ValueError("no users network-wide")

    def evaluate(x):
        if config.canonical_kind is not None:
            return canonical_reward(config.canonical_kind, x)
        return alpha_fair(x, config.alpha, config.weights(len(x)))

    if config.aggregation == "network_pool":
        return evaluate(np.concatenate(lists))
    return float(sum(evaluate(x) for x in lists))


def cell_reward(throughputs, config):
    """Same reward family restricted to one cell's own users."""
    x = np.asarray(throughputs, dtype=float)
    if config.canonical_kind is not None:
        return canonical_reward(config.canonical_kind, x)
    return alpha_fair(x, config.alpha, config.weights(x.size))


def bps_to_mbps(rate_bps, floor_bps=1000.0):
    """Convert bit/s to Mbit/s with the configured rate floor applied.

    Rewards consume Mbit/s values; the floor (default 1 kbit/s) keeps log
    and harmonic terms finite.
    """
    r = np.maximum(np.asarray(rate_bps, dtype=float), floor_bps)
    return r / 1e6


def harmonic_mean(values):
    x = np.asarray(values, dtype=float)
    return float(x.size / np.sum(1.0 / x))


def geometric_mean(values):
    x = np.asarray(values, dtype=float)
    return float(math.exp(np.mean(np.log(x))))

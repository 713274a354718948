"""Exact baselines: exhaustive power-grid search and the convexified
network-utility-maximization program.

Both operate on the analytic steady-state model (equal bandwidth share,
Shannon rates), so they are deterministic and independent of simulation
mechanics. The NUM program works in log-transformed powers, where the
capacity constraints are jointly convex; since the utility is strictly
increasing those constraints are always active and the rates can be
eliminated, leaving a concave maximization over box-constrained
log-powers solved by projected gradient ascent.
"""

from dataclasses import dataclass, field

import numpy as np

from . import reward as rw
from .netmodel import dbm_to_watts, sinr_all, watts_to_dbm

LN2 = float(np.log(2.0))
GRID_GUARD = 1_000_000


@dataclass
class GridSpec:
    lo_dbm: float = 10.0
    hi_dbm: float = 46.0
    step_db: float = 1.0

    def __post_init__(self):
        if self.lo_dbm > self.hi_dbm:
            raise ValueError("lo_dbm must be <= hi_dbm")
        if self.step_db <= 0.0:
            raise ValueError("step_db must be > 0")

    def levels(self):
        n = int(round((self.hi_dbm - self.lo_dbm) / self.step_db)) + 1
        return self.lo_dbm + self.step_db * np.arange(n)


@dataclass
class GridResult:
    best_powers_dbm: np.ndarray
    best_reward: float
    powers_dbm: np.ndarray  # (M, C) every grid point
    rewards: np.ndarray  # (M,)


def steady_state_throughputs_mbps(network, powers_w, floor_bps=1000.0):
    """Analytic full-buffer user throughputs under equal bandwidth share."""
    rates = network.equal_share_rates(np.asarray(powers_w, dtype=float))
    return rw.bps_to_mbps(rates, floor_bps)


def grid_search(network, grid, reward_config, floor_bps=1000.0):
    """Evaluate the steady-state network reward at every grid point.

    Returns the argmax (ties broken toward lower total transmit power,
    then lexicographically) together with the full surface.
    """
    levels = grid.levels()
    C = network.num_cells
    if len(levels) ** C > GRID_GUARD:
        raise ValueError(
            "grid of %d^%d points exceeds the %d-point guard"
            % (len(levels), C, GRID_GUARD)
        )
    mesh = np.meshgrid(*([levels] * C), indexing="ij")
    combos_dbm = np.stack([m.ravel() for m in mesh], axis=1)
    combos_w = dbm_to_watts(combos_dbm)

    serving = network.serving
    share = network.bandwidth_hz / network.counts[serving]
    idx = np.arange(network.num_users)
    g_serv = network.gains[idx, serving]

    total_rx = combos_w @ network.gains.T  # (M, N)
    serving_rx = combos_w[:, serving] * g_serv
    interference = np.maximum(total_rx - serving_rx, 0.0)
    sinr = serving_rx / (network.channel.noise_power_linear + interference)
    tputs = rw.bps_to_mbps(share * np.log2(1.0 + sinr), floor_bps)

    rewards = _reward_rows(tputs, serving, C, reward_config)

    best = np.max(rewards)
    cand = np.flatnonzero(rewards == best)
    keys = np.lexsort([combos_dbm[cand, c] for c in range(C - 1, -1, -1)]
                      + [np.sum(combos_w[cand], axis=1)])
    pick = cand[keys[0]]
    return GridResult(best_powers_dbm=combos_dbm[pick].copy(),
                      best_reward=float(rewards[pick]),
                      powers_dbm=combos_dbm, rewards=rewards)


def _reward_rows(tputs, serving, num_cells, config):
    """network_reward for every row of a (M, N) throughput matrix."""
    kind = config.canonical_kind
    if kind is not None and config.aggregation == "network_pool":
        return _canonical_rows(kind, tputs)
    if kind is not None:
        total = np.zeros(tputs.shape[0])
        for c in range(num_cells):
            total += _canonical_rows(kind, tputs[:, serving == c])
        return total
    out = np.empty(tputs.shape[0])
    for m in range(tputs.shape[0]):
        per_cell = [tputs[m, serving == c] for c in range(num_cells)]
        out[m] = rw.network_reward(per_cell, config)
    return out


def _canonical_rows(kind, x):
    if kind == "mean_user_tput":
        return np.mean(x, axis=1)
    if kind == "sum_cell_tput":
        return np.sum(x, axis=1)
    if kind == "mean_log_tput":
        return np.mean(np.log(x), axis=1)
    if kind == "sum_log_tput":
        return np.sum(np.log(x), axis=1)
    if kind == "harmonic_mean_tput":
        return x.shape[1] / np.sum(1.0 / x, axis=1)
    if kind == "inverse_sum_inverse_tput":
        return 1.0 / np.sum(1.0 / x, axis=1)
    raise ValueError("unknown canonical kind %r" % kind)


def export_surface(path, result):
    """CSV dump of the full reward surface (P_1_dBm,...,reward)."""
    C = result.powers_dbm.shape[1]
    header = ",".join("P_%d_dBm" % (c + 1) for c in range(C)) + ",reward"
    with open(path, "w") as f:
        f.write(header + "\n")
        for row, r in zip(result.powers_dbm, result.rewards):
            f.write(",".join(repr(float(v)) for v in row) + "," + repr(float(r)) + "\n")


@dataclass
class NumProblem:
    """Log-transformed NUM instance over box-constrained cell powers.

    Utilities are the unit-weight alpha-fair family on per-user rates in
    Mbit/s; alpha >= 1 is required so the reduced objective stays concave
    after the log transformation.
    """

    gains: np.ndarray  # (N, C)
    serving: np.ndarray  # (N,)
    noise_w: float
    bandwidths_hz: np.ndarray  # (N,) equal-share W_n
    p_max_w: np.ndarray  # (C,)
    p_min_w: np.ndarray  # (C,)
    alpha: float = 1.0

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=float)
        self.serving = np.asarray(self.serving, dtype=np.int64)
        self.bandwidths_hz = np.asarray(self.bandwidths_hz, dtype=float)
        self.p_max_w = np.asarray(self.p_max_w, dtype=float)
        self.p_min_w = np.asarray(self.p_min_w, dtype=float)
        if np.any(self.gains <= 0.0):
            raise ValueError("gains must be strictly positive")
        if self.alpha < 1.0:
            raise ValueError(
                "alpha >= 1 required: the transformed objective can lose "
                "concavity for alpha < 1"
            )
        if np.any(self.p_min_w <= 0.0) or np.any(self.p_min_w > self.p_max_w):
            raise ValueError("require 0 < p_min <= p_max per cell")

    @classmethod
    def from_network(cls, network, alpha=1.0):
        return cls(gains=network.gains, serving=network.serving,
                   noise_w=network.channel.noise_power_linear,
                   bandwidths_hz=network.bandwidth_hz / network.counts[network.serving],
                   p_max_w=dbm_to_watts([c.max_power_dbm for c in network.cells]),
                   p_min_w=dbm_to_watts([c.min_power_dbm for c in network.cells]),
                   alpha=alpha)

    def rates_mbps(self, powers_w):
        g = sinr_all(self.gains, self.serving, np.asarray(powers_w, float),
                     self.noise_w)
        return self.bandwidths_hz * np.log2(1.0 + g) / 1e6

    def utility(self, powers_w):
        r = self.rates_mbps(powers_w)
        return rw.alpha_fair(r, self.alpha, np.ones(r.size))

    def utility_and_gradient(self, log_p):
        """Objective and its gradient in log-power coordinates."""
        p = np.exp(log_p)
        idx = np.arange(self.gains.shape[0])
        g_serv = self.gains[idx, self.serving]
        total = self.gains @ p
        serving_rx = g_serv * p[self.serving]
        denom = self.noise_w + np.maximum(total - serving_rx, 0.0)
        gamma = serving_rx / denom
        rates = self.bandwidths_hz * np.log2(1.0 + gamma) / 1e6
        value = rw.alpha_fair(rates, self.alpha, np.ones(rates.size))

        # du/dr = r^-alpha; dr/dgamma = (W_n/ln2)/(1+gamma)/1e6
        du_dgamma = rates ** (-self.alpha) * self.bandwidths_hz / \
            (LN2 * (1.0 + gamma)) / 1e6
        # dgamma/dP_c: G_serv/denom for the serving cell, else -gamma*G/denom
        coeff = -(du_dgamma * gamma / denom)[:, None] * self.gains
        coeff[idx, self.serving] = du_dgamma * g_serv / denom
        grad_p = np.sum(coeff, axis=0)
        return value, grad_p * p  # chain rule for p = exp(log_p)


@dataclass
class NumSolution:
    powers_w: np.ndarray
    powers_dbm: np.ndarray
    rates_mbps: np.ndarray
    utility: float
    iterations: int
    kkt_residual: float
    converged: bool


def solve_num(problem, tol=1e-6, max_iters=10_000):
    """Projected gradient ascent on the reduced concave objective.

    The capacity constraints hold with equality throughout (the utility is
    strictly increasing in every rate), so iterates carry feasible rates by
    construction. Stops when the projected-gradient residual drops below
    tol; otherwise returns the best iterate found with converged=False.
    """
    lo = np.log(problem.p_min_w)
    hi = np.log(problem.p_max_w)
    x = hi.copy()  # feasible start: max power
    step = 1.0
    value, grad = problem.utility_and_gradient(x)
    residual = float(np.max(np.abs(x - np.clip(x + grad, lo, hi))))
    iterations = 0
    for iterations in range(1, max_iters + 1):
        if residual < tol:
            break
        accepted = False
        while step >= 1e-14:
            x_new = np.clip(x + step * grad, lo, hi)
            move = x_new - x
            if not np.any(move):
                break
            v_new, g_new = problem.utility_and_gradient(x_new)
            if v_new >= value + 1e-4 * float(grad @ move):
                x, value, grad = x_new, v_new, g_new
                accepted = True
                break
            step *= 0.5
        residual = float(np.max(np.abs(x - np.clip(x + grad, lo, hi))))
        if not accepted:
            break  # no productive step at machine precision
        step = min(step * 2.0, 1e6)
    p = np.exp(x)
    return NumSolution(powers_w=p, powers_dbm=np.asarray(watts_to_dbm(p)),
                       rates_mbps=problem.rates_mbps(p),
                       utility=problem.utility(p), iterations=iterations,
                       kkt_residual=residual, converged=residual < tol)


def transformed_capacity(problem, log_p):
    """Per-user transformed capacity rhs: log(W_n * log2(1 + gamma))."""
    p = np.exp(np.asarray(log_p, dtype=float))
    g = sinr_all(problem.gains, problem.serving, p, problem.noise_w)
    return np.log(problem.bandwidths_hz) + np.log(np.log2(1.0 + g))


def check_convexity(problem, probes, rng, tol=1e-9):
    """Numerical probe of joint convexity of the transformed program.

    Draws random pairs of feasible log-power points and random lambdas,
    then verifies midpoint concavity of every transformed capacity
    constraint, and of the objective along random segments in the
    log-rate domain. Returns a report with the worst violations.
    """
    lo = np.log(problem.p_min_w)
    hi = np.log(problem.p_max_w)
    worst_constraint = 0.0
    worst_objective = 0.0
    violations = 0
    ones = np.ones(problem.gains.shape[0])
    for _ in range(int(probes)):
        x = rng.uniform(lo, hi)
        y = rng.uniform(lo, hi)
        lam = rng.uniform()
        mid = lam * x + (1.0 - lam) * y
        gap = (lam * transformed_capacity(problem, x)
               + (1.0 - lam) * transformed_capacity(problem, y)
               - transformed_capacity(problem, mid))
        cviol = float(np.max(gap))
        worst_constraint = max(worst_constraint, cviol)

        rx = rng.uniform(np.log(0.05), np.log(50.0), size=ones.size)
        ry = rng.uniform(np.log(0.05), np.log(50.0), size=ones.size)
        rmid = lam * rx + (1.0 - lam) * ry
        u = lambda r: rw.alpha_fair(np.exp(r), problem.alpha, ones)
        oviol = lam * u(rx) + (1.0 - lam) * u(ry) - u(rmid)
        worst_objective = max(worst_objective, float(oviol))
        if cviol > tol or oviol > tol:
            violations += 1
    return {
        "probes": int(probes),
        "violations": violations,
        "max_constraint_violation": worst_constraint,
        "max_objective_violation": worst_objective,
        "passed": violations == 0,
    }

"""Per-cell power-control agents and their round-robin coordinator.

Each agent observes four windowed features (own power, average user RSRP,
average interference, own-cell reward), picks a discrete power delta
epsilon-greedily, and learns from the network-wide reward measured over
the window that follows each action.
"""

from dataclasses import dataclass, field

import numpy as np

from .netmodel import watts_to_dbm
from .qlearn import Transition

STATE_DIM = 4


@dataclass
class ActionSet:
    """Discrete power adjustments in dB; must contain 0 and be symmetric."""

    deltas_db: tuple = (0.0, 1.0, -1.0, 3.0, -3.0)

    def __post_init__(self):
        self.deltas_db = tuple(float(d) for d in self.deltas_db)
        if 0.0 not in self.deltas_db:
            raise ValueError("action set must contain the hold action 0")
        if set(self.deltas_db) != set(-d for d in self.deltas_db):
            raise ValueError("action set must be symmetric around 0")

    def __len__(self):
        return len(self.deltas_db)


def extract_state(rsrp_sum_w, interference_sum_w, n_samples, cell_power_dbm,
                  cell_reward):
    """Window-averaged features, with the power aggregates in dBm."""
    if n_samples < 1:
        raise ValueError("empty measurement window")
    avg_rsrp_dbm = float(watts_to_dbm(rsrp_sum_w / n_samples))
    avg_interf_dbm = float(watts_to_dbm(interference_sum_w / n_samples))
    return np.array([cell_power_dbm, avg_rsrp_dbm, avg_interf_dbm, cell_reward])


def apply_action(power_dbm, delta_db, min_dbm, max_dbm):
    return float(min(max(power_dbm + delta_db, min_dbm), max_dbm))


@dataclass
class Coordinator:
    """Strict round-robin turn-taking: one agent per action epoch."""

    order: tuple  # permutation of cell ids
    action_period_ms: float

    def agent_turn(self, now_ms):
        """Acting agent at time now_ms, or None off the action grid."""
        if now_ms <= 0:
            return None
        k, rem = divmod(float(now_ms), self.action_period_ms)
        if rem != 0.0:
            return None
        return self.order[(int(k) - 1) % len(self.order)]


class PowerAgent:
    """One cell's controller: pending-transition bookkeeping around a QLearner."""

    def __init__(self, cell_id, learner, actions, min_power_dbm, max_power_dbm,
                 rng):
        self.cell_id = cell_id
        self.learner = learner
        self.actions = actions
        self.min_power_dbm = min_power_dbm
        self.max_power_dbm = max_power_dbm
        self.rng = rng
        self.pending_state = None
        self.pending_action = None

    def start_drop(self):
        """Drops are independent realizations: never chain across them."""
        self.pending_state = None
        self.pending_action = None

    def step(self, state, network_reward_value, power_dbm):
        """One turn: close the pending transition, learn, pick the next delta.

        Returns (new_power_dbm, action_index, epsilon, trained). The first
        turn of a drop records nothing and explores unconditionally.
        """
        trained = False
        first_turn = self.pending_state is None
        if not first_turn:
            trained = self.learner.observe(Transition(self.pending_state,
                                                      self.pending_action,
                                                      network_reward_value,
                                                      state))
        action, eps = self.learner.select(state, self.rng,
                                          force_random=first_turn)
        new_power = apply_action(power_dbm, self.actions.deltas_db[action],
                                 self.min_power_dbm, self.max_power_dbm)
        self.pending_state = state
        self.pending_action = action
        return new_power, action, eps, trained

"""Growing-batch Q-learning with a feedforward approximator and RPROP.

The approximator maps a (state, one-hot action) concatenation to a scalar
Q-value. Training is fitted-Q style: bootstrap targets are recomputed from
the current net once per round, then a round of full-batch RPROP epochs
regresses onto them. The batch is append-only and owns the running
feature/reward normalization applied to everything the net sees.
"""

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Transition:
    state: np.ndarray
    action_index: int
    reward: float
    next_state: np.ndarray

    def __post_init__(self):
        self.state = np.asarray(self.state, dtype=float)
        self.next_state = np.asarray(self.next_state, dtype=float)
        if self.state.shape != self.next_state.shape:
            raise ValueError("state and next_state dimensions differ")


class GrowingBatch:
    """Append-only transition store with running normalization statistics.

    Feature normalization is min-max over all states and next-states seen
    so far; rewards are scaled by the running max absolute reward. Both
    are applied on the fly so stored transitions stay raw.
    """

    def __init__(self, state_dim, normalize=True, capacity=None):
        self.state_dim = int(state_dim)
        self.normalize = normalize
        self.capacity = capacity
        self._states = []
        self._actions = []
        self._rewards = []
        self._next_states = []
        self.feat_min = np.full(state_dim, np.inf)
        self.feat_max = np.full(state_dim, -np.inf)
        self.max_abs_reward = 0.0

    def __len__(self):
        return len(self._states)

    def append(self, tr):
        if tr.state.shape != (self.state_dim,):
            raise ValueError("transition state dimension mismatch")
        if self.capacity is not None and len(self) >= self.capacity:
            raise ValueError("batch capacity exceeded")
        self._states.append(tr.state)
        self._actions.append(int(tr.action_index))
        self._rewards.append(float(tr.reward))
        self._next_states.append(tr.next_state)
        self.feat_min = np.minimum(self.feat_min, np.minimum(tr.state, tr.next_state))
        self.feat_max = np.maximum(self.feat_max, np.maximum(tr.state, tr.next_state))
        self.max_abs_reward = max(self.max_abs_reward, abs(float(tr.reward)))

    def states(self):
        return np.array(self._states)

    def actions(self):
        return np.array(self._actions, dtype=np.int64)

    def rewards(self):
        return np.array(self._rewards)

    def next_states(self):
        return np.array(self._next_states)

    def normalize_states(self, x):
        """Map features into [0, 1] with the running min-max."""
        if not self.normalize or len(self) == 0:
            return np.asarray(x, dtype=float)
        span = self.feat_max - self.feat_min
        span = np.where(span > 1e-12, span, 1.0)
        return np.clip((np.asarray(x, dtype=float) - self.feat_min) / span, 0.0, 1.0)

    def normalize_rewards(self, r):
        if not self.normalize or self.max_abs_reward == 0.0:
            return np.asarray(r, dtype=float)
        return np.asarray(r, dtype=float) / self.max_abs_reward

    def training_arrays(self):
        return (self.normalize_states(self.states()), self.actions(),
                self.normalize_rewards(self.rewards()),
                self.normalize_states(self.next_states()))


class QApproximator:
    """Feedforward net: tanh hidden layers, identity output, scalar Q."""

    def __init__(self, state_dim, num_actions, hidden=(32, 32, 16), rng=None,
                 init_scale=0.1):
        self.state_dim = int(state_dim)
        self.num_actions = int(num_actions)
        self.hidden = tuple(int(h) for h in hidden)
        widths = [self.state_dim + self.num_actions, *self.hidden, 1]
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params = []
        for din, dout in zip(widths[:-1], widths[1:]):
            self.params.append(rng.uniform(-init_scale, init_scale, size=(din, dout)))
            self.params.append(rng.uniform(-init_scale, init_scale, size=dout))

    @property
    def input_dim(self):
        return self.state_dim + self.num_actions

    def num_layers(self):
        return len(self.params) // 2

    def encode(self, states, actions):
        """Concatenate states with one-hot action encodings."""
        states = np.atleast_2d(np.asarray(states, dtype=float))
        actions = np.atleast_1d(np.asarray(actions, dtype=np.int64))
        onehot = np.zeros((states.shape[0], self.num_actions))
        onehot[np.arange(states.shape[0]), actions] = 1.0
        return np.concatenate([states, onehot], axis=1)

    def forward(self, x):
        a = np.atleast_2d(np.asarray(x, dtype=float))
        L = self.num_layers()
        for l in range(L):
            w, b = self.params[2 * l], self.params[2 * l + 1]
            a = a @ w + b
            if l < L - 1:
                a = np.tanh(a)
        return a[:, 0]

    def forward_cached(self, x):
        """Forward pass keeping per-layer activations for backprop."""
        a = np.atleast_2d(np.asarray(x, dtype=float))
        acts = [a]
        L = self.num_layers()
        for l in range(L):
            w, b = self.params[2 * l], self.params[2 * l + 1]
            a = a @ w + b
            if l < L - 1:
                a = np.tanh(a)
            acts.append(a)
        return acts[-1][:, 0], acts

    def backward(self, acts, dq):
        """Gradients of a scalar loss with upstream dL/dq, per parameter."""
        L = self.num_layers()
        grads = [None] * len(self.params)
        delta = np.asarray(dq, dtype=float)[:, None]
        for l in range(L - 1, -1, -1):
            a_in = acts[l]
            grads[2 * l] = a_in.T @ delta
            grads[2 * l + 1] = delta.sum(axis=0)
            if l > 0:
                w = self.params[2 * l]
                delta = (delta @ w.T) * (1.0 - acts[l] ** 2)
        return grads

    def q_values(self, states):
        """Q for every action: (B, num_actions)."""
        states = np.atleast_2d(np.asarray(states, dtype=float))
        B = states.shape[0]
        rep = np.repeat(states, self.num_actions, axis=0)
        acts = np.tile(np.arange(self.num_actions), B)
        return self.forward(self.encode(rep, acts)).reshape(B, self.num_actions)

    def copy_params(self):
        return [p.copy() for p in self.params]

    def set_params(self, params):
        self.params = [p.copy() for p in params]


def predict_q(net, state, action_index):
    """Deterministic scalar Q(s, a)."""
    state = np.asarray(state, dtype=float)
    if state.shape != (net.state_dim,):
        raise ValueError("state dimension %s != %d" % (state.shape, net.state_dim))
    return float(net.forward(net.encode(state[None, :], [action_index]))[0])


def greedy_action(net, state, num_actions=None):
    """Argmax over actions; ties break toward the lowest index."""
    q = net.q_values(np.asarray(state, dtype=float)[None, :])[0]
    if num_actions is not None:
        q = q[:num_actions]
    return int(np.argmax(q))


@dataclass
class EpsilonSchedule:
    eps_max: float = 0.9
    eps_min: float = 0.1
    decay_actions: int = 200

    def __post_init__(self):
        if not (0.0 <= self.eps_min <= self.eps_max <= 1.0):
            raise ValueError("require 0 <= eps_min <= eps_max <= 1")
        if self.decay_actions < 1:
            raise ValueError("decay_actions must be >= 1")


def epsilon_at(schedule, action_count):
    """Linear decay from eps_max to eps_min; endpoints are exact."""
    if action_count <= 0:
        return schedule.eps_max
    if action_count >= schedule.decay_actions:
        return schedule.eps_min
    frac = action_count / schedule.decay_actions
    return schedule.eps_max + frac * (schedule.eps_min - schedule.eps_max)


def select_action(net, state, schedule, action_count, rng, num_actions=None):
    """Epsilon-greedy: random with probability eps, else greedy."""
    n = num_actions if num_actions is not None else net.num_actions
    eps = epsilon_at(schedule, action_count)
    if rng.uniform() < eps:
        return int(rng.integers(n))
    return greedy_action(net, state, n)


def compute_targets(batch, net, gamma):
    """Fitted-Q targets r + gamma * max_a' Q(s', a') over the full batch."""
    if not (0.0 <= gamma < 1.0):
        raise ValueError("gamma must be in [0, 1)")
    if len(batch) == 0:
        return np.zeros(0)
    _, _, rewards, next_states = batch.training_arrays()
    return rewards + gamma * net.q_values(next_states).max(axis=1)


def batch_loss(net, inputs, targets):
    """Eq-style squared regression loss with targets held fixed."""
    q = net.forward(inputs)
    return 0.5 * float(np.sum((targets - q) ** 2))


def loss_gradients(net, inputs, targets):
    q, acts = net.forward_cached(inputs)
    residual = q - targets
    loss = 0.5 * float(np.sum(residual ** 2))
    return loss, net.backward(acts, residual)


class RpropState:
    """Per-parameter adaptive steps for sign-based RPROP updates.

    Sign agreement grows the step, a sign flip shrinks it, suppresses the
    update for that weight this round and resets its stored sign.
    """

    def __init__(self, net, delta0=0.1, eta_plus=1.2, eta_minus=0.5,
                 delta_min=1e-6, delta_max=50.0):
        if not (0.0 < eta_minus < 1.0 < eta_plus):
            raise ValueError("require 0 < eta_minus < 1 < eta_plus")
        if not (0.0 < delta_min <= delta0 <= delta_max):
            raise ValueError("require delta_min <= delta0 <= delta_max")
        self.eta_plus = eta_plus
        self.eta_minus = eta_minus
        self.delta_min = delta_min
        self.delta_max = delta_max
        self.delta = [np.full_like(p, delta0) for p in net.params]
        self.prev_sign = [np.zeros_like(p) for p in net.params]

    def step(self, params, grads):
        """Apply one RPROP update in place."""
        for p, g, d, ps in zip(params, grads, self.delta, self.prev_sign):
            s = np.sign(g)
            same = ps * s > 0.0
            flip = ps * s < 0.0
            d[same] = np.minimum(d[same] * self.eta_plus, self.delta_max)
            d[flip] = np.maximum(d[flip] * self.eta_minus, self.delta_min)
            move = -s * d
            move[flip] = 0.0
            p += move
            s[flip] = 0.0
            ps[:] = s

    def snapshot(self):
        return ([d.copy() for d in self.delta], [s.copy() for s in self.prev_sign])

    def restore(self, snap):
        self.delta = [d.copy() for d in snap[0]]
        self.prev_sign = [s.copy() for s in snap[1]]


def rprop_step(rprop, net, grads):
    rprop.step(net.params, grads)


def train(net, batch, gamma, rprop, epochs=50):
    """One fitted-Q round: fixed targets, epochs of full-batch RPROP.

    A non-finite loss aborts the round and restores the pre-round weights
    and optimizer state. Returns the per-epoch loss trace.
    """
    if len(batch) == 0:
        raise ValueError("cannot train on an empty batch")
    states, actions, _, _ = batch.training_arrays()
    targets = compute_targets(batch, net, gamma)
    inputs = net.encode(states, actions)
    params_before = net.copy_params()
    rprop_before = rprop.snapshot()
    losses = []
    for _ in range(epochs):
        loss, grads = loss_gradients(net, inputs, targets)
        if not math.isfinite(loss):
            net.set_params(params_before)
            rprop.restore(rprop_before)
            return losses
        losses.append(loss)
        rprop.step(net.params, grads)
    return losses


class QLearner:
    """Everything one agent needs: net, batch, optimizer, exploration."""

    def __init__(self, state_dim, num_actions, gamma=0.7, hidden=(32, 32, 16),
                 schedule=None, policy_update_period=50, epochs_per_round=50,
                 rng=None, rprop_kwargs=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.net = QApproximator(state_dim, num_actions, hidden=hidden, rng=rng)
        self.batch = GrowingBatch(state_dim)
        self.rprop = RpropState(self.net, **(rprop_kwargs or {}))
        self.schedule = schedule if schedule is not None else EpsilonSchedule()
        self.gamma = gamma
        self.policy_update_period = int(policy_update_period)
        self.epochs_per_round = int(epochs_per_round)
        self.action_count = 0
        self.samples_since_train = 0
        self.training_rounds = 0
        self.loss_history = []

    def epsilon(self):
        return epsilon_at(self.schedule, self.action_count)

    def select(self, state_raw, rng, force_random=False):
        """Epsilon-greedy on the normalized state; advances the schedule."""
        eps = self.epsilon()
        self.action_count += 1
        if force_random:
            return int(rng.integers(self.net.num_actions)), eps
        state = self.batch.normalize_states(np.asarray(state_raw, dtype=float))
        if rng.uniform() < eps:
            return int(rng.integers(self.net.num_actions)), eps
        return greedy_action(self.net, state), eps

    def observe(self, transition):
        """Record a transition; train a round every policy_update_period."""
        self.batch.append(transition)
        self.samples_since_train += 1
        if self.samples_since_train >= self.policy_update_period:
            self.train_round()
            self.samples_since_train = 0
            return True
        return False

    def train_round(self):
        losses = train(self.net, self.batch, self.gamma, self.rprop,
                       self.epochs_per_round)
        self.training_rounds += 1
        self.loss_history.append(losses)
        return losses


def save_learner(learner, path):
    """Versioned textual dump of weights, optimizer state and batch."""
    lines = ["cellpower-qlearner v1"]
    net = learner.net
    lines.append("dims %d %d %s" % (net.state_dim, net.num_actions,
                                    ",".join(str(h) for h in net.hidden)))
    lines.append("gamma %r" % learner.gamma)
    lines.append("schedule %r %r %d" % (learner.schedule.eps_max,
                                        learner.schedule.eps_min,
                                        learner.schedule.decay_actions))
    lines.append("counters %d %d %d" % (learner.action_count,
                                        learner.samples_since_train,
                                        learner.training_rounds))
    lines.append("rprop %r %r %r %r" % (learner.rprop.eta_plus,
                                        learner.rprop.eta_minus,
                                        learner.rprop.delta_min,
                                        learner.rprop.delta_max))

    def dump_arrays(tag, arrays):
        lines.append("%s %d" % (tag, len(arrays)))
        for a in arrays:
            shape = ",".join(str(s) for s in a.shape)
            vals = " ".join(repr(float(v)) for v in np.asarray(a).ravel())
            lines.append("%s %s" % (shape if shape else "0", vals))

    dump_arrays("params", net.params)
    dump_arrays("delta", learner.rprop.delta)
    dump_arrays("prev_sign", learner.rprop.prev_sign)

    b = learner.batch
    lines.append("batch %d" % len(b))
    for s, a, r, ns in zip(b._states, b._actions, b._rewards, b._next_states):
        row = [repr(float(v)) for v in s] + [str(a), repr(float(r))] + \
              [repr(float(v)) for v in ns]
        lines.append(" ".join(row))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_learner(path):
    with open(path) as f:
        lines = f.read().splitlines()
    if lines[0] != "cellpower-qlearner v1":
        raise ValueError("unrecognized dump header %r" % lines[0])
    _, sd, na, hidden = lines[1].split()
    hidden = tuple(int(h) for h in hidden.split(",")) if hidden != "" else ()
    gamma = float(lines[2].split()[1])
    _, emax, emin, decay = lines[3].split()
    _, ac, sst, tr = lines[4].split()
    _, ep, em, dmin, dmax = lines[5].split()
    learner = QLearner(int(sd), int(na), gamma=gamma, hidden=hidden,
                       schedule=EpsilonSchedule(float(emax), float(emin), int(decay)),
                       rprop_kwargs=dict(eta_plus=float(ep), eta_minus=float(em),
                                         delta_min=float(dmin), delta_max=float(dmax)))
    learner.action_count = int(ac)
    learner.samples_since_train = int(sst)
    learner.training_rounds = int(tr)

    idx = 6

    def read_arrays(tag):
        nonlocal idx
        head_tag, count = lines[idx].split()
        if head_tag != tag:
            raise ValueError("expected %s section, found %r" % (tag, head_tag))
        idx += 1
        arrays = []
        for _ in range(int(count)):
            shape_s, *vals = lines[idx].split()
            shape = tuple(int(s) for s in shape_s.split(",")) if shape_s != "0" else ()
            arrays.append(np.array([float(v) for v in vals]).reshape(shape))
            idx += 1
        return arrays

    learner.net.params = read_arrays("params")
    learner.rprop.delta = read_arrays("delta")
    learner.rprop.prev_sign = read_arrays("prev_sign")

    tag, nrows = lines[idx].split()
    if tag != "batch":
        raise ValueError("expected batch section")
    idx += 1
    sd = learner.net.state_dim
    for _ in range(int(nrows)):
        vals = lines[idx].split()
        state = np.array([float(v) for v in vals[:sd]])
        action = int(vals[sd])
        reward = float(vals[sd + 1])
        next_state = np.array([float(v) for v in vals[sd + 2:]])
        learner.batch.append(Transition(state, action, reward, next_state))
        idx += 1
    return learner

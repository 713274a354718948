"""Scenario configuration: flat key=value files and validated defaults.

One assignment per line, '#' starts a comment. Defaults reproduce the
reference setup: 1 ms TTI, 10 MHz, 46 dBm default power, 100 ms action
period, round-robin scheduling, 50-sample policy updates, epsilon decaying
0.9 -> 0.1 and gamma = 0.7.
"""

from dataclasses import dataclass, field, fields


def _floats(text):
    return tuple(float(v) for v in str(text).split(","))


def _ints(text):
    return tuple(int(v) for v in str(text).split(","))


@dataclass
class ScenarioConfig:
    # radio / layout
    num_cells: int = 2
    bandwidth_hz: float = 10e6
    default_power_dbm: float = 46.0
    min_power_dbm: float = 10.0
    max_power_dbm: float = 46.0
    isd_m: float = 500.0
    layout: str = "line"
    cell_radius_m: float = 0.0  # 0 -> isd_m / 2
    pathloss_intercept_db: float = 128.1
    pathloss_slope_db_per_decade: float = 37.6
    shadowing_sigma_db: float = 8.0
    noise_figure_db: float = 9.0
    # users / traffic
    num_users_total: int = 20
    load_fractions: tuple = (0.5, 0.5)
    traffic_mode: str = "full_buffer"
    file_size_bytes: float = 100_000.0
    mean_reading_time_s: float = 0.1
    rate_floor_bps: float = 1000.0
    # reward
    reward_kind: str = "harmonic_mean_tput"
    reward_aggregation: str = "network_pool"
    # timing / drops
    tti_ms: float = 1.0
    action_period_ms: float = 100.0
    training_drop_s: float = 60.0
    eval_drop_s: float = 20.0
    num_drops: int = 2
    # learning
    agent_scheduling: str = "round_robin"
    policy_update_period: int = 50
    eps_min: float = 0.1
    eps_max: float = 0.9
    decay_actions: int = 200
    gamma: float = 0.7
    action_deltas_db: tuple = (0.0, 1.0, -1.0, 3.0, -3.0)
    hidden_widths: tuple = (32, 32, 16)
    epochs_per_round: int = 50
    # oracle / reproducibility
    grid_step_db: float = 1.0
    seed: int = 1

    def __post_init__(self):
        if len(self.load_fractions) != self.num_cells:
            raise ValueError("load_fractions must list one share per cell")
        if abs(sum(self.load_fractions) - 1.0) > 1e-9:
            raise ValueError("load_fractions must sum to 1")
        if self.num_users_total % self.num_drops != 0:
            raise ValueError("num_users_total must divide evenly across drops")
        if self.training_drop_s <= 0.0 or self.eval_drop_s < 0.0:
            raise ValueError("drop durations must be positive")
        if self.agent_scheduling != "round_robin":
            raise ValueError("only round_robin scheduling is supported")
        if not (0.0 <= self.eps_min <= self.eps_max <= 1.0):
            raise ValueError("require 0 <= eps_min <= eps_max <= 1")
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError("gamma must be in [0, 1)")
        if self.action_period_ms % self.tti_ms != 0.0:
            raise ValueError("action period must be a whole number of TTIs")

    @property
    def users_per_drop(self):
        return self.num_users_total // self.num_drops

    @property
    def tti_s(self):
        return self.tti_ms / 1000.0

    def radius_m(self):
        return self.cell_radius_m if self.cell_radius_m > 0.0 else self.isd_m / 2.0

    def drop_duration_s(self, mode):
        return self.training_drop_s if mode == "train" else self.eval_drop_s

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, values):
        kwargs = {}
        valid = {f.name: f for f in fields(cls)}
        for key, raw in values.items():
            if key not in valid:
                raise ValueError("unknown config key %r" % key)
            default = valid[key].default
            if key in ("load_fractions", "action_deltas_db"):
                kwargs[key] = _floats(raw)
            elif key == "hidden_widths":
                kwargs[key] = _ints(raw)
            elif isinstance(default, bool):
                kwargs[key] = str(raw).lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                kwargs[key] = int(float(raw))
            elif isinstance(default, float):
                kwargs[key] = float(raw)
            else:
                kwargs[key] = str(raw)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path):
        values = {}
        with open(path) as f:
            for lineno, line in enumerate(f, start=1):
                stripped = line.split("#", 1)[0].strip()
                if not stripped:
                    continue
                if "=" not in stripped:
                    raise ValueError("%s:%d: expected key = value" % (path, lineno))
                key, _, val = stripped.partition("=")
                values[key.strip()] = val.strip()
        return cls.from_dict(values)


def write_config(config, path):
    """Echo the fully resolved configuration, sorted for determinism."""
    items = sorted(config.to_dict().items())
    with open(path, "w") as f:
        for key, value in items:
            f.write("%s = %s\n" % (key, value))

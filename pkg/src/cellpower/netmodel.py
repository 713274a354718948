"""Static multi-cell downlink radio model.

Large-scale channel gains (pathloss + log-normal shadowing), SINR under
reuse-1 interference, Shannon rates with equal per-cell bandwidth share,
and the per-cell measurement aggregates the agents consume. Everything
here is a pure function of immutable inputs; the simulation loop owns all
mutable state.
"""

from dataclasses import dataclass, field

import numpy as np

RSRP_FLOOR_DBM = -250.0  # numerical floor for dBm conversion of ~zero watts


class EmptyCellError(ValueError):
    """A per-cell aggregate was requested for a cell serving no users."""


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(watts):
    w = np.maximum(np.asarray(watts, dtype=float), 1e-300)
    return 10.0 * np.log10(w) + 30.0


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def thermal_noise_watts(bandwidth_hz, noise_figure_db=9.0):
    """Thermal noise over the full band: -174 dBm/Hz plus a noise figure."""
    noise_dbm = -174.0 + 10.0 * np.log10(bandwidth_hz) + noise_figure_db
    return float(dbm_to_watts(noise_dbm))


@dataclass
class ChannelModel:
    """Distance-law and shadowing parameters plus full-band noise power."""

    pathloss_intercept_db: float = 128.1
    pathloss_slope_db_per_decade: float = 37.6
    shadowing_sigma_db: float = 8.0
    noise_power_linear: float = 0.0  # watts over the full band

    def __post_init__(self):
        if self.noise_power_linear <= 0.0:
            raise ValueError("noise_power_linear must be > 0")
        if self.shadowing_sigma_db < 0.0:
            raise ValueError("shadowing_sigma_db must be >= 0")


@dataclass
class Cell:
    id: int
    position: np.ndarray  # (2,) meters
    power_dbm: float
    max_power_dbm: float
    min_power_dbm: float
    bandwidth_hz: float

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        if not (self.min_power_dbm <= self.power_dbm <= self.max_power_dbm):
            raise ValueError(
                "power %.2f dBm outside [%.2f, %.2f]"
                % (self.power_dbm, self.min_power_dbm, self.max_power_dbm)
            )
        if self.bandwidth_hz <= 0.0:
            raise ValueError("bandwidth_hz must be > 0")


@dataclass
class User:
    id: int
    serving_cell: int
    position: np.ndarray  # (2,) meters
    gains_linear: np.ndarray  # (C,) linear power ratios, all > 0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.gains_linear = np.asarray(self.gains_linear, dtype=float)
        if np.any(self.gains_linear <= 0.0):
            raise ValueError("channel gains must be strictly positive")


def compute_gain(user_pos, cell_pos, shadow_sample_db, channel):
    """Linear channel gain for one link; distance floored at 1 m."""
    d_m = float(np.linalg.norm(np.asarray(user_pos, float) - np.asarray(cell_pos, float)))
    d_km = max(d_m / 1000.0, 0.001)
    gain_db = (
        -(channel.pathloss_intercept_db
          + channel.pathloss_slope_db_per_decade * np.log10(d_km))
        + shadow_sample_db
    )
    return float(db_to_linear(gain_db))


def sinr(user, powers_w, channel):
    """Average downlink SINR of one user for a network power vector (watts)."""
    powers_w = np.asarray(powers_w, dtype=float)
    s = user.serving_cell
    received = user.gains_linear * powers_w
    serving = received[s]
    interference = float(np.sum(received)) - float(serving)
    return float(serving / (channel.noise_power_linear + interference))


def sinr_all(gains, serving, powers_w, noise_w):
    """Vectorized SINR for every user; gains is (N, C), powers_w is (C,)."""
    total = gains @ powers_w
    idx = np.arange(gains.shape[0])
    serving_rx = gains[idx, serving] * powers_w[serving]
    interference = np.maximum(total - serving_rx, 0.0)
    return serving_rx / (noise_w + interference)


def user_bandwidth(bandwidth_hz, num_served):
    if num_served < 1:
        raise EmptyCellError("cell serves no users")
    return bandwidth_hz / num_served


def shannon_rate(sinr_linear, bandwidth_hz):
    """Shannon-bound rate in bit/s; zero iff the SINR is zero."""
    return bandwidth_hz * np.log2(1.0 + sinr_linear)


def cell_measurements(cell_index, gains, serving, powers_w, noise_w=None):
    """Per-TTI measurement sample for one cell.

    Returns (avg serving received power, avg total interference) in watts,
    averaged over the users served by the cell. noise_w is accepted for
    signature symmetry but not part of either aggregate.
    """
    mask = serving == cell_index
    if not np.any(mask):
        raise EmptyCellError("cell %d serves no users" % cell_index)
    sub = gains[mask]
    total = sub @ powers_w
    serving_rx = sub[:, cell_index] * powers_w[cell_index]
    interference = np.maximum(total - serving_rx, 0.0)
    return float(np.mean(serving_rx)), float(np.mean(interference))


def cell_layout(num_cells, isd_m, kind="line"):
    """Cell site coordinates: evenly spaced line or equilateral triangle."""
    if kind == "line":
        xs = np.arange(num_cells, dtype=float) * isd_m
        return np.stack([xs, np.zeros(num_cells)], axis=1)
    if kind == "triangle":
        if num_cells != 3:
            raise ValueError("triangle layout requires exactly 3 cells")
        h = isd_m * np.sqrt(3.0) / 2.0
        return np.array([[0.0, 0.0], [isd_m, 0.0], [isd_m / 2.0, h]])
    raise ValueError("unknown layout kind %r" % kind)


def split_users_by_load(num_users, load_fractions):
    """Largest-remainder allocation of num_users across cells."""
    load = np.asarray(load_fractions, dtype=float)
    if abs(float(np.sum(load)) - 1.0) > 1e-9:
        raise ValueError("load fractions must sum to 1")
    exact = load * num_users
    counts = np.floor(exact).astype(int)
    remainder = exact - counts
    for i in np.argsort(-remainder)[: num_users - int(np.sum(counts))]:
        counts[i] += 1
    return counts


@dataclass
class Network:
    """One drop realization: cells, users and the cached gain matrix."""

    cells: list
    users: list
    channel: ChannelModel
    gains: np.ndarray = field(init=False)  # (N, C)
    serving: np.ndarray = field(init=False)  # (N,) int
    counts: np.ndarray = field(init=False)  # (C,) users per cell

    def __post_init__(self):
        self.gains = np.stack([u.gains_linear for u in self.users])
        self.serving = np.array([u.serving_cell for u in self.users], dtype=np.int64)
        self.counts = np.bincount(self.serving, minlength=len(self.cells))
        if np.any(self.counts == 0):
            raise EmptyCellError("every cell must serve at least one user")

    @property
    def num_cells(self):
        return len(self.cells)

    @property
    def num_users(self):
        return len(self.users)

    @property
    def bandwidth_hz(self):
        return self.cells[0].bandwidth_hz

    def powers_dbm(self):
        return np.array([c.power_dbm for c in self.cells])

    def powers_w(self):
        return dbm_to_watts(self.powers_dbm())

    def equal_share_rates(self, powers_w):
        """Analytic full-buffer user rates (bit/s): W/N_c * log2(1+SINR)."""
        g = sinr_all(self.gains, self.serving, powers_w, self.channel.noise_power_linear)
        share = self.bandwidth_hz / self.counts[self.serving]
        return share * np.log2(1.0 + g)


def build_drop(num_cells, users_per_cell, channel, rng_placement, rng_shadowing,
               isd_m=500.0, layout="line", cell_radius_m=None,
               default_power_dbm=46.0, min_power_dbm=10.0, max_power_dbm=46.0,
               bandwidth_hz=10e6):
    """Place cells and users for one drop and precompute all channel gains.

    Users are assigned to cells by the requested per-cell counts and placed
    uniformly in their serving cell's coverage disc; shadowing is sampled
    i.i.d. per user-cell link.
    """
    positions = cell_layout(num_cells, isd_m, layout)
    radius = cell_radius_m if cell_radius_m is not None else isd_m / 2.0
    cells = [
        Cell(id=c, position=positions[c], power_dbm=default_power_dbm,
             max_power_dbm=max_power_dbm, min_power_dbm=min_power_dbm,
             bandwidth_hz=bandwidth_hz)
        for c in range(num_cells)
    ]
    users = []
    uid = 0
    for c in range(num_cells):
        for _ in range(int(users_per_cell[c])):
            r = radius * np.sqrt(rng_placement.uniform())
            theta = rng_placement.uniform(0.0, 2.0 * np.pi)
            pos = positions[c] + r * np.array([np.cos(theta), np.sin(theta)])
            shadows = rng_shadowing.normal(0.0, channel.shadowing_sigma_db, size=num_cells)
            gains = np.array([
                compute_gain(pos, positions[k], shadows[k], channel)
                for k in range(num_cells)
            ])
            users.append(User(id=uid, serving_cell=c, position=pos, gains_linear=gains))
            uid += 1
    return Network(cells=cells, users=users, channel=channel)

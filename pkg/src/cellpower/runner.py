"""Scenario orchestration: the TTI loop, drops, experiments and exports.

A drop regenerates user placement and channels from its own seed streams,
then advances time in action-period blocks (powers only change at action
epochs, so rates are constant within a block). Agents take round-robin
turns on the action grid; the reward and state features an agent sees are
measured over the window since its previous turn. The same master seed
expands into independent named streams so the baseline arm sees exactly
the environment the learned arm saw.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import engine, reward as rw, traffic as tr
from .agent import ActionSet, Coordinator, PowerAgent, extract_state
from .config import ScenarioConfig, write_config
from .netmodel import (ChannelModel, Network, build_drop, dbm_to_watts,
                       sinr_all, split_users_by_load, thermal_noise_watts)
from .qlearn import EpsilonSchedule, QLearner

STREAM_PLACEMENT = 0
STREAM_SHADOWING = 1
STREAM_TRAFFIC = 2
STREAM_EXPLORATION = 3
STREAM_LEARNER_INIT = 4


def stream_rng(seed, drop_index, stream_id, member=0):
    """One of the named, mutually independent random streams."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=(seed, drop_index, stream_id, member)))


def build_network(config, drop_index):
    """Drop realization: layout, user placement and channel gains."""
    channel = ChannelModel(
        pathloss_intercept_db=config.pathloss_intercept_db,
        pathloss_slope_db_per_decade=config.pathloss_slope_db_per_decade,
        shadowing_sigma_db=config.shadowing_sigma_db,
        noise_power_linear=thermal_noise_watts(config.bandwidth_hz,
                                               config.noise_figure_db))
    users_per_cell = split_users_by_load(config.users_per_drop,
                                         config.load_fractions)
    return build_drop(
        config.num_cells, users_per_cell, channel,
        rng_placement=stream_rng(config.seed, drop_index, STREAM_PLACEMENT),
        rng_shadowing=stream_rng(config.seed, drop_index, STREAM_SHADOWING),
        isd_m=config.isd_m, layout=config.layout,
        cell_radius_m=config.radius_m(),
        default_power_dbm=config.default_power_dbm,
        min_power_dbm=config.min_power_dbm,
        max_power_dbm=config.max_power_dbm,
        bandwidth_hz=config.bandwidth_hz)


def reward_config(config):
    return rw.RewardConfig.from_kind(config.reward_kind,
                                     aggregation=config.reward_aggregation)


def build_agents(config):
    """One agent per cell, learners warm across drops within an experiment."""
    agents = []
    schedule = EpsilonSchedule(eps_max=config.eps_max, eps_min=config.eps_min,
                               decay_actions=config.decay_actions)
    actions = ActionSet(config.action_deltas_db)
    for c in range(config.num_cells):
        learner = QLearner(
            state_dim=4, num_actions=len(actions), gamma=config.gamma,
            hidden=config.hidden_widths, schedule=schedule,
            policy_update_period=config.policy_update_period,
            epochs_per_round=config.epochs_per_round,
            rng=stream_rng(config.seed, 0, STREAM_LEARNER_INIT, c))
        agents.append(PowerAgent(c, learner, actions, config.min_power_dbm,
                                 config.max_power_dbm, rng=None))
    return agents


@dataclass
class DropResult:
    drop_index: int
    mode: str
    duration_s: float
    user_tputs_bps: np.ndarray
    mean_power_dbm: np.ndarray  # per cell, time-averaged
    network_tput_bps: float
    percentiles: dict
    power_trace: list  # (time_ms, (P_1_dBm, ...))
    reward_trace: list  # (time_ms, network reward)
    action_rows: list  # (time_ms, agent, epsilon, delta_dB, power_dBm, reward)


def compute_cdf(values):
    """Empirical CDF plus linearly interpolated {5, 50, 95} percentiles."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty sample")
    srt = np.sort(v)
    pct = {p: float(np.percentile(srt, p, method="linear")) for p in (5, 50, 95)}
    return srt, pct


def run_drop(config, drop_index, mode, agents=None, time_offset_ms=0.0):
    """Simulate one drop; agents=None runs the fixed-power baseline.

    Transitions are recorded and training happens in both train and eval
    modes; the mode only selects the drop duration and tags the result.
    """
    net = build_network(config, drop_index)
    rcfg = reward_config(config)
    duration_s = config.drop_duration_s(mode)
    period_ms = config.action_period_ms
    block_s = period_ms / 1000.0
    ttis_per_block = int(round(period_ms / config.tti_ms))
    n_blocks = int(math.floor(duration_s * 1000.0 / period_ms))
    C = net.num_cells
    noise_w = net.channel.noise_power_linear

    traffic_cfg = tr.TrafficConfig(mode=config.traffic_mode,
                                   file_size_bytes=config.file_size_bytes,
                                   mean_reading_time_s=config.mean_reading_time_s)
    traffic = engine.TrafficState(
        traffic_cfg, net.serving, C, config.bandwidth_hz, config.tti_s,
        rng=stream_rng(config.seed, drop_index, STREAM_TRAFFIC))

    coordinator = Coordinator(order=tuple(range(C)), action_period_ms=period_ms)
    powers_dbm = np.full(C, float(config.default_power_dbm))
    if agents is not None:
        for c, agent in enumerate(agents):
            agent.start_drop()
            agent.rng = stream_rng(config.seed, drop_index, STREAM_EXPLORATION, c)

    # per-agent window bookkeeping, reset at each agent's own turn
    snap = [traffic.snapshot() for _ in range(C)]
    snap_block = [0] * C
    rsrp_sum = np.zeros(C)
    interf_sum = np.zeros(C)
    sample_count = np.zeros(C)

    power_trace = []
    reward_trace = []
    action_rows = []
    power_dbm_sum = np.zeros(C)
    se = None

    idx = np.arange(net.num_users)
    g_serv = net.gains[idx, net.serving]

    for k in range(1, n_blocks + 1):
        if se is None:
            p_w = dbm_to_watts(powers_dbm)
            g = sinr_all(net.gains, net.serving, p_w, noise_w)
            se = np.log2(1.0 + g)
            rsrp_lin = g_serv * p_w[net.serving]
            interf_lin = np.maximum(net.gains @ p_w - rsrp_lin, 0.0)
            block_rsrp = np.array([np.mean(rsrp_lin[net.serving == c]) for c in range(C)])
            block_interf = np.array([np.mean(interf_lin[net.serving == c]) for c in range(C)])

        # the row at time t is the power in effect from t to the next epoch
        power_trace.append((time_offset_ms + (k - 1) * period_ms,
                            tuple(powers_dbm)))
        power_dbm_sum += powers_dbm

        traffic.advance(se, t0_s=(k - 1) * block_s, n_ttis=ttis_per_block)
        rsrp_sum += block_rsrp * ttis_per_block
        interf_sum += block_interf * ttis_per_block
        sample_count += ttis_per_block

        now_ms = k * period_ms

        acting = coordinator.agent_turn(now_ms)
        if agents is None or acting is None:
            continue

        agent = agents[acting]
        window_s = (k - snap_block[acting]) * block_s
        bits, active_s = traffic.window_since(snap[acting])
        tputs_bps = np.array([
            tr.user_throughput(bits[n], window_s, config.traffic_mode,
                               active_time_s=active_s[n],
                               floor_bps=config.rate_floor_bps)
            for n in range(net.num_users)
        ])
        tputs_mbps = tputs_bps / 1e6
        per_cell = [tputs_mbps[net.serving == c] for c in range(C)]
        net_reward = rw.network_reward(per_cell, rcfg)
        own_reward = rw.cell_reward(per_cell[acting], rcfg)
        state = extract_state(rsrp_sum[acting], interf_sum[acting],
                              sample_count[acting], powers_dbm[acting],
                              own_reward)
        new_power, action, eps, _ = agent.step(state, net_reward,
                                               powers_dbm[acting])
        reward_trace.append((time_offset_ms + now_ms, net_reward))
        action_rows.append((time_offset_ms + now_ms, acting, eps,
                            agent.actions.deltas_db[action], new_power,
                            net_reward))
        if new_power != powers_dbm[acting]:
            powers_dbm[acting] = new_power
            se = None  # rates change at the next block
        snap[acting] = traffic.snapshot()
        snap_block[acting] = k
        rsrp_sum[acting] = 0.0
        interf_sum[acting] = 0.0
        sample_count[acting] = 0.0

    total_bits = traffic.bytes_served * 8.0
    user_tputs = np.array([
        tr.user_throughput(total_bits[n], duration_s, config.traffic_mode,
                           active_time_s=traffic.active_time[n],
                           floor_bps=config.rate_floor_bps)
        for n in range(net.num_users)
    ])
    _, pct = compute_cdf(user_tputs)
    if not np.all(np.isfinite(user_tputs)):
        raise RuntimeError("non-finite throughput in drop %d" % drop_index)
    return DropResult(
        drop_index=drop_index, mode=mode, duration_s=duration_s,
        user_tputs_bps=user_tputs,
        mean_power_dbm=power_dbm_sum / n_blocks,
        network_tput_bps=float(np.sum(total_bits)) / duration_s,
        percentiles=pct, power_trace=power_trace, reward_trace=reward_trace,
        action_rows=action_rows)


@dataclass
class ExperimentReport:
    config: ScenarioConfig
    learned: list  # DropResult, all drops
    baseline: list  # DropResult, eval drops only
    gains: dict


def drop_modes(config):
    n_train = (config.num_drops + 1) // 2
    return ["train" if d < n_train else "eval" for d in range(config.num_drops)]


def paired_gains(learned_eval, baseline_eval, default_power_dbm):
    """Table-style gain metrics from paired eval drops."""
    lt = np.concatenate([d.user_tputs_bps for d in learned_eval])
    bt = np.concatenate([d.user_tputs_bps for d in baseline_eval])
    _, lp = compute_cdf(lt)
    _, bp = compute_cdf(bt)
    mean_power = float(np.mean([np.mean(d.mean_power_dbm) for d in learned_eval]))
    reduction_db = default_power_dbm - mean_power
    learned_bits = sum(d.network_tput_bps * d.duration_s for d in learned_eval)
    base_bits = sum(d.network_tput_bps * d.duration_s for d in baseline_eval)
    return {
        "n_eval_drops": len(learned_eval),
        "p5_gain_pct": 100.0 * (lp[5] - bp[5]) / bp[5],
        "median_gain_pct": 100.0 * (lp[50] - bp[50]) / bp[50],
        "power_reduction_db": reduction_db,
        "power_saving_pct": 100.0 * (1.0 - 10.0 ** (-reduction_db / 10.0)),
        "network_tput_delta_pct": 100.0 * (learned_bits - base_bits) / base_bits,
    }


def run_experiment(config, progress=None):
    """Learned pass over all drops plus a paired fixed-power baseline.

    Learners, growing batches and the epsilon schedule persist across
    drops. The baseline reruns the evaluation drops with identical
    environment streams and the default power.
    """
    agents = build_agents(config)
    modes = drop_modes(config)
    learned = []
    offset = 0.0
    for d, mode in enumerate(modes):
        result = run_drop(config, d, mode, agents=agents, time_offset_ms=offset)
        learned.append(result)
        offset += config.drop_duration_s(mode) * 1000.0
        if progress:
            progress("drop %d/%d (%s): reward trace %d entries"
                     % (d + 1, len(modes), mode, len(result.reward_trace)))
    baseline = []
    for d, mode in enumerate(modes):
        if mode != "eval":
            continue
        offset_d = sum(config.drop_duration_s(m) * 1000.0 for m in modes[:d])
        baseline.append(run_drop(config, d, mode, agents=None,
                                 time_offset_ms=offset_d))
        if progress:
            progress("baseline drop %d done" % (d + 1))
    learned_eval = [r for r in learned if r.mode == "eval"]
    gains = (paired_gains(learned_eval, baseline, config.default_power_dbm)
             if baseline else {})
    return ExperimentReport(config=config, learned=learned, baseline=baseline,
                            gains=gains)


def _write_users_csv(path, results):
    with open(path, "w") as f:
        f.write("drop,user,avg_tput_bps\n")
        for r in results:
            for n, t in enumerate(r.user_tputs_bps):
                f.write("%d,%d,%s\n" % (r.drop_index, n, repr(float(t))))


def _write_power_csv(path, results):
    with open(path, "w") as f:
        f.write("time_ms,cell,power_dBm\n")
        for r in results:
            for t_ms, powers in r.power_trace:
                for c, p in enumerate(powers):
                    f.write("%s,%d,%s\n" % (repr(float(t_ms)), c, repr(float(p))))


def _write_reward_csv(path, results):
    with open(path, "w") as f:
        f.write("time_ms,reward\n")
        for r in results:
            for t_ms, val in r.reward_trace:
                f.write("%s,%s\n" % (repr(float(t_ms)), repr(float(val))))


def _write_actions_csv(path, results):
    with open(path, "w") as f:
        f.write("time_ms,agent_id,epsilon,action_delta_dB,power_dBm,reward\n")
        for r in results:
            for row in r.action_rows:
                t_ms, aid, eps, delta, power, reward_val = row
                f.write("%s,%d,%s,%s,%s,%s\n" % (
                    repr(float(t_ms)), aid, repr(float(eps)),
                    repr(float(delta)), repr(float(power)),
                    repr(float(reward_val))))


def _write_summary_csv(path, config, gains):
    cols = ["scenario", "traffic", "n_eval_drops", "p5_gain_pct",
            "median_gain_pct", "power_reduction_db", "power_saving_pct",
            "network_tput_delta_pct"]
    with open(path, "w") as f:
        f.write(",".join(cols) + "\n")
        if gains:
            row = ["%d_cell" % config.num_cells, config.traffic_mode,
                   str(gains["n_eval_drops"])]
            row += [repr(float(gains[c])) for c in cols[3:]]
            f.write(",".join(row) + "\n")


def export_results(report, out_dir):
    """Write the CSV bundle; byte-identical for identical config and seed."""
    import os
    learned_dir = os.path.join(out_dir, "learned")
    base_dir = os.path.join(out_dir, "baseline")
    os.makedirs(learned_dir, exist_ok=True)
    os.makedirs(base_dir, exist_ok=True)
    _write_users_csv(os.path.join(learned_dir, "users.csv"), report.learned)
    _write_power_csv(os.path.join(learned_dir, "power.csv"), report.learned)
    _write_reward_csv(os.path.join(learned_dir, "reward.csv"), report.learned)
    _write_actions_csv(os.path.join(learned_dir, "actions.csv"), report.learned)
    _write_users_csv(os.path.join(base_dir, "users.csv"), report.baseline)
    _write_power_csv(os.path.join(base_dir, "power.csv"), report.baseline)
    _write_summary_csv(os.path.join(out_dir, "summary.csv"), report.config,
                       report.gains)
    write_config(report.config, os.path.join(out_dir, "config_resolved.txt"))

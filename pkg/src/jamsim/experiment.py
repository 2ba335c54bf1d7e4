"""Monte Carlo trials over (sender scenario x adversary) grids.

A trial is a pure function of its :class:`ScenarioConfig` and integer seed.
Trial ``i`` of a scenario uses seed ``base_seed + i``; inside a trial the
environment and every adversary member draw from their own child stream of
that seed.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .agents import DEFAULT_MATERIALIZE_CAP, AgentConfig, build_adversary
from .env import ChannelModel, JammingEnv, SenderProfile, success_rate
from .stats import DegenerateTestError, paired_t_test

STEP_FIELDS_HEAD = ["trial", "t", "agent", "scenario", "channel_mode", "sinr_sum", "snr_sum",
                    "team_reward"]
SUMMARY_FIELDS = ["scenario", "channel_mode", "agent", "tau", "sra_mean", "sra_std", "n_trials"]
CURVE_FIELDS = ["scenario", "agent", "t", "reward_smoothed"]
COMPARE_FIELDS = ["scenario", "channel_mode", "agent", "tau", "sra_mean_a", "sra_std_a",
                  "sra_mean_b", "sra_std_b", "t_stat", "p_value", "df", "status"]


def fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return ""
    return f"{x:.6g}"


def tau_column(tau: float) -> str:
    return "sa_tau" + f"{tau:g}".replace(".", "")


@dataclass(frozen=True)
class SraWindow:
    """Slice of logged steps an SRA is computed over.

    Either the trailing ``final_fraction`` of the record or an explicit
    ``[start, stop)`` range of step indices.
    """

    final_fraction: float | None = 1.0
    start: int | None = None
    stop: int | None = None

    def __post_init__(self):
        if self.final_fraction is not None and not 0.0 < self.final_fraction <= 1.0:
            raise ValueError("final_fraction must lie in (0, 1]")

    def bounds(self, length: int) -> tuple[int, int]:
        if self.start is not None or self.stop is not None:
            lo = 0 if self.start is None else self.start
            hi = length if self.stop is None else self.stop
        else:
            lo, hi = length - max(1, math.ceil(self.final_fraction * length)), length
        if not 0 <= lo < hi <= length:
            raise ValueError(f"window [{lo}, {hi}) is empty or outside a record of {length} steps")
        return lo, hi

    def to_dict(self) -> dict:
        if self.start is not None or self.stop is not None:
            return {k: v for k, v in (("start", self.start), ("stop", self.stop)) if v is not None}
        return {"final_fraction": self.final_fraction}


@dataclass(frozen=True)
class ScenarioConfig:
    sender: SenderProfile = field(default_factory=SenderProfile)
    channel_model: ChannelModel = field(default_factory=ChannelModel)
    adversary: AgentConfig = field(default_factory=AgentConfig)
    adversary_powers: tuple[float, ...] = (0.0, 1.0, 3.0, 5.0)
    horizon: int = 2000
    taus: tuple[float, ...] = (0.2, 0.5)
    n_trials: int = 8
    base_seed: int = 0
    sra_window: SraWindow = field(default_factory=SraWindow)
    smoothing: int = 50
    action_cap: int = DEFAULT_MATERIALIZE_CAP

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if any(not 0.0 < tau < 1.0 for tau in self.taus):
            raise ValueError("every tau must lie in (0, 1)")
        if self.smoothing < 1:
            raise ValueError("smoothing must be >= 1")

    @property
    def channel_mode(self) -> str:
        return "single" if self.sender.channels_used == 1 else "multi"

    @property
    def scenario(self) -> str:
        return f"{self.sender.strategy.value}_{self.channel_mode}"

    def trial_seed(self, index: int) -> int:
        return self.base_seed + index


@dataclass
class TrialRecord:
    """Per-step log of one trial. Row 0 is the random initialisation step."""

    trial: int
    seed: int
    taus: tuple[float, ...]
    channels: np.ndarray          # (T+1, n_tx) adversary channels
    powers: np.ndarray            # (T+1, n_tx) adversary powers
    sender_channels: np.ndarray   # (T+1, channels_used)
    sinr: np.ndarray              # (T+1, channels_used)
    snr: np.ndarray
    sa: np.ndarray                # (T+1, len(taus)) int8
    team_reward: np.ndarray       # (T+1,)
    individual_rewards: np.ndarray  # (T+1, n_tx)
    epsilon: np.ndarray           # (T+1,)

    def __len__(self) -> int:
        return len(self.team_reward)

    def sa_flags(self, tau: float) -> np.ndarray:
        for i, known in enumerate(self.taus):
            if math.isclose(known, tau):
                return self.sa[:, i]
        raise KeyError(f"tau {tau} was not logged (logged: {self.taus})")

    def equals(self, other: TrialRecord) -> bool:
        arrays = ("channels", "powers", "sender_channels", "sinr", "snr", "sa", "team_reward",
                  "individual_rewards", "epsilon")
        return self.taus == other.taus and all(
            np.array_equal(getattr(self, a), getattr(other, a), equal_nan=True) for a in arrays
        )


def env_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))


def run_trial(config: ScenarioConfig, seed: int, trial: int = 0,
              members: Sequence[int] | None = None) -> TrialRecord:
    """Random initial step, then ``horizon`` steps of act -> step -> learn -> decay."""
    cm = config.channel_model
    probe = JammingEnv(cm, config.sender, 1, config.taus)
    adversary = build_adversary(config.adversary, cm.n_channels, config.adversary_powers,
                                probe.obs_dim, probe.max_snr, seed, config.action_cap, members,
                                reward_scale=probe.max_capacity_drop)
    env = JammingEnv(cm, config.sender, adversary.n_transmitters, config.taus, env_rng(seed))
    env.reset()

    rows = config.horizon + 1
    n_tx = adversary.n_transmitters
    width = config.sender.channels_used
    rec = TrialRecord(
        trial=trial, seed=seed, taus=tuple(config.taus),
        channels=np.zeros((rows, n_tx), dtype=np.int64),
        powers=np.zeros((rows, n_tx)),
        sender_channels=np.zeros((rows, width), dtype=np.int64),
        sinr=np.zeros((rows, width)), snr=np.zeros((rows, width)),
        sa=np.zeros((rows, len(config.taus)), dtype=np.int8),
        team_reward=np.zeros(rows), individual_rewards=np.zeros((rows, n_tx)),
        epsilon=np.zeros(rows),
    )
    beta0 = config.adversary.dqn.per_beta0
    obs = None
    for t in range(rows):
        rec.epsilon[t] = adversary.epsilon
        actions = adversary.act(obs, explore=(t == 0))
        outcome = env.step(actions, t)
        if t > 0:
            frac = (t - 1) / max(config.horizon - 1, 1)
            adversary.learn(obs, outcome.observation_next, outcome, beta0 + (1.0 - beta0) * frac)
            adversary.end_step()
        obs = outcome.observation_next

        rec.channels[t] = [a.channel for a in actions]
        rec.powers[t] = [a.power for a in actions]
        rec.sender_channels[t] = outcome.sender_channels
        rec.sinr[t] = outcome.sinr
        rec.snr[t] = outcome.snr
        rec.sa[t] = [outcome.sa[tau] for tau in config.taus]
        rec.team_reward[t] = outcome.team_reward
        rec.individual_rewards[t] = outcome.individual_rewards
    return rec


def evaluate_sra(record: TrialRecord, tau: float, window: SraWindow | None = None) -> float:
    window = window or SraWindow()
    lo, hi = window.bounds(len(record))
    return success_rate(record.sa_flags(tau)[lo:hi])


def reward_curve(records: Sequence[TrialRecord], smoothing_window: int) -> np.ndarray:
    """Trial-averaged team reward, then a trailing moving average (shorter at the start)."""
    if not records:
        raise ValueError("no records")
    lengths = {len(r) for r in records}
    if len(lengths) != 1:
        raise ValueError("records must share one horizon")
    mean = np.mean([r.team_reward for r in records], axis=0)
    csum = np.concatenate([[0.0], np.cumsum(mean)])
    idx = np.arange(1, len(mean) + 1)
    lo = np.maximum(idx - smoothing_window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


def _trial_job(args):
    config, index = args
    return run_trial(config, config.trial_seed(index), index)


def run_trials(config: ScenarioConfig, parallel: int = 1) -> list[TrialRecord]:
    return run_grid([config], parallel)[0]


def run_grid(configs: Sequence[ScenarioConfig], parallel: int = 1) -> list[list[TrialRecord]]:
    """All trials of every config; results ordered by (config, trial) regardless of ``parallel``."""
    jobs = [(cfg, i) for cfg in configs for i in range(cfg.n_trials)]
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            flat = list(pool.map(_trial_job, jobs))
    else:
        flat = [_trial_job(j) for j in jobs]
    out, pos = [], 0
    for cfg in configs:
        out.append(flat[pos:pos + cfg.n_trials])
        pos += cfg.n_trials
    return out


@dataclass(frozen=True)
class SraSummary:
    scenario: str
    channel_mode: str
    agent: str
    tau: float
    values: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        return float(np.std(self.values, ddof=1)) if len(self.values) > 1 else 0.0


def summarize(configs: Sequence[ScenarioConfig], results: Sequence[Sequence[TrialRecord]]) -> list[SraSummary]:
    rows = []
    for cfg, records in zip(configs, results):
        for tau in cfg.taus:
            vals = tuple(evaluate_sra(r, tau, cfg.sra_window) for r in records)
            rows.append(SraSummary(cfg.scenario, cfg.channel_mode, cfg.adversary.label, tau, vals))
    return rows


def _open(path: Path):
    return open(path, "w", newline="", encoding="utf-8")


def write_step_log(path: Path, configs: Sequence[ScenarioConfig],
                   results: Sequence[Sequence[TrialRecord]]) -> None:
    taus: list[float] = []
    for cfg in configs:
        taus.extend(t for t in cfg.taus if t not in taus)
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STEP_FIELDS_HEAD + [tau_column(t) for t in taus] + ["epsilon"])
        for cfg, records in zip(configs, results):
            label, scen, mode = cfg.adversary.label, cfg.scenario, cfg.channel_mode
            for r in records:
                sinr_sum = r.sinr.sum(axis=1)
                snr_sum = r.snr.sum(axis=1)
                sa_cols = [r.sa_flags(t) if t in cfg.taus else None for t in taus]
                for t in range(len(r)):
                    w.writerow([r.trial, t, label, scen, mode, fmt(sinr_sum[t]), fmt(snr_sum[t]),
                                fmt(r.team_reward[t])]
                               + ["" if c is None else int(c[t]) for c in sa_cols]
                               + [fmt(float(r.epsilon[t]))])


def write_summary(path: Path, rows: Iterable[SraSummary]) -> None:
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for s in rows:
            w.writerow([s.scenario, s.channel_mode, s.agent, fmt(s.tau), fmt(s.mean), fmt(s.std),
                        len(s.values)])


def write_curves(path: Path, configs: Sequence[ScenarioConfig],
                 results: Sequence[Sequence[TrialRecord]]) -> dict[tuple[str, str], np.ndarray]:
    curves = {}
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_FIELDS)
        for cfg, records in zip(configs, results):
            curve = reward_curve(records, cfg.smoothing)
            curves[(cfg.scenario, cfg.adversary.label)] = curve
            for t, v in enumerate(curve):
                w.writerow([cfg.scenario, cfg.adversary.label, t, fmt(v)])
    return curves


def per_trial_sra_from_log(path: Path, window: SraWindow) -> dict[tuple[str, str, str, float], list[float]]:
    """Rebuild per-trial SRAs from a step log: key (scenario, channel_mode, agent, tau)."""
    flags: dict[tuple[str, str, str, float, int], list[int]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        tau_cols = [c for c in reader.fieldnames or [] if c.startswith("sa_tau")]
        tau_of = {c: float("0." + c[len("sa_tau") + 1:]) for c in tau_cols}
        for row in reader:
            for c in tau_cols:
                if row[c] == "":
                    continue
                key = (row["scenario"], row["channel_mode"], row["agent"], tau_of[c], int(row["trial"]))
                flags.setdefault(key, []).append(int(row[c]))
    out: dict[tuple[str, str, str, float], list[float]] = {}
    for (scen, mode, agent, tau, trial), seq in sorted(flags.items()):
        lo, hi = window.bounds(len(seq))
        out.setdefault((scen, mode, agent, tau), []).append(success_rate(seq[lo:hi]))
    return out


def compare_rows(a: dict, b: dict) -> list[list[str]]:
    """Paired t-test per shared key; keys present on one side only get an error status."""
    rows = []
    for key in sorted(set(a) | set(b)):
        scen, mode, agent, tau = key
        va, vb = a.get(key), b.get(key)
        base = [scen, mode, agent, fmt(tau)]
        if va is None or vb is None:
            missing = "a" if va is None else "b"
            present = vb if va is None else va
            stats = [fmt(float(np.mean(present))), fmt(float(np.std(present, ddof=1)) if len(present) > 1 else 0.0)]
            cells = ["", ""] + stats if va is None else stats + ["", ""]
            rows.append(base + cells + ["", "", "", f"error:missing_in_{missing}"])
            continue
        cells = [fmt(float(np.mean(va))), fmt(float(np.std(va, ddof=1))),
                 fmt(float(np.mean(vb))), fmt(float(np.std(vb, ddof=1)))]
        if len(va) != len(vb):
            rows.append(base + cells + ["", "", "", "error:trial_count_mismatch"])
            continue
        try:
            res = paired_t_test(va, vb)
        except DegenerateTestError:
            rows.append(base + cells + ["", "0", str(len(va) - 1), "degenerate"])
            continue
        rows.append(base + cells + [fmt(res.t), fmt(res.p), str(res.df), "ok"])
    return rows

"""Multi-channel jamming environment.

A scripted sender transmits on one or more of ``N`` channels while ``M``
adversary transmitters each pick a (channel, power) pair per time step.
The receiver quality is the per-channel SINR; attack success, success rate
and the adversary rewards are derived from it.

Channels are 1-based throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

RAYLEIGH_SCALE = math.sqrt(0.5)


class SenderStrategy(str, enum.Enum):
    CONSTANT = "constant"
    SWEEP = "sweep"
    PULSE = "pulse"
    AR = "ar"


class Fading(str, enum.Enum):
    CONSTANT = "constant"
    RAYLEIGH = "rayleigh"


@dataclass(frozen=True)
class Action:
    """One transmitter's choice for a single step."""

    channel: int
    power: float


@dataclass(frozen=True)
class SenderProfile:
    strategy: SenderStrategy = SenderStrategy.CONSTANT
    channels_used: int = 1
    powers: tuple[float, ...] = (5.0,)
    # Probability of landing on channel 1 after overshooting above N / below 1.
    p_high_boundary: float = 0.1
    p_low_boundary: float = 0.9
    initial_channel: int | None = None  # None draws uniformly at reset

    def __post_init__(self):
        object.__setattr__(self, "strategy", SenderStrategy(self.strategy))
        object.__setattr__(self, "powers", tuple(float(p) for p in self.powers))
        if self.channels_used < 1:
            raise ValueError("channels_used must be >= 1")
        if len(self.powers) != self.channels_used:
            raise ValueError(
                f"expected {self.channels_used} sender powers, got {len(self.powers)}"
            )
        if any(p < 0 for p in self.powers):
            raise ValueError("sender powers must be non-negative")
        for name in ("p_high_boundary", "p_low_boundary"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class ChannelModel:
    n_channels: int = 5
    noise: float = 1.0
    gain_sender: float = 1.0
    gain_adversary: tuple[float, ...] = (1.0,)
    bandwidth: float = 1.0
    power_cost: float = 1.0
    fading: Fading = Fading.CONSTANT
    rayleigh_scale: float = RAYLEIGH_SCALE

    def __post_init__(self):
        object.__setattr__(self, "fading", Fading(self.fading))
        object.__setattr__(
            self, "gain_adversary", tuple(float(g) for g in self.gain_adversary)
        )
        if self.n_channels < 1:
            raise ValueError("n_channels must be >= 1")
        if not self.noise > 0:
            raise ValueError("noise must be positive")
        if not self.gain_sender > 0 or any(not g > 0 for g in self.gain_adversary):
            raise ValueError("channel gains must be positive")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if self.power_cost < 0:
            raise ValueError("power_cost must be non-negative")

    def adversary_gains(self, m: int) -> np.ndarray:
        """Per-transmitter gains; a single configured gain is broadcast."""
        gains = self.gain_adversary
        if len(gains) == 1:
            return np.full(m, gains[0])
        if len(gains) != m:
            raise ValueError(f"{len(gains)} adversary gains configured for {m} transmitters")
        return np.asarray(gains)


@dataclass
class StepOutcome:
    sender_channels: list[int]
    sinr: np.ndarray
    snr: np.ndarray
    team_reward: float
    individual_rewards: np.ndarray
    sa: dict[float, int]
    observation_next: np.ndarray


def _wrap(channel: int, offset: int, n: int) -> int:
    return (channel - 1 + offset) % n + 1


def initial_sender_channel(profile: SenderProfile, n_channels: int, rng: np.random.Generator) -> int:
    if profile.initial_channel is not None:
        if not 1 <= profile.initial_channel <= n_channels:
            raise ValueError(f"initial_channel {profile.initial_channel} outside [1, {n_channels}]")
        return profile.initial_channel
    return int(rng.integers(1, n_channels + 1))


def _ar_next(prev: int, t: int, n: int, profile: SenderProfile, rng: np.random.Generator) -> int:
    step = t % n
    cand = prev + step if prev % 2 == 0 else prev - step
    if cand > n:
        return 1 if rng.random() < profile.p_high_boundary else n
    if cand < 1:
        return 1 if rng.random() < profile.p_low_boundary else n
    return cand


def sender_channel(
    profile: SenderProfile,
    t: int,
    n_channels: int,
    rng: np.random.Generator,
    previous: int | None = None,
) -> list[int]:
    """Channels the sender uses at step ``t``.

    ``previous`` is the primary channel used at ``t - 1``; the constant and
    AR senders need it (at ``t == 0`` it is ignored and the initial channel
    is drawn). Extra channels of a multi-channel sender sit on the cyclic
    neighbours of the primary one.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    n = n_channels
    strategy = profile.strategy
    if strategy is SenderStrategy.SWEEP:
        primary = 1 + t % n
    elif strategy is SenderStrategy.PULSE:
        if n < 5:
            raise ValueError("the pulse sender needs at least 5 channels")
        primary = 5 if t % n <= 2 else 1
    elif t == 0 or previous is None:
        primary = initial_sender_channel(profile, n, rng)
    elif strategy is SenderStrategy.CONSTANT:
        primary = previous
    else:
        primary = _ar_next(previous, t, n, profile, rng)
    return [_wrap(primary, k, n) for k in range(profile.channels_used)]


def rayleigh_draws(model: ChannelModel, m: int, rng: np.random.Generator) -> np.ndarray:
    """One fading factor for the sender followed by one per adversary transmitter."""
    return rng.rayleigh(scale=model.rayleigh_scale, size=m + 1)


def compute_sinr(
    model: ChannelModel,
    sender_channels: Sequence[int],
    sender_powers: Sequence[float],
    adversary_actions: Sequence[Action],
    fading_draws: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per sender-channel SINR and SNR."""
    if not model.noise > 0:
        raise ValueError("noise must be positive")
    m = len(adversary_actions)
    if model.fading is Fading.RAYLEIGH:
        if fading_draws is None or len(fading_draws) != m + 1:
            raise ValueError("Rayleigh fading needs one draw per transmitter")
        beta_s, beta_j = float(fading_draws[0]), np.asarray(fading_draws[1:], dtype=float)
    else:
        beta_s, beta_j = 1.0, np.ones(m)

    gains = model.adversary_gains(m) if m else np.zeros(0)
    jam_power = np.array([a.power for a in adversary_actions], dtype=float) * gains * beta_j
    jam_channel = np.array([a.channel for a in adversary_actions], dtype=int)

    received = np.asarray(sender_powers, dtype=float) * model.gain_sender * beta_s
    interference = np.array(
        [jam_power[jam_channel == c].sum() for c in sender_channels], dtype=float
    )
    sinr = received / (model.noise + interference)
    snr = received / model.noise
    return sinr, snr


def attack_success(sinr: Sequence[float], snr: Sequence[float], tau: float) -> int:
    """1 if the (summed) SINR is pushed below ``tau`` times the SNR."""
    if len(sinr) != len(snr):
        raise ValueError("sinr and snr must have the same length")
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    return int(float(np.sum(sinr)) < tau * float(np.sum(snr)))


def success_rate(sa_flags: Sequence[int]) -> float:
    flags = np.asarray(sa_flags)
    if flags.size == 0:
        raise ValueError("success rate of an empty sequence")
    return float(flags.sum()) / flags.size


def capacity_drop(model: ChannelModel, sinr, snr) -> float:
    return model.bandwidth * float(np.sum(np.log2(1.0 + np.asarray(snr)) - np.log2(1.0 + np.asarray(sinr))))


def team_reward(model: ChannelModel, sinr, snr, adversary_powers) -> float:
    return capacity_drop(model, sinr, snr) - model.power_cost * float(np.sum(adversary_powers))


def individual_reward(model: ChannelModel, sinr, snr, power_j: float) -> float:
    return capacity_drop(model, sinr, snr) - model.power_cost * float(power_j)


@dataclass
class JammingEnv:
    """Stateful scenario: one sender, ``n_transmitters`` adversary transmitters.

    The random stream drives the sender (initial channel, AR boundary hops)
    and the fading draws; adversaries own separate streams.
    """

    model: ChannelModel
    sender: SenderProfile
    n_transmitters: int
    taus: tuple[float, ...] = (0.2, 0.5)
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    _prev_channel: int | None = field(default=None, init=False)

    def __post_init__(self):
        if self.n_transmitters < 1:
            raise ValueError("need at least one adversary transmitter")
        self.model.adversary_gains(self.n_transmitters)

    @property
    def obs_dim(self) -> int:
        return self.sender.channels_used

    @property
    def max_snr(self) -> float:
        return max(self.sender.powers) * self.model.gain_sender / self.model.noise

    @property
    def max_capacity_drop(self) -> float:
        """Capacity lost when every sender channel is jammed down to zero SINR."""
        snr = np.asarray(self.sender.powers) * self.model.gain_sender / self.model.noise
        return self.model.bandwidth * float(np.sum(np.log2(1.0 + snr)))

    def reset(self) -> None:
        self._prev_channel = None

    def step(self, actions: Sequence[Action], t: int) -> StepOutcome:
        if len(actions) != self.n_transmitters:
            raise ValueError(f"expected {self.n_transmitters} actions, got {len(actions)}")
        n = self.model.n_channels
        for a in actions:
            if not 1 <= a.channel <= n or a.power < 0:
                raise ValueError(f"invalid action {a}")

        channels = sender_channel(self.sender, t, n, self.rng, self._prev_channel)
        self._prev_channel = channels[0]
        draws = None
        if self.model.fading is Fading.RAYLEIGH:
            draws = rayleigh_draws(self.model, len(actions), self.rng)
        sinr, snr = compute_sinr(self.model, channels, self.sender.powers, actions, draws)

        powers = np.array([a.power for a in actions], dtype=float)
        drop = capacity_drop(self.model, sinr, snr)
        individual = drop - self.model.power_cost * powers
        team = drop - self.model.power_cost * float(powers.sum())
        return StepOutcome(
            sender_channels=channels,
            sinr=sinr,
            snr=snr,
            team_reward=team,
            individual_rewards=individual,
            sa={tau: attack_success(sinr, snr, tau) for tau in self.taus},
            observation_next=sinr.copy(),
        )

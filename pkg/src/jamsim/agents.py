"""Adversaries: Random, Greedy bandit, SSRL, MSRL and the multi-agent MAAS.

Every adversary exposes the same small surface used by the trial loop:

* ``n_transmitters`` -- how many (channel, power) pairs it emits per step
* ``act(obs, explore=False)`` -- list of :class:`Action`, one per transmitter
* ``learn(obs, next_obs, outcome, beta)`` -- consume the step's rewards
* ``epsilon`` -- current exploration rate (``nan`` where it has no meaning)
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dqn import DqnLearner, DqnParams, Experience, forward, soft_update, train_batch
from .env import Action, StepOutcome

INT64_MAX = 2**63 - 1
DEFAULT_MATERIALIZE_CAP = 1_000_000


class AgentKind(str, enum.Enum):
    RANDOM = "random"
    GREEDY = "greedy"
    SSRL = "ssrl"
    MSRL = "msrl"
    MAAS = "maas"


class ActionSpaceTooLarge(ValueError):
    pass


def action_space_size(n: int, k: int, x: int) -> int:
    """(n*k)**x, refusing anything that would not fit a signed 64-bit index."""
    if n < 1 or k < 1 or x < 1:
        raise ValueError("n, k and x must all be >= 1")
    size = (n * k) ** x
    if size > INT64_MAX:
        raise OverflowError(f"action space ({n}*{k})^{x} exceeds 64-bit indexing")
    return size


class ActionSpace:
    """Joint (channel, power) choices for an agent driving ``x`` transmitters.

    Entries are ordered lexicographically by channel then power, the first
    transmitter being the most significant digit. Indices are decoded
    arithmetically, so ``entries`` is only materialised on request and never
    above ``cap``.
    """

    def __init__(self, n_channels: int, powers: Sequence[float], x: int = 1,
                 cap: int = DEFAULT_MATERIALIZE_CAP):
        powers = tuple(float(p) for p in powers)
        if any(b <= a for a, b in zip(powers, powers[1:])) or (powers and powers[0] < 0):
            raise ValueError("power set must be non-negative and strictly increasing")
        self.n_channels = n_channels
        self.powers = powers
        self.x = x
        self.size = action_space_size(n_channels, len(powers), x)
        if self.size > cap:
            raise ActionSpaceTooLarge(
                f"action space of {self.size:,} entries exceeds the materialisation cap {cap:,}"
            )
        self._pairs = [Action(c, p) for c in range(1, n_channels + 1) for p in powers]
        self._entries: list[tuple[Action, ...]] | None = None

    def __len__(self) -> int:
        return self.size

    @property
    def entries(self) -> list[tuple[Action, ...]]:
        if self._entries is None:
            self._entries = list(itertools.product(self._pairs, repeat=self.x))
        return self._entries

    def decode(self, index: int) -> tuple[Action, ...]:
        if not 0 <= index < self.size:
            raise IndexError(index)
        base = len(self._pairs)
        digits = []
        for _ in range(self.x):
            index, d = divmod(index, base)
            digits.append(self._pairs[d])
        return tuple(reversed(digits))


@dataclass(frozen=True)
class AgentConfig:
    kind: AgentKind = AgentKind.MAAS
    epsilon0: float = 1.0
    decay: float = 0.996
    target_shift: float = 0.01
    gamma: float = 0.0
    dqn: DqnParams = field(default_factory=DqnParams)
    m_agents: int = 2
    x_channels: int = 2
    normalize_obs: bool = False
    normalize_reward: bool = False
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", AgentKind(self.kind))
        if not 0.0 <= self.epsilon0 <= 1.0:
            raise ValueError("epsilon0 must lie in [0, 1]")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError("decay must lie in (0, 1]")
        if not 0.0 < self.target_shift <= 1.0:
            raise ValueError("target_shift must lie in (0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.m_agents < 1 or self.x_channels < 1:
            raise ValueError("m_agents and x_channels must be >= 1")

    @property
    def label(self) -> str:
        return self.name or self.kind.value


@dataclass
class GreedyStats:
    sums: np.ndarray
    counts: np.ndarray

    @classmethod
    def empty(cls, n_actions: int) -> GreedyStats:
        return cls(np.zeros(n_actions), np.zeros(n_actions, dtype=np.int64))

    def update(self, index: int, reward: float) -> None:
        self.sums[index] += reward
        self.counts[index] += 1

    def means(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), np.nan)


def act_random(space: ActionSpace, rng: np.random.Generator) -> int:
    if len(space) == 0:
        raise ValueError("empty action space")
    return int(rng.integers(len(space)))


def act_greedy(stats: GreedyStats, space: ActionSpace | None = None,
               rng: np.random.Generator | None = None) -> int:
    """Lowest-index untried arm first, then the best running mean (lowest index on ties)."""
    untried = np.flatnonzero(stats.counts == 0)
    if untried.size:
        return int(untried[0])
    return int(np.argmax(stats.sums / stats.counts))


def act_epsilon_greedy(q_actor, obs, epsilon: float, space: ActionSpace,
                       rng: np.random.Generator) -> int:
    """Random index with probability ``epsilon``, otherwise the actor's argmax.

    One uniform draw is always consumed so the stream position does not
    depend on the network.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if rng.random() < epsilon:
        return act_random(space, rng)
    q = q_actor(obs) if callable(q_actor) else forward(q_actor, obs)
    return int(np.argmax(q))


def decay_epsilon(epsilon: float, decay: float) -> float:
    return epsilon * decay


class RandomAdversary:
    n_transmitters = 1

    def __init__(self, space: ActionSpace, rng: np.random.Generator):
        self.space = space
        self.rng = rng
        self.epsilon = 1.0
        self.last = 0

    def act(self, obs, explore: bool = False) -> list[Action]:
        self.last = act_random(self.space, self.rng)
        return list(self.space.decode(self.last))

    def learn(self, obs, next_obs, outcome: StepOutcome, beta: float) -> None:
        pass

    def end_step(self) -> None:
        pass


class GreedyAdversary:
    n_transmitters = 1

    def __init__(self, space: ActionSpace, rng: np.random.Generator):
        self.space = space
        self.rng = rng
        self.stats = GreedyStats.empty(len(space))
        self.epsilon = math.nan
        self.last = 0

    def act(self, obs, explore: bool = False) -> list[Action]:
        if explore:
            self.last = act_random(self.space, self.rng)
        else:
            self.last = act_greedy(self.stats, self.space, self.rng)
        return list(self.space.decode(self.last))

    def learn(self, obs, next_obs, outcome: StepOutcome, beta: float) -> None:
        self.stats.update(self.last, outcome.team_reward)

    def end_step(self) -> None:
        pass


class DqnAgent:
    """Epsilon-greedy Double-DQN jammer driving ``space.x`` transmitters."""

    def __init__(self, config: AgentConfig, space: ActionSpace, obs_dim: int,
                 obs_scale: float, rng: np.random.Generator, reward_scale: float = 1.0):
        self.config = config
        self.space = space
        self.n_transmitters = space.x
        self.rng = rng
        self.obs_scale = obs_scale if config.normalize_obs else 1.0
        # Rewards are stored divided by the largest achievable capacity drop so
        # Q targets are O(1) whatever the bandwidth; argmax is unaffected.
        self.reward_scale = reward_scale if config.normalize_reward else 1.0
        params = replace(config.dqn, input_dim=obs_dim, output_dim=len(space))
        self.learner = DqnLearner(params, config.gamma, config.target_shift, rng)
        self.epsilon = config.epsilon0
        self.last = 0

    def _input(self, obs) -> np.ndarray:
        return np.asarray(obs, dtype=float) / self.obs_scale

    def q_values(self, obs) -> np.ndarray:
        return forward(self.learner.actor, self._input(obs))

    def act(self, obs, explore: bool = False) -> list[Action]:
        if explore:
            self.last = act_random(self.space, self.rng)
        else:
            self.last = act_epsilon_greedy(self.q_values, obs, self.epsilon, self.space, self.rng)
        return list(self.space.decode(self.last))

    def reward(self, outcome: StepOutcome, first: int) -> float:
        if self.n_transmitters == 1:
            return float(outcome.individual_rewards[first]) / self.reward_scale
        return outcome.team_reward / self.reward_scale

    def learn(self, obs, next_obs, outcome: StepOutcome, beta: float, first: int = 0) -> None:
        exp = Experience(self._input(obs), self.last, self.reward(outcome, first), self._input(next_obs))
        learn_step(self, exp, beta)

    def end_step(self) -> None:
        self.epsilon = decay_epsilon(self.epsilon, self.config.decay)


def learn_step(agent, experience: Experience, beta: float = 1.0) -> float | None:
    """Store one experience; once warm, one Double-DQN update plus a soft target shift.

    Greedy agents fold the reward into their running means and random
    agents ignore the call. Returns the training loss when a step was taken.
    """
    if isinstance(agent, RandomAdversary):
        return None
    if isinstance(agent, GreedyAdversary):
        agent.stats.update(experience.action_index, experience.reward)
        return None
    learner = agent.learner
    learner.memory.add(experience)
    if len(learner.memory) < learner.params.batch_size:
        return None
    for _ in range(learner.params.updates_per_step):
        loss = train_batch(learner, beta)
    soft_update(learner.target, learner.actor, learner.target_shift)
    return loss


class Maas:
    """M independent single-channel DQN jammers sharing one observation.

    Members never exchange information; each owns its network, replay
    memory and random stream, and learns from its own individual reward.
    """

    def __init__(self, members: list[DqnAgent]):
        self.members = members
        self.n_transmitters = len(members)

    @property
    def epsilon(self) -> float:
        return self.members[0].epsilon

    def act(self, obs, explore: bool = False) -> list[Action]:
        return maas_act(self.members, obs, explore)

    def learn(self, obs, next_obs, outcome: StepOutcome, beta: float) -> None:
        for j, member in enumerate(self.members):
            member.learn(obs, next_obs, outcome, beta, first=j)

    def end_step(self) -> None:
        for member in self.members:
            member.end_step()


def maas_act(agents: Sequence[DqnAgent], obs, explore: bool = False) -> list[Action]:
    actions: list[Action] = []
    for agent in agents:
        actions.extend(agent.act(obs, explore))
    return actions


def agent_rng(seed: int, index: int) -> np.random.Generator:
    """Stream for adversary member ``index`` of the trial seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, index)))


def build_adversary(config: AgentConfig, n_channels: int, powers: Sequence[float],
                    obs_dim: int, obs_scale: float, seed: int,
                    cap: int = DEFAULT_MATERIALIZE_CAP,
                    members: Sequence[int] | None = None, reward_scale: float = 1.0):
    """Instantiate the adversary described by ``config`` for one trial.

    ``members`` selects a subset of MAAS member indices (each keeps the
    stream it would have in the full roster). ``obs_scale`` and
    ``reward_scale`` are the divisors used when the matching ``normalize_*``
    switch of the config is on.
    """
    kind = config.kind
    single = ActionSpace(n_channels, powers, 1, cap)
    if kind is AgentKind.RANDOM:
        return RandomAdversary(single, agent_rng(seed, 0))
    if kind is AgentKind.GREEDY:
        return GreedyAdversary(single, agent_rng(seed, 0))
    if kind is AgentKind.SSRL:
        return DqnAgent(config, single, obs_dim, obs_scale, agent_rng(seed, 0), reward_scale)
    if kind is AgentKind.MSRL:
        space = ActionSpace(n_channels, powers, config.x_channels, cap)
        return DqnAgent(config, space, obs_dim, obs_scale, agent_rng(seed, 0), reward_scale)
    indices = range(config.m_agents) if members is None else members
    return Maas([DqnAgent(config, single, obs_dim, obs_scale, agent_rng(seed, j), reward_scale)
                 for j in indices])

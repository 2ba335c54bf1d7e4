"""Numpy Double-DQN with proportional prioritized replay.

Everything here is float64 and driven by an explicit ``numpy`` Generator so
that a trial is reproducible bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class DqnParams:
    input_dim: int = 1
    output_dim: int = 20
    hidden_sizes: tuple[int, ...] = (256, 256)
    learning_rate: float = 1e-4
    batch_size: int = 32
    buffer_capacity: int = 2000
    per_alpha: float = 0.6
    per_beta0: float = 0.4
    per_eps: float = 1e-6
    updates_per_step: int = 1
    bias_init: str = "zero"

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 1 <= self.batch_size <= self.buffer_capacity:
            raise ValueError("need 1 <= batch_size <= buffer_capacity")
        if self.per_alpha < 0:
            raise ValueError("per_alpha must be non-negative")
        if not 0 < self.per_beta0 <= 1:
            raise ValueError("per_beta0 must lie in (0, 1]")
        if not self.per_eps > 0:
            raise ValueError("per_eps must be positive")
        if self.bias_init not in ("zero", "uniform"):
            raise ValueError("bias_init must be 'zero' or 'uniform'")
        if self.updates_per_step < 1:
            raise ValueError("updates_per_step must be >= 1")


@dataclass(frozen=True)
class Experience:
    state: np.ndarray
    action_index: int
    reward: float
    next_state: np.ndarray


class QNetwork:
    """MLP: input -> hidden (ReLU) ... -> linear Q-head.

    ``params`` is the flat list ``[W1, b1, W2, b2, ...]`` with ``W`` shaped
    ``(fan_in, fan_out)``.
    """

    def __init__(self, params: list[np.ndarray]):
        if len(params) % 2 or not params:
            raise ValueError("params must alternate weights and biases")
        self.params = [np.array(p, dtype=float) for p in params]

    @classmethod
    def init(cls, input_dim: int, hidden_sizes: Sequence[int], output_dim: int,
             rng: np.random.Generator, bias_init: str = "zero") -> QNetwork:
        """He-uniform weights; biases zero or U(-1/sqrt(fan_in), 1/sqrt(fan_in)).

        Zero biases make a ReLU net positively homogeneous in its input, which
        pins Q(s) near zero for small SINR observations until the biases
        have been trained up.
        """
        sizes = [input_dim, *hidden_sizes, output_dim]
        params = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / fan_in)
            params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            if bias_init == "zero":
                params.append(np.zeros(fan_out))
            else:
                bound = 1.0 / np.sqrt(fan_in)
                params.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(params)

    @property
    def input_dim(self) -> int:
        return self.params[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.params[-1].shape[0]

    @property
    def shapes(self) -> list[tuple[int, ...]]:
        return [p.shape for p in self.params]

    def copy(self) -> QNetwork:
        return QNetwork([p.copy() for p in self.params])

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Q-values for a batch ``(B, input_dim)`` plus the activations for backprop."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValueError(f"expected input of shape (B, {self.input_dim}), got {x.shape}")
        acts = [x]
        h = x
        n_layers = len(self.params) // 2
        for i in range(n_layers):
            h = h @ self.params[2 * i] + self.params[2 * i + 1]
            if i < n_layers - 1:
                h = np.maximum(h, 0.0)
            acts.append(h)
        return h, acts

    def backward(self, acts: list[np.ndarray], grad_out: np.ndarray) -> list[np.ndarray]:
        """Gradients of ``sum(grad_out * Q)`` with respect to every parameter."""
        grads: list[np.ndarray] = [None] * len(self.params)  # type: ignore[list-item]
        g = grad_out
        n_layers = len(self.params) // 2
        for i in reversed(range(n_layers)):
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            if i:
                g = (g @ self.params[2 * i].T) * (acts[i] > 0)
        return grads

    def to_json(self) -> str:
        """Flat snapshot: one entry per tensor with its shape and row-major values."""
        layers = [
            {"layer": i // 2, "name": "weight" if i % 2 == 0 else "bias",
             "shape": list(p.shape), "values": p.ravel().tolist()}
            for i, p in enumerate(self.params)
        ]
        return json.dumps(layers)

    @classmethod
    def from_json(cls, text: str) -> QNetwork:
        layers = json.loads(text)
        return cls([np.array(e["values"], dtype=float).reshape(e["shape"]) for e in layers])


def forward(net: QNetwork, obs) -> np.ndarray:
    """Q-vector for a single observation."""
    q, _ = net.forward(np.asarray(obs, dtype=float).reshape(1, -1))
    return q[0]


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> AdamState:
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(params: list[np.ndarray], grads: Sequence[np.ndarray], state: AdamState,
              lr: float, t: int | None = None) -> list[np.ndarray]:
    """Bias-corrected Adam, no weight decay. Updates ``params`` and ``state`` in place."""
    if len(grads) != len(params):
        raise ValueError("one gradient per parameter required")
    for p, g in zip(params, grads):
        if p.shape != np.shape(g):
            raise ValueError(f"gradient shape {np.shape(g)} does not match parameter {p.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient")
    state.t = state.t + 1 if t is None else t
    if state.t < 1:
        raise ValueError("Adam step counter must be >= 1")
    c1 = 1.0 - ADAM_BETA1 ** state.t
    c2 = 1.0 - ADAM_BETA2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)
    return params


def soft_update(target: QNetwork, actor: QNetwork, alpha: float) -> QNetwork:
    """Move ``target`` toward ``actor``: alpha * actor + (1 - alpha) * target."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if target.shapes != actor.shapes:
        raise ValueError("actor and target architectures differ")
    for pt, pa in zip(target.params, actor.params):
        if alpha == 1.0:
            pt[...] = pa
        else:
            pt *= 1.0 - alpha
            pt += alpha * pa
    return target


def double_dqn_targets(actor: QNetwork, target: QNetwork, rewards: np.ndarray,
                       next_states: np.ndarray, gamma: float) -> np.ndarray:
    """r + gamma * Q_target(s', argmax_a Q_actor(s', a)) for a batch."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    rewards = np.asarray(rewards, dtype=float)
    if gamma == 0.0:
        return rewards.copy()
    q_next_actor, _ = actor.forward(next_states)
    q_next_target, _ = target.forward(next_states)
    best = np.argmax(q_next_actor, axis=1)
    return rewards + gamma * q_next_target[np.arange(len(best)), best]


def double_dqn_target(actor: QNetwork, target: QNetwork, experience: Experience, gamma: float) -> float:
    ns = np.asarray(experience.next_state, dtype=float).reshape(1, -1)
    return float(double_dqn_targets(actor, target, np.array([experience.reward]), ns, gamma)[0])


class ReplayMemory:
    """Ring buffer with one priority per stored experience.

    New entries get the largest priority seen so far so that every
    experience is replayed at least once with high probability.
    """

    def __init__(self, capacity: int, input_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, input_dim))
        self.next_states = np.zeros((capacity, input_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.priorities = np.zeros(capacity)
        self.cursor = 0
        self.size = 0
        self.max_priority = 1.0

    def __len__(self) -> int:
        return self.size

    def add(self, exp: Experience) -> None:
        i = self.cursor
        self.states[i] = exp.state
        self.next_states[i] = exp.next_state
        self.actions[i] = exp.action_index
        self.rewards[i] = exp.reward
        self.priorities[i] = self.max_priority
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def get(self, i: int) -> Experience:
        if not 0 <= i < self.size:
            raise IndexError(i)
        return Experience(self.states[i].copy(), int(self.actions[i]),
                          float(self.rewards[i]), self.next_states[i].copy())

    def probabilities(self, alpha: float) -> np.ndarray:
        scaled = self.priorities[: self.size] ** alpha
        return scaled / scaled.sum()

    def sample(self, batch_size: int, alpha: float, beta: float,
               rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Indices drawn with probability p_i^alpha / sum p^alpha, and max-normalised IS weights."""
        if self.size < batch_size:
            raise ValueError(f"memory holds {self.size} experiences, batch needs {batch_size}")
        probs = self.probabilities(alpha)
        idx = rng.choice(self.size, size=batch_size, p=probs)
        weights = (self.size * probs[idx]) ** (-beta)
        return idx, weights / weights.max()

    def update_priorities(self, idx: np.ndarray, priorities: np.ndarray) -> None:
        if np.any(priorities <= 0):
            raise ValueError("priorities must be positive")
        self.priorities[idx] = priorities
        self.max_priority = max(self.max_priority, float(priorities.max()))


def batch_loss(actor: QNetwork, states: np.ndarray, actions: np.ndarray,
               targets: np.ndarray, weights: np.ndarray) -> tuple[float, np.ndarray, list[np.ndarray]]:
    """Weighted mean squared TD error, the TD errors, and the actor gradients."""
    q, acts = actor.forward(states)
    rows = np.arange(len(actions))
    td = targets - q[rows, actions]
    loss = float(np.mean(weights * td * td))
    grad_q = np.zeros_like(q)
    grad_q[rows, actions] = -2.0 * weights * td / len(actions)
    return loss, td, actor.backward(acts, grad_q)


@dataclass
class DqnLearner:
    """Actor/target pair, optimiser state and replay memory of one agent."""

    params: DqnParams
    gamma: float
    target_shift: float
    rng: np.random.Generator
    actor: QNetwork = field(init=False)
    target: QNetwork = field(init=False)
    memory: ReplayMemory = field(init=False)
    adam: AdamState = field(init=False)
    updates: int = field(default=0, init=False)

    def __post_init__(self):
        p = self.params
        self.actor = QNetwork.init(p.input_dim, p.hidden_sizes, p.output_dim, self.rng, p.bias_init)
        self.target = self.actor.copy()
        self.memory = ReplayMemory(p.buffer_capacity, p.input_dim)
        self.adam = AdamState.zeros_like(self.actor.params)


def train_batch(learner: DqnLearner, beta: float) -> float:
    """One prioritized Double-DQN gradient step on the actor; returns the loss."""
    p = learner.params
    mem = learner.memory
    idx, weights = mem.sample(p.batch_size, p.per_alpha, beta, learner.rng)
    targets = double_dqn_targets(learner.actor, learner.target, mem.rewards[idx],
                                 mem.next_states[idx], learner.gamma)
    loss, td, grads = batch_loss(learner.actor, mem.states[idx], mem.actions[idx], targets, weights)
    adam_step(learner.actor.params, grads, learner.adam, p.learning_rate)
    mem.update_priorities(idx, np.abs(td) + p.per_eps)
    learner.updates += 1
    return loss

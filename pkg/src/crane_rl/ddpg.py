"""DDPG with forward-network action feedback.

During training several noisy copies of the actor's action are decoded to
joint space, pushed through the learned forward kinematics, and the one
predicted to land closest to the goal is executed.  Everything else is
plain DDPG: replay buffer, target networks, soft updates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .env import ACTION_DIM, STATE_DIM, CraneEnv, EnvState
from .nn import AdamState, MlpModel, adam_step, backprop, forward_core, mlp_forward, mlp_init
from .plant import ChainParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DdpgConfig:
    episodes: int = 1500
    steps: int = 1000
    buffer_size: int = 1_000_000
    batch_size: int = 1024
    gamma: float = 0.99
    tau: float = 1e-3
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    ou_sigma: float = 0.1
    ou_theta: float = 0.15
    n_candidates: int = 16
    feedback: bool = True
    actor_hidden: tuple[int, ...] = (256, 256)
    critic_hidden: tuple[int, ...] = (256, 256)
    checkpoint_every: int = 100


PAPER_CONFIG = DdpgConfig()
DESK_CONFIG = DdpgConfig(episodes=200, steps=200, buffer_size=100_000, batch_size=256,
                         actor_hidden=(64, 64), critic_hidden=(64, 64), checkpoint_every=50)


# --- exploration noise ------------------------------------------------------

@dataclass
class OuNoise:
    """Discrete Ornstein-Uhlenbeck process with unit time step."""

    value: np.ndarray = field(default_factory=lambda: np.zeros(ACTION_DIM))
    theta: float = 0.15
    sigma: float = 0.1
    mu: float = 0.0

    def reset(self) -> None:
        self.value = np.full_like(self.value, self.mu)


def ou_sample(state: OuNoise, rng: np.random.Generator) -> np.ndarray:
    """Advance the process one step and return the new value."""
    x = state.value
    state.value = x + state.theta * (state.mu - x) + state.sigma * rng.standard_normal(x.shape)
    return state.value.copy()


# --- replay -----------------------------------------------------------------

class BufferNotReady(RuntimeError):
    pass


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray

    def __len__(self):
        return len(self.rewards)


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions, sampled uniformly with replacement."""

    def __init__(self, capacity: int = 1_000_000, state_dim: int = STATE_DIM, action_dim: int = ACTION_DIM):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    def push(self, state, action, reward, next_state) -> None:
        i = self.cursor
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def ready(self, batch_size: int) -> bool:
        return self.size >= batch_size

    def ordered_indices(self) -> np.ndarray:
        """Slots from oldest to newest."""
        start = self.cursor if self.size == self.capacity else 0
        return (start + np.arange(self.size)) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if not self.ready(batch_size):
            raise BufferNotReady(f"buffer holds {self.size} transitions, batch needs {batch_size}")
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(self.states[idx], self.actions[idx], self.rewards[idx], self.next_states[idx])


# --- action scaling -----------------------------------------------------------

@dataclass(frozen=True)
class ActionCodec:
    """Affine map between normalized actions in [-1, 1] and joint-limit boxes."""

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def for_chain(cls, chain: ChainParams) -> "ActionCodec":
        return cls(chain.lo, chain.hi)

    def decode(self, a):
        return self.lo + 0.5 * (np.asarray(a) + 1.0) * (self.hi - self.lo)

    def encode(self, q):
        return 2.0 * (np.asarray(q) - self.lo) / (self.hi - self.lo) - 1.0


# --- agent --------------------------------------------------------------------

@dataclass
class DdpgAgent:
    actor: MlpModel
    critic: MlpModel
    target_actor: MlpModel
    target_critic: MlpModel
    actor_opt: AdamState
    critic_opt: AdamState
    gamma: float = 0.99
    tau: float = 1e-3

    @classmethod
    def create(cls, config: DdpgConfig, rng: np.random.Generator) -> "DdpgAgent":
        actor = mlp_init([STATE_DIM, *config.actor_hidden, ACTION_DIM], "tanh", rng)
        critic = mlp_init([STATE_DIM + ACTION_DIM, *config.critic_hidden, 1], "identity", rng)
        return cls(actor, critic, actor.copy(), critic.copy(),
                   AdamState.for_model(actor, config.actor_lr),
                   AdamState.for_model(critic, config.critic_lr),
                   gamma=config.gamma, tau=config.tau)

    def act(self, state_vec) -> np.ndarray:
        """Deterministic policy output in (-1, 1)^4."""
        return mlp_forward(self.actor, state_vec)


def soft_update(target: MlpModel, source: MlpModel, tau: float) -> None:
    for t, s in zip(target.parameters(), source.parameters()):
        t *= 1.0 - tau
        t += tau * s


def critic_loss_and_grads(critic: MlpModel, states, actions, targets) -> tuple[float, list[np.ndarray]]:
    """Mean squared TD error against fixed ``targets`` and its critic gradients."""
    q, cache = forward_core(critic, np.hstack([states, actions]))
    resid = q[:, 0] - targets
    grads, _ = backprop(critic, cache, (2.0 / len(resid)) * resid[:, None])
    return float(np.mean(resid ** 2)), grads


def actor_objective_and_grads(actor: MlpModel, critic: MlpModel, states) -> tuple[float, list[np.ndarray]]:
    """Mean Q of the actor's own actions, with gradients of its negative w.r.t. the actor."""
    a, a_cache = forward_core(actor, states)
    q, q_cache = forward_core(critic, np.hstack([states, a]))
    n = len(states)
    _, grad_in = backprop(critic, q_cache, np.full((n, 1), -1.0 / n))
    grads, _ = backprop(actor, a_cache, grad_in[:, STATE_DIM:])
    return float(np.mean(q)), grads


def update(agent: DdpgAgent, batch: Batch) -> dict[str, float]:
    """One critic step, one actor step, then soft target updates."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    next_a, _ = forward_core(agent.target_actor, batch.next_states)
    next_q, _ = forward_core(agent.target_critic, np.hstack([batch.next_states, next_a]))
    y = batch.rewards + agent.gamma * next_q[:, 0]
    critic_loss, cg = critic_loss_and_grads(agent.critic, batch.states, batch.actions, y)
    adam_step(agent.critic, cg, agent.critic_opt)
    objective, ag = actor_objective_and_grads(agent.actor, agent.critic, batch.states)
    adam_step(agent.actor, ag, agent.actor_opt)
    soft_update(agent.target_critic, agent.critic, agent.tau)
    soft_update(agent.target_actor, agent.actor, agent.tau)
    return {"critic_loss": critic_loss, "actor_objective": objective}


FkPredictor = Callable[[np.ndarray], np.ndarray]


def select_action_with_feedback(agent: DdpgAgent, state: EnvState, fk_net: MlpModel | FkPredictor,
                                n_candidates: int, noise: OuNoise, rng: np.random.Generator,
                                codec: ActionCodec, distance: Callable[[np.ndarray], np.ndarray] | None = None,
                                ) -> tuple[np.ndarray, int]:
    """Pick the noisy candidate whose predicted end-effector lands nearest the goal.

    Candidates share one OU process, advanced once per candidate.  Returns
    the normalized action and its candidate index (lowest index on ties).
    """
    if n_candidates < 1:
        raise ValueError("need at least one candidate")
    base = agent.act(state.vector())
    cands = np.stack([np.clip(base + ou_sample(noise, rng), -1.0, 1.0) for _ in range(n_candidates)])
    if n_candidates == 1:
        return cands[0], 0
    predict = (lambda q: mlp_forward(fk_net, q)) if isinstance(fk_net, MlpModel) else fk_net
    ee = np.asarray(predict(codec.decode(cands)))
    d = np.linalg.norm(state.desired_goal - ee, axis=1)
    if distance is not None:
        d = distance(d)
    i = int(np.argmin(d))
    return cands[i], i


@dataclass
class TrainResult:
    episode_rewards: list[float]
    agent: DdpgAgent
    checkpoints: list[int]
    updates: int


def train(env: CraneEnv, agent: DdpgAgent, fk_net, config: DdpgConfig, rng: np.random.Generator,
          checkpoint_fn: Callable[[int, MlpModel], None] | None = None,
          buffer: ReplayBuffer | None = None) -> TrainResult:
    """Run the episode loop, updating once per environment step once the buffer holds a batch.

    Without feedback a single noisy candidate is executed.  ``checkpoint_fn``
    receives the actor every ``config.checkpoint_every`` episodes.
    """
    env_rng, noise_rng, buffer_rng = rng.spawn(3)
    codec = ActionCodec.for_chain(env.chain)
    buffer = ReplayBuffer(config.buffer_size) if buffer is None else buffer
    noise = OuNoise(theta=config.ou_theta, sigma=config.ou_sigma)
    n_cand = config.n_candidates if config.feedback else 1
    rewards, checkpoints = [], []
    n_updates = 0
    for episode in range(1, config.episodes + 1):
        state = env.reset(env_rng)
        noise.reset()
        total = 0.0
        for _ in range(config.steps):
            a, _ = select_action_with_feedback(agent, state, fk_net, n_cand, noise, noise_rng, codec)
            res = env.step(state, codec.decode(a))
            buffer.push(state.vector(), a, res.reward, res.next_state.vector())
            total += res.reward
            state = res.next_state
            if buffer.ready(config.batch_size):
                update(agent, buffer.sample(config.batch_size, buffer_rng))
                n_updates += 1
        rewards.append(total)
        if config.checkpoint_every and episode % config.checkpoint_every == 0:
            checkpoints.append(episode)
            if checkpoint_fn is not None:
                checkpoint_fn(episode, agent.actor)
        log.debug("episode %d reward %.4f", episode, total)
    return TrainResult(rewards, agent, checkpoints, n_updates)

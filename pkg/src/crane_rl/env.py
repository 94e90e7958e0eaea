"""Goal-conditioned reaching task on the analytic crane.

The state stacks the joint observation, the achieved end-effector position
and the desired one.  Actions are absolute joint targets.  The reward has a
constant step bonus, a negative goal distance with a small offset, and a
penalty for each joint commanded outside its limits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .plant import DEFAULT_CHAIN, ChainParams, forward_kinematics, sample_random_config, within_limits

STATE_DIM = 10
ACTION_DIM = 4


@dataclass(frozen=True)
class RewardParams:
    r_step: float = 0.001
    dist_bonus: float = 0.002
    jlim_penalty: float = 0.0005


@dataclass(frozen=True)
class EnvState:
    observation: np.ndarray
    achieved_goal: np.ndarray
    desired_goal: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate([self.observation, self.achieved_goal, self.desired_goal])

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(self.desired_goal - self.achieved_goal))


@dataclass(frozen=True)
class RewardBreakdown:
    step: float
    dist: float
    jlim: float

    @property
    def total(self) -> float:
        return self.step + self.dist + self.jlim


@dataclass(frozen=True)
class StepResult:
    next_state: EnvState
    reward: float
    components: RewardBreakdown
    info: dict = field(default_factory=dict)


def compute_reward(action, achieved, desired, chain: ChainParams = DEFAULT_CHAIN,
                   params: RewardParams = RewardParams()) -> RewardBreakdown:
    """Step bonus + (bonus - goal distance) - penalty per out-of-limit joint in ``action``."""
    d = float(np.linalg.norm(np.asarray(desired, float) - np.asarray(achieved, float)))
    violations = int(np.count_nonzero(~within_limits(action, chain)))
    return RewardBreakdown(params.r_step, -d + params.dist_bonus, -params.jlim_penalty * violations)


@dataclass(frozen=True)
class CraneEnv:
    """Stateless transition function; episodes thread :class:`EnvState` values through it.

    Commands are clamped to the joint limits widened by ``limit_margin`` of
    each joint's range, then rate limited to ``max_step_delta`` per step
    (``None`` disables the rate limit).
    """

    chain: ChainParams = DEFAULT_CHAIN
    reward: RewardParams = RewardParams()
    limit_margin: float = 0.05
    max_step_delta: tuple[float, float, float, float] | None = (0.05, 0.05, 0.05, 0.02)

    def make_state(self, q, goal) -> EnvState:
        q = np.asarray(q, dtype=np.float64)
        return EnvState(q, forward_kinematics(q, self.chain), np.asarray(goal, dtype=np.float64))

    def reset(self, rng: np.random.Generator, goal=None) -> EnvState:
        q = sample_random_config(rng, self.chain)
        if goal is None:
            goal = forward_kinematics(sample_random_config(rng, self.chain), self.chain)
        return self.make_state(q, goal)

    def with_goal(self, state: EnvState, goal) -> EnvState:
        return EnvState(state.observation, state.achieved_goal, np.asarray(goal, dtype=np.float64))

    def command(self, current, action) -> np.ndarray:
        """Joint configuration actually reached when ``action`` is requested from ``current``."""
        lo, hi = self.chain.lo, self.chain.hi
        m = self.limit_margin * (hi - lo)
        q = np.clip(action, lo - m, hi + m)
        if self.max_step_delta is not None:
            delta = np.asarray(self.max_step_delta, dtype=np.float64)
            q = np.clip(q, current - delta, current + delta)
        return q

    def step(self, state: EnvState, action) -> StepResult:
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (ACTION_DIM,) or not np.all(np.isfinite(action)):
            raise ValueError(f"action must be 4 finite values, got {action}")
        q = self.command(state.observation, action)
        nxt = self.make_state(q, state.desired_goal)
        parts = compute_reward(action, nxt.achieved_goal, nxt.desired_goal, self.chain, self.reward)
        info = {"distance_to_goal": nxt.distance, "limit_violations": ~within_limits(action, self.chain)}
        return StepResult(nxt, parts.total, parts, info)

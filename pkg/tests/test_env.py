import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crane_rl.env import CraneEnv, RewardParams, compute_reward
from crane_rl.plant import DEFAULT_CHAIN, forward_kinematics, joint_vector

OK_Q = joint_vector(0.0, 0.5, -1.0, 0.1)


def test_reward_params_constants():
    r = RewardParams()
    assert (r.r_step, r.dist_bonus, r.jlim_penalty) == (0.001, 0.002, 0.0005)


def test_reward_at_goal():
    goal = np.array([1.0, 0.2, 0.7])
    parts = compute_reward(OK_Q, goal, goal)
    assert parts.total == pytest.approx(0.003, abs=1e-12)
    assert (parts.step, parts.dist, parts.jlim) == (0.001, 0.002, 0.0)


def test_reward_at_half_metre():
    parts = compute_reward(OK_Q, np.array([1.0, 0.0, 0.5]), np.array([1.0, 0.3, 0.9]))
    assert parts.total == pytest.approx(-0.497, abs=1e-12)


def test_reward_all_joints_violating():
    bad = joint_vector(2.5, -0.5, 0.0, 1.0)
    goal = np.zeros(3)
    parts = compute_reward(bad, goal, goal)
    assert parts.jlim == pytest.approx(-0.002, abs=1e-15)
    assert parts.total == pytest.approx(0.001, abs=1e-12)


def test_reward_limit_boundary_not_penalized():
    goal = np.zeros(3)
    assert compute_reward(DEFAULT_CHAIN.hi, goal, goal).jlim == 0.0
    assert compute_reward(DEFAULT_CHAIN.lo, goal, goal).jlim == 0.0


vec3 = st.tuples(*[st.floats(-3, 3)] * 3).map(np.array)


@settings(max_examples=100, deadline=None)
@given(vec3, vec3, vec3)
def test_reward_translation_invariant(a, d, shift):
    r0 = compute_reward(OK_Q, a, d).total
    r1 = compute_reward(OK_Q, a + shift, d + shift).total
    assert r1 == pytest.approx(r0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(vec3, vec3, st.tuples(*[st.floats(-4, 4)] * 4).map(np.array))
def test_reward_upper_bound(a, d, q):
    parts = compute_reward(q, a, d)
    assert parts.total <= 0.003 + 1e-15


def test_reset_reproducible_and_consistent():
    env = CraneEnv()
    s1 = env.reset(np.random.default_rng(4))
    s2 = env.reset(np.random.default_rng(4))
    np.testing.assert_array_equal(s1.vector(), s2.vector())
    np.testing.assert_array_equal(s1.achieved_goal, forward_kinematics(s1.observation))
    assert s1.vector().shape == (10,)


def test_reset_goals_inside_reach():
    env = CraneEnv()
    rng = np.random.default_rng(5)
    for _ in range(1000):
        g = env.reset(rng).desired_goal
        assert g[0] ** 2 + g[1] ** 2 <= DEFAULT_CHAIN.reach_radius ** 2


def test_reset_with_explicit_goal():
    goal = np.array([0.9, -0.1, 0.75])
    s = CraneEnv().reset(np.random.default_rng(0), goal=goal)
    np.testing.assert_array_equal(s.desired_goal, goal)


def test_no_motion_step():
    env = CraneEnv()
    s = env.reset(np.random.default_rng(1))
    res = env.step(s, s.observation)
    np.testing.assert_array_equal(res.next_state.achieved_goal, s.achieved_goal)
    assert res.reward == pytest.approx(0.001 + (-s.distance + 0.002), abs=1e-15)
    assert res.info["distance_to_goal"] == s.distance


def _grid_search(goal, n=9):
    """Brute-force nearest joint vector over a regular grid of the limit box."""
    axes = [np.linspace(lo, hi, n) for lo, hi in zip(DEFAULT_CHAIN.lower, DEFAULT_CHAIN.upper)]
    grid = np.array(list(itertools.product(*axes)))
    d = np.linalg.norm(forward_kinematics(grid) - goal, axis=1)
    return grid[np.argmin(d)], d.min()


def test_goal_reaching_action_earns_full_distance_bonus():
    lo, hi = DEFAULT_CHAIN.lower, DEFAULT_CHAIN.upper
    target_q = np.array([lo[k] + (hi[k] - lo[k]) * f for k, f in enumerate((0.25, 0.5, 0.375, 0.75))])
    goal = forward_kinematics(target_q)
    q_star, dmin = _grid_search(goal)
    assert dmin == 0.0
    env = CraneEnv(max_step_delta=None)
    s = env.reset(np.random.default_rng(2), goal=goal)
    res = env.step(s, q_star)
    assert res.components.dist == 0.002
    assert res.reward == pytest.approx(0.003, abs=1e-15)


def test_out_of_limit_action_penalized_and_clamped():
    env = CraneEnv()
    s = env.make_state(OK_Q, np.array([1.0, 0.0, 1.0]))
    action = OK_Q.copy()
    action[1] = 5.0
    res = env.step(s, action)
    assert res.components.jlim == -0.0005
    np.testing.assert_array_equal(res.info["limit_violations"], [False, True, False, False])
    # rate limit caps the move at 0.05 rad
    assert res.next_state.observation[1] == pytest.approx(0.55, abs=1e-15)


def test_margin_clamp_without_rate_limit():
    env = CraneEnv(max_step_delta=None)
    s = env.make_state(OK_Q, np.zeros(3))
    action = OK_Q.copy()
    action[1] = 5.0
    res = env.step(s, action)
    assert res.next_state.observation[1] == pytest.approx(1.2 + 0.05 * 1.2, abs=1e-15)


def test_step_rejects_non_finite():
    env = CraneEnv()
    s = env.reset(np.random.default_rng(0))
    with pytest.raises(ValueError):
        env.step(s, np.array([0.0, np.nan, 0.0, 0.0]))


def test_step_deterministic_and_oracle_consistent():
    env = CraneEnv()
    rng = np.random.default_rng(3)
    s = env.reset(rng)
    for _ in range(50):
        a = rng.uniform(-3, 3, size=4)
        r1, r2 = env.step(s, a), env.step(s, a)
        np.testing.assert_array_equal(r1.next_state.vector(), r2.next_state.vector())
        assert r1.reward == r2.reward
        np.testing.assert_array_equal(r1.next_state.achieved_goal,
                                      forward_kinematics(r1.next_state.observation))
        assert r1.reward == r1.components.total
        s = r1.next_state

"""Trajectory generation, closed-loop tracking and valve-command export."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .ddpg import ActionCodec
from .env import CraneEnv, EnvState
from .nn import MlpModel, mlp_forward
from .plant import ChainParams, DEFAULT_CHAIN


class TrajectoryError(ValueError):
    pass


@dataclass(frozen=True)
class TrajectorySpec:
    kind: str = "helix"
    center: tuple[float, float, float] = (0.9, 0.0, 0.8)
    radius: float = 0.25
    pitch: float = 0.15
    turns: float = 2.0
    n_points: int = 200

    def __post_init__(self):
        if self.kind not in ("circle", "helix"):
            raise TrajectoryError(f"unknown trajectory kind {self.kind!r}")
        if not self.radius > 0:
            raise TrajectoryError("radius must be positive")
        if self.n_points < 2:
            raise TrajectoryError("need at least 2 points")


DEFAULT_HELIX = TrajectorySpec()


def make_trajectory(spec: TrajectorySpec, chain: ChainParams = DEFAULT_CHAIN) -> np.ndarray:
    """Waypoints of shape ``(n_points, 3)``, first point at phase zero.

    Every waypoint must lie within the chain's reach sphere around the boom
    pivot, otherwise :class:`TrajectoryError` names the first offender.
    """
    phi = 2.0 * math.pi * spec.turns * np.arange(spec.n_points) / spec.n_points
    c = np.asarray(spec.center, dtype=np.float64)
    pts = np.column_stack([
        c[0] + spec.radius * np.cos(phi),
        c[1] + spec.radius * np.sin(phi),
        np.full_like(phi, c[2]),
    ])
    if spec.kind == "helix":
        pts[:, 2] += spec.pitch * phi / (2.0 * math.pi)
    pivot = np.array([0.0, 0.0, chain.h0])
    too_far = np.linalg.norm(pts - pivot, axis=1) > chain.reach_radius
    if np.any(too_far):
        k = int(np.argmax(too_far))
        raise TrajectoryError(f"waypoint {k} at {pts[k].tolist()} lies outside the workspace")
    return pts


@dataclass
class Metrics:
    rmse: np.ndarray
    max_abs_err: np.ndarray


def compute_metrics(target, achieved) -> Metrics:
    t = np.asarray(target, dtype=np.float64)
    a = np.asarray(achieved, dtype=np.float64)
    if t.shape != a.shape:
        raise ValueError(f"series shapes differ: {t.shape} vs {a.shape}")
    e = t - a
    return Metrics(np.sqrt(np.mean(e ** 2, axis=0)), np.max(np.abs(e), axis=0))


@dataclass
class TrackingReport:
    targets: np.ndarray
    achieved: np.ndarray
    errors: np.ndarray
    rmse: np.ndarray
    max_abs_err: np.ndarray
    joints: np.ndarray

    def summary_lines(self) -> list[str]:
        fmt = lambda v: " ".join(format(float(x), ".17g") for x in v)
        return ["units m", "axes x y z", f"rmse {fmt(self.rmse)}", f"max_abs_err {fmt(self.max_abs_err)}"]

    def write(self, csv_path, summary_path=None) -> None:
        rows = ["idx,tx,ty,tz,ax,ay,az,ex,ey,ez"]
        for i, (t, a, e) in enumerate(zip(self.targets, self.achieved, self.errors)):
            rows.append(",".join([str(i)] + [format(float(v), ".17g") for v in (*t, *a, *e)]))
        Path(csv_path).write_text("\n".join(rows) + "\n")
        if summary_path is not None:
            Path(summary_path).write_text("\n".join(self.summary_lines()) + "\n")


Policy = Callable[[np.ndarray], np.ndarray]


def as_policy(actor: MlpModel | Policy) -> Policy:
    if isinstance(actor, MlpModel):
        return lambda s: mlp_forward(actor, s)
    return actor


def track(actor: MlpModel | Policy, env: CraneEnv, waypoints, start: EnvState | None = None,
          rng: np.random.Generator | None = None, steps_per_waypoint: int = 10,
          settle_steps: int = 200) -> TrackingReport:
    """Follow ``waypoints`` with the noise-free policy, no candidate feedback.

    The run starts from ``start`` (or a reset drawn from ``rng``) with the
    first waypoint as goal and gets ``settle_steps`` to converge before the
    first waypoint is scored.  Each waypoint is then held for
    ``steps_per_waypoint`` steps and the final achieved position recorded.
    """
    policy = as_policy(actor)
    codec = ActionCodec.for_chain(env.chain)
    wp = np.asarray(waypoints, dtype=np.float64)
    if start is None:
        start = env.reset(np.random.default_rng(0) if rng is None else rng, goal=wp[0])
    state = env.with_goal(start, wp[0])
    for _ in range(settle_steps):
        state = env.step(state, codec.decode(policy(state.vector()))).next_state
    achieved, joints = [], []
    for target in wp:
        state = env.with_goal(state, target)
        for _ in range(steps_per_waypoint):
            state = env.step(state, codec.decode(policy(state.vector()))).next_state
        achieved.append(state.achieved_goal)
        joints.append(state.observation)
    achieved = np.array(achieved)
    m = compute_metrics(wp, achieved)
    return TrackingReport(wp, achieved, wp - achieved, m.rmse, m.max_abs_err, np.array(joints))


@dataclass
class ValveCommands:
    j1: np.ndarray
    cyl2_len: np.ndarray
    cyl3_len: np.ndarray
    d4: np.ndarray
    out_of_range: np.ndarray

    def write(self, path) -> None:
        rows = ["step,j1,cyl2_len,cyl3_len,d4,out_of_range"]
        for i in range(len(self.j1)):
            vals = (self.j1[i], self.cyl2_len[i], self.cyl3_len[i], self.d4[i])
            rows.append(",".join([str(i)] + [format(float(v), ".17g") for v in vals] + [str(int(self.out_of_range[i]))]))
        Path(path).write_text("\n".join(rows) + "\n")


def export_valve_commands(joint_trajectory, actuator_net2: MlpModel, actuator_net3: MlpModel,
                          chain: ChainParams = DEFAULT_CHAIN) -> ValveCommands:
    """Convert joint set-points into cylinder lengths via the actuator networks.

    Slew and telescope pass through.  Rows whose boom or arm angle lies
    outside the joint limits the networks were trained over are flagged but
    still converted.
    """
    q = np.atleast_2d(np.asarray(joint_trajectory, dtype=np.float64))
    lo, hi = chain.lo, chain.hi
    flagged = np.any((q[:, 1:3] < lo[1:3]) | (q[:, 1:3] > hi[1:3]), axis=1)
    return ValveCommands(
        q[:, 0].copy(),
        mlp_forward(actuator_net2, q[:, 1:2])[:, 0],
        mlp_forward(actuator_net3, q[:, 2:3])[:, 0],
        q[:, 3].copy(),
        flagged,
    )

"""Flat ``key = value`` configuration with dotted namespaces, plus seed splitting.

Example::

    # desk-scale run
    ddpg.episodes = 200
    ddpg.gamma = 0.99
    env.max_step_delta = 0.05, 0.05, 0.05, 0.02

Unknown keys are rejected.  Values not present keep their defaults.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from .datasets import NoiseModel
from .ddpg import DdpgConfig
from .env import CraneEnv, RewardParams
from .evaluation import TrajectorySpec
from .plant import ChainParams, CylinderGeometry
from .surrogate import ACTUATOR_SETTINGS, FORWARD_SETTINGS, TrainSettings

ENV_VAR = "CRANE_RL_CONFIG"
PRESETS = ("desk", "paper")


class ConfigError(ValueError):
    def __init__(self, msg: str, key: str | None = None):
        super().__init__(msg)
        self.key = key


def _floats(n=None):
    def parse(s: str):
        vals = tuple(float(v) for v in s.split(","))
        if n is not None and len(vals) != n:
            raise ValueError(f"expected {n} comma-separated numbers")
        return vals
    return parse


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _ints(s: str):
    return tuple(int(v) for v in s.split(","))


def _delta(s: str):
    return None if s.strip().lower() in ("none", "off") else _floats(4)(s)


_D = DdpgConfig()
_C = ChainParams()
_N = NoiseModel()
_R = RewardParams()
_E = CraneEnv()
_T = TrajectorySpec()

# key -> (default, parser)
SCHEMA: dict[str, tuple[object, object]] = {
    "plant.h0": (_C.h0, float),
    "plant.L2": (_C.L2, float),
    "plant.L3": (_C.L3, float),
    "plant.d4max": (_C.d4max, float),
    "plant.lower": (_C.lower, _floats(4)),
    "plant.upper": (_C.upper, _floats(4)),
    "cyl2.a": (0.30, float),
    "cyl2.b": (0.35, float),
    "cyl2.sign": (1, int),
    "cyl3.a": (0.25, float),
    "cyl3.b": (0.30, float),
    "cyl3.sign": (-1, int),
    "cyl.margin": (0.05, float),
    "noise.sigma_cyl": (_N.sigma_cyl, float),
    "noise.sigma_angle": (_N.sigma_angle, float),
    "noise.sigma_pos": (_N.sigma_pos, float),
    "data.n_sweeps": (4, int),
    "data.fk_samples": (500, int),
    "actuator.epochs": (ACTUATOR_SETTINGS.epochs, int),
    "actuator.batch_size": (ACTUATOR_SETTINGS.batch_size, int),
    "actuator.learning_rate": (ACTUATOR_SETTINGS.learning_rate, float),
    "actuator.max_rmse": (0.002, float),
    "forward.epochs": (FORWARD_SETTINGS.epochs, int),
    "forward.batch_size": (FORWARD_SETTINGS.batch_size, int),
    "forward.learning_rate": (FORWARD_SETTINGS.learning_rate, float),
    "forward.cosine_decay": (FORWARD_SETTINGS.cosine_decay, _bool),
    "forward.max_abs_err": (0.03, float),
    "env.limit_margin": (_E.limit_margin, float),
    "env.max_step_delta": (_E.max_step_delta, _delta),
    "reward.r_step": (_R.r_step, float),
    "reward.dist_bonus": (_R.dist_bonus, float),
    "reward.jlim_penalty": (_R.jlim_penalty, float),
    "ddpg.episodes": (200, int),
    "ddpg.steps": (200, int),
    "ddpg.buffer_size": (100_000, int),
    "ddpg.batch_size": (256, int),
    "ddpg.gamma": (_D.gamma, float),
    "ddpg.tau": (_D.tau, float),
    "ddpg.actor_lr": (_D.actor_lr, float),
    "ddpg.critic_lr": (_D.critic_lr, float),
    "ddpg.ou_sigma": (_D.ou_sigma, float),
    "ddpg.ou_theta": (_D.ou_theta, float),
    "ddpg.n_candidates": (_D.n_candidates, int),
    "ddpg.actor_hidden": ((64, 64), _ints),
    "ddpg.critic_hidden": ((64, 64), _ints),
    "ddpg.checkpoint_every": (50, int),
    "track.kind": (_T.kind, str),
    "track.center": (_T.center, _floats(3)),
    "track.radius": (_T.radius, float),
    "track.pitch": (_T.pitch, float),
    "track.turns": (_T.turns, float),
    "track.n_points": (_T.n_points, int),
    "track.steps_per_waypoint": (10, int),
    "track.settle_steps": (200, int),
}


class Config(dict):
    """Resolved settings keyed by dotted name."""

    def chain(self) -> ChainParams:
        return ChainParams(self["plant.h0"], self["plant.L2"], self["plant.L3"], self["plant.d4max"],
                           tuple(self["plant.lower"]), tuple(self["plant.upper"]))

    def geometry(self, joint: int) -> CylinderGeometry:
        c = self.chain()
        k = f"cyl{joint}"
        return CylinderGeometry.covering(self[f"{k}.a"], self[f"{k}.b"], self[f"{k}.sign"],
                                         c.lower[joint - 1], c.upper[joint - 1], self["cyl.margin"], name=k)

    def noise(self) -> NoiseModel:
        return NoiseModel(self["noise.sigma_cyl"], self["noise.sigma_angle"], self["noise.sigma_pos"])

    def actuator_settings(self) -> TrainSettings:
        return replace(ACTUATOR_SETTINGS, epochs=self["actuator.epochs"], batch_size=self["actuator.batch_size"],
                       learning_rate=self["actuator.learning_rate"])

    def forward_settings(self) -> TrainSettings:
        return replace(FORWARD_SETTINGS, epochs=self["forward.epochs"], batch_size=self["forward.batch_size"],
                       learning_rate=self["forward.learning_rate"], cosine_decay=self["forward.cosine_decay"])

    def env(self) -> CraneEnv:
        reward = RewardParams(self["reward.r_step"], self["reward.dist_bonus"], self["reward.jlim_penalty"])
        return CraneEnv(self.chain(), reward, self["env.limit_margin"], self["env.max_step_delta"])

    def ddpg(self, feedback: bool = True) -> DdpgConfig:
        return DdpgConfig(
            episodes=self["ddpg.episodes"], steps=self["ddpg.steps"], buffer_size=self["ddpg.buffer_size"],
            batch_size=self["ddpg.batch_size"], gamma=self["ddpg.gamma"], tau=self["ddpg.tau"],
            actor_lr=self["ddpg.actor_lr"], critic_lr=self["ddpg.critic_lr"], ou_sigma=self["ddpg.ou_sigma"],
            ou_theta=self["ddpg.ou_theta"], n_candidates=self["ddpg.n_candidates"], feedback=feedback,
            actor_hidden=tuple(self["ddpg.actor_hidden"]), critic_hidden=tuple(self["ddpg.critic_hidden"]),
            checkpoint_every=self["ddpg.checkpoint_every"],
        )

    def trajectory(self) -> TrajectorySpec:
        return TrajectorySpec(self["track.kind"], tuple(self["track.center"]), self["track.radius"],
                              self["track.pitch"], self["track.turns"], self["track.n_points"])

    def digest(self, prefixes: tuple[str, ...] = ()) -> str:
        """Short hash of the settings under the given namespaces (all when empty)."""
        keys = sorted(k for k in self if not prefixes or k.split(".")[0] in prefixes)
        text = "\n".join(f"{k}={self[k]!r}" for k in keys)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def defaults() -> Config:
    return Config({k: v for k, (v, _) in SCHEMA.items()})


def parse_config(text: str, source: str = "<config>") -> Config:
    cfg = defaults()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown config key '{key}'", key)
        try:
            cfg[key] = SCHEMA[key][1](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for '{key}': {exc}", key) from None
    return cfg


def preset_text(name: str) -> str:
    return resources.files("crane_rl").joinpath("presets", f"{name}.cfg").read_text()


def load_config(path: str | os.PathLike | None = None) -> Config:
    """Read a config file, a preset name, ``$CRANE_RL_CONFIG``, or fall back to defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path is None:
        return defaults()
    if str(path) in PRESETS:
        return parse_config(preset_text(str(path)), f"preset:{path}")
    p = Path(path)
    return parse_config(p.read_text(), str(p))


def child_seed(root: int, name: str) -> int:
    """Deterministic per-component seed: first 8 bytes of sha256("root:name")."""
    digest = hashlib.sha256(f"{int(root)}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def child_rng(root: int, name: str) -> np.random.Generator:
    return np.random.default_rng(child_seed(root, name))

"""Synthetic stand-ins for the two data campaigns, plus their CSV formats.

* actuator logs: cylinder sweeps at varying speeds with the joint angle
  measured by an external sensor (one log per cylinder-driven joint)
* forward-kinematics datasets: random joint configurations with the
  end-effector position measured by motion capture

Samples are held column-wise in numpy arrays.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .plant import (
    DEFAULT_CHAIN,
    ChainParams,
    CylinderGeometry,
    cylinder_to_joint,
    forward_kinematics,
    sample_random_config,
)

SAMPLE_RATE_HZ = 100.0
SWEEP_SPEED_RANGE = (0.01, 0.10)

ACTUATOR_HEADER = ("t", "cyl_len", "joint_angle", "cyl_vel")
FK_HEADER = ("j1", "j2", "j3", "d4", "x", "y", "z")


class CsvParseError(ValueError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


@dataclass(frozen=True)
class NoiseModel:
    sigma_cyl: float = 2e-7
    sigma_angle: float = 0.004
    sigma_pos: float = 0.002

    def __post_init__(self):
        for name in ("sigma_cyl", "sigma_angle", "sigma_pos"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")


ZERO_NOISE = NoiseModel(0.0, 0.0, 0.0)


@dataclass
class ActuatorLog:
    t: np.ndarray
    cyl_len: np.ndarray
    joint_angle: np.ndarray
    cyl_vel: np.ndarray

    def __len__(self):
        return len(self.t)

    def columns(self) -> np.ndarray:
        return np.column_stack([self.t, self.cyl_len, self.joint_angle, self.cyl_vel])

    def subset(self, idx) -> "ActuatorLog":
        return ActuatorLog(self.t[idx], self.cyl_len[idx], self.joint_angle[idx], self.cyl_vel[idx])


@dataclass
class FkDataset:
    q: np.ndarray
    ee: np.ndarray

    def __len__(self):
        return len(self.q)

    def columns(self) -> np.ndarray:
        return np.column_stack([self.q, self.ee])

    def subset(self, idx) -> "FkDataset":
        return FkDataset(self.q[idx], self.ee[idx])


def generate_actuator_log(g: CylinderGeometry, n_sweeps: int, noise: NoiseModel = NoiseModel(),
                          rng: np.random.Generator | None = None) -> ActuatorLog:
    """Alternating extend/retract full-stroke sweeps sampled at 100 Hz.

    Each sweep runs at its own constant speed drawn from ``SWEEP_SPEED_RANGE``.
    """
    if n_sweeps < 1:
        raise ValueError("n_sweeps must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    dt = 1.0 / SAMPLE_RATE_HZ
    stroke = g.l_max - g.l_min
    t_parts, l_parts, v_parts = [], [], []
    t0 = 0.0
    for k in range(n_sweeps):
        speed = rng.uniform(*SWEEP_SPEED_RANGE)
        n = int(np.ceil(stroke / (speed * dt)))
        travel = np.minimum(speed * dt * np.arange(n + 1 if k == n_sweeps - 1 else n), stroke)
        extending = k % 2 == 0
        l_parts.append(g.l_min + travel if extending else g.l_max - travel)
        v_parts.append(np.full(len(travel), speed if extending else -speed))
        t_parts.append(t0 + dt * np.arange(len(travel)))
        t0 += dt * len(travel)
    true_len = np.concatenate(l_parts)
    angle = cylinder_to_joint(true_len, g) + rng.normal(0.0, noise.sigma_angle, true_len.shape)
    measured = np.clip(true_len + rng.normal(0.0, noise.sigma_cyl, true_len.shape), g.l_min, g.l_max)
    return ActuatorLog(np.concatenate(t_parts), measured, angle, np.concatenate(v_parts))


def generate_fk_dataset(p: ChainParams = DEFAULT_CHAIN, n: int = 500, noise: NoiseModel = NoiseModel(),
                        rng: np.random.Generator | None = None) -> FkDataset:
    """``n`` random configurations with noisy end-effector measurements."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    q = sample_random_config(rng, p, size=n)
    ee = forward_kinematics(q, p) + rng.normal(0.0, noise.sigma_pos, (n, 3))
    return FkDataset(q, ee)


def _write_rows(path, header, rows: np.ndarray) -> None:
    lines = [",".join(header)]
    lines += [",".join(format(float(v), ".17g") for v in row) for row in rows]
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_rows(path, header) -> np.ndarray:
    rows = []
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or tuple(first) != header:
            raise CsvParseError(path, 1, f"expected header {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise CsvParseError(path, lineno, f"expected {len(header)} columns, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise CsvParseError(path, lineno, str(exc)) from None
    return np.array(rows, dtype=np.float64).reshape(-1, len(header))


def write_actuator_csv(log: ActuatorLog, path) -> None:
    _write_rows(path, ACTUATOR_HEADER, log.columns())


def read_actuator_csv(path) -> ActuatorLog:
    a = _read_rows(path, ACTUATOR_HEADER)
    return ActuatorLog(a[:, 0].copy(), a[:, 1].copy(), a[:, 2].copy(), a[:, 3].copy())


def write_fk_csv(data: FkDataset, path) -> None:
    _write_rows(path, FK_HEADER, data.columns())


def read_fk_csv(path) -> FkDataset:
    a = _read_rows(path, FK_HEADER)
    return FkDataset(a[:, :4].copy(), a[:, 4:].copy())


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p

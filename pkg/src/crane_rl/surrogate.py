"""Supervised surrogates: two actuator networks and the forward network.

Actuator networks map joint angle to cylinder length (the direction the
controller needs to turn joint commands into valve set-points).  The
forward network maps the 4 joint variables to the end-effector position.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .datasets import ActuatorLog, FkDataset
from .nn import AdamState, MlpModel, fit, mlp_forward, mlp_init
from .plant import CylinderGeometry, forward_kinematics, joint_to_cylinder

ACTUATOR_LAYERS = {2: [1, 256, 128, 128, 1], 3: [1, 128, 128, 1]}
FORWARD_LAYERS = [4, 256, 128, 3]
MIN_FK_SAMPLES = 100


@dataclass(frozen=True)
class TrainSettings:
    epochs: int = 500
    batch_size: int = 64
    learning_rate: float = 1e-4
    cosine_decay: bool = False
    holdout_fraction: float = 0.2


ACTUATOR_SETTINGS = TrainSettings()
# Tuned for held-out accuracy on 400 training points.
FORWARD_SETTINGS = TrainSettings(epochs=2000, batch_size=32, learning_rate=1e-3, cosine_decay=True)


@dataclass
class ValidationReport:
    rmse: np.ndarray
    max_abs_err: np.ndarray
    residuals: np.ndarray
    targets: np.ndarray
    predictions: np.ndarray
    oracle_rmse: np.ndarray | None = None
    oracle_max_abs_err: np.ndarray | None = None

    def summary_lines(self) -> list[str]:
        fmt = lambda v: " ".join(format(float(x), ".17g") for x in v)
        lines = [f"n_samples {len(self.targets)}", f"rmse {fmt(self.rmse)}",
                 f"max_abs_err {fmt(self.max_abs_err)}"]
        if self.oracle_rmse is not None:
            lines += [f"oracle_rmse {fmt(self.oracle_rmse)}",
                      f"oracle_max_abs_err {fmt(self.oracle_max_abs_err)}"]
        return lines


@dataclass
class TrainedSurrogate:
    model: MlpModel
    report: ValidationReport
    history: list[float]
    train_idx: np.ndarray
    holdout_idx: np.ndarray


def split_indices(n: int, rng: np.random.Generator, holdout_fraction: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    order = rng.permutation(n)
    n_hold = max(1, int(round(holdout_fraction * n)))
    return np.sort(order[n_hold:]), np.sort(order[:n_hold])


def validate(model, inputs, labels, oracle: Callable[[np.ndarray], np.ndarray] | None = None) -> ValidationReport:
    """Error metrics of ``model`` on a labelled set.

    ``model`` is an :class:`MlpModel` or any callable on a batch.  With an
    ``oracle`` the predictions are also scored against the noise-free truth.
    """
    x = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if len(x) == 0:
        raise ValueError("empty validation set")
    x2 = x[:, None] if x.ndim == 1 else x
    y2 = y[:, None] if y.ndim == 1 else y
    pred = mlp_forward(model, x2) if isinstance(model, MlpModel) else np.asarray(model(x2), dtype=np.float64)
    pred = pred.reshape(y2.shape)
    resid = pred - y2
    report = ValidationReport(
        rmse=np.sqrt(np.mean(resid ** 2, axis=0)),
        max_abs_err=np.max(np.abs(resid), axis=0),
        residuals=resid,
        targets=y2,
        predictions=pred,
    )
    if oracle is not None:
        truth = np.asarray(oracle(x2), dtype=np.float64).reshape(y2.shape)
        report.oracle_rmse = np.sqrt(np.mean((pred - truth) ** 2, axis=0))
        report.oracle_max_abs_err = np.max(np.abs(pred - truth), axis=0)
    return report


def _train(layers, x, y, rng, settings: TrainSettings, oracle=None) -> TrainedSurrogate:
    train_idx, hold_idx = split_indices(len(x), rng, settings.holdout_fraction)
    model = mlp_init(layers, "identity", rng)
    state = AdamState.for_model(model, settings.learning_rate)
    trained, history = fit(model, x[train_idx], y[train_idx], settings.epochs, settings.batch_size,
                           state, rng, standardize=True, cosine_decay=settings.cosine_decay)
    report = validate(trained, x[hold_idx], y[hold_idx], oracle)
    return TrainedSurrogate(trained, report, history, train_idx, hold_idx)


def train_actuator_net(log: ActuatorLog, joint: int, rng: np.random.Generator,
                       settings: TrainSettings = ACTUATOR_SETTINGS,
                       geometry: CylinderGeometry | None = None) -> TrainedSurrogate:
    """Joint angle -> cylinder length regression for joint 2 or 3."""
    if joint not in ACTUATOR_LAYERS:
        raise ValueError(f"actuator networks exist for joints 2 and 3, not {joint}")
    if len(log) == 0:
        raise ValueError("empty actuator log")
    oracle = None
    if geometry is not None:
        lo, hi = geometry.joint_range()
        oracle = lambda th: joint_to_cylinder(np.clip(th, lo, hi), geometry)
    return _train(ACTUATOR_LAYERS[joint], log.joint_angle[:, None], log.cyl_len[:, None], rng, settings, oracle)


def train_actuator_net2(log: ActuatorLog, rng: np.random.Generator, **kw) -> TrainedSurrogate:
    return train_actuator_net(log, 2, rng, **kw)


def train_actuator_net3(log: ActuatorLog, rng: np.random.Generator, **kw) -> TrainedSurrogate:
    return train_actuator_net(log, 3, rng, **kw)


def train_forward_net(data: FkDataset, rng: np.random.Generator,
                      settings: TrainSettings = FORWARD_SETTINGS, chain=None) -> TrainedSurrogate:
    """Joint vector -> end-effector position regression."""
    if len(data) < MIN_FK_SAMPLES:
        raise ValueError(f"forward network needs at least {MIN_FK_SAMPLES} samples, got {len(data)}")
    oracle = None if chain is None else (lambda q: forward_kinematics(q, chain))
    return _train(FORWARD_LAYERS, data.q, data.ee, rng, settings, oracle)


def monotone_on_grid(model: MlpModel, lo: float, hi: float, increasing: bool, n: int = 500) -> bool:
    """True if predictions on an ``n``-point grid over [lo, hi] never step backwards."""
    grid = np.linspace(lo, hi, n)[:, None]
    d = np.diff(mlp_forward(model, grid)[:, 0])
    return bool(np.all(d > 0) if increasing else np.all(d < 0))


def write_report(report: ValidationReport, path, axis_names: tuple[str, ...] | None = None) -> list[Path]:
    """Residual CSV(s) plus a summary file next to ``path``.

    Multi-output reports get one CSV per output, suffixed with the axis name.
    """
    path = Path(path)
    k = report.targets.shape[1]
    names = axis_names or tuple(str(i) for i in range(k))
    written = []
    for j in range(k):
        out = path if k == 1 else path.with_name(f"{path.stem}_{names[j]}{path.suffix}")
        rows = ["sample_idx,target,prediction,abs_err"]
        for i in range(len(report.targets)):
            t, p = report.targets[i, j], report.predictions[i, j]
            rows.append(f"{i},{t:.17g},{p:.17g},{abs(p - t):.17g}")
        out.write_text("\n".join(rows) + "\n")
        written.append(out)
    summary = path.with_name(path.stem + "_summary.txt")
    summary.write_text("\n".join(report.summary_lines()) + "\n")
    written.append(summary)
    return written

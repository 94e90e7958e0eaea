"""Analytic ground-truth crane: kinematic chain plus hydraulic cylinder geometry.

Joint vectors are float64 arrays ``[j1, j2, j3, d4]``:

* ``j1`` base slew (rad)
* ``j2`` boom pitch (rad)
* ``j3`` arm pitch relative to the boom (rad)
* ``d4`` telescope extension (m)

All functions broadcast over leading dimensions, so a batch of shape
``(n, 4)`` maps to end-effector positions of shape ``(n, 3)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

JOINT_NAMES = ("j1", "j2", "j3", "d4")


class DomainError(ValueError):
    """Input outside the domain of a plant map (non-finite or out of range)."""


class StrokeRangeError(ValueError):
    """Cylinder length outside the physical stroke."""


class GeometryError(ValueError):
    """Inconsistent chain or cylinder parameters."""


# Slack for endpoint round-off in the cylinder maps.
_RANGE_TOL = 1e-12


def joint_vector(j1: float, j2: float, j3: float, d4: float) -> np.ndarray:
    return np.array([j1, j2, j3, d4], dtype=np.float64)


@dataclass(frozen=True)
class ChainParams:
    h0: float = 0.5
    L2: float = 0.8
    L3: float = 0.6
    d4max: float = 0.4
    lower: tuple[float, float, float, float] = (-2.0, 0.0, -2.2, 0.0)
    upper: tuple[float, float, float, float] = (2.0, 1.2, -0.3, 0.4)

    def __post_init__(self):
        for name in ("h0", "L2", "L3", "d4max"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise GeometryError(f"{name} must be finite, got {v}")
        if self.L2 <= 0 or self.L3 <= 0 or self.d4max <= 0:
            raise GeometryError("link lengths and d4max must be positive")
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        if lo.shape != (4,) or hi.shape != (4,):
            raise GeometryError("joint limits need exactly 4 entries")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)) or np.any(lo >= hi):
            raise GeometryError(f"bad joint limits {self.lower} / {self.upper}")

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.lower, dtype=np.float64)

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.upper, dtype=np.float64)

    @property
    def reach_radius(self) -> float:
        """Upper bound on the horizontal distance of any reachable point."""
        return self.L2 + self.L3 + self.d4max


def _check_finite(x: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{what} must be finite, got {x}")


def forward_kinematics(q, p: ChainParams = ChainParams()) -> np.ndarray:
    """End-effector position for joint vector(s) ``q``.

    Total on finite input; joint limits are not enforced here.
    """
    q = np.asarray(q, dtype=np.float64)
    if q.shape[-1] != 4:
        raise DomainError(f"joint vector needs 4 components, got shape {q.shape}")
    _check_finite(q, "joint vector")
    j1, j2, j3, d4 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    outer = p.L3 + d4
    r = p.L2 * np.cos(j2) + outer * np.cos(j2 + j3)
    z = p.h0 + p.L2 * np.sin(j2) + outer * np.sin(j2 + j3)
    return np.stack([r * np.cos(j1), r * np.sin(j1), z], axis=-1)


def within_limits(q, p: ChainParams = ChainParams()) -> np.ndarray:
    """Per-joint verdicts on closed limit intervals (boundary counts as inside)."""
    q = np.asarray(q, dtype=np.float64)
    _check_finite(q, "joint vector")
    return (q >= p.lo) & (q <= p.hi)


def sample_random_config(rng: np.random.Generator, p: ChainParams = ChainParams(), size=None) -> np.ndarray:
    """Uniform draw over the joint-limit box; ``size`` adds leading batch dims."""
    shape = (4,) if size is None else (*np.atleast_1d(size), 4)
    return rng.uniform(p.lo, p.hi, size=shape)


@dataclass(frozen=True)
class CylinderGeometry:
    """Pivot triangle relating cylinder length to joint angle.

    The cylinder spans the base anchor (``b`` from the pivot) and the rod
    anchor (``a`` from the pivot); the law of cosines gives the included
    angle, which ``offset`` and ``sign`` map into joint coordinates.
    """

    a: float
    b: float
    offset: float
    sign: int
    l_min: float
    l_max: float
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise GeometryError(f"sign must be +1 or -1, got {self.sign}")
        if self.a <= 0 or self.b <= 0:
            raise GeometryError("anchor distances must be positive")
        if not (abs(self.a - self.b) < self.l_min <= self.l_max < self.a + self.b):
            raise GeometryError(
                f"stroke [{self.l_min}, {self.l_max}] violates the triangle inequality "
                f"for a={self.a}, b={self.b}"
            )

    @classmethod
    def covering(cls, a: float, b: float, sign: int, lo: float, hi: float,
                 margin: float = 0.05, name: str = "") -> "CylinderGeometry":
        """Geometry whose induced joint range is ``[lo, hi]`` widened by ``margin`` of its width.

        The included angle is centred on pi/2 so the right-triangle length
        sqrt(a^2 + b^2) sits mid-stroke.
        """
        m = margin * (hi - lo)
        half = 0.5 * (hi - lo + 2 * m)
        phi_min, phi_max = math.pi / 2 - half, math.pi / 2 + half
        if phi_min <= 0 or phi_max >= math.pi:
            raise GeometryError(f"joint range {hi - lo} too wide for a single pivot triangle")
        offset = (lo - m) - phi_min if sign == 1 else (hi + m) + phi_min

        def length(phi):
            return math.sqrt(a * a + b * b - 2 * a * b * math.cos(phi))

        return cls(a=a, b=b, offset=offset, sign=sign,
                   l_min=length(phi_min), l_max=length(phi_max), name=name)

    def joint_range(self) -> tuple[float, float]:
        """Induced joint interval ``(low, high)`` over the full stroke."""
        t0 = cylinder_to_joint(self.l_min, self)
        t1 = cylinder_to_joint(self.l_max, self)
        return (min(t0, t1), max(t0, t1))

    @property
    def right_angle_length(self) -> float:
        return math.hypot(self.a, self.b)

    @property
    def right_angle_joint(self) -> float:
        return self.offset + self.sign * math.pi / 2


def cylinder_to_joint(length, g: CylinderGeometry):
    """Joint angle for cylinder length(s); strictly monotone over the stroke."""
    l = np.asarray(length, dtype=np.float64)
    _check_finite(l, "cylinder length")
    if np.any(l < g.l_min - _RANGE_TOL) or np.any(l > g.l_max + _RANGE_TOL):
        raise StrokeRangeError(f"cylinder length outside stroke [{g.l_min}, {g.l_max}]")
    cos_phi = (g.a * g.a + g.b * g.b - l * l) / (2 * g.a * g.b)
    theta = g.offset + g.sign * np.arccos(np.clip(cos_phi, -1.0, 1.0))
    return float(theta) if theta.ndim == 0 else theta


def joint_to_cylinder(theta, g: CylinderGeometry):
    """Inverse of :func:`cylinder_to_joint`."""
    t = np.asarray(theta, dtype=np.float64)
    _check_finite(t, "joint angle")
    lo, hi = g.joint_range()
    if np.any(t < lo - _RANGE_TOL) or np.any(t > hi + _RANGE_TOL):
        raise DomainError(f"joint angle outside induced range [{lo}, {hi}]")
    phi = g.sign * (t - g.offset)
    l = np.sqrt(g.a * g.a + g.b * g.b - 2 * g.a * g.b * np.cos(phi))
    return float(l) if l.ndim == 0 else l


DEFAULT_CHAIN = ChainParams()


def default_geometry(joint: int, p: ChainParams = DEFAULT_CHAIN) -> CylinderGeometry:
    """Canonical cylinder for joint 2 or 3, covering its limits with a 5% margin."""
    if joint == 2:
        return CylinderGeometry.covering(0.30, 0.35, +1, p.lower[1], p.upper[1], name="cyl2")
    if joint == 3:
        return CylinderGeometry.covering(0.25, 0.30, -1, p.lower[2], p.upper[2], name="cyl3")
    raise ValueError(f"only joints 2 and 3 are cylinder driven, got {joint}")

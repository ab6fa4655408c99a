"""Angles, poses and bearings.

World frame is z-up. Yaw is measured counterclockwise from +x and always lives
in (-pi, pi]. Relative bearings use the opposite handedness: positive means the
target is on the agent's right.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Map ``a`` into (-pi, pi]."""
    if not math.isfinite(a):
        raise ValueError(f"cannot wrap non-finite angle {a!r}")
    # IEEE remainder is exact, so already-wrapped inputs come back unchanged.
    r = math.remainder(a, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    z: float
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    @property
    def position(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "z": self.z, "yaw": self.yaw}

    @classmethod
    def from_dict(cls, d: dict) -> "Pose":
        return cls(d["x"], d["y"], d["z"], d["yaw"])


def relative_bearing(pose: Pose, target_xy: Sequence[float]) -> float:
    """Bearing of ``target_xy`` seen from ``pose``; positive to the right.

    Raises ValueError when the target sits exactly above/below the pose.
    """
    dx = target_xy[0] - pose.x
    dy = target_xy[1] - pose.y
    if dx == 0.0 and dy == 0.0:
        raise ValueError("bearing undefined at zero horizontal separation")
    return wrap_angle(-(math.atan2(dy, dx) - pose.yaw))


def horizontal_distance(pose: Pose, target: Sequence[float]) -> float:
    return math.hypot(target[0] - pose.x, target[1] - pose.y)


def distance3(a: Sequence[float], b: Sequence[float]) -> float:
    return math.dist(a[:3], b[:3])

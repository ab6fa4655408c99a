"""Numerical action tokens, intrinsic landing, and velocity-duration commands.

Each action dimension is discretized onto an endpoint-inclusive grid of 99
levels, so 0, +-5 m and +-pi decode exactly. Token triples map to plain integer
text ("61 49 37"); a landing decision is the literal ``LAND``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .geometry import Pose, wrap_angle

N_BINS = 99
MAX_TOKEN = N_BINS - 1
CRUISE_SPEED = 1.0  # m/s

DX_RANGE = (0.0, 5.0)
DZ_RANGE = (-5.0, 5.0)
DPSI_RANGE = (-math.pi, math.pi)
RANGES = (DX_RANGE, DZ_RANGE, DPSI_RANGE)
DIM_NAMES = ("dx", "dz", "dpsi")

# one grid step per dimension; "near-zero" means within one bin of zero
BIN_WIDTHS = tuple((hi - lo) / MAX_TOKEN for lo, hi in RANGES)

LAND_TEXT = "LAND"


@dataclass(frozen=True)
class Action:
    """Forward, vertical (meters) and yaw-change (radians) offsets."""

    dx: float
    dz: float
    dpsi: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.dx, self.dz, self.dpsi)

    def in_range(self) -> bool:
        return all(lo <= v <= hi for v, (lo, hi) in zip(self.as_tuple(), RANGES))

    def check(self) -> "Action":
        for name, v, (lo, hi) in zip(DIM_NAMES, self.as_tuple(), RANGES):
            if not (lo <= v <= hi):
                raise ValueError(f"{name}={v!r} outside [{lo}, {hi}]")
        return self

    def to_dict(self) -> dict:
        return {"dx": self.dx, "dz": self.dz, "dpsi": self.dpsi}

    @classmethod
    def from_dict(cls, d: dict) -> "Action":
        return cls(d["dx"], d["dz"], d["dpsi"])


ZERO_ACTION = Action(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ActionTokens:
    """Either the LAND token or a triple of integers in 0..98."""

    triple: Optional[tuple[int, int, int]] = None

    def __post_init__(self):
        if self.triple is None:
            return
        t = tuple(self.triple)
        if len(t) != 3:
            raise ValueError(f"expected 3 tokens, got {len(t)}")
        for c in t:
            if isinstance(c, bool) or int(c) != c or not 0 <= c <= MAX_TOKEN:
                raise ValueError(f"token {c!r} outside 0..{MAX_TOKEN}")
        object.__setattr__(self, "triple", tuple(int(c) for c in t))

    @property
    def is_land(self) -> bool:
        return self.triple is None

    def to_text(self) -> str:
        if self.triple is None:
            return LAND_TEXT
        return " ".join(str(c) for c in self.triple)

    @classmethod
    def from_text(cls, text: str) -> "ActionTokens":
        text = text.strip()
        if text == LAND_TEXT:
            return LAND
        parts = text.split()
        if len(parts) != 3 or not all(p.isdigit() for p in parts):
            raise ValueError(f"malformed action tokens {text!r}")
        return cls(tuple(int(p) for p in parts))

    def __str__(self):
        return self.to_text()


LAND = ActionTokens(None)


def _quantize_value(v: float, lo: float, hi: float) -> int:
    c = round((v - lo) * MAX_TOKEN / (hi - lo))
    return min(max(c, 0), MAX_TOKEN)


def _dequantize_value(c: int, lo: float, hi: float) -> float:
    return lo + c * (hi - lo) / MAX_TOKEN


def quantize(a: Action) -> ActionTokens:
    """Bin each dimension to its nearest grid level.

    Out-of-range values raise instead of clamping; labels that need clamping are
    a data bug upstream.
    """
    a.check()
    return ActionTokens(
        tuple(_quantize_value(v, lo, hi) for v, (lo, hi) in zip(a.as_tuple(), RANGES))
    )


def dequantize(t: ActionTokens) -> Action:
    if t.is_land:
        raise ValueError("LAND has no kinematic decoding")
    return Action(*(_dequantize_value(c, lo, hi) for c, (lo, hi) in zip(t.triple, RANGES)))


def is_near_zero(a: Action) -> bool:
    # decoded grid values one bin from zero can overshoot the width by an ulp
    return all(abs(v) <= w * (1 + 1e-9) for v, w in zip(a.as_tuple(), BIN_WIDTHS))


def is_landing(t: ActionTokens) -> bool:
    """Dual-condition stop: the LAND token, or offsets within one bin of zero."""
    if t.is_land:
        return True
    return is_near_zero(dequantize(t))


@dataclass(frozen=True)
class VelocityCommand:
    vx: float
    vy: float
    vz: float
    yaw_target: float
    duration: float

    @property
    def speed(self) -> float:
        return math.sqrt(self.vx * self.vx + self.vy * self.vy + self.vz * self.vz)


def to_velocity(a: Action, pose: Pose, speed: float = CRUISE_SPEED) -> VelocityCommand:
    """Constant-speed velocity command covering the offset ``a`` from ``pose``.

    Yaw is applied first; the forward offset is flown along the new heading.
    """
    a.check()
    yaw_target = wrap_angle(pose.yaw + a.dpsi)
    dist = math.sqrt(a.dx * a.dx + a.dz * a.dz)
    if dist == 0.0:
        return VelocityCommand(0.0, 0.0, 0.0, yaw_target, 0.0)
    ux = a.dx * math.cos(yaw_target) / dist
    uy = a.dx * math.sin(yaw_target) / dist
    uz = a.dz / dist
    return VelocityCommand(ux * speed, uy * speed, uz * speed, yaw_target, dist / speed)

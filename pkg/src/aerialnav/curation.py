"""Geometry-consistent filtering of demonstration frames.

A frame is ambiguous when the target is well off to the side (|theta| > 60 deg)
but the expert barely turned (decoded yaw within one token bin of zero). If
the side facing the target is open (depth > 20 m) nothing justified flying
straight, and the frame is dropped. Otherwise the straight flight was an
evasion and is kept.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .codec import BIN_WIDTHS, dequantize
from .expert import Frame, Trajectory
from .prompting import is_lateral

CLEAR_SIDE_DEPTH = 20.0
YAW_EPS = BIN_WIDTHS[2] * (1 + 1e-9)  # one token bin, ulp-tolerant


@dataclass(frozen=True)
class FilterReport:
    total_frames: int
    inspected: int
    discarded: int
    retained_evasions: int

    @property
    def discard_fraction(self) -> float:
        return self.discarded / self.total_frames if self.total_frames else 0.0

    def __add__(self, other: "FilterReport") -> "FilterReport":
        return FilterReport(
            self.total_frames + other.total_frames,
            self.inspected + other.inspected,
            self.discarded + other.discarded,
            self.retained_evasions + other.retained_evasions,
        )

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "total_frames": self.total_frames,
            "inspected": self.inspected,
            "discarded": self.discarded,
            "retained_evasions": self.retained_evasions,
            "discard_fraction": self.discard_fraction,
        }


def frame_is_ambiguous(frame: Frame, yaw_eps: float = YAW_EPS) -> bool:
    if frame.action_label.is_land:
        return False
    if not is_lateral(frame.theta):
        return False
    return abs(dequantize(frame.action_label).dpsi) <= yaw_eps


def target_side_depth(frame: Frame) -> float:
    """Lateral depth on the side the target is on (min of both when dead ahead)."""
    if frame.theta > 0:
        return frame.depth.right
    if frame.theta < 0:
        return frame.depth.left
    return min(frame.depth.left, frame.depth.right)


def should_discard(frame: Frame, clear_depth: float = CLEAR_SIDE_DEPTH,
                   yaw_eps: float = YAW_EPS) -> bool:
    return frame_is_ambiguous(frame, yaw_eps) and target_side_depth(frame) > clear_depth


def filter_frames(frames: Iterable[Frame], clear_depth: float = CLEAR_SIDE_DEPTH,
                  yaw_eps: float = YAW_EPS) -> tuple[list[Frame], FilterReport]:
    kept = []
    total = inspected = discarded = 0
    for f in frames:
        total += 1
        if frame_is_ambiguous(f, yaw_eps):
            inspected += 1
            if target_side_depth(f) > clear_depth:
                discarded += 1
                continue
        kept.append(f)
    return kept, FilterReport(total, inspected, discarded, inspected - discarded)


def filter_trajectories(trajs: Iterable[Trajectory], clear_depth: float = CLEAR_SIDE_DEPTH,
                        yaw_eps: float = YAW_EPS) -> tuple[list[Trajectory], FilterReport]:
    """Filter frame-by-frame, keeping trajectory envelopes (status, final pose)."""
    out = []
    report = FilterReport(0, 0, 0, 0)
    for t in trajs:
        kept, r = filter_frames(t.frames, clear_depth, yaw_eps)
        out.append(t.with_frames(kept))
        report = report + r
    return out, report

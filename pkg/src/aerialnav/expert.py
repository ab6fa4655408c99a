"""Scripted expert pilot, reaction-delay injection and the episode recorder."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Union

from .codec import (
    LAND,
    ZERO_ACTION,
    Action,
    ActionTokens,
    dequantize,
    is_landing,
    quantize,
)
from .geometry import Pose, horizontal_distance, relative_bearing
from .prompting import build_prompt, fuzzy_hint, is_lateral
from .sim import DepthProbe, Scene, UAV_RADIUS, probe_depth, segment_collides, step

TRAJECTORY_FORMAT_VERSION = 1

PolicyOutput = Union[Action, ActionTokens]


@dataclass(frozen=True)
class ExpertConfig:
    hover_offset: float = 5.0
    land_radius: float = 3.0
    land_altitude_tol: float = 1.0
    max_turn: float = math.pi / 4
    evade_depth: float = 12.0
    evade_dx: float = 2.0
    evade_standoff: float = 2.0
    cruise_dx: float = 5.0
    # lookahead clearance for candidate moves; above the 1 m collision radius
    guard_margin: float = UAV_RADIUS + 0.5


@dataclass(frozen=True)
class Observation:
    """What a policy sees at one step. ``scene`` gives access to the target."""

    step: int
    pose: Pose
    theta: float
    hint: str
    prompt: str
    depth: DepthProbe
    scene: Scene


@dataclass(frozen=True)
class Frame:
    step: int
    pose: Pose
    theta: float
    hint: str
    prompt: str
    depth: DepthProbe
    action_label: ActionTokens
    raw_action: Action
    land_label: bool
    # set on frames whose yaw was zeroed by reaction-delay injection
    delayed: bool = False

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "pose": self.pose.to_dict(),
            "theta": self.theta,
            "hint": self.hint,
            "prompt": self.prompt,
            "depth": self.depth.to_dict(),
            "action_label": self.action_label.to_text(),
            "raw_action": self.raw_action.to_dict(),
            "land_label": self.land_label,
            "delayed": self.delayed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Frame":
        return cls(
            step=d["step"],
            pose=Pose.from_dict(d["pose"]),
            theta=d["theta"],
            hint=d["hint"],
            prompt=d["prompt"],
            depth=DepthProbe.from_dict(d["depth"]),
            action_label=ActionTokens.from_text(d["action_label"]),
            raw_action=Action.from_dict(d["raw_action"]),
            land_label=d["land_label"],
            delayed=d.get("delayed", False),
        )


@dataclass(frozen=True)
class Trajectory:
    seed: int
    difficulty: str
    target: tuple[float, float, float]
    target_description: str
    frames: tuple[Frame, ...]
    status: str  # landed | collided | timeout
    final_pose: Pose

    def to_dict(self) -> dict:
        return {
            "format_version": TRAJECTORY_FORMAT_VERSION,
            "seed": self.seed,
            "difficulty": self.difficulty,
            "target": list(self.target),
            "target_description": self.target_description,
            "status": self.status,
            "final_pose": self.final_pose.to_dict(),
            "frames": [f.to_dict() for f in self.frames],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        if d.get("format_version") != TRAJECTORY_FORMAT_VERSION:
            raise ValueError(f"unsupported trajectory format_version {d.get('format_version')!r}")
        return cls(
            seed=d["seed"],
            difficulty=d["difficulty"],
            target=tuple(d["target"]),
            target_description=d["target_description"],
            frames=tuple(Frame.from_dict(f) for f in d["frames"]),
            status=d["status"],
            final_pose=Pose.from_dict(d["final_pose"]),
        )

    def with_frames(self, frames: Iterable[Frame]) -> "Trajectory":
        return Trajectory(self.seed, self.difficulty, self.target, self.target_description,
                          tuple(frames), self.status, self.final_pose)


def dumps_trajectories(trajs: Iterable[Trajectory]) -> str:
    return "".join(json.dumps(t.to_dict(), sort_keys=True) + "\n" for t in trajs)


def loads_trajectories(text: str) -> list[Trajectory]:
    return [Trajectory.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def _clamp(v, lo, hi):
    return min(max(v, lo), hi)


def _safe(scene: Scene, pose: Pose, a: Action, margin: float) -> bool:
    yaw = pose.yaw + a.dpsi
    end = (pose.x + a.dx * math.cos(yaw), pose.y + a.dx * math.sin(yaw), pose.z + a.dz)
    return scene.bounds.contains(end) and not segment_collides(scene, pose.position, end, margin)


def expert_policy(scene: Scene, pose: Pose, probe: DepthProbe, theta: float,
                  cfg: ExpertConfig = ExpertConfig()) -> PolicyOutput:
    """Turn toward the target, dodge what is ahead, settle at hover height, land.

    Returns ``LAND`` once horizontally within ``land_radius`` of the target and
    within ``land_altitude_tol`` of the hover height above it. The forward probe
    only looks along the current heading, so every candidate move is also
    checked against the scene before it is committed.
    """
    hd = horizontal_distance(pose, scene.target)
    alt_err = scene.target[2] + cfg.hover_offset - pose.z
    if hd <= cfg.land_radius and abs(alt_err) <= cfg.land_altitude_tol:
        return LAND
    dz = _clamp(alt_err, -5.0, 5.0)
    if probe.left < probe.right:
        away = -1.0
    elif probe.right < probe.left:
        away = 1.0
    else:
        # nothing closer on either side: break toward the target
        away = -1.0 if theta > 0 else 1.0
    evade = Action(_clamp(probe.forward - cfg.evade_standoff, 0.0, cfg.evade_dx), dz,
                   away * cfg.max_turn)
    if probe.forward < cfg.evade_depth:
        candidates = [evade]
    else:
        # positive theta is clockwise, so the ccw yaw change toward the target is -theta
        dpsi = _clamp(-theta, -cfg.max_turn, cfg.max_turn)
        cruise = min(cfg.cruise_dx, hd)
        # holding the heading past a target-side obstacle is itself an evasion
        candidates = [Action(cruise, dz, dpsi), Action(cruise, dz, 0.0), evade]
    candidates += [
        Action(evade.dx, 0.0, evade.dpsi),
        Action(evade.dx, dz, -evade.dpsi),
        Action(0.0, 0.0, evade.dpsi),
    ]
    margin = cfg.guard_margin
    for a in candidates:
        if _safe(scene, pose, a, margin):
            return a
    return candidates[-1]


class ExpertPolicy:
    def __init__(self, cfg: ExpertConfig = ExpertConfig()):
        self.cfg = cfg

    def __call__(self, obs: Observation) -> PolicyOutput:
        return expert_policy(obs.scene, obs.pose, obs.depth, obs.theta, self.cfg)


class ReactionDelay:
    """Zero the yaw command for the first ``k`` steps of every lateral-hint run.

    A run starts when |theta| rises above 60 degrees and ends as soon as it
    drops back. Forward and vertical offsets pass through; LAND is untouched.
    """

    def __init__(self, k: int):
        if k < 0:
            raise ValueError("delay k must be >= 0")
        self.k = k
        self.reset()

    def reset(self) -> None:
        self._run = 0

    def apply(self, theta: float, out: PolicyOutput) -> tuple[PolicyOutput, bool]:
        if not is_lateral(theta):
            self._run = 0
            return out, False
        self._run += 1
        if self._run > self.k or isinstance(out, ActionTokens):
            return out, False
        return Action(out.dx, out.dz, 0.0), True


def inject_reaction_delay(stream: Iterable[tuple[float, PolicyOutput]], k: int
                          ) -> Iterator[tuple[PolicyOutput, bool]]:
    """Apply :class:`ReactionDelay` to (theta, action) pairs; yields (action, flagged)."""
    delay = ReactionDelay(k)
    for theta, out in stream:
        yield delay.apply(theta, out)


class DelayedPolicy:
    """Wrap a policy with reaction-delay injection; ``flagged`` reports the last call."""

    def __init__(self, policy: Callable[[Observation], PolicyOutput], k: int):
        self.policy = policy
        self.delay = ReactionDelay(k)
        self.flagged = False

    def reset(self) -> None:
        self.delay.reset()
        self.flagged = False
        if hasattr(self.policy, "reset"):
            self.policy.reset()

    def __call__(self, obs: Observation) -> PolicyOutput:
        out, self.flagged = self.delay.apply(obs.theta, self.policy(obs))
        return out


def observe(scene: Scene, pose: Pose, t: int) -> Observation:
    try:
        theta = relative_bearing(pose, scene.target)
    except ValueError:
        theta = 0.0  # directly above the target
    hint = fuzzy_hint(theta)
    return Observation(
        step=t,
        pose=pose,
        theta=theta,
        hint=hint,
        prompt=build_prompt(hint, scene.target_description),
        depth=probe_depth(scene, pose),
        scene=scene,
    )


def record_episode(scene: Scene, policy: Callable[[Observation], PolicyOutput],
                   max_steps: int = 200, through_codec: bool = True,
                   radius: float = UAV_RADIUS) -> Trajectory:
    """Fly ``policy`` closed-loop and record one Frame per step.

    With ``through_codec`` (the default) the executed action is the decoded
    token label, so the trajectory replays exactly from its tokens. Ends on a
    landing decision, a collision, or after ``max_steps``.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    if hasattr(policy, "reset"):
        policy.reset()
    pose = scene.start
    frames = []
    status = "timeout"
    final = pose
    for t in range(max_steps):
        obs = observe(scene, pose, t)
        out = policy(obs)
        flagged = bool(getattr(policy, "flagged", False))
        if isinstance(out, ActionTokens):
            tokens = out
            raw = ZERO_ACTION if out.is_land else dequantize(out)
        else:
            raw = out
            tokens = LAND if out is LAND else quantize(out)
        if through_codec:
            landing = is_landing(tokens)
            executed = None if tokens.is_land else dequantize(tokens)
        else:
            landing = tokens.is_land
            executed = raw
        frames.append(Frame(t, pose, obs.theta, obs.hint, obs.prompt, obs.depth,
                            tokens, raw, tokens.is_land, flagged))
        if landing:
            status = "landed"
            final = pose
            break
        res = step(scene, pose, executed, radius)
        final = res.new_pose
        if res.collided:
            status = "collided"
            break
        pose = res.new_pose
    return Trajectory(scene.seed, scene.difficulty, scene.target, scene.target_description,
                      tuple(frames), status, final)

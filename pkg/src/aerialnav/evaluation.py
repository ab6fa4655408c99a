"""Closed-loop rollouts and NE / SR / OSR / SPL scoring."""
from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, asdict
from typing import Callable, Iterable, Sequence

from .codec import LAND, MAX_TOKEN, Action, ActionTokens, is_landing
from .expert import Observation, PolicyOutput, Trajectory, record_episode
from .geometry import distance3
from .sim import Scene

SUCCESS_RADIUS = 20.0
RESULTS_COLUMNS_VERSION = 1
RESULT_COLUMNS = (
    "seed", "difficulty", "status", "ne", "success", "oracle_success",
    "path_length", "shortest_path", "spl", "steps",
)


@dataclass(frozen=True)
class EpisodeResult:
    seed: int
    difficulty: str
    status: str
    ne: float
    success: bool
    oracle_success: bool
    path_length: float
    shortest_path: float
    steps: int

    @property
    def spl(self) -> float:
        if not self.success:
            return 0.0
        return self.shortest_path / max(self.path_length, self.shortest_path)


def rollout(scene: Scene, policy, max_steps: int = 200, through_codec: bool = True) -> Trajectory:
    return record_episode(scene, policy, max_steps=max_steps, through_codec=through_codec)


def _positions(traj: Trajectory) -> list[tuple[float, float, float]]:
    pts = [f.pose.position for f in traj.frames]
    if traj.final_pose.position != pts[-1]:
        pts.append(traj.final_pose.position)
    return pts


def score_episode(traj: Trajectory, scene: Scene, radius: float = SUCCESS_RADIUS) -> EpisodeResult:
    """Score one episode; success needs a landing decision within ``radius``."""
    if not traj.frames:
        raise ValueError("cannot score an empty trajectory")
    pts = _positions(traj)
    ne = distance3(traj.final_pose.position, scene.target)
    path = 0.0
    for a, b in zip(pts, pts[1:]):
        path += distance3(a, b)
    closest = min(distance3(p, scene.target) for p in pts)
    return EpisodeResult(
        seed=traj.seed,
        difficulty=traj.difficulty,
        status=traj.status,
        ne=ne,
        success=traj.status == "landed" and ne <= radius,
        oracle_success=closest <= radius,
        path_length=path,
        shortest_path=distance3(scene.start.position, scene.target),
        steps=len(traj.frames),
    )


@dataclass(frozen=True)
class MetricsSummary:
    n: int
    sr: float
    osr: float
    spl: float
    mean_ne: float
    by_difficulty: dict

    def to_dict(self) -> dict:
        return {
            "format_version": RESULTS_COLUMNS_VERSION,
            "n": self.n,
            "sr": self.sr,
            "osr": self.osr,
            "spl": self.spl,
            "mean_ne": self.mean_ne,
            "by_difficulty": {k: v.to_dict() for k, v in sorted(self.by_difficulty.items())},
        }


def _aggregate(results: Sequence[EpisodeResult], breakdown: bool) -> MetricsSummary:
    n = len(results)
    by = {}
    if breakdown:
        for d in sorted({r.difficulty for r in results}):
            by[d] = _aggregate([r for r in results if r.difficulty == d], False)
    return MetricsSummary(
        n=n,
        sr=100.0 * sum(r.success for r in results) / n,
        osr=100.0 * sum(r.oracle_success for r in results) / n,
        spl=100.0 * math.fsum(r.spl for r in results) / n,
        mean_ne=math.fsum(r.ne for r in results) / n,
        by_difficulty=by,
    )


def summarize(results: Iterable[EpisodeResult]) -> MetricsSummary:
    results = sorted(results, key=lambda r: (r.difficulty, r.seed))
    if not results:
        raise ValueError("cannot summarize zero episodes")
    return _aggregate(results, True)


def results_csv(results: Iterable[EpisodeResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in results:
        w.writerow([r.seed, r.difficulty, r.status, repr(r.ne), int(r.success),
                    int(r.oracle_success), repr(r.path_length), repr(r.shortest_path),
                    repr(r.spl), r.steps])
    return buf.getvalue()


def evaluate(scenes: Iterable[Scene], policy, max_steps: int = 200,
             through_codec: bool = True) -> list[EpisodeResult]:
    return [score_episode(rollout(s, policy, max_steps, through_codec), s) for s in scenes]


class NoStopPolicy:
    """Replace every landing decision with a turn in place, so episodes never land."""

    def __init__(self, policy):
        self.policy = policy

    def reset(self):
        if hasattr(self.policy, "reset"):
            self.policy.reset()

    def __call__(self, obs: Observation) -> PolicyOutput:
        out = self.policy(obs)
        if isinstance(out, ActionTokens) and is_landing(out):
            return Action(0.0, 0.0, math.pi / 2)
        return out


class RandomTokenPolicy:
    """Uniform random token triples, seeded per episode from the scene seed."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._rng = None

    def __call__(self, obs: Observation) -> ActionTokens:
        if obs.step == 0 or self._rng is None:
            self._rng = random.Random(f"{self.seed}:{obs.scene.seed}")
        return ActionTokens(tuple(self._rng.randint(0, MAX_TOKEN) for _ in range(3)))


class FixedActionPolicy:
    def __init__(self, action: Action):
        self.action = action

    def __call__(self, obs: Observation) -> Action:
        return self.action


class LandNowPolicy:
    def __call__(self, obs: Observation) -> ActionTokens:
        return LAND

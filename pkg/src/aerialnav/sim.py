"""Seeded procedural scenes and a holonomic kinematic UAV.

Obstacles are axis-aligned boxes; the ground is the plane z = 0. Depth probes
and collision checks are exact (slab ray-box intersection and closest-point
segment-box distance).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from .codec import Action
from .geometry import Pose, wrap_angle, distance3, relative_bearing

DEPTH_CAP = 100.0
UAV_RADIUS = 1.0

Vec3 = tuple[float, float, float]

DESCRIPTION_COLORS = ("red", "blue", "white", "black", "yellow", "green", "silver", "orange")
DESCRIPTION_OBJECTS = ("car", "truck", "van", "bicycle", "bench", "tent", "container", "boat")
DESCRIPTION_PLACES = (
    "parked beside a tall building",
    "near the edge of a parking lot",
    "next to a row of trees",
    "at the corner of an intersection",
    "in the middle of an open field",
    "close to a small shed",
)


class SceneGenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Obstacle:
    center: Vec3
    half_extents: Vec3

    def __post_init__(self):
        if any(h <= 0 for h in self.half_extents):
            raise ValueError(f"half extents must be positive, got {self.half_extents}")

    @property
    def lo(self) -> Vec3:
        return tuple(c - h for c, h in zip(self.center, self.half_extents))

    @property
    def hi(self) -> Vec3:
        return tuple(c + h for c, h in zip(self.center, self.half_extents))


@dataclass(frozen=True)
class Bounds:
    lo: Vec3
    hi: Vec3

    def contains(self, p: Sequence[float]) -> bool:
        return all(l <= v <= h for v, l, h in zip(p, self.lo, self.hi))

    def clamp(self, p: Sequence[float]) -> Vec3:
        return tuple(min(max(v, l), h) for v, l, h in zip(p, self.lo, self.hi))


@dataclass(frozen=True)
class GenerationConfig:
    """Knobs for :func:`generate_scene`. Distances in meters."""

    bounds_lo: Vec3 = (-320.0, -320.0, 0.0)
    bounds_hi: Vec3 = (320.0, 320.0, 80.0)
    n_obstacles: tuple[int, int] = (0, 6)
    easy_distance: tuple[float, float] = (40.0, 150.0)
    hard_distance: tuple[float, float] = (150.0, 300.0)
    start_altitude: tuple[float, float] = (2.0, 30.0)
    target_altitude: tuple[float, float] = (0.0, 2.0)
    obstacle_half_xy: tuple[float, float] = (3.0, 10.0)
    obstacle_half_z: tuple[float, float] = (8.0, 30.0)
    # obstacles are scattered over the start-target bounding rectangle grown by this
    corridor_margin: float = 30.0
    clearance: float = UAV_RADIUS + 2.0
    # start and target keep this far from the world's side walls
    edge_margin: float = 30.0
    # when set, start yaw is chosen so |bearing to target| falls in this range (degrees)
    start_bearing_deg: Optional[tuple[float, float]] = None
    max_attempts: int = 200

    def validate(self) -> None:
        lo_n, hi_n = self.n_obstacles
        if lo_n < 0 or hi_n < lo_n:
            raise ValueError(f"bad obstacle count range {self.n_obstacles}")
        if any(h <= l for l, h in zip(self.bounds_lo, self.bounds_hi)):
            raise ValueError("degenerate bounds")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        for name in ("easy_distance", "hard_distance", "start_altitude", "target_altitude",
                     "obstacle_half_xy", "obstacle_half_z"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name} range is empty: {lo} > {hi}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationConfig":
        kw = {}
        for k, v in d.items():
            if k not in cls.__dataclass_fields__:
                raise ValueError(f"unknown generation parameter {k!r}")
            kw[k] = tuple(v) if isinstance(v, list) else v
        return cls(**kw)


@dataclass(frozen=True)
class Scene:
    seed: int
    bounds: Bounds
    start: Pose
    target: Vec3
    target_description: str
    obstacles: tuple[Obstacle, ...]
    difficulty: str

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "seed": self.seed,
            "difficulty": self.difficulty,
            "bounds": {"lo": list(self.bounds.lo), "hi": list(self.bounds.hi)},
            "start": self.start.to_dict(),
            "target": list(self.target),
            "target_description": self.target_description,
            "obstacles": [
                {"center": list(o.center), "half_extents": list(o.half_extents)}
                for o in self.obstacles
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        if d.get("format_version") != 1:
            raise ValueError(f"unsupported scene format_version {d.get('format_version')!r}")
        return cls(
            seed=d["seed"],
            bounds=Bounds(tuple(d["bounds"]["lo"]), tuple(d["bounds"]["hi"])),
            start=Pose.from_dict(d["start"]),
            target=tuple(d["target"]),
            target_description=d["target_description"],
            obstacles=tuple(
                Obstacle(tuple(o["center"]), tuple(o["half_extents"])) for o in d["obstacles"]
            ),
            difficulty=d["difficulty"],
        )


def point_box_distance(p: Sequence[float], box: Obstacle) -> float:
    d2 = 0.0
    for v, l, h in zip(p, box.lo, box.hi):
        if v < l:
            d2 += (l - v) ** 2
        elif v > h:
            d2 += (v - h) ** 2
    return math.sqrt(d2)


def segment_box_distance(a: Sequence[float], b: Sequence[float], box: Obstacle) -> float:
    """Exact minimum distance between segment ab and a box.

    The squared distance along the segment is piecewise quadratic in t with
    breakpoints where a coordinate crosses a slab face; each piece is minimized
    in closed form.
    """
    lo, hi = box.lo, box.hi
    d = [b[i] - a[i] for i in range(3)]
    breaks = {0.0, 1.0}
    for i in range(3):
        if d[i] != 0.0:
            for face in (lo[i], hi[i]):
                t = (face - a[i]) / d[i]
                if 0.0 < t < 1.0:
                    breaks.add(t)
    ts = sorted(breaks)

    def sq_at(t):
        s = 0.0
        for i in range(3):
            v = a[i] + t * d[i]
            if v < lo[i]:
                s += (lo[i] - v) ** 2
            elif v > hi[i]:
                s += (v - hi[i]) ** 2
        return s

    best = min(sq_at(t) for t in ts)
    for t0, t1 in zip(ts, ts[1:]):
        mid = 0.5 * (t0 + t1)
        # quadratic sum_i (c_i + d_i t)^2 over the axes outside the box in this piece
        qa = qb = 0.0
        for i in range(3):
            v = a[i] + mid * d[i]
            if v < lo[i]:
                c = a[i] - lo[i]
            elif v > hi[i]:
                c = a[i] - hi[i]
            else:
                continue
            qa += d[i] * d[i]
            qb += 2.0 * c * d[i]
        if qa > 0.0:
            t = -qb / (2.0 * qa)
            if t0 < t < t1:
                best = min(best, sq_at(t))
    return math.sqrt(best)


def segment_collides(scene: Scene, start: Sequence[float], end: Sequence[float],
                     radius: float = UAV_RADIUS) -> bool:
    """True if the segment passes within ``radius`` of an obstacle or below ground."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    if start[2] < 0.0 or end[2] < 0.0:
        return True
    for box in scene.obstacles:
        if segment_box_distance(start, end, box) <= radius:
            return True
    return False


def ray_box_hit(origin: Sequence[float], direction: Sequence[float], box: Obstacle) -> float:
    """Slab test; distance along the (unit) ray to the first hit, or inf."""
    t_near, t_far = -math.inf, math.inf
    for o, d, l, h in zip(origin, direction, box.lo, box.hi):
        if d == 0.0:
            if o < l or o > h:
                return math.inf
            continue
        t1 = (l - o) / d
        t2 = (h - o) / d
        if t1 > t2:
            t1, t2 = t2, t1
        t_near = max(t_near, t1)
        t_far = min(t_far, t2)
        if t_near > t_far:
            return math.inf
    if t_far < 0.0:
        return math.inf
    return max(t_near, 0.0)


def cast_ray(scene: Scene, origin: Sequence[float], direction: Sequence[float],
             cap: float = DEPTH_CAP) -> float:
    best = cap
    if direction[2] < 0.0:
        best = min(best, origin[2] / -direction[2])
    for box in scene.obstacles:
        best = min(best, ray_box_hit(origin, direction, box))
    return best


@dataclass(frozen=True)
class DepthProbe:
    forward: float
    left: float
    right: float
    down: float

    def to_dict(self) -> dict:
        return {"forward": self.forward, "left": self.left, "right": self.right, "down": self.down}

    @classmethod
    def from_dict(cls, d: dict) -> "DepthProbe":
        return cls(d["forward"], d["left"], d["right"], d["down"])


def probe_depth(scene: Scene, pose: Pose, cap: float = DEPTH_CAP) -> DepthProbe:
    origin = pose.position

    def horizontal(yaw):
        return cast_ray(scene, origin, (math.cos(yaw), math.sin(yaw), 0.0), cap)

    return DepthProbe(
        forward=horizontal(pose.yaw),
        left=horizontal(pose.yaw + math.pi / 2),
        right=horizontal(pose.yaw - math.pi / 2),
        down=cast_ray(scene, origin, (0.0, 0.0, -1.0), cap),
    )


@dataclass(frozen=True)
class StepResult:
    new_pose: Pose
    collided: bool
    path_len: float


def step(scene: Scene, pose: Pose, action: Action, radius: float = UAV_RADIUS) -> StepResult:
    """Yaw first, then translate dx along the new heading and dz vertically."""
    action.check()
    yaw = wrap_angle(pose.yaw + action.dpsi)
    x = pose.x + action.dx * math.cos(yaw)
    y = pose.y + action.dx * math.sin(yaw)
    z = pose.z + action.dz
    path_len = math.sqrt(action.dx * action.dx + action.dz * action.dz)
    collided = segment_collides(scene, pose.position, (x, y, z), radius)
    cx, cy, cz = scene.bounds.clamp((x, y, z))
    if (cx, cy, cz) != (x, y, z):
        collided = True
    return StepResult(Pose(cx, cy, cz, yaw), collided, path_len)


def _description(rng: np.random.Generator) -> str:
    color = DESCRIPTION_COLORS[rng.integers(len(DESCRIPTION_COLORS))]
    obj = DESCRIPTION_OBJECTS[rng.integers(len(DESCRIPTION_OBJECTS))]
    place = DESCRIPTION_PLACES[rng.integers(len(DESCRIPTION_PLACES))]
    return f"the {color} {obj} {place}"


def generate_scene(seed: int, difficulty: str = "easy",
                   params: GenerationConfig = GenerationConfig()) -> Scene:
    """Rejection-sample a scene; identical arguments give an identical scene."""
    params.validate()
    if difficulty not in ("easy", "hard"):
        raise ValueError(f"difficulty must be 'easy' or 'hard', got {difficulty!r}")
    dist_range = params.easy_distance if difficulty == "easy" else params.hard_distance
    bounds = Bounds(tuple(map(float, params.bounds_lo)), tuple(map(float, params.bounds_hi)))
    rng = np.random.default_rng([int(seed), 0 if difficulty == "easy" else 1])
    inner = max(params.clearance, params.edge_margin)
    inner_box = Bounds(
        (bounds.lo[0] + inner, bounds.lo[1] + inner, bounds.lo[2]),
        (bounds.hi[0] - inner, bounds.hi[1] - inner, bounds.hi[2]),
    )

    last_failure = "no attempt made"
    for _ in range(params.max_attempts):
        sx = rng.uniform(bounds.lo[0] + inner, bounds.hi[0] - inner)
        sy = rng.uniform(bounds.lo[1] + inner, bounds.hi[1] - inner)
        sz = rng.uniform(*params.start_altitude)
        tz = rng.uniform(*params.target_altitude)
        d3 = rng.uniform(*dist_range)
        if d3 <= abs(sz - tz):
            last_failure = "start-target distance shorter than altitude gap"
            continue
        h = math.sqrt(d3 * d3 - (sz - tz) ** 2)
        phi = rng.uniform(-math.pi, math.pi)
        tx, ty = sx + h * math.cos(phi), sy + h * math.sin(phi)
        target = (float(tx), float(ty), float(tz))
        start_xyz = (float(sx), float(sy), float(sz))
        if not inner_box.contains(target):
            last_failure = "target outside bounds"
            continue
        if distance3(start_xyz, target) < 40.0:
            last_failure = "start-target distance below 40 m"
            continue

        if params.start_bearing_deg is None:
            yaw = rng.uniform(-math.pi, math.pi)
        else:
            lo_b, hi_b = (math.radians(v) for v in params.start_bearing_deg)
            mag = rng.uniform(lo_b, hi_b)
            sign = 1.0 if rng.random() < 0.5 else -1.0
            # bearing theta = -(phi - yaw)  =>  yaw = phi + theta
            yaw = phi + sign * mag
        start = Pose(*start_xyz, yaw=float(yaw))

        n = int(rng.integers(params.n_obstacles[0], params.n_obstacles[1] + 1))
        obstacles = _place_obstacles(rng, n, start_xyz, target, bounds, params)
        if obstacles is None:
            last_failure = f"could not place {n} obstacles clear of start and target"
            continue
        return Scene(
            seed=int(seed),
            bounds=bounds,
            start=start,
            target=target,
            target_description=_description(rng),
            obstacles=obstacles,
            difficulty=difficulty,
        )
    raise SceneGenerationError(
        f"seed {seed}: no valid scene after {params.max_attempts} attempts ({last_failure})"
    )


def _place_obstacles(rng, n, start, target, bounds, params) -> Optional[tuple[Obstacle, ...]]:
    m = params.corridor_margin
    x_lo = max(min(start[0], target[0]) - m, bounds.lo[0])
    x_hi = min(max(start[0], target[0]) + m, bounds.hi[0])
    y_lo = max(min(start[1], target[1]) - m, bounds.lo[1])
    y_hi = min(max(start[1], target[1]) + m, bounds.hi[1])
    placed = []
    for _ in range(n):
        for _attempt in range(50):
            hx = rng.uniform(*params.obstacle_half_xy)
            hy = rng.uniform(*params.obstacle_half_xy)
            hz = rng.uniform(*params.obstacle_half_z)
            box = Obstacle(
                (float(rng.uniform(x_lo, x_hi)), float(rng.uniform(y_lo, y_hi)), float(hz)),
                (float(hx), float(hy), float(hz)),
            )
            # keep the start and the landing column above the target clear
            if point_box_distance(start, box) <= params.clearance:
                continue
            above_target = (target[0], target[1], target[2] + 10.0)
            if segment_box_distance(target, above_target, box) <= params.clearance + 3.0:
                continue
            placed.append(box)
            break
        else:
            return None
    return tuple(placed)


def start_bearing(scene: Scene) -> float:
    return relative_bearing(scene.start, scene.target)

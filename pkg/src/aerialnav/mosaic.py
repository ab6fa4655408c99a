"""Synthetic front/down views and the vertically stitched 224x224 composite.

Both cameras are 90-degree-FOV pinholes. The front camera looks along the
heading; the down camera looks at the ground with the heading at the top of
the image. At 90 degrees the bottom edge ray of the front view and the top edge
ray of the down view coincide (45 degrees below the horizon), so the two halves
meet seamlessly. The seam sits on row 112, a multiple of the 14-pixel ViT
patch size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import Pose
from .sim import DEPTH_CAP, Scene

FOV_DEG = 90.0
COMPOSITE_SIZE = 224
SEAM_ROW = COMPOSITE_SIZE // 2
PATCH = 14

GROUND, SKY, TARGET = 0, 1, 2
OBSTACLE_BASE = 3  # obstacle i is class OBSTACLE_BASE + i
TARGET_MARKER_HALF = 1.5


@dataclass(frozen=True)
class ViewGrid:
    camera: str
    depth: np.ndarray  # planar depth along the optical axis, meters, capped
    classes: np.ndarray
    ident: str
    fov: float = FOV_DEG

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]


@dataclass(frozen=True)
class CompositeGrid:
    depth: np.ndarray
    classes: np.ndarray
    seam_row: int
    provenance: tuple[str, str]

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]


def _camera_basis(pose: Pose, camera: str):
    heading = np.array([math.cos(pose.yaw), math.sin(pose.yaw), 0.0])
    right = np.array([math.sin(pose.yaw), -math.cos(pose.yaw), 0.0])
    if camera == "front":
        return heading, right, np.array([0.0, 0.0, 1.0])
    if camera == "down":
        return np.array([0.0, 0.0, -1.0]), right, heading
    raise ValueError(f"camera must be 'front' or 'down', got {camera!r}")


def _slab_hits(origin, dirs, lo, hi):
    """Ray parameter of the first hit of each ray with box [lo, hi], inf on miss."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        t1 = (lo - origin) * inv
        t2 = (hi - origin) * inv
    tmin = np.minimum(t1, t2)
    tmax = np.maximum(t1, t2)
    # axis-parallel rays: inside the slab means unconstrained, outside means miss
    parallel = dirs == 0.0
    inside = (origin >= lo) & (origin <= hi)
    tmin = np.where(parallel, np.where(inside, -np.inf, np.inf), tmin)
    tmax = np.where(parallel, np.where(inside, np.inf, -np.inf), tmax)
    near = tmin.max(axis=-1)
    far = tmax.min(axis=-1)
    hit = (near <= far) & (far >= 0.0)
    return np.where(hit, np.maximum(near, 0.0), np.inf)


def render_view(scene: Scene, pose: Pose, camera: str, resolution: int = 64) -> ViewGrid:
    """Ray-cast a square depth/class image from ``pose``."""
    if resolution < 16 or resolution % 2:
        raise ValueError("resolution must be an even number >= 16")
    axis, right, up = _camera_basis(pose, camera)
    # tan(45 deg) = 1, so image-plane offsets span [-1, 1]
    coords = (np.arange(resolution) + 0.5) / resolution * 2.0 - 1.0
    v, u = np.meshgrid(coords, coords, indexing="ij")
    dirs = axis + u[..., None] * right - v[..., None] * up
    origin = np.array(pose.position)

    # with an unnormalized direction whose axis component is 1, t is planar depth
    best = np.full(u.shape, np.inf)
    cls = np.full(u.shape, SKY, dtype=np.int32)
    with np.errstate(divide="ignore"):
        t_ground = np.where(dirs[..., 2] < 0.0, origin[2] / -dirs[..., 2], np.inf)
    take = t_ground < best
    best = np.where(take, t_ground, best)
    cls = np.where(take, GROUND, cls)
    boxes = [(np.array(o.lo), np.array(o.hi), OBSTACLE_BASE + i)
             for i, o in enumerate(scene.obstacles)]
    tc = np.array(scene.target)
    boxes.append((tc - TARGET_MARKER_HALF, tc + TARGET_MARKER_HALF, TARGET))
    for lo, hi, label in boxes:
        t = _slab_hits(origin, dirs, lo, hi)
        take = t < best
        best = np.where(take, t, best)
        cls = np.where(take, label, cls)
    depth = np.minimum(best, DEPTH_CAP)
    ident = f"{camera}:{scene.seed}:{pose.x!r},{pose.y!r},{pose.z!r},{pose.yaw!r}"
    return ViewGrid(camera, depth, cls, ident)


def area_weights(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) matrix averaging input cells over each output cell's footprint."""
    scale = n_in / n_out
    w = np.zeros((n_out, n_in))
    for i in range(n_out):
        a, b = i * scale, (i + 1) * scale
        for j in range(int(math.floor(a)), min(int(math.ceil(b)), n_in)):
            w[i, j] = min(b, j + 1) - max(a, j)
    return w / scale


def resample_area(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    return area_weights(img.shape[0], out_h) @ img @ area_weights(img.shape[1], out_w).T


def resample_nearest(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    rows = np.floor((np.arange(out_h) + 0.5) * img.shape[0] / out_h).astype(int)
    cols = np.floor((np.arange(out_w) + 0.5) * img.shape[1] / out_w).astype(int)
    return img[np.ix_(rows, cols)]


def compose(front: ViewGrid, down: ViewGrid) -> CompositeGrid:
    """Stack front over down, each half resampled on its own to 112x224."""
    if front.depth.shape != down.depth.shape:
        raise ValueError(f"view sizes differ: {front.depth.shape} vs {down.depth.shape}")
    half = COMPOSITE_SIZE // 2
    depth = np.vstack([
        resample_area(front.depth, half, COMPOSITE_SIZE),
        resample_area(down.depth, half, COMPOSITE_SIZE),
    ])
    classes = np.vstack([
        resample_nearest(front.classes, half, COMPOSITE_SIZE),
        resample_nearest(down.classes, half, COMPOSITE_SIZE),
    ])
    assert SEAM_ROW % PATCH == 0
    return CompositeGrid(depth, classes, SEAM_ROW, (front.ident, down.ident))


def composite_for(scene: Scene, pose: Pose, resolution: int = 64) -> CompositeGrid:
    return compose(render_view(scene, pose, "front", resolution),
                   render_view(scene, pose, "down", resolution))


def write_pgm(path, grid: CompositeGrid, max_depth: float = DEPTH_CAP) -> None:
    """8-bit binary PGM of the depth channel; near is dark."""
    img = np.clip(np.round(grid.depth / max_depth * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.tobytes())

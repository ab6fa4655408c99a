"""Tabular behavior cloning over discretized observations.

For a count model, minimizing the negative log-likelihood of expert tokens is
frequency estimation per feature key. The three action dimensions are modeled
independently given the key, each as a Laplace-smoothed 99-way categorical,
plus a land/continue pair. Keys with no evidence back off to tables pooled
over every key sharing the same hint.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Optional

import numpy as np

from .codec import LAND, N_BINS, ZERO_ACTION, ActionTokens, quantize
from .expert import Observation, Trajectory
from .prompting import HINTS

MODEL_FORMAT_VERSION = 1

DIST_EDGES = (5.0, 20.0, 50.0, 150.0)
DIST_BUCKETS = ("0-5", "5-20", "20-50", "50-150", "150+")
ALT_BUCKETS = ("below", "level", "above")
CLEARANCE = ("blocked", "clear")
ALT_BAND = 2.0
FORWARD_BLOCKED = 12.0
SIDE_BLOCKED = 20.0
HOVER_OFFSET = 5.0

LAND_LABEL_TOKENS = quantize(ZERO_ACTION)


class FeatureKey(NamedTuple):
    hint: str
    distance: str
    altitude: str
    forward: str
    side: str

    def to_text(self) -> str:
        return "|".join(self)

    @classmethod
    def from_text(cls, text: str) -> "FeatureKey":
        parts = text.split("|")
        if len(parts) != 5:
            raise ValueError(f"malformed feature key {text!r}")
        return cls(*parts)


ALL_KEYS = tuple(
    FeatureKey(h, d, a, f, s)
    for h in HINTS for d in DIST_BUCKETS for a in ALT_BUCKETS
    for f in CLEARANCE for s in CLEARANCE
)


def distance_bucket(d: float) -> str:
    for edge, name in zip(DIST_EDGES, DIST_BUCKETS):
        if d < edge:
            return name
    return DIST_BUCKETS[-1]


def featurize(frame, scene, hover_offset: float = HOVER_OFFSET) -> FeatureKey:
    """Bucket a frame (or Observation) against ``scene.target``.

    ``scene`` can be anything with a ``target`` xyz, e.g. a Trajectory.
    """
    tx, ty, tz = scene.target
    pose = frame.pose
    dist = math.hypot(tx - pose.x, ty - pose.y)
    alt = pose.z - (tz + hover_offset)
    if alt < -ALT_BAND:
        altitude = "below"
    elif alt > ALT_BAND:
        altitude = "above"
    else:
        altitude = "level"
    depth = frame.depth
    if frame.theta > 0:
        side_depth = depth.right
    elif frame.theta < 0:
        side_depth = depth.left
    else:
        side_depth = min(depth.left, depth.right)
    return FeatureKey(
        hint=frame.hint,
        distance=distance_bucket(dist),
        altitude=altitude,
        forward="blocked" if depth.forward < FORWARD_BLOCKED else "clear",
        side="blocked" if side_depth <= SIDE_BLOCKED else "clear",
    )


def training_samples(trajs: Iterable[Trajectory]) -> list[tuple[FeatureKey, ActionTokens]]:
    return [(featurize(f, t), f.action_label) for t in trajs for f in t.frames]


class Counts(NamedTuple):
    """Per-dimension token counts (3 x 99) and [continue, land] counts."""

    tokens: np.ndarray
    land: np.ndarray

    @classmethod
    def zeros(cls) -> "Counts":
        return cls(np.zeros((3, N_BINS), dtype=np.int64), np.zeros(2, dtype=np.int64))

    @property
    def n(self) -> int:
        return int(self.land.sum())


def _label_parts(label: ActionTokens) -> tuple[tuple[int, int, int], int]:
    if label.is_land:
        return LAND_LABEL_TOKENS.triple, 1
    return label.triple, 0


@dataclass
class TabularBCModel:
    counts: dict = field(default_factory=dict)  # FeatureKey -> Counts
    alpha: float = 1.0
    land_threshold: float = 0.5

    def add(self, key: FeatureKey, label: ActionTokens, weight: int = 1) -> None:
        c = self.counts.get(key)
        if c is None:
            c = self.counts[key] = Counts.zeros()
        triple, land = _label_parts(label)
        for dim, tok in enumerate(triple):
            c.tokens[dim, tok] += weight
        c.land[land] += weight

    def merge(self, other: "TabularBCModel") -> "TabularBCModel":
        out = TabularBCModel({}, self.alpha, self.land_threshold)
        for src in (self, other):
            for k, c in src.counts.items():
                acc = out.counts.setdefault(k, Counts.zeros())
                acc.tokens[...] += c.tokens
                acc.land[...] += c.land
        return out

    def hint_counts(self, hint: str) -> Counts:
        acc = Counts.zeros()
        for k, c in self.counts.items():
            if k.hint == hint:
                acc.tokens[...] += c.tokens
                acc.land[...] += c.land
        return acc

    def evidence(self, key: FeatureKey, cold_start: bool = False) -> Optional[Counts]:
        """Counts used for ``key`` after back-off; None means pure smoothing."""
        c = self.counts.get(key)
        if c is not None and c.n > 0:
            return c
        if cold_start:
            return None
        marginal = self.hint_counts(key.hint)
        return marginal if marginal.n > 0 else None

    def distributions(self, key: FeatureKey, cold_start: bool = False
                      ) -> tuple[np.ndarray, np.ndarray]:
        """Smoothed (3 x 99) token distributions and [continue, land] distribution."""
        c = self.evidence(key, cold_start) or Counts.zeros()
        a = self.alpha
        tok = (c.tokens + a) / (c.tokens.sum(axis=1, keepdims=True) + a * N_BINS)
        land = (c.land + a) / (c.land.sum() + 2 * a)
        return tok, land

    def __eq__(self, other):
        if not isinstance(other, TabularBCModel):
            return NotImplemented
        if (self.alpha, self.land_threshold) != (other.alpha, other.land_threshold):
            return False
        if set(self.counts) != set(other.counts):
            return False
        return all(
            np.array_equal(c.tokens, other.counts[k].tokens)
            and np.array_equal(c.land, other.counts[k].land)
            for k, c in self.counts.items()
        )

    def to_dict(self) -> dict:
        keys = {}
        for k in sorted(self.counts, key=FeatureKey.to_text):
            c = self.counts[k]
            keys[k.to_text()] = {
                "dx": c.tokens[0].tolist(),
                "dz": c.tokens[1].tolist(),
                "dpsi": c.tokens[2].tolist(),
                "land": c.land.tolist(),
            }
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "alpha": self.alpha,
            "land_threshold": self.land_threshold,
            "n_bins": N_BINS,
            "keys": keys,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TabularBCModel":
        if d.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format_version {d.get('format_version')!r}")
        counts = {}
        for text, v in d["keys"].items():
            counts[FeatureKey.from_text(text)] = Counts(
                np.array([v["dx"], v["dz"], v["dpsi"]], dtype=np.int64),
                np.array(v["land"], dtype=np.int64),
            )
        return cls(counts, d["alpha"], d["land_threshold"])

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def train(samples: Iterable[tuple[FeatureKey, ActionTokens]], alpha: float = 1.0,
          land_threshold: float = 0.5) -> TabularBCModel:
    model = TabularBCModel({}, alpha, land_threshold)
    n = 0
    for key, label in samples:
        model.add(key, label)
        n += 1
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    return model


def predict(model: TabularBCModel, key: FeatureKey, cold_start: bool = False) -> ActionTokens:
    """LAND if the smoothed land probability exceeds the threshold, else per-dimension argmax.

    Ties go to the smaller token index.
    """
    tok, land = model.distributions(key, cold_start)
    if land[1] > model.land_threshold:
        return LAND
    return ActionTokens(tuple(int(np.argmax(tok[d])) for d in range(3)))


def sample_nll(model: TabularBCModel, key: FeatureKey, label: ActionTokens,
               cold_start: bool = False) -> float:
    tok, land = model.distributions(key, cold_start)
    triple, is_land = _label_parts(label)
    total = -math.log(land[is_land])
    for dim, t in enumerate(triple):
        total -= math.log(tok[dim, t])
    return total


def nll(model: TabularBCModel, samples: Iterable[tuple[FeatureKey, ActionTokens]],
        cold_start: bool = False) -> float:
    """Mean over samples of the summed per-dimension and land negative log-likelihoods (nats)."""
    values = [sample_nll(model, k, y, cold_start) for k, y in samples]
    if not values:
        raise ValueError("nll of an empty sample set")
    return math.fsum(values) / len(values)


class BCPolicy:
    """Closed-loop policy: featurize the observation, then predict tokens."""

    def __init__(self, model: TabularBCModel, cold_start: bool = False,
                 hover_offset: float = HOVER_OFFSET):
        self.model = model
        self.cold_start = cold_start
        self.hover_offset = hover_offset
        self._cache: dict = {}

    def __call__(self, obs: Observation) -> ActionTokens:
        key = featurize(obs, obs.scene, self.hover_offset)
        out = self._cache.get(key)
        if out is None:
            out = self._cache[key] = predict(self.model, key, self.cold_start)
        return out


def cold_start_ablation_mode(model: TabularBCModel, flag: bool) -> Callable[[FeatureKey], ActionTokens]:
    """Return a predictor; with ``flag`` set, unseen keys back off to uniform instead of hint marginals."""
    def _predict(key: FeatureKey) -> ActionTokens:
        return predict(model, key, cold_start=flag)
    return _predict

"""Run configuration: one JSON file drives every pipeline stage."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

from .expert import ExpertConfig
from .sim import GenerationConfig

CONFIG_FORMAT_VERSION = 1
ABLATIONS = ("cold-start", "5-view-noop")


def parse_seed_range(text: str) -> tuple[int, int]:
    """``"a..b"`` -> (a, b), both inclusive."""
    try:
        a, b = text.split("..")
        lo, hi = int(a), int(b)
    except ValueError:
        raise ValueError(f"seed range must look like 'a..b', got {text!r}") from None
    if hi < lo:
        raise ValueError(f"empty seed range {text!r}")
    return lo, hi


def seeds_of(text: str) -> range:
    lo, hi = parse_seed_range(text)
    return range(lo, hi + 1)


@dataclass(frozen=True)
class RunConfig:
    train_seeds: str = "0..199"
    heldout_seeds: str = "100000..100199"
    train_difficulty: str = "easy"
    heldout_difficulty: str = "easy"
    # held-out starts with the target off to the side, |bearing| in this range (deg)
    heldout_start_bearing_deg: Optional[tuple[float, float]] = (60.0, 180.0)
    delay_k: int = 3
    filter: bool = True
    ablation: Optional[str] = None
    max_steps: int = 200
    alpha: float = 1.0
    land_threshold: float = 0.5
    clear_side_depth: float = 20.0
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    expert: ExpertConfig = field(default_factory=ExpertConfig)

    def validate(self) -> "RunConfig":
        a = seeds_of(self.train_seeds)
        b = seeds_of(self.heldout_seeds)
        if a.start <= b.stop - 1 and b.start <= a.stop - 1:
            raise ValueError("train and held-out seed ranges overlap")
        for d in (self.train_difficulty, self.heldout_difficulty):
            if d not in ("easy", "hard"):
                raise ValueError(f"unknown difficulty {d!r}")
        if self.delay_k < 0:
            raise ValueError("delay_k must be >= 0")
        if self.ablation is not None and self.ablation not in ABLATIONS:
            raise ValueError(f"unknown ablation {self.ablation!r}; choose from {ABLATIONS}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        self.generation.validate()
        return self

    def heldout_generation(self) -> GenerationConfig:
        return replace(self.generation, start_bearing_deg=self.heldout_start_bearing_deg)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["format_version"] = CONFIG_FORMAT_VERSION
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        version = d.pop("format_version", CONFIG_FORMAT_VERSION)
        if version != CONFIG_FORMAT_VERSION:
            raise ValueError(f"unsupported config format_version {version!r}")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "generation" in d:
            d["generation"] = GenerationConfig.from_dict(d["generation"])
        if "expert" in d:
            d["expert"] = ExpertConfig(**d["expert"])
        if d.get("heldout_start_bearing_deg") is not None:
            d["heldout_start_bearing_deg"] = tuple(d["heldout_start_bearing_deg"])
        return cls(**d).validate()

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

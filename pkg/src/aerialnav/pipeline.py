"""File-mediated pipeline stages. Each stage reads and writes under one run directory.

Layout::

    run/
      config.json
      scenes/train/seed_000000.json ...   gen-scenes
      scenes/heldout/seed_100000.json ...
      trajectories.jsonl                   record
      curated.jsonl, filter_report.json    curate
      model.json, train_log.json           train-bc
      results.csv, summary.json            eval
      plots/*.svg                          plot
"""
from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Iterable, Optional

from .bc import BCPolicy, TabularBCModel, nll, train, training_samples
from .config import RunConfig, seeds_of
from .curation import filter_trajectories
from .evaluation import evaluate, results_csv, summarize
from .expert import (
    DelayedPolicy,
    ExpertPolicy,
    Trajectory,
    dumps_trajectories,
    loads_trajectories,
    record_episode,
)
from .mosaic import composite_for, write_pgm
from .plot import trajectory_svg
from .sim import Scene, generate_scene

log = logging.getLogger(__name__)

SPLITS = ("train", "heldout")


class PipelineError(RuntimeError):
    """A stage could not run; ``code`` is a short machine-readable reason."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".partial")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def read_text(path: Path) -> str:
    path = Path(path)
    if not path.is_file():
        raise PipelineError("missing-input", f"{path} does not exist")
    return path.read_text(encoding="utf-8")


def read_json(path: Path):
    text = read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise PipelineError("invalid-input", f"{path}: {e}") from None


def scene_path(run: Path, split: str, seed: int) -> Path:
    return Path(run) / "scenes" / split / f"seed_{seed:06d}.json"


def split_seeds(cfg: RunConfig, split: str) -> range:
    return seeds_of(cfg.train_seeds if split == "train" else cfg.heldout_seeds)


def make_scene(cfg: RunConfig, split: str, seed: int) -> Scene:
    if split == "train":
        return generate_scene(seed, cfg.train_difficulty, cfg.generation)
    return generate_scene(seed, cfg.heldout_difficulty, cfg.heldout_generation())


def gen_scenes(cfg: RunConfig, run: Path, splits: Iterable[str] = SPLITS,
               seeds: Optional[range] = None) -> int:
    n = 0
    for split in splits:
        for seed in seeds if seeds is not None else split_seeds(cfg, split):
            scene = make_scene(cfg, split, seed)
            write_atomic(scene_path(run, split, seed),
                         json.dumps(scene.to_dict(), sort_keys=True, indent=1) + "\n")
            n += 1
    return n


def load_scenes(cfg: RunConfig, run: Path, split: str, seeds: Optional[range] = None) -> list[Scene]:
    out = []
    for seed in seeds if seeds is not None else split_seeds(cfg, split):
        try:
            out.append(Scene.from_dict(read_json(scene_path(run, split, seed))))
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, PipelineError):
                raise
            raise PipelineError("invalid-input", f"scene seed {seed}: {e}") from None
    return out


def load_trajectories(path: Path) -> list[Trajectory]:
    text = read_text(path)
    try:
        return loads_trajectories(text)
    except (KeyError, TypeError, ValueError) as e:
        raise PipelineError("invalid-input", f"{path}: {e}") from None


def record(cfg: RunConfig, run: Path, seeds: Optional[range] = None,
           dump_composite: Optional[Path] = None) -> list[Trajectory]:
    scenes = load_scenes(cfg, run, "train", seeds)
    policy = DelayedPolicy(ExpertPolicy(cfg.expert), cfg.delay_k)
    trajs = [record_episode(s, policy, cfg.max_steps) for s in scenes]
    write_atomic(Path(run) / "trajectories.jsonl", dumps_trajectories(trajs))
    if dump_composite is not None:
        for s in scenes:
            write_pgm_atomic(Path(dump_composite) / f"seed_{s.seed:06d}.pgm", s)
    return trajs


def write_pgm_atomic(path: Path, scene: Scene) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".partial")
    write_pgm(tmp, composite_for(scene, scene.start))
    os.replace(tmp, path)


def curate(cfg: RunConfig, run: Path):
    src = Path(run) / "trajectories.jsonl"
    dst = Path(run) / "curated.jsonl"
    if not cfg.filter:
        # pass-through keeps the input bytes untouched
        write_atomic(dst, read_text(src))
        return None
    trajs = load_trajectories(src)
    kept, report = filter_trajectories(trajs, cfg.clear_side_depth)
    write_atomic(dst, dumps_trajectories(kept))
    write_atomic(Path(run) / "filter_report.json",
                 json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n")
    log.info("curate: discarded %d of %d frames", report.discarded, report.total_frames)
    return report


def train_bc(cfg: RunConfig, run: Path) -> TabularBCModel:
    trajs = load_trajectories(Path(run) / "curated.jsonl")
    samples = training_samples(trajs)
    if not samples:
        raise PipelineError("empty-dataset", "no frames to train on")
    model = train(samples, cfg.alpha, cfg.land_threshold)
    write_atomic(Path(run) / "model.json", model.dumps() + "\n")
    train_log = {
        "format_version": 1,
        "frames": len(samples),
        "keys": len(model.counts),
        "train_nll": nll(model, samples),
    }
    write_atomic(Path(run) / "train_log.json", json.dumps(train_log, sort_keys=True, indent=2) + "\n")
    return model


def load_model(run: Path) -> TabularBCModel:
    try:
        return TabularBCModel.from_dict(read_json(Path(run) / "model.json"))
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, PipelineError):
            raise
        raise PipelineError("invalid-input", f"model.json: {e}") from None


def make_policy(cfg: RunConfig, run: Path, name: str):
    if name == "expert":
        return ExpertPolicy(cfg.expert)
    if name == "bc":
        return BCPolicy(load_model(run), cold_start=cfg.ablation == "cold-start",
                        hover_offset=cfg.expert.hover_offset)
    raise PipelineError("bad-argument", f"unknown policy {name!r}")


def run_eval(cfg: RunConfig, run: Path, policy_name: str = "bc"):
    scenes = load_scenes(cfg, run, "heldout")
    policy = make_policy(cfg, run, policy_name)
    results = evaluate(scenes, policy, cfg.max_steps)
    summary = summarize(results)
    write_atomic(Path(run) / "results.csv", results_csv(results))
    doc = summary.to_dict()
    doc["policy"] = policy_name
    doc["ablation"] = cfg.ablation
    write_atomic(Path(run) / "summary.json", json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return results, summary


def plot(cfg: RunConfig, run: Path, trajectories: Optional[Path] = None) -> list[Path]:
    path = Path(trajectories) if trajectories else Path(run) / "trajectories.jsonl"
    written = []
    for t in load_trajectories(path):
        split = "train" if t.seed in split_seeds(cfg, "train") else "heldout"
        p = scene_path(run, split, t.seed)
        scene = Scene.from_dict(read_json(p)) if p.is_file() else make_scene(cfg, split, t.seed)
        out = Path(run) / "plots" / f"seed_{t.seed:06d}.svg"
        write_atomic(out, trajectory_svg(t, scene))
        written.append(out)
    return written


def run_all(cfg: RunConfig, run: Path):
    run = Path(run)
    write_atomic(run / "config.json", cfg.dumps())
    gen_scenes(cfg, run)
    record(cfg, run)
    curate(cfg, run)
    train_bc(cfg, run)
    return run_eval(cfg, run)

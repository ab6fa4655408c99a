"""Command-line entry point: ``aerialnav <command> --config cfg.json --out run/``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from .codec_check import run_codec_checks
from .config import RunConfig, parse_seed_range, seeds_of
from .pipeline import (
    PipelineError,
    curate,
    gen_scenes,
    plot,
    read_text,
    record,
    run_all,
    run_eval,
    train_bc,
    write_atomic,
)

COMMANDS = ("gen-scenes", "record", "curate", "train-bc", "eval", "codec-check", "plot", "run")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aerialnav", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="run config JSON (defaults if omitted)")
        sp.add_argument("--out", type=Path, required=True, help="run directory")
        sp.add_argument("--filter", choices=("on", "off"))
        sp.add_argument("--delay-k", type=int)
        sp.add_argument("--ablation", choices=("cold-start", "5-view-noop"))
        sp.add_argument("--seed-range", help="override seeds, 'a..b' inclusive")
        return sp

    common(sub.add_parser("gen-scenes", help="write scene JSON files"))
    sp = common(sub.add_parser("record", help="record expert demonstrations"))
    sp.add_argument("--dump-composite", type=Path, help="write start-pose composite PGMs here")
    common(sub.add_parser("curate", help="geometry-consistent frame filtering"))
    common(sub.add_parser("train-bc", help="train the tabular BC policy"))
    sp = common(sub.add_parser("eval", help="closed-loop evaluation on held-out scenes"))
    sp.add_argument("--policy", choices=("bc", "expert"), default="bc")
    sp = sub.add_parser("codec-check", help="run the codec property suite")
    sp.add_argument("--samples", type=int, default=10_000)
    sp = common(sub.add_parser("plot", help="top-down SVG per trajectory"))
    sp.add_argument("--trajectories", type=Path, help="JSONL to plot (default: run trajectories)")
    common(sub.add_parser("run", help="gen-scenes, record, curate, train-bc, eval"))
    return p


def load_config(args) -> RunConfig:
    if args.config is not None:
        try:
            cfg = RunConfig.loads(read_text(args.config))
        except (TypeError, KeyError, json.JSONDecodeError) as e:
            raise PipelineError("invalid-config", f"{args.config}: {e}") from None
    else:
        cfg = RunConfig()
    over = {}
    if args.filter is not None:
        over["filter"] = args.filter == "on"
    if args.delay_k is not None:
        over["delay_k"] = args.delay_k
    if args.ablation is not None:
        over["ablation"] = args.ablation
    return replace(cfg, **over).validate() if over else cfg


def _fail(code: str, message: str) -> int:
    msg = " ".join(str(message).split()).replace('"', "'")
    print(f'error code={code} message="{msg}"', file=sys.stderr)
    return 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except PipelineError as e:
        return _fail(e.code, e)
    except ValueError as e:
        return _fail("invalid-argument", e)
    except OSError as e:
        return _fail("io-error", e)


def _dispatch(args) -> int:
    if args.command == "codec-check":
        t0 = time.perf_counter()
        results = run_codec_checks(args.samples)
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
        print(f"elapsed {time.perf_counter() - t0:.3f}s")
        return 0 if all(r.passed for r in results) else 1

    cfg = load_config(args)
    run = args.out
    seeds = seeds_of(args.seed_range) if args.seed_range else None
    if args.command == "gen-scenes":
        if seeds is not None:
            n = gen_scenes(cfg, run, ("train",), seeds)
        else:
            n = gen_scenes(cfg, run)
        write_atomic(Path(run) / "config.json", cfg.dumps())
        print(f"wrote {n} scenes")
    elif args.command == "record":
        trajs = record(cfg, run, seeds, args.dump_composite)
        print(f"recorded {len(trajs)} trajectories, {sum(len(t.frames) for t in trajs)} frames")
    elif args.command == "curate":
        report = curate(cfg, run)
        if report is None:
            print("filter off: copied trajectories unchanged")
        else:
            print(json.dumps(report.to_dict(), sort_keys=True))
    elif args.command == "train-bc":
        model = train_bc(cfg, run)
        print(f"trained on {sum(c.n for c in model.counts.values())} frames, {len(model.counts)} keys")
    elif args.command == "eval":
        _, summary = run_eval(cfg, run, args.policy)
        print(json.dumps(summary.to_dict(), sort_keys=True))
    elif args.command == "plot":
        written = plot(cfg, run, args.trajectories)
        print(f"wrote {len(written)} SVG files")
    elif args.command == "run":
        _, summary = run_all(cfg, run)
        print(json.dumps(summary.to_dict(), sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())

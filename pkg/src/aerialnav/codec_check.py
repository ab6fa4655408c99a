"""Self-contained property checks for the action codec (the ``codec-check`` command)."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .codec import (
    BIN_WIDTHS,
    MAX_TOKEN,
    RANGES,
    ZERO_ACTION,
    Action,
    ActionTokens,
    dequantize,
    is_landing,
    quantize,
)


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def run_codec_checks(n: int = 10_000, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []

    samples = np.column_stack([rng.uniform(lo, hi, n) for lo, hi in RANGES])
    worst = np.zeros(3)
    for row in samples:
        back = dequantize(quantize(Action(*row))).as_tuple()
        worst = np.maximum(worst, np.abs(np.array(back) - row))
    half = np.array(BIN_WIDTHS) / 2
    out.append(CheckResult("round-trip within half a bin", bool(np.all(worst <= half + 1e-12)),
                           f"max error {worst.tolist()} vs half-bin {half.tolist()}"))

    triples = rng.integers(0, MAX_TOKEN + 1, size=(n, 3))
    bad = sum(quantize(dequantize(ActionTokens(tuple(t)))).triple != tuple(int(v) for v in t)
              for t in triples)
    out.append(CheckResult("token grid is a fixed point", bad == 0, f"{bad} mismatches of {n}"))

    mono = True
    for dim, (lo, hi) in enumerate(RANGES):
        vals = np.sort(rng.uniform(lo, hi, 2000))
        toks = []
        for v in vals:
            a = [0.0, 0.0, 0.0]
            a[dim] = float(v)
            toks.append(quantize(Action(*a)).triple[dim])
        mono &= all(x <= y for x, y in zip(toks, toks[1:]))
    out.append(CheckResult("quantize is monotone", mono, "per-dimension sorted sweep"))

    z = quantize(ZERO_ACTION)
    out.append(CheckResult("zero action encodes to (0, 49, 49)", z.triple == (0, 49, 49), str(z)))
    out.append(CheckResult("zero label triggers landing", is_landing(z), str(z)))
    out.append(CheckResult("endpoints decode exactly",
                           dequantize(ActionTokens((98, 0, 0))).as_tuple() == (5.0, -5.0, -math.pi),
                           "(98, 0, 0)"))
    return out

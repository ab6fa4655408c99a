"""Fuzzy directional hints and the single-line instruction prompt."""
from __future__ import annotations

import math

STRAIGHT = "straight ahead"
FORWARD_RIGHT = "forward-right"
FORWARD_LEFT = "forward-left"
RIGHT = "to your right"
LEFT = "to your left"
RIGHT_REAR = "to your right rear"
LEFT_REAR = "to your left rear"

HINTS = (STRAIGHT, FORWARD_RIGHT, FORWARD_LEFT, RIGHT, LEFT, RIGHT_REAR, LEFT_REAR)
MIRROR = {
    STRAIGHT: STRAIGHT,
    FORWARD_RIGHT: FORWARD_LEFT,
    FORWARD_LEFT: FORWARD_RIGHT,
    RIGHT: LEFT,
    LEFT: RIGHT,
    RIGHT_REAR: LEFT_REAR,
    LEFT_REAR: RIGHT_REAR,
}

# bucket upper edges, inclusive
STRAIGHT_MAX = math.radians(15.0)
FORWARD_MAX = math.radians(60.0)
SIDE_MAX = math.radians(120.0)

IMAGE_PLACEHOLDER = "<image>"
PROMPT_TEMPLATE = IMAGE_PLACEHOLDER + " The target is {hint}. Fly to and land at {description}."


def fuzzy_hint(theta: float) -> str:
    """Coarse phrase for a relative bearing in radians (positive = right).

    Bucket upper edges are inclusive. |theta| = 180 deg has no side, and is
    reported as right rear.
    """
    if not abs(theta) <= math.pi:
        raise ValueError(f"bearing {theta!r} outside [-pi, pi]")
    mag = abs(theta)
    if mag <= STRAIGHT_MAX:
        return STRAIGHT
    right = theta > 0 or mag >= math.pi
    if mag <= FORWARD_MAX:
        return FORWARD_RIGHT if right else FORWARD_LEFT
    if mag <= SIDE_MAX:
        return RIGHT if right else LEFT
    return RIGHT_REAR if right else LEFT_REAR


def is_lateral(theta: float) -> bool:
    """Target beside or behind the agent (|theta| > 60 deg)."""
    return abs(theta) > FORWARD_MAX


def build_prompt(hint: str, description: str) -> str:
    if hint not in HINTS:
        raise ValueError(f"unknown hint {hint!r}")
    description = " ".join(description.split())
    if not description:
        raise ValueError("target description must be non-empty")
    return PROMPT_TEMPLATE.format(hint=hint, description=description)


def hints_in(text: str) -> list[str]:
    """Hint phrases present in ``text``, longest match first, no overlaps."""
    found = []
    remaining = text
    for phrase in sorted(HINTS, key=len, reverse=True):
        while phrase in remaining:
            found.append(phrase)
            remaining = remaining.replace(phrase, "\0", 1)
    return found

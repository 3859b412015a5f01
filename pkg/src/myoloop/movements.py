"""Canonical movement vocabulary shared across the pipeline.

Movement ids are plain strings; ordering (and therefore classifier
tie-breaking) follows the registry below, with unknown ids sorted after the
registry lexicographically.
"""
from __future__ import annotations

REST = "Rest"
HAND_OPEN = "Hand Open"
POWER_GRASP = "Power Grasp"
WRIST_PRONATE = "Wrist Pronate"
WRIST_SUPINATE = "Wrist Supinate"
TRIPOD_GRASP = "Tripod Grasp"
KEY_GRASP = "Key Grasp"
INDEX_POINT = "Index Point"
PRECISION_PINCH = "Precision Pinch"

#: Registry order doubles as the numeric movement id for tie-breaking.
MOVEMENT_ORDER: tuple[str, ...] = (
    REST,
    HAND_OPEN,
    POWER_GRASP,
    WRIST_PRONATE,
    WRIST_SUPINATE,
    TRIPOD_GRASP,
    KEY_GRASP,
    INDEX_POINT,
    PRECISION_PINCH,
)

#: Hand-closing gestures eligible as cursor-task prompts.
CLOSING_GESTURES: tuple[str, ...] = (
    POWER_GRASP,
    TRIPOD_GRASP,
    KEY_GRASP,
    INDEX_POINT,
    PRECISION_PINCH,
)

#: Wrist rotation movements (drive cursor orientation).
WRIST_MOVEMENTS: tuple[str, ...] = (WRIST_PRONATE, WRIST_SUPINATE)


def movement_sort_key(movement: str) -> tuple[int, str]:
    """Sort key: registry position first, lexicographic for unknown ids."""
    try:
        return (MOVEMENT_ORDER.index(movement), movement)
    except ValueError:
        return (len(MOVEMENT_ORDER), movement)

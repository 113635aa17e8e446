"""Greedy tolerance scan for picking representative frames."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ImageMismatch, InvalidInput, InvalidParameter


@dataclass(frozen=True)
class KeyframeSelection:
    tolerance: float
    selected: tuple[int, ...]


def frame_distance(a, b) -> float:
    """Euclidean distance between two flattened frames."""
    a = np.asarray(a).ravel().astype(np.int64)
    b = np.asarray(b).ravel().astype(np.int64)
    if a.shape != b.shape:
        raise ImageMismatch(f"frame lengths differ: {a.size} vs {b.size}")
    d = a - b
    return math.sqrt(int(d @ d))


def select_keyframes(frames: Iterable, tolerance: float) -> KeyframeSelection:
    """Scan frames in order, keeping each one that is farther than ``tolerance``
    from the last kept frame. The first frame is always kept.

    ``frames`` may be any iterable of arrays; only the current base frame is
    held in memory.
    """
    if tolerance < 0:
        raise InvalidParameter("tolerance must be non-negative")
    base = None
    selected = []
    for index, frame in enumerate(frames):
        vec = np.asarray(frame).ravel()
        if base is None:
            base = vec
            selected.append(index)
        elif frame_distance(base, vec) > tolerance:
            base = vec
            selected.append(index)
    if base is None:
        raise InvalidInput("no frames to select from")
    return KeyframeSelection(tolerance=float(tolerance), selected=tuple(selected))

"""Bilateral asymmetry and movement measures on landmark sets and frames."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import geometry
from .errors import (
    EmptyRegion,
    InvalidParameter,
    NotAReflection,
    ShapeMismatch,
    UnbalancedSplit,
    UndefinedCorrelation,
)
from .geometry import Alignment
from .imaging import GrayImage, RgbImage, brightness_normalize, sample_bilinear, to_gray

BY_INDEX_ORDER = "by-index-order"


@dataclass(frozen=True)
class LandmarkScheme:
    """How a landmark set is divided into corresponding left and right halves.

    With ``pairs=None`` points are split at the median x coordinate and matched
    by ascending index within each side. An explicit ``pairs`` list of
    ``(left_index, right_index)`` tuples overrides that.
    """

    n: int
    pairs: Optional[tuple[tuple[int, int], ...]] = None
    tie_rule: str = "left"

    def __post_init__(self):
        if self.tie_rule not in ("left", "right"):
            raise InvalidParameter(f"tie_rule must be 'left' or 'right', got {self.tie_rule!r}")
        if self.pairs is None:
            if self.n % 2:
                raise InvalidParameter("median splitting needs an even number of points")
            return
        pairs = tuple((int(a), int(b)) for a, b in self.pairs)
        flat = [i for pair in pairs for i in pair]
        if not pairs or len(set(flat)) != len(flat):
            raise InvalidParameter("mirror pairs must be non-empty and disjoint")
        if min(flat) < 0 or max(flat) >= self.n:
            raise InvalidParameter("mirror pair index out of range")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_json(cls, text: str) -> "LandmarkScheme":
        """Parse ``{"n": 68, "pairing": "by-index-order" | [[l, r], ...], "tie_rule": "left"}``."""
        raw = json.loads(text)
        pairing = raw.get("pairing", BY_INDEX_ORDER)
        pairs = None if pairing == BY_INDEX_ORDER else tuple(tuple(p) for p in pairing)
        return cls(n=int(raw["n"]), pairs=pairs, tie_rule=raw.get("tie_rule", "left"))

    @classmethod
    def load(cls, path) -> "LandmarkScheme":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class SideSplit:
    left: np.ndarray
    right: np.ndarray
    left_indices: np.ndarray
    right_indices: np.ndarray


@dataclass(frozen=True)
class FrameMetrics:
    frame_index: int
    asymmetry: float
    left_movement: float
    right_movement: float
    overall_movement: float
    degenerate: bool = False


@dataclass(frozen=True)
class PixelAsymmetry:
    mean_abs_diff: float
    median_abs_diff: int
    histogram: np.ndarray
    overlap_pixel_count: int


def _points(lm, scheme: LandmarkScheme) -> np.ndarray:
    pts = np.asarray(lm, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ShapeMismatch(f"expected (n, 2) points, got {pts.shape}")
    if pts.shape[0] != scheme.n:
        raise ShapeMismatch(f"scheme expects {scheme.n} points, frame has {pts.shape[0]}")
    return pts


def split_left_right(lm, scheme: LandmarkScheme) -> SideSplit:
    pts = _points(lm, scheme)
    if scheme.pairs is not None:
        left_idx = np.array([p[0] for p in scheme.pairs])
        right_idx = np.array([p[1] for p in scheme.pairs])
    else:
        xs = pts[:, 0]
        median = float(np.median(xs))
        ties = xs == median
        is_left = (xs < median) | (ties & (scheme.tie_rule == "left"))
        is_right = (xs > median) | (ties & (scheme.tie_rule == "right"))
        left_idx, right_idx = np.nonzero(is_left)[0], np.nonzero(is_right)[0]
        if len(left_idx) != len(right_idx):
            raise UnbalancedSplit(
                f"median split gave {len(left_idx)} left and {len(right_idx)} right points"
            )
    return SideSplit(pts[left_idx], pts[right_idx], left_idx, right_idx)


def measure_one(lm, scheme: LandmarkScheme) -> tuple[float, Alignment]:
    """Shape asymmetry: residual after mirroring the right half onto the left.

    The right-side points are rotated, reflected and translated onto the
    left-side points; the remaining Procrustes distance (pixels) is returned
    with the alignment that produced it.
    """
    split = split_left_right(lm, scheme)
    alignment = geometry.full_alignment(split.right, split.left, allow_reflection=True)
    return alignment.residual, alignment


def _side_indices(split: SideSplit, side: str) -> np.ndarray:
    if side == "left":
        return split.left_indices
    if side == "right":
        return split.right_indices
    raise InvalidParameter(f"side must be 'left' or 'right', got {side!r}")


def movement_from_neutral(lm, neutral, side: str, scheme: LandmarkScheme) -> float:
    """Rigid-motion-compensated distance of one half of the face from neutral.

    The landmark indices of each side come from the neutral frame's split, so
    the frame and the neutral shape are always compared point for point.
    """
    pts = _points(lm, scheme)
    idx = _side_indices(split_left_right(neutral, scheme), side)
    neutral_pts = _points(neutral, scheme)
    return geometry.full_alignment(pts[idx], neutral_pts[idx], allow_reflection=False).residual


def overall_movement(left: float, right: float) -> float:
    return (left + right) / 2.0


def frame_metrics(lm, neutral, scheme: LandmarkScheme, frame_index: int = 0) -> FrameMetrics:
    asym, alignment = measure_one(lm, scheme)
    neutral_split = split_left_right(neutral, scheme)
    pts, neutral_pts = _points(lm, scheme), _points(neutral, scheme)
    moves = []
    degenerate = alignment.degenerate
    for idx in (neutral_split.left_indices, neutral_split.right_indices):
        fit = geometry.full_alignment(pts[idx], neutral_pts[idx], allow_reflection=False)
        moves.append(fit.residual)
        degenerate = degenerate or fit.degenerate
    left, right = moves
    return FrameMetrics(
        frame_index=frame_index,
        asymmetry=asym,
        left_movement=left,
        right_movement=right,
        overall_movement=overall_movement(left, right),
        degenerate=degenerate,
    )


# -- pixel measure ------------------------------------------------------------

def _hull_contains(equations: np.ndarray, xs: np.ndarray, ys: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    inside = np.ones(xs.shape, bool)
    for a, b, c in equations:
        inside &= a * xs + b * ys + c <= tol
    return inside


def lower_median(histogram: np.ndarray) -> int:
    """Smallest value whose cumulative count reaches half the total (rounded up)."""
    total = int(histogram.sum())
    if total == 0:
        raise EmptyRegion("histogram is empty")
    return int(np.searchsorted(np.cumsum(histogram), (total + 1) // 2))


def symmetry_axis(lm, scheme: LandmarkScheme) -> geometry.SymmetryAxis:
    """Mirror line of the face, through the centroid of all landmarks."""
    _, alignment = measure_one(lm, scheme)
    if not alignment.orthogonal.is_reflection:
        raise NotAReflection("best right-to-left fit is a rotation; no symmetry axis")
    return geometry.axis_from_orthogonal(alignment.orthogonal, geometry.centroid(lm))


def measure_two(
    frame: Union[GrayImage, RgbImage],
    lm,
    scheme: LandmarkScheme,
    normalize_brightness: bool = True,
) -> PixelAsymmetry:
    """Pixel asymmetry: grey-level difference between the left half of the face
    and the right half mirrored across the symmetry axis.

    The face region is the convex hull of the landmarks. Right-side texture is
    resampled bilinearly at the mirror image of every left-side pixel; the
    comparison uses the pixels where both are available.
    """
    gray = to_gray(frame) if isinstance(frame, RgbImage) else frame
    pts = _points(lm, scheme)
    axis = symmetry_axis(pts, scheme)
    split = split_left_right(pts, scheme)

    try:
        hull = ConvexHull(pts)
    except QhullError:
        raise EmptyRegion("landmarks do not span a 2-D region") from None

    h, w = gray.height, gray.width
    rows, cols = np.mgrid[0:h, 0:w]
    xs, ys = cols.ravel().astype(np.float64), rows.ravel().astype(np.float64)
    grid = np.column_stack([xs, ys])

    left_sign = math.copysign(1.0, float(geometry.side_of_axis(split.left.mean(axis=0, keepdims=True), axis)[0]))
    offsets = geometry.side_of_axis(grid, axis) * left_sign
    left_mask = _hull_contains(hull.equations, xs, ys) & (offsets > 1e-9)
    if not left_mask.any():
        raise EmptyRegion("no left-side face pixels inside the frame")

    mirrored = geometry.reflect_points(grid[left_mask], axis)
    values, in_image = sample_bilinear(gray.pixels, mirrored[:, 0], mirrored[:, 1])
    in_face = _hull_contains(hull.equations, mirrored[:, 0], mirrored[:, 1])

    valid = np.zeros(h * w, bool)
    valid[np.flatnonzero(left_mask)[in_image & in_face]] = True
    if not valid.any():
        raise EmptyRegion("left half and mirrored right half do not overlap")

    reflected = np.zeros(h * w)
    reflected[left_mask] = values
    reflected = np.clip(np.rint(reflected), 0, 255).astype(np.uint8).reshape(h, w)
    valid = valid.reshape(h, w)

    left_img = GrayImage(np.where(valid, gray.pixels, 0), mask=valid)
    right_img = GrayImage(np.where(valid, reflected, 0), mask=valid)
    if normalize_brightness:
        right_img = brightness_normalize(right_img, left_img)

    diffs = np.abs(left_img.pixels[valid].astype(np.int64) - right_img.pixels[valid].astype(np.int64))
    histogram = np.bincount(diffs, minlength=256)
    return PixelAsymmetry(
        mean_abs_diff=float(diffs.sum()) / diffs.size,
        median_abs_diff=lower_median(histogram),
        histogram=histogram,
        overlap_pixel_count=int(diffs.size),
    )


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample covariance over the product of sample standard deviations."""
    x, y = np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidParameter("pearson needs two sequences of equal length")
    if x.size < 2:
        raise UndefinedCorrelation("need at least two observations")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if np.all(x == x[0]) or np.all(y == y[0]) or sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelation("correlation is undefined for a constant series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))

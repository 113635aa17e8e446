"""Planar shape arithmetic: centring, scaling, Procrustes fits and reflections.

Point sets are ``(n, 2)`` arrays with one point per row. Orthogonal transforms
act on the right, so a transformed set is ``points @ matrix``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DegenerateAlignment,
    DegenerateShape,
    InvalidShape,
    NotAReflection,
    ShapeMismatch,
)

# Cross-covariance norm (on unit-scaled inputs) below which no rotation is preferred.
_DEGENERATE_CROSS = 1e-12
# |sin(theta/2)| below this makes the symmetry axis vertical.
_VERTICAL_EPS = 1e-12


@dataclass(frozen=True)
class Landmarks:
    """One frame's ordered landmark set.

    Row ``i`` always refers to the same anatomical landmark, so ordering matters.
    """

    points: np.ndarray
    frame_index: Optional[int] = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidShape(f"expected an (n, 2) array of points, got shape {pts.shape}")
        if pts.shape[0] < 3:
            raise InvalidShape(f"a landmark set needs at least 3 points, got {pts.shape[0]}")
        if not np.all(np.isfinite(pts)):
            raise InvalidShape("landmark coordinates must be finite")
        if self.frame_index is not None and self.frame_index < 0:
            raise InvalidShape("frame_index must be non-negative")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.points if dtype is None else self.points.astype(dtype)


@dataclass(frozen=True)
class OrthogonalTransform2:
    """A 2x2 rotation or reflection, applied as ``points @ matrix``."""

    matrix: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.shape != (2, 2):
            raise ValueError("orthogonal transform must be 2x2")
        if not np.allclose(m.T @ m, np.eye(2), atol=1e-9):
            raise ValueError("matrix is not orthogonal")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def determinant_sign(self) -> int:
        return 1 if np.linalg.det(self.matrix) > 0 else -1

    @property
    def is_reflection(self) -> bool:
        return self.determinant_sign < 0

    def apply(self, points) -> np.ndarray:
        return _as_points(points) @ self.matrix


@dataclass(frozen=True)
class Alignment:
    """Rigid (or rigid plus mirror) map of a source shape onto a target.

    ``residual`` is the Procrustes distance, in pixels, between the target and
    the mapped source.
    """

    orthogonal: OrthogonalTransform2
    translation: np.ndarray
    residual: float
    degenerate: bool = False

    def apply(self, points) -> np.ndarray:
        return self.orthogonal.apply(points) + self.translation


@dataclass(frozen=True)
class SymmetryAxis:
    """A mirror line through ``through``: either slope ``m`` or vertical."""

    through: tuple[float, float]
    slope: Optional[float] = None
    vertical: bool = False

    def __post_init__(self):
        if self.vertical == (self.slope is not None):
            raise ValueError("give exactly one of a finite slope or vertical=True")
        if self.slope is not None and not math.isfinite(self.slope):
            raise ValueError("slope must be finite; use vertical=True instead")

    @property
    def direction(self) -> np.ndarray:
        """Unit vector along the axis."""
        if self.vertical:
            return np.array([0.0, 1.0])
        d = np.array([1.0, self.slope])
        return d / np.hypot(*d)


def _as_points(shape) -> np.ndarray:
    pts = np.asarray(shape, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidShape(f"expected an (n, 2) array of points, got shape {pts.shape}")
    if pts.shape[0] == 0:
        raise InvalidShape("shape has no points")
    return pts


def _check_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a, b = _as_points(a), _as_points(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"point counts differ: {a.shape[0]} vs {b.shape[0]}")
    return a, b


def centroid(shape) -> np.ndarray:
    """Mean of the x and of the y coordinates."""
    return _as_points(shape).mean(axis=0)


def center(shape) -> np.ndarray:
    pts = _as_points(shape)
    return pts - pts.mean(axis=0)


def unit_scale(shape) -> np.ndarray:
    """Divide by the root of the summed squared coordinates so that sum becomes 1."""
    pts = _as_points(shape)
    scale = math.sqrt(float(np.sum(pts * pts)))
    if scale == 0.0:
        raise DegenerateShape("cannot unit-scale a shape whose points are all at the origin")
    return pts / scale


def normalize(shape) -> np.ndarray:
    """Centre on the origin, then unit-scale."""
    pts = center(shape)
    if np.sum(pts * pts) == 0.0:
        raise DegenerateShape("all points coincide")
    return unit_scale(pts)


def procrustes_distance(a, b) -> float:
    a, b = _check_pair(a, b)
    return math.sqrt(float(np.sum((a - b) ** 2)))


def svd2(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form SVD of a 2x2 matrix, ``m = u @ diag(s) @ vt``.

    Both factors are built from plane rotations; singular values come back
    non-negative and in descending order.
    """
    a, b = m[0]
    c, d = m[1]
    e, f = (a + d) / 2.0, (a - d) / 2.0
    g, h = (c + b) / 2.0, (c - b) / 2.0
    q, r = math.hypot(e, h), math.hypot(f, g)
    s1, s2 = q + r, q - r
    a1, a2 = math.atan2(g, f), math.atan2(h, e)
    theta, phi = (a2 - a1) / 2.0, (a2 + a1) / 2.0
    u = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    vt = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    if s2 < 0.0:
        s2 = -s2
        u[:, 1] = -u[:, 1]
    return u, np.array([s1, s2]), vt


def _procrustes_factors(a, b):
    """SVD of ``b.T @ a`` written as ``v @ diag(w) @ u.T``; returns (u, w, v)."""
    a, b = _check_pair(a, b)
    cross = b.T @ a
    if np.linalg.norm(cross) < _DEGENERATE_CROSS:
        return None
    v, w, ut = svd2(cross)
    return ut.T, w, v


def _identity_fallback() -> OrthogonalTransform2:
    warnings.warn("zero cross-covariance; using identity", DegenerateAlignment, stacklevel=3)
    return OrthogonalTransform2(np.eye(2), degenerate=True)


def orthogonal_procrustes(a, b) -> OrthogonalTransform2:
    """Rotation or reflection ``M`` minimising ``||b - a @ M||``.

    Both inputs must already be centred and unit-scaled. With
    ``b.T @ a = V W U.T`` the minimiser is ``U V.T``.
    """
    factors = _procrustes_factors(a, b)
    if factors is None:
        return _identity_fallback()
    u, _, v = factors
    return OrthogonalTransform2(u @ v.T)


def rotation_procrustes(a, b) -> OrthogonalTransform2:
    """As :func:`orthogonal_procrustes` but restricted to proper rotations."""
    factors = _procrustes_factors(a, b)
    if factors is None:
        return _identity_fallback()
    u, _, v = factors
    m = u @ v.T
    if np.linalg.det(m) < 0:
        # w is descending, so column 1 pairs with the smallest singular value
        u = u.copy()
        u[:, 1] = -u[:, 1]
        m = u @ v.T
    return OrthogonalTransform2(m)


def full_alignment(src, dst, allow_reflection: bool = True) -> Alignment:
    """Map ``src`` onto ``dst`` by an orthogonal transform plus translation.

    The orthogonal part is solved on centred, unit-scaled copies; ``src`` is
    never rescaled, so a size difference between the shapes stays in the
    residual, which is measured in the original pixel units.
    """
    src, dst = _check_pair(src, dst)
    c_src, c_dst = src.mean(axis=0), dst.mean(axis=0)
    solver = orthogonal_procrustes if allow_reflection else rotation_procrustes
    ortho = solver(normalize(src), normalize(dst))
    translation = c_dst - c_src @ ortho.matrix
    moved = src @ ortho.matrix + translation
    return Alignment(
        orthogonal=ortho,
        translation=translation,
        residual=procrustes_distance(dst, moved),
        degenerate=ortho.degenerate,
    )


def reflect_points(points, axis: SymmetryAxis) -> np.ndarray:
    """Mirror every point in ``points`` across ``axis``."""
    pts = _as_points(points)
    cx, cy = axis.through
    if axis.vertical:
        out = pts.copy()
        out[:, 0] = 2.0 * cx - pts[:, 0]
        return out
    m = axis.slope
    x, y = pts[:, 0] - cx, pts[:, 1] - cy
    denom = 1.0 + m * m
    rx = (2.0 * m * y - (m * m - 1.0) * x) / denom
    ry = ((m * m - 1.0) * y + 2.0 * m * x) / denom
    return np.column_stack([rx + cx, ry + cy])


def reflect_point(p, axis: SymmetryAxis) -> tuple[float, float]:
    x, y = reflect_points(np.asarray(p, dtype=np.float64).reshape(1, 2), axis)[0]
    return float(x), float(y)


def axis_from_orthogonal(t: OrthogonalTransform2, through) -> SymmetryAxis:
    """Mirror line equivalent to the reflection ``t``, placed through ``through``.

    ``t`` has the form ``[[-cos a, sin a], [sin a, cos a]]``; the line is
    ``y = m x`` with ``m = cos(a/2) / sin(a/2)`` in coordinates centred on
    ``through``.
    """
    if not t.is_reflection:
        raise NotAReflection("transform is a proper rotation; it has no mirror axis")
    mat = t.matrix
    angle = math.atan2(mat[0, 1], mat[1, 1])
    half_sin, half_cos = math.sin(angle / 2.0), math.cos(angle / 2.0)
    through = (float(through[0]), float(through[1]))
    if abs(half_sin) < _VERTICAL_EPS:
        return SymmetryAxis(through=through, vertical=True)
    return SymmetryAxis(through=through, slope=half_cos / half_sin)


def side_of_axis(points, axis: SymmetryAxis) -> np.ndarray:
    """Signed perpendicular offset of each point from the axis."""
    pts = _as_points(points)
    d = axis.direction
    rel = pts - np.asarray(axis.through)
    return d[0] * rel[:, 1] - d[1] * rel[:, 0]

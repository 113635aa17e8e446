"""Point distribution model: aligned training shapes, PCA modes, synthesis.

Shape vectors use the blocked layout ``(x1..xn, y1..yn)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry
from .errors import DegenerateShape, InvalidParameter, ParseError, ShapeMismatch

# Eigenvalues below this fraction of the largest are treated as zero variance.
_ZERO_VARIANCE = 1e-12
# Relative slack when comparing cumulative variance against p * V.
_CUMULATIVE_SLACK = 1e-12


def to_vector(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    return np.concatenate([pts[:, 0], pts[:, 1]])


def from_vector(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    n = vec.shape[0] // 2
    return np.column_stack([vec[:n], vec[n:]])


@dataclass(frozen=True)
class TrainingSet:
    """``N >= 2`` shapes sharing one point count, stored as an ``(N, n, 2)`` array."""

    shapes: np.ndarray

    def __post_init__(self):
        shapes = [np.asarray(s, dtype=np.float64) for s in self.shapes]
        if len({s.shape for s in shapes}) > 1:
            raise ShapeMismatch("all training shapes must have the same number of points")
        arr = np.array(shapes)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise ShapeMismatch("all training shapes must have the same number of points")
        if arr.shape[0] < 2:
            raise InvalidParameter("a training set needs at least two shapes")
        arr.setflags(write=False)
        object.__setattr__(self, "shapes", arr)

    def __len__(self) -> int:
        return self.shapes.shape[0]

    @property
    def n_points(self) -> int:
        return self.shapes.shape[1]

    def matrix(self) -> np.ndarray:
        """Data matrix with ``2n`` rows and one column per shape."""
        return np.stack([to_vector(s) for s in self.shapes], axis=1)


@dataclass(frozen=True)
class ShapeModel:
    mean: np.ndarray
    modes: np.ndarray
    eigenvalues: np.ndarray
    total_variance: float
    clamp_k: float = 3.0

    @property
    def n_points(self) -> int:
        return self.mean.shape[0] // 2

    @property
    def n_modes(self) -> int:
        return self.modes.shape[1]

    def mean_shape(self) -> np.ndarray:
        return from_vector(self.mean)


def similarity_fit(shape, target) -> tuple[np.ndarray, float]:
    """Rotate, scale and translate ``shape`` onto a centred ``target``.

    Reflections are not allowed. Returns the fitted points and the remaining
    Procrustes distance.
    """
    shape, target = np.asarray(shape, dtype=np.float64), np.asarray(target, dtype=np.float64)
    centred = geometry.center(shape)
    norm_sq = float(np.sum(centred * centred))
    if norm_sq == 0.0:
        raise DegenerateShape("training shape collapses to a single point")
    rot = geometry.rotation_procrustes(geometry.unit_scale(centred), geometry.normalize(target))
    rotated = centred @ rot.matrix
    scale = float(np.sum(target * rotated)) / norm_sq
    fitted = scale * rotated + geometry.centroid(target)
    return fitted, geometry.procrustes_distance(target, fitted)


def align_training_set(ts: TrainingSet, mean_estimates: int = 2) -> tuple[TrainingSet, np.ndarray]:
    """Align every training shape to a common unit-norm mean.

    The first mean is the raw average of the input shapes. Each further mean
    estimate is recomputed from the previously aligned shapes and all shapes are
    aligned again. Returns the aligned set and the last mean used (centred,
    unit-scaled, ``(n, 2)``).
    """
    if mean_estimates < 1:
        raise InvalidParameter("mean_estimates must be at least 1")
    for s in ts.shapes:
        if np.all(s == s[0]):
            raise DegenerateShape("training shape collapses to a single point")
    mean = geometry.normalize(ts.shapes.mean(axis=0))
    aligned = None
    for i in range(mean_estimates):
        if i > 0:
            mean = geometry.normalize(aligned.mean(axis=0))
        aligned = np.array([similarity_fit(s, mean)[0] for s in ts.shapes])
    return TrainingSet(aligned), mean


def train_pca(aligned: TrainingSet, p: float = 0.98, clamp_k: float = 3.0) -> ShapeModel:
    """Keep the fewest principal modes explaining at least ``p`` of total variance."""
    if not 0.0 < p <= 1.0:
        raise InvalidParameter(f"proportion p must lie in (0, 1], got {p}")
    data = aligned.matrix()
    n_samples = data.shape[1]
    mean = data.mean(axis=1)
    dev = data - mean[:, None]
    cov = dev @ dev.T / (n_samples - 1)

    values, vectors = np.linalg.eigh(cov)
    order = np.argsort(values)[::-1]
    values = np.clip(values[order], 0.0, None)
    vectors = vectors[:, order]
    total = float(values.sum())

    keep = values > _ZERO_VARIANCE * values[0] if values[0] > 0 else np.zeros_like(values, bool)
    values, vectors = values[keep], vectors[:, keep]
    if values.size:
        cumulative = np.cumsum(values)
        hits = np.nonzero(cumulative >= p * total * (1.0 - _CUMULATIVE_SLACK))[0]
        t = int(hits[0]) + 1 if hits.size else values.size
    else:
        t = 0
    values, vectors = values[:t], vectors[:, :t].copy()
    # deterministic sign: largest-magnitude entry of each mode is positive
    for j in range(t):
        if vectors[np.argmax(np.abs(vectors[:, j])), j] < 0:
            vectors[:, j] = -vectors[:, j]
    return ShapeModel(mean=mean, modes=vectors, eigenvalues=values, total_variance=total, clamp_k=clamp_k)


def _check_params(model: ShapeModel, b) -> np.ndarray:
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if b.shape[0] != model.n_modes:
        raise InvalidParameter(f"expected {model.n_modes} shape parameters, got {b.shape[0]}")
    return b


def synthesize(model: ShapeModel, b) -> np.ndarray:
    """Shape ``mean + modes @ b`` as ``(n, 2)`` points."""
    b = _check_params(model, b)
    return from_vector(model.mean + model.modes @ b)


def estimate_params(model: ShapeModel, shape) -> np.ndarray:
    pts = np.asarray(shape, dtype=np.float64)
    if pts.shape != (model.n_points, 2):
        raise ShapeMismatch(f"model has {model.n_points} points, shape has {pts.shape[0]}")
    return model.modes.T @ (to_vector(pts) - model.mean)


def clamp_params(model: ShapeModel, b) -> np.ndarray:
    """Clip each parameter to ``+-k * sqrt(eigenvalue)``."""
    b = _check_params(model, b)
    limit = model.clamp_k * np.sqrt(model.eigenvalues)
    return np.clip(b, -limit, limit)


# -- model file -------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def dumps_model(model: ShapeModel) -> str:
    """Text form: header, mean, eigenvalues, then modes row-major."""
    n, t = model.n_points, model.n_modes
    lines = [f"pdm v1 n={n} t={t} k={_fmt(model.clamp_k)} V={_fmt(model.total_variance)}"]
    lines.append(" ".join(_fmt(v) for v in model.mean))
    lines.append(" ".join(_fmt(v) for v in model.eigenvalues))
    for row in model.modes:
        lines.append(" ".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> ShapeModel:
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty model file", 1)
    head = lines[0].split()
    if head[:2] != ["pdm", "v1"]:
        raise ParseError("expected header starting with 'pdm v1'", 1)
    fields = {}
    for token in head[2:]:
        key, sep, value = token.partition("=")
        if not sep:
            raise ParseError(f"malformed header token {token!r}", 1)
        fields[key] = value
    try:
        n, t, k = int(fields["n"]), int(fields["t"]), float(fields["k"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"header needs n, t and k: {exc}", 1) from None

    values = []
    for lineno, line in enumerate(lines[1:], start=2):
        for token in line.split():
            try:
                values.append(float(token))
            except ValueError:
                raise ParseError(f"non-numeric value {token!r}", lineno) from None
    expected = 2 * n + t + 2 * n * t
    if len(values) != expected:
        raise ParseError(f"expected {expected} numbers, found {len(values)}", len(lines))
    arr = np.array(values)
    mean, eig = arr[: 2 * n], arr[2 * n : 2 * n + t]
    modes = arr[2 * n + t :].reshape(2 * n, t)
    total = float(fields["V"]) if "V" in fields else float(eig.sum())
    return ShapeModel(mean=mean, modes=modes, eigenvalues=eig, total_variance=total, clamp_k=k)


def save_model(model: ShapeModel, path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path) -> ShapeModel:
    return loads_model(Path(path).read_text(encoding="utf-8"))

"""Batch runs over numbered frame directories.

Frames are files named ``<stem><index>.<ext>`` with a zero-padded index; all
files of one extension must share the stem and form a gap-free run of indices.
"""
from __future__ import annotations

import csv
import io
import logging
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from . import plotting
from .errors import AsymError, InvalidInput, UndefinedCorrelation
from .imaging import read_pnm
from .keyframes import KeyframeSelection, select_keyframes
from .measures import (
    FrameMetrics,
    LandmarkScheme,
    PixelAsymmetry,
    frame_metrics,
    measure_two,
    pearson,
)
from .pts import read_pts
from .shape_model import ShapeModel, TrainingSet, align_training_set, save_model, train_pca

log = logging.getLogger(__name__)

METRICS_HEADER = ("frame", "asymmetry", "left_movement", "right_movement", "overall_movement")
MEASURE2_HEADER = ("frame", "mean_abs_diff", "median_abs_diff", "overlap_pixels")
CHART_NAMES = {
    "asymmetry": "asymmetry.svg",
    "movement": "movement.svg",
    "left_vs_right": "left_vs_right.svg",
    "asymmetry_vs_movement": "asymmetry_vs_movement.svg",
}

_FRAME_RE = re.compile(r"^(?P<stem>.*?)(?P<index>\d+)$")


@dataclass
class RunConfig:
    input_dir: Path
    out_dir: Path = Path(".")
    scheme_path: Optional[Path] = None
    neutral_index: Optional[int] = None
    tolerance: float = 0.0
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    normalize_brightness: bool = True


@dataclass
class FrameError:
    frame: int
    message: str


@dataclass
class AnalyzeResult:
    metrics: list[FrameMetrics]
    errors: list[FrameError]
    correlations: dict[str, Optional[float]]
    csv_path: Path
    charts: dict[str, Path]


@dataclass
class Measure2Result:
    rows: list[tuple[int, Optional[PixelAsymmetry]]]
    errors: list[FrameError]
    csv_path: Path


def discover_frames(directory, extensions: Sequence[str]) -> list[tuple[int, Path]]:
    """Numbered files in ``directory`` with one of ``extensions``, in index order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InvalidInput(f"{directory} is not a directory")
    found: dict[int, Path] = {}
    stems = set()
    for path in directory.iterdir():
        if path.suffix.lower() not in extensions:
            continue
        match = _FRAME_RE.match(path.stem)
        if not match:
            raise InvalidInput(f"{path.name} has no frame number")
        index = int(match["index"])
        if index in found:
            raise InvalidInput(f"frame {index} appears twice ({found[index].name}, {path.name})")
        found[index] = path
        stems.add(match["stem"])
    if not found:
        raise InvalidInput(f"no {'/'.join(extensions)} frames in {directory}")
    if len(stems) > 1:
        raise InvalidInput(f"mixed frame name stems in {directory}: {sorted(stems)}")
    indices = sorted(found)
    missing = sorted(set(range(indices[0], indices[-1] + 1)) - set(indices))
    if missing:
        raise InvalidInput(f"missing frames: {missing[:10]}")
    return [(i, found[i]) for i in indices]


def _map(fn: Callable, items: list, jobs: int) -> list:
    """Ordered map, fanned out over processes when ``jobs > 1``."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        chunk = max(1, len(items) // (4 * jobs))
        return list(pool.map(fn, items, chunksize=chunk))


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _load_scheme(cfg: RunConfig, n_points: int) -> LandmarkScheme:
    if cfg.scheme_path is not None:
        return LandmarkScheme.load(cfg.scheme_path)
    return LandmarkScheme(n=n_points)


# -- analyze ----------------------------------------------------------------

def _analyze_one(task):
    index, path, neutral, scheme = task
    try:
        lm = read_pts(path, frame_index=index)
        return frame_metrics(lm, neutral, scheme, frame_index=index)
    except (AsymError, OSError, ValueError) as exc:
        return FrameError(index, f"{type(exc).__name__}: {exc}")


def _safe_pearson(xs, ys) -> Optional[float]:
    try:
        return pearson(xs, ys)
    except UndefinedCorrelation:
        return None


def run_analyze(cfg: RunConfig) -> AnalyzeResult:
    """Per-frame asymmetry and movement for a directory of ``.pts`` files.

    Writes ``metrics.csv`` plus four SVG charts into ``cfg.out_dir``.
    """
    frames = discover_frames(cfg.input_dir, (".pts",))
    neutral_index = frames[0][0] if cfg.neutral_index is None else cfg.neutral_index
    by_index = dict(frames)
    if neutral_index not in by_index:
        raise InvalidInput(f"neutral frame {neutral_index} is not among frames {frames[0][0]}..{frames[-1][0]}")
    neutral = read_pts(by_index[neutral_index], frame_index=neutral_index)
    scheme = _load_scheme(cfg, len(neutral))

    tasks = [(i, p, neutral.points, scheme) for i, p in frames]
    results = _map(_analyze_one, tasks, cfg.jobs)
    metrics = [r for r in results if isinstance(r, FrameMetrics)]
    errors = [r for r in results if isinstance(r, FrameError)]
    for m in metrics:
        if m.degenerate:
            log.warning("frame %d: degenerate alignment, identity used", m.frame_index)

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "metrics.csv"
    _write_csv(
        csv_path,
        METRICS_HEADER,
        (
            (str(m.frame_index), _fmt(m.asymmetry), _fmt(m.left_movement),
             _fmt(m.right_movement), _fmt(m.overall_movement))
            for m in metrics
        ),
    )

    idx = [m.frame_index for m in metrics]
    asym = [m.asymmetry for m in metrics]
    left = [m.left_movement for m in metrics]
    right = [m.right_movement for m in metrics]
    overall = [m.overall_movement for m in metrics]
    charts = {
        "asymmetry": plotting.asymmetry_chart(idx, asym, out_dir / CHART_NAMES["asymmetry"]),
        "movement": plotting.movement_chart(idx, left, right, out_dir / CHART_NAMES["movement"]),
        "left_vs_right": plotting.left_right_scatter(left, right, out_dir / CHART_NAMES["left_vs_right"]),
        "asymmetry_vs_movement": plotting.asymmetry_movement_scatter(
            overall, asym, out_dir / CHART_NAMES["asymmetry_vs_movement"]
        ),
    }
    correlations = {
        "left_movement~right_movement": _safe_pearson(left, right),
        "overall_movement~asymmetry": _safe_pearson(overall, asym),
    }
    return AnalyzeResult(metrics, errors, correlations, csv_path, charts)


# -- measure two ------------------------------------------------------------

def _measure2_one(task):
    index, pts_path, image_path, scheme, normalize_brightness = task
    try:
        lm = read_pts(pts_path, frame_index=index)
        frame = read_pnm(image_path)
        active = scheme if scheme is not None else LandmarkScheme(n=len(lm))
        return index, measure_two(frame, lm, active, normalize_brightness=normalize_brightness)
    except (AsymError, OSError, ValueError) as exc:
        return index, FrameError(index, f"{type(exc).__name__}: {exc}")


def run_measure2(cfg: RunConfig) -> Measure2Result:
    """Pixel asymmetry for every frame with both a ``.pts`` and a PGM/PPM file."""
    pts_frames = discover_frames(cfg.input_dir, (".pts",))
    image_frames = dict(discover_frames(cfg.input_dir, (".pgm", ".ppm", ".pnm")))
    scheme = LandmarkScheme.load(cfg.scheme_path) if cfg.scheme_path is not None else None

    tasks, errors = [], []
    for index, pts_path in pts_frames:
        if index not in image_frames:
            errors.append(FrameError(index, "no image for this frame"))
            continue
        tasks.append((index, pts_path, image_frames[index], scheme, cfg.normalize_brightness))
    results = dict(_map(_measure2_one, tasks, cfg.jobs))

    rows = []
    for index, _ in pts_frames:
        value = results.get(index)
        if isinstance(value, FrameError):
            errors.append(value)
            value = None
        rows.append((index, value))
    errors.sort(key=lambda e: e.frame)

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "measure2.csv"
    _write_csv(
        csv_path,
        MEASURE2_HEADER,
        (
            (str(i), _fmt(r.mean_abs_diff), str(r.median_abs_diff), str(r.overlap_pixel_count))
            if r is not None else (str(i), "", "", "")
            for i, r in rows
        ),
    )
    return Measure2Result(rows, errors, csv_path)


# -- smaller commands ---------------------------------------------------------

def _iter_frames(paths: Iterable[Path]):
    for path in paths:
        yield read_pnm(path).pixels


def run_keyframes(cfg: RunConfig) -> list[int]:
    """Frame indices picked by the tolerance scan over PGM/PPM frames."""
    frames = discover_frames(cfg.input_dir, (".pgm", ".ppm", ".pnm"))
    selection: KeyframeSelection = select_keyframes(_iter_frames(p for _, p in frames), cfg.tolerance)
    return [frames[i][0] for i in selection.selected]


def run_correlate(csv_path, column_a: str, column_b: str) -> float:
    """Pearson coefficient between two CSV columns, skipping rows blank in either."""
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for col in (column_a, column_b):
            if reader.fieldnames is None or col not in reader.fieldnames:
                raise InvalidInput(f"column {col!r} not in {csv_path}")
        xs, ys = [], []
        for row in reader:
            if row[column_a] == "" or row[column_b] == "":
                continue
            xs.append(float(row[column_a]))
            ys.append(float(row[column_b]))
    return pearson(xs, ys)


def run_train_model(pts_dir, p: float, out, clamp_k: float = 3.0) -> ShapeModel:
    paths = sorted(Path(pts_dir).glob("*.pts"))
    if len(paths) < 2:
        raise InvalidInput(f"need at least two .pts files in {pts_dir}")
    shapes = [read_pts(path).points for path in paths]
    aligned, _ = align_training_set(TrainingSet(shapes))
    model = train_pca(aligned, p, clamp_k=clamp_k)
    save_model(model, out)
    return model


"""SVG charts of per-frame metrics.

Figures are drawn with matplotlib's object API (no pyplot state) and saved with
a fixed hash salt and no timestamp so repeated runs write identical bytes.
Every data series carries an SVG id ``series-<name>``; the y = x guide on the
left/right scatter is ``reference-y-equals-x``.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib
from matplotlib.figure import Figure

LEFT_COLOR = "magenta"
RIGHT_COLOR = "red"
_RC = {
    "svg.hashsalt": "asym",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    with matplotlib.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def _figure(xlabel: str, ylabel: str, title: str):
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(7, 4))
        ax = fig.add_subplot()
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
    return fig, ax


def asymmetry_chart(frames: Sequence[int], asymmetry: Sequence[float], path) -> Path:
    fig, ax = _figure("frame", "asymmetry (px)", "Asymmetry by frame")
    (line,) = ax.plot(frames, asymmetry, color=LEFT_COLOR, linewidth=1.0)
    line.set_gid("series-asymmetry")
    fig.tight_layout()
    return _save(fig, path)


def movement_chart(frames: Sequence[int], left: Sequence[float], right: Sequence[float], path) -> Path:
    fig, ax = _figure("frame", "movement from neutral (px)", "Left and right movement")
    (l_line,) = ax.plot(frames, left, color=LEFT_COLOR, linewidth=1.0, label="left")
    (r_line,) = ax.plot(frames, right, color=RIGHT_COLOR, linewidth=1.0, label="right")
    l_line.set_gid("series-left_movement")
    r_line.set_gid("series-right_movement")
    ax.legend(loc="upper left")
    fig.tight_layout()
    return _save(fig, path)


def left_right_scatter(left: Sequence[float], right: Sequence[float], path) -> Path:
    """Left movement against right movement, with the line y = x in red."""
    fig, ax = _figure("right movement (px)", "left movement (px)", "Left vs right movement")
    points = ax.scatter(right, left, s=8, color="black")
    points.set_gid("series-left_vs_right")
    hi = max([1.0, *left, *right])
    (ref,) = ax.plot([0.0, hi], [0.0, hi], color=RIGHT_COLOR, linewidth=1.0)
    ref.set_gid("reference-y-equals-x")
    fig.tight_layout()
    return _save(fig, path)


def asymmetry_movement_scatter(overall: Sequence[float], asymmetry: Sequence[float], path) -> Path:
    fig, ax = _figure("overall movement (px)", "asymmetry (px)", "Asymmetry vs overall movement")
    points = ax.scatter(overall, asymmetry, s=8, color="black")
    points.set_gid("series-asymmetry_vs_movement")
    fig.tight_layout()
    return _save(fig, path)

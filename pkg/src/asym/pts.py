"""Reader and writer for the ``.pts`` landmark text format.

    version: 1
    n_points: 68
    {
    x y
    ...
    }
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ParseError
from .geometry import Landmarks


def parse_pts(text: str, frame_index: Optional[int] = None) -> Landmarks:
    declared = None
    points = []
    state = "header"
    close_line = None
    lineno = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if state == "header":
            if line == "{":
                if declared is None:
                    raise ParseError("'{' before n_points", lineno)
                state = "body"
                continue
            key, sep, value = line.partition(":")
            if not sep:
                raise ParseError(f"unexpected header line {line!r}", lineno)
            key = key.strip()
            if key == "n_points":
                try:
                    declared = int(value)
                except ValueError:
                    raise ParseError(f"n_points is not an integer: {value.strip()!r}", lineno) from None
            elif key != "version":
                raise ParseError(f"unknown header field {key!r}", lineno)
        elif state == "body":
            if line == "}":
                close_line = lineno
                state = "done"
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise ParseError(f"expected 'x y', got {line!r}", lineno)
            try:
                points.append((float(tokens[0]), float(tokens[1])))
            except ValueError:
                raise ParseError(f"non-numeric coordinate in {line!r}", lineno) from None
        else:
            raise ParseError(f"content after closing brace: {line!r}", lineno)
    if state == "header":
        raise ParseError("missing '{'", max(lineno, 1))
    if state == "body":
        raise ParseError("missing closing '}'", len(text.splitlines()))
    if len(points) != declared:
        raise ParseError(f"n_points is {declared} but {len(points)} points were given", close_line)
    return Landmarks(points, frame_index=frame_index)


def format_pts(lm) -> str:
    pts = np.asarray(lm)
    body = "\n".join(f"{x:.17g} {y:.17g}" for x, y in pts)
    return f"version: 1\nn_points: {len(pts)}\n{{\n{body}\n}}\n"


def read_pts(path, frame_index: Optional[int] = None) -> Landmarks:
    return parse_pts(Path(path).read_text(encoding="utf-8"), frame_index=frame_index)


def write_pts(lm, path) -> None:
    Path(path).write_text(format_pts(lm), encoding="utf-8")

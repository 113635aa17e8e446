import numpy as np
import pytest

from asym.measures import LandmarkScheme

_CRITERIA: list[tuple[int, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _CRITERIA.append((marker.args[0], status, item.name))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, name in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {name}")


def mirrored_face(rng, n_pairs=12, axis_x=100.0, spread=40.0):
    """Points mirrored about ``x = axis_x``; pairs are (left, right) index tuples.

    Left-side points (smaller x) sit at even indices, their mirrors at odd ones.
    """
    left = np.column_stack([
        axis_x - rng.uniform(3.0, spread, n_pairs),
        rng.uniform(20.0, 180.0, n_pairs),
    ])
    right = left.copy()
    right[:, 0] = 2 * axis_x - left[:, 0]
    pts = np.empty((2 * n_pairs, 2))
    pts[0::2], pts[1::2] = left, right
    scheme = LandmarkScheme(n=2 * n_pairs, pairs=tuple((2 * i, 2 * i + 1) for i in range(n_pairs)))
    return pts, scheme


def rotation(angle):
    """Row-vector rotation matrix: ``points @ rotation(a)`` turns points by ``a``."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def write_sequence(directory, frames, stem="frame", width=4):
    """Write each (n, 2) array as ``<stem><index>.pts``; returns the directory."""
    from asym.pts import write_pts

    directory.mkdir(parents=True, exist_ok=True)
    for i, pts in enumerate(frames):
        write_pts(pts, directory / f"{stem}{i:0{width}d}.pts")
    return directory


def write_scheme(path, scheme):
    import json

    body = {"n": scheme.n, "pairing": "by-index-order" if scheme.pairs is None else [list(p) for p in scheme.pairs]}
    path.write_text(json.dumps(body), encoding="utf-8")
    return path


def one_mode_shapes(rng, n_points=6, count=10, sd=0.02):
    """Shapes varying along one direction that similarity alignment cannot remove.

    The direction is orthogonal to translation, scaling and rotation of the base
    shape, so after alignment the set still varies along a single mode.
    """
    from asym import geometry, shape_model

    base = geometry.normalize(rng.normal(0, 1, (n_points, 2)))
    bv = shape_model.to_vector(base)
    ones, zeros = np.ones(n_points), np.zeros(n_points)
    turn = shape_model.to_vector(base @ np.array([[0.0, 1.0], [-1.0, 0.0]]))
    q, _ = np.linalg.qr(np.column_stack([np.r_[ones, zeros], np.r_[zeros, ones], bv, turn]))
    v = rng.normal(size=2 * n_points)
    v -= q @ (q.T @ v)
    v /= np.linalg.norm(v)
    c = rng.normal(0, sd, count)
    return [shape_model.from_vector(bv + ci * v) * 50 + (100, 80) for ci in c]

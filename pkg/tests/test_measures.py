import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asym import geometry
from asym import measures as ms
from asym.errors import (
    EmptyRegion,
    InvalidParameter,
    NotAReflection,
    ShapeMismatch,
    UnbalancedSplit,
    UndefinedCorrelation,
)
from asym.imaging import GrayImage, RgbImage
from conftest import mirrored_face, rotation


def oracle_measure_one(left, right):
    """Step-by-step: centre, unit-scale, SVD, orthogonal map, translate, residual."""
    cl, cr = left.mean(axis=0), right.mean(axis=0)
    a = (right - cr) / np.sqrt(np.sum((right - cr) ** 2))
    b = (left - cl) / np.sqrt(np.sum((left - cl) ** 2))
    u, _, vt = np.linalg.svd(a.T @ b)
    m = u @ vt  # row-vector map: a @ m ~ b
    moved = (right - cr) @ m + cl
    return float(np.sqrt(np.sum((moved - left) ** 2)))


def symmetric_frame(width=41, height=41, axis=20, seed=3):
    """Image with pixels[:, x] == pixels[:, 2*axis - x] and mirrored landmarks."""
    rng = np.random.default_rng(seed)
    half = rng.integers(40, 200, (height, axis + 1))
    px = np.concatenate([half, half[:, -2::-1]], axis=1)[:, :width].astype(np.uint8)
    left = np.array([[4, 4], [6, 36], [12, 20], [15, 8], [17, 30]], float)
    right = left.copy()
    right[:, 0] = 2 * axis - left[:, 0]
    pts = np.empty((10, 2))
    pts[0::2], pts[1::2] = left, right
    scheme = ms.LandmarkScheme(n=10, pairs=tuple((2 * i, 2 * i + 1) for i in range(5)))
    return px, pts, scheme


class TestScheme:
    def test_from_json(self):
        s = ms.LandmarkScheme.from_json('{"n": 4, "pairing": [[0, 1], [2, 3]]}')
        assert s.pairs == ((0, 1), (2, 3)) and s.tie_rule == "left"
        assert ms.LandmarkScheme.from_json('{"n": 6}').pairs is None

    def test_invalid(self):
        with pytest.raises(InvalidParameter):
            ms.LandmarkScheme(n=5)
        with pytest.raises(InvalidParameter):
            ms.LandmarkScheme(n=4, pairs=((0, 1), (1, 2)))
        with pytest.raises(InvalidParameter):
            ms.LandmarkScheme(n=4, pairs=((0, 4),))
        with pytest.raises(InvalidParameter):
            ms.LandmarkScheme(n=4, tie_rule="middle")


class TestSplit:
    def test_median_example(self):
        pts = np.array([[3, 0], [0, 1], [4, 2], [1, 3]], float)
        split = ms.split_left_right(pts, ms.LandmarkScheme(n=4))
        assert split.left_indices.tolist() == [1, 3] and split.right_indices.tolist() == [0, 2]
        assert np.array_equal(split.left, pts[[1, 3]])

    def test_mirror_pairs(self, rng):
        pts, scheme = mirrored_face(rng, n_pairs=5)
        split = ms.split_left_right(pts, scheme)
        mirrored = split.right.copy()
        mirrored[:, 0] = 200 - mirrored[:, 0]
        assert np.allclose(mirrored, split.left)

    def test_unbalanced(self):
        pts = np.array([[0, 0], [1, 0], [2, 0], [2, 1], [2, 2], [2, 3], [5, 0], [6, 0]], float)
        with pytest.raises(UnbalancedSplit):
            ms.split_left_right(pts, ms.LandmarkScheme(n=8))

    def test_tie_rule(self):
        pts = np.array([[0, 0], [1, 0], [1, 1], [2, 0]], float)
        with pytest.raises(UnbalancedSplit):
            ms.split_left_right(pts, ms.LandmarkScheme(n=4))
        pts = np.array([[0, 0], [2, 0], [2, 1], [5, 0], [6, 0], [2, 2]], float)
        # ties at the median always land on one side, so either rule unbalances
        with pytest.raises(UnbalancedSplit):
            ms.split_left_right(pts, ms.LandmarkScheme(n=6, tie_rule="right"))

    def test_count_mismatch(self):
        with pytest.raises(ShapeMismatch):
            ms.split_left_right(np.zeros((4, 2)), ms.LandmarkScheme(n=6))

    def test_every_point_once(self, rng):
        pts = rng.uniform(0, 100, (20, 2))
        split = ms.split_left_right(pts, ms.LandmarkScheme(n=20))
        assert sorted(split.left_indices.tolist() + split.right_indices.tolist()) == list(range(20))
        assert split.left[:, 0].max() < split.right[:, 0].min()


class TestMeasureOne:
    def test_mirrored_is_zero(self, rng):
        for _ in range(20):
            pts, scheme = mirrored_face(rng)
            value, alignment = ms.measure_one(pts, scheme)
            assert value < 1e-9
            assert alignment.orthogonal.is_reflection

    def test_displaced_point_matches_oracle(self, rng):
        pts, scheme = mirrored_face(rng)
        pts[0] += (6, 0)
        value, _ = ms.measure_one(pts, scheme)
        split = ms.split_left_right(pts, scheme)
        assert value == pytest.approx(oracle_measure_one(split.left, split.right), abs=1e-9)
        assert value > 0

    def test_median_split_oracle(self, rng):
        pts = rng.uniform(0, 200, (16, 2))
        value, _ = ms.measure_one(pts, ms.LandmarkScheme(n=16))
        order = np.argsort(pts[:, 0], kind="stable")
        left, right = np.sort(order[:8]), np.sort(order[8:])
        assert value == pytest.approx(oracle_measure_one(pts[left], pts[right]), abs=1e-9)

    def test_increasing_in_displacement(self, rng):
        pts, scheme = mirrored_face(rng)
        values = []
        for d in (1, 2, 4, 8):
            moved = pts.copy()
            moved[2] += (d, 0)
            values.append(ms.measure_one(moved, scheme)[0])
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_rigid_invariance(self, rng):
        pts = rng.uniform(0, 200, (12, 2))
        scheme = ms.LandmarkScheme(n=12, pairs=tuple((i, i + 6) for i in range(6)))
        base = ms.measure_one(pts, scheme)[0]
        moved = pts @ rotation(2.2) + (40, -70)
        assert ms.measure_one(moved, scheme)[0] == pytest.approx(base, abs=1e-9)


class TestMovement:
    def test_identical(self, rng):
        pts, scheme = mirrored_face(rng)
        for side in ("left", "right"):
            assert ms.movement_from_neutral(pts, pts, side, scheme) == pytest.approx(0, abs=1e-12)

    def test_rigid_motion_removed(self, rng):
        pts, scheme = mirrored_face(rng)
        moved = pts @ rotation(0.4) + (12, -5)
        for side in ("left", "right"):
            assert ms.movement_from_neutral(moved, pts, side, scheme) < 1e-9

    def test_scale_closed_form(self, rng):
        pts, scheme = mirrored_face(rng)
        split = ms.split_left_right(pts, scheme)
        side = split.left
        c = side.mean(axis=0)
        frame = pts.copy()
        frame[split.left_indices] = c + 1.2 * (side - c)
        expected = 0.2 * np.sqrt(np.sum((side - c) ** 2))
        assert ms.movement_from_neutral(frame, pts, "left", scheme) == pytest.approx(expected, abs=1e-9)
        assert ms.movement_from_neutral(frame, pts, "right", scheme) < 1e-9

    def test_bad_side(self, rng):
        pts, scheme = mirrored_face(rng)
        with pytest.raises(InvalidParameter):
            ms.movement_from_neutral(pts, pts, "up", scheme)

    @pytest.mark.parametrize("l,r,expected", [(0, 0, 0), (10, 20, 15)])
    def test_overall(self, l, r, expected):
        assert ms.overall_movement(l, r) == expected

    @settings(max_examples=100)
    @given(st.floats(0, 1e6), st.floats(0, 1e6))
    def test_overall_mean(self, l, r):
        assert ms.overall_movement(l, r) == (l + r) / 2

    def test_frame_metrics(self, rng):
        pts, scheme = mirrored_face(rng)
        frame = pts + rng.normal(0, 1, pts.shape)
        m = ms.frame_metrics(frame, pts, scheme, frame_index=7)
        assert m.frame_index == 7
        assert m.asymmetry == ms.measure_one(frame, scheme)[0]
        assert m.left_movement == ms.movement_from_neutral(frame, pts, "left", scheme)
        assert m.right_movement == ms.movement_from_neutral(frame, pts, "right", scheme)
        assert m.overall_movement == (m.left_movement + m.right_movement) / 2
        assert min(m.asymmetry, m.left_movement, m.right_movement) >= 0


class TestLowerMedian:
    def test_examples(self):
        assert ms.lower_median(np.bincount([3, 1, 2, 4], minlength=256)) == 2
        assert ms.lower_median(np.bincount([5], minlength=256)) == 5
        assert ms.lower_median(np.bincount([0, 0, 9, 9], minlength=256)) == 0

    def test_matches_statistics(self, rng):
        for n in (1, 2, 7, 50, 51):
            values = rng.integers(0, 256, n)
            assert ms.lower_median(np.bincount(values, minlength=256)) == statistics.median_low(values.tolist())

    def test_empty(self):
        with pytest.raises(EmptyRegion):
            ms.lower_median(np.zeros(256, int))


class TestMeasureTwo:
    def test_symmetric_is_zero(self):
        px, pts, scheme = symmetric_frame()
        result = ms.measure_two(GrayImage(px), pts, scheme)
        assert result.mean_abs_diff == 0 and result.median_abs_diff == 0
        assert result.overlap_pixel_count == result.histogram.sum() > 100

    def test_rgb_input(self):
        px, pts, scheme = symmetric_frame()
        result = ms.measure_two(RgbImage(np.repeat(px[:, :, None], 3, axis=2)), pts, scheme)
        assert result.mean_abs_diff == 0

    def test_shift_absorbed(self):
        px, pts, scheme = symmetric_frame()
        shifted = px.astype(int)
        shifted[:, 21:] += 10
        result = ms.measure_two(GrayImage(shifted.astype(np.uint8)), pts, scheme)
        assert result.mean_abs_diff < 1
        raw = ms.measure_two(GrayImage(shifted.astype(np.uint8)), pts, scheme, normalize_brightness=False)
        assert raw.mean_abs_diff == 10 and raw.median_abs_diff == 10

    def test_constant_halves(self):
        _, pts, scheme = symmetric_frame()
        px = np.full((41, 41), 100, np.uint8)
        px[:, 21:] = 120
        result = ms.measure_two(GrayImage(px), pts, scheme, normalize_brightness=False)
        assert result.mean_abs_diff == 20 and result.median_abs_diff == 20
        assert result.histogram[20] == result.overlap_pixel_count
        assert ms.measure_two(GrayImage(px), pts, scheme).mean_abs_diff == 0

    def test_tilted_axis_maps_pairs(self):
        _, pts, scheme = symmetric_frame(width=61, height=61, axis=30)
        centre = np.array([30.0, 30.0])
        moved = (pts - centre) @ rotation(0.3) + centre
        axis = ms.symmetry_axis(moved, scheme)
        assert not axis.vertical
        assert axis.slope == pytest.approx(-1 / np.tan(0.3), rel=1e-9)
        split = ms.split_left_right(moved, scheme)
        assert np.allclose(geometry.reflect_points(split.left, axis), split.right, atol=1e-9)

    def test_histogram_consistent(self, rng):
        _, pts, scheme = symmetric_frame()
        px = rng.integers(0, 256, (41, 41)).astype(np.uint8)
        r = ms.measure_two(GrayImage(px), pts, scheme)
        values = np.repeat(np.arange(256), r.histogram)
        assert r.mean_abs_diff == pytest.approx(values.mean(), abs=1e-12)
        assert r.median_abs_diff == statistics.median_low(values.tolist())

    def test_not_a_reflection(self):
        # right side is a translated copy of the left: best fit is a pure translation
        left = np.array([[0, 0], [10, 3], [4, 12], [8, 20]], float)
        right = left + (40, 0)
        pts = np.vstack([left, right])
        scheme = ms.LandmarkScheme(n=8, pairs=tuple((i, i + 4) for i in range(4)))
        with pytest.raises(NotAReflection):
            ms.measure_two(GrayImage(np.zeros((30, 60), np.uint8)), pts, scheme)

    def test_empty_region_outside_image(self):
        _, pts, scheme = symmetric_frame()
        with pytest.raises(EmptyRegion):
            ms.measure_two(GrayImage(np.zeros((5, 5), np.uint8)), pts + 100, scheme)


class TestPearson:
    def test_linear(self):
        xs = [1.0, 2.5, 3.0, 7.0, 11.0]
        assert ms.pearson(xs, [2 * x + 1 for x in xs]) == pytest.approx(1.0, abs=1e-12)
        assert ms.pearson(xs, [-x for x in xs]) == pytest.approx(-1.0, abs=1e-12)

    def test_matches_statistics(self, rng):
        for _ in range(20):
            x, y = rng.normal(size=30), rng.normal(size=30)
            assert ms.pearson(x, y) == pytest.approx(statistics.correlation(x.tolist(), y.tolist()), abs=1e-12)

    def test_undefined(self):
        with pytest.raises(UndefinedCorrelation):
            ms.pearson([1, 1, 1], [1, 2, 3])
        with pytest.raises(UndefinedCorrelation):
            ms.pearson([1], [2])
        with pytest.raises(InvalidParameter):
            ms.pearson([1, 2], [1, 2, 3])

    @settings(max_examples=100)
    @given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=2, max_size=20))
    def test_bounded_and_symmetric(self, pairs):
        x, y = zip(*pairs)
        try:
            r = ms.pearson(x, y)
        except UndefinedCorrelation:
            return
        assert -1 <= r <= 1
        assert ms.pearson(y, x) == pytest.approx(r, abs=1e-12)

"""Bilateral asymmetry measures for landmark sequences and video frames."""
from .errors import *  # noqa: F401,F403
from .geometry import (
    Alignment,
    Landmarks,
    OrthogonalTransform2,
    SymmetryAxis,
    axis_from_orthogonal,
    center,
    centroid,
    full_alignment,
    orthogonal_procrustes,
    procrustes_distance,
    reflect_point,
    rotation_procrustes,
    unit_scale,
)
from .imaging import (
    GrayImage,
    Homography,
    RgbImage,
    brightness_normalize,
    color_correct,
    decode_pnm,
    encode_pnm,
    estimate_homography,
    invert_homography,
    l1_norm,
    to_gray,
    warp_perspective,
)
from .keyframes import KeyframeSelection, frame_distance, select_keyframes
from .measures import (
    FrameMetrics,
    LandmarkScheme,
    PixelAsymmetry,
    SideSplit,
    measure_one,
    measure_two,
    movement_from_neutral,
    overall_movement,
    pearson,
    split_left_right,
)
from .pts import parse_pts
from .shape_model import (
    ShapeModel,
    TrainingSet,
    align_training_set,
    clamp_params,
    estimate_params,
    synthesize,
    train_pca,
)

__version__ = "0.1.0"

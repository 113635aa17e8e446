"""Small image toolkit on numpy arrays.

Covers PGM/PPM reading and writing, luma conversion, L1 fitting error, colour
correction, brightness matching, DLT homographies and perspective warping.
Pixels are ``uint8``; grey images are ``(h, w)`` and colour images ``(h, w, 3)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import (
    DecodeError,
    DegenerateConfiguration,
    EmptyRegion,
    ImageMismatch,
    SingularHomography,
    TooFewPoints,
)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GrayImage:
    pixels: np.ndarray
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.size == 0:
            raise ValueError(f"grey image must be a non-empty (h, w) array, got {px.shape}")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255):
                raise ValueError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        object.__setattr__(self, "pixels", _freeze(px.copy()))
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != px.shape:
                raise ValueError("mask shape does not match the image")
            object.__setattr__(self, "mask", _freeze(mask.copy()))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def valid(self) -> np.ndarray:
        return np.ones(self.pixels.shape, bool) if self.mask is None else self.mask


@dataclass(frozen=True)
class RgbImage:
    pixels: np.ndarray
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.size == 0:
            raise ValueError(f"colour image must be a non-empty (h, w, 3) array, got {px.shape}")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255):
                raise ValueError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        object.__setattr__(self, "pixels", _freeze(px.copy()))
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != px.shape[:2]:
                raise ValueError("mask shape does not match the image")
            object.__setattr__(self, "mask", _freeze(mask.copy()))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


Image = Union[GrayImage, RgbImage]


# -- PNM codec --------------------------------------------------------------

_MAGIC = {b"P2": (1, False), b"P3": (3, False), b"P5": (1, True), b"P6": (3, True)}


def _header_tokens(data: bytes, count: int) -> tuple[list[tuple[bytes, int]], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise DecodeError("unexpected end of header", pos)
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        tokens.append((data[start:pos], start))
    return tokens, pos


def decode_pnm(data: bytes) -> Image:
    """Decode a P2, P3, P5 or P6 file with maxval 255."""
    tokens, pos = _header_tokens(data, 4)
    (magic, _), (w_tok, w_at), (h_tok, h_at), (max_tok, max_at) = tokens
    if magic not in _MAGIC:
        raise DecodeError(f"unsupported magic number {magic!r}", 0)
    channels, binary = _MAGIC[magic]
    dims = []
    for tok, at in ((w_tok, w_at), (h_tok, h_at)):
        if not tok.isdigit() or int(tok) == 0:
            raise DecodeError(f"invalid image dimension {tok!r}", at)
        dims.append(int(tok))
    width, height = dims
    if max_tok != b"255":
        raise DecodeError(f"only maxval 255 is supported, got {max_tok!r}", max_at)
    count = width * height * channels

    if binary:
        if pos >= len(data) or not data[pos : pos + 1].isspace():
            raise DecodeError("missing whitespace after header", pos)
        pos += 1
        payload = data[pos : pos + count]
        if len(payload) < count:
            raise DecodeError(f"truncated payload: need {count} bytes, have {len(payload)}", pos + len(payload))
        values = np.frombuffer(payload, dtype=np.uint8)
    else:
        raw, offsets = [], []
        for tok_start, tok in _iter_ascii(data, pos):
            raw.append(tok)
            offsets.append(tok_start)
            if len(raw) == count:
                break
        if len(raw) < count:
            raise DecodeError(f"truncated payload: need {count} samples, have {len(raw)}", len(data))
        values = np.empty(count, dtype=np.uint8)
        for i, (tok, at) in enumerate(zip(raw, offsets)):
            if not tok.isdigit() or int(tok) > 255:
                raise DecodeError(f"invalid sample {tok!r}", at)
            values[i] = int(tok)

    if channels == 1:
        return GrayImage(values.reshape(height, width))
    return RgbImage(values.reshape(height, width, 3))


def _iter_ascii(data: bytes, pos: int):
    n = len(data)
    while pos < n:
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            start = pos
            while pos < n and not data[pos : pos + 1].isspace():
                pos += 1
            yield start, data[start:pos]


def encode_pnm(image: Image) -> bytes:
    """Canonical binary encoding (P5 for grey, P6 for colour)."""
    magic = b"P5" if isinstance(image, GrayImage) else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, image.width, image.height)
    return header + np.ascontiguousarray(image.pixels).tobytes()


def read_pnm(path) -> Image:
    return decode_pnm(Path(path).read_bytes())


def write_pnm(image: Image, path) -> None:
    Path(path).write_bytes(encode_pnm(image))


# -- pixel arithmetic ---------------------------------------------------------

def _shift(total_ref: int, n_ref: int, total_src: int, n_src: int) -> int:
    """round(mean_ref - mean_src) in exact arithmetic (half to even)."""
    return round(Fraction(total_ref, n_ref) - Fraction(total_src, n_src))


def to_gray(img: RgbImage) -> GrayImage:
    """Rec. 601 luma, rounded half up."""
    px = img.pixels.astype(np.int64)
    weighted = 299 * px[..., 0] + 587 * px[..., 1] + 114 * px[..., 2]
    return GrayImage(((weighted + 500) // 1000).astype(np.uint8), mask=img.mask)


def l1_norm(a: RgbImage, b: RgbImage) -> int:
    if a.pixels.shape != b.pixels.shape:
        raise ImageMismatch(f"image sizes differ: {a.pixels.shape} vs {b.pixels.shape}")
    diff = np.abs(a.pixels.astype(np.int64) - b.pixels.astype(np.int64))
    return int(diff.sum())


def color_correct(fitted: RgbImage, original: RgbImage) -> RgbImage:
    """Shift each channel of ``fitted`` so its mean matches ``original``."""
    if fitted.pixels.shape != original.pixels.shape:
        raise ImageMismatch(f"image sizes differ: {fitted.pixels.shape} vs {original.pixels.shape}")
    n = fitted.width * fitted.height
    out = fitted.pixels.astype(np.int64)
    for c in range(3):
        delta = _shift(int(original.pixels[..., c].sum(dtype=np.int64)), n,
                       int(fitted.pixels[..., c].sum(dtype=np.int64)), n)
        out[..., c] += delta
    return RgbImage(np.clip(out, 0, 255).astype(np.uint8))


def brightness_normalize(src: GrayImage, ref: GrayImage) -> GrayImage:
    """Add a constant to ``src`` so its mean over its mask matches ``ref``'s."""
    src_valid, ref_valid = src.valid(), ref.valid()
    n_src, n_ref = int(src_valid.sum()), int(ref_valid.sum())
    if n_src == 0 or n_ref == 0:
        raise EmptyRegion("brightness normalisation needs at least one valid pixel in each image")
    delta = _shift(int(ref.pixels[ref_valid].sum(dtype=np.int64)), n_ref,
                   int(src.pixels[src_valid].sum(dtype=np.int64)), n_src)
    out = np.clip(src.pixels.astype(np.int64) + delta, 0, 255).astype(np.uint8)
    return GrayImage(out, mask=src.mask)


# -- homographies -----------------------------------------------------------

@dataclass(frozen=True)
class Homography:
    """3x3 projective map of homogeneous column vectors ``(x, y, 1)``."""

    matrix: np.ndarray

    def __post_init__(self):
        h = np.array(self.matrix, dtype=np.float64)
        if h.shape != (3, 3) or not np.all(np.isfinite(h)):
            raise ValueError("homography must be a finite 3x3 matrix")
        if abs(h[2, 2]) > 1e-12:
            h = h / h[2, 2]
        else:
            h = h / np.linalg.norm(h)
        if abs(np.linalg.det(h)) <= 1e-12:
            raise SingularHomography("homography matrix is singular")
        object.__setattr__(self, "matrix", _freeze(h))

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        homog = np.column_stack([pts, np.ones(len(pts))]) @ self.matrix.T
        return homog[:, :2] / homog[:, 2:3]


def _hartley(pts: np.ndarray) -> np.ndarray:
    """Similarity moving the centroid to 0 and the mean distance to sqrt(2)."""
    c = pts.mean(axis=0)
    mean_dist = np.mean(np.hypot(*(pts - c).T))
    if mean_dist == 0:
        raise DegenerateConfiguration("all points coincide")
    s = np.sqrt(2.0) / mean_dist
    return np.array([[s, 0, -s * c[0]], [0, s, -s * c[1]], [0, 0, 1.0]])


def _has_collinear_triple(pts: np.ndarray, tol: float) -> bool:
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                u, v = pts[j] - pts[i], pts[k] - pts[i]
                if abs(u[0] * v[1] - u[1] * v[0]) <= tol:
                    return True
    return False


def estimate_homography(src, dst) -> Homography:
    """Normalised DLT fit of ``H`` with ``dst ~ H src``."""
    src, dst = np.asarray(src, dtype=np.float64), np.asarray(dst, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise ValueError("src and dst must be matching (n, 2) point arrays")
    if len(src) < 4:
        raise TooFewPoints(f"need at least 4 correspondences, got {len(src)}")
    t_src, t_dst = _hartley(src), _hartley(dst)
    ns = (np.column_stack([src, np.ones(len(src))]) @ t_src.T)[:, :2]
    nd = (np.column_stack([dst, np.ones(len(dst))]) @ t_dst.T)[:, :2]
    if len(src) == 4 and (_has_collinear_triple(ns, 1e-9) or _has_collinear_triple(nd, 1e-9)):
        raise DegenerateConfiguration("three of the four points are collinear")

    rows = []
    for (x, y), (u, v) in zip(ns, nd):
        rows.append([-x, -y, -1, 0, 0, 0, u * x, u * y, u])
        rows.append([0, 0, 0, -x, -y, -1, v * x, v * y, v])
    a = np.asarray(rows)
    _, sv, vt = np.linalg.svd(a)
    # a unique solution leaves exactly one (near) zero singular value
    if sv[7] <= 1e-10 * sv[0]:
        raise DegenerateConfiguration("point configuration does not determine a homography")
    h_norm = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t_dst) @ h_norm @ t_src
    try:
        return Homography(h)
    except SingularHomography:
        raise DegenerateConfiguration("fitted homography is singular") from None


def invert_homography(h: Homography) -> Homography:
    try:
        inv = np.linalg.inv(h.matrix)
    except np.linalg.LinAlgError:
        raise SingularHomography("homography is not invertible") from None
    return Homography(inv)


def sample_bilinear(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear samples at ``(xs, ys)``; pixel centres sit at integer coordinates.

    Returns float values (zero where invalid) and a validity mask marking
    samples that fall inside the image.
    """
    h, w = pixels.shape[:2]
    eps = 1e-9
    valid = (xs >= -eps) & (xs <= w - 1 + eps) & (ys >= -eps) & (ys <= h - 1 + eps)
    xc = np.clip(xs, 0, w - 1)
    yc = np.clip(ys, 0, h - 1)
    x0 = np.clip(np.floor(xc).astype(np.int64), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(yc).astype(np.int64), 0, max(h - 2, 0))
    x1, y1 = np.minimum(x0 + 1, w - 1), np.minimum(y0 + 1, h - 1)
    fx, fy = xc - x0, yc - y0
    if pixels.ndim == 3:
        fx, fy = fx[..., None], fy[..., None]
    p = pixels.astype(np.float64)
    top = p[y0, x0] * (1 - fx) + p[y0, x1] * fx
    bottom = p[y1, x0] * (1 - fx) + p[y1, x1] * fx
    out = top * (1 - fy) + bottom * fy
    out[~valid] = 0.0
    return out, valid


def warp_perspective(img: Image, h: Homography) -> Image:
    """Inverse-mapped warp: destination ``p`` samples the source at ``H^-1 p``.

    Destination pixels whose preimage leaves the source are black and marked
    invalid in the returned mask.
    """
    inv = invert_homography(h).matrix
    rows, cols = np.mgrid[0 : img.height, 0 : img.width]
    homog = np.stack([cols.ravel(), rows.ravel(), np.ones(cols.size)]).astype(np.float64)
    mapped = inv @ homog
    with np.errstate(divide="ignore", invalid="ignore"):
        xs, ys = mapped[0] / mapped[2], mapped[1] / mapped[2]
    finite = np.isfinite(xs) & np.isfinite(ys) & (np.abs(mapped[2]) > 1e-12)
    xs, ys = np.where(finite, xs, -1.0), np.where(finite, ys, -1.0)
    values, valid = sample_bilinear(img.pixels, xs, ys)
    valid &= finite
    values[~valid] = 0.0
    out = np.clip(np.rint(values), 0, 255).astype(np.uint8)
    shape = (img.height, img.width)
    mask = valid.reshape(shape)
    if isinstance(img, GrayImage):
        return GrayImage(out.reshape(shape), mask=mask)
    return RgbImage(out.reshape(shape + (3,)), mask=mask)

"""Raster types, bit-exact PGM I/O, integral images, and resampling.

Every image in the package is an 8-bit single-channel raster held as a
2-D numpy uint8 array (row-major, ``pixels[y, x]``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, ParameterError, PgmFormatError, SizeError


def _round_half_up(values: np.ndarray) -> np.ndarray:
    # np.round ties to even; intensity quantization here always rounds .5 up
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5)


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle, top-left anchored."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ParameterError(f"rect extent must be >= 1, got {self.w}x{self.h}")

    @property
    def x2(self) -> int:
        """One past the rightmost column."""
        return self.x + self.w

    @property
    def y2(self) -> int:
        """One past the bottom row."""
        return self.y + self.h

    def contains_point(self, x: float, y: float) -> bool:
        return self.x <= x < self.x2 and self.y <= y < self.y2


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float


class GrayImage:
    """8-bit grayscale raster. Immutable by convention: operations return new images."""

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise SizeError(f"expected non-empty 2-D raster, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255):
                raise ParameterError("intensities must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        self.pixels = arr
        self.pixels.setflags(write=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def data(self) -> np.ndarray:
        """Row-major flat view of the intensities."""
        return self.pixels.reshape(-1)

    def __eq__(self, other) -> bool:
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)

    def __repr__(self) -> str:
        return f"GrayImage({self.width}x{self.height})"

    def crop(self, rect: Rect) -> "GrayImage":
        if rect.x < 0 or rect.y < 0 or rect.x2 > self.width or rect.y2 > self.height:
            raise BoundsError(f"crop {rect} outside {self!r}")
        return GrayImage(self.pixels[rect.y:rect.y2, rect.x:rect.x2].copy())


class IntegralImage:
    """Summed-area table: sums[y, x] = sum of pixels over [0..x] x [0..y]."""

    __slots__ = ("sums",)

    def __init__(self, sums: np.ndarray):
        self.sums = np.asarray(sums, dtype=np.int64)
        self.sums.setflags(write=False)

    @property
    def width(self) -> int:
        return self.sums.shape[1]

    @property
    def height(self) -> int:
        return self.sums.shape[0]


def to_gray(r, g, b) -> np.ndarray:
    """Luminance conversion 0.30 R + 0.59 G + 0.11 B, rounded half up.

    Accepts scalars or equally shaped arrays; returns uint8 of the same shape.
    """
    r = np.asarray(r, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    lum = _round_half_up(0.30 * r + 0.59 * g + 0.11 * b)
    return np.clip(lum, 0, 255).astype(np.uint8)


def load_pgm(data: bytes) -> GrayImage:
    """Parse a binary (P5) PGM with maxval <= 255, preserving pixels exactly."""
    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(data):
            if data[pos:pos + 1].isspace():
                pos += 1
            elif data[pos:pos + 1] == b"#":
                while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise PgmFormatError("truncated PGM header")
        return data[start:pos]

    magic = next_token()
    if magic != b"P5":
        raise PgmFormatError(f"unsupported magic {magic!r}, expected P5")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise PgmFormatError("non-numeric PGM header field") from exc
    if width < 1 or height < 1:
        raise PgmFormatError(f"invalid dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise PgmFormatError(f"maxval {maxval} out of supported range (1..255)")
    pos += 1  # single whitespace byte after maxval
    payload = data[pos:pos + width * height]
    if len(payload) != width * height:
        raise PgmFormatError(
            f"truncated payload: expected {width * height} bytes, got {len(payload)}"
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return GrayImage(pixels.copy())


def save_pgm(img: GrayImage) -> bytes:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def integral_image(img: GrayImage) -> IntegralImage:
    sums = np.cumsum(np.cumsum(img.pixels.astype(np.int64), axis=0), axis=1)
    return IntegralImage(sums)


def rect_sum(ii: IntegralImage, r: Rect) -> int:
    """Sum of source pixels inside r, via the four-corner identity."""
    if r.x < 0 or r.y < 0 or r.x2 > ii.width or r.y2 > ii.height:
        raise BoundsError(f"rect {r} outside integral image {ii.width}x{ii.height}")
    s = ii.sums
    total = int(s[r.y2 - 1, r.x2 - 1])
    if r.x > 0:
        total -= int(s[r.y2 - 1, r.x - 1])
    if r.y > 0:
        total -= int(s[r.y - 1, r.x2 - 1])
    if r.x > 0 and r.y > 0:
        total += int(s[r.y - 1, r.x - 1])
    return total


def _bilinear_sample(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample float coordinates with bilinear weights; out-of-frame reads 0."""
    h, w = pixels.shape
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0

    def fetch(xi, yi):
        inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
        vals = np.zeros(xi.shape, dtype=np.float64)
        vals[inside] = pixels[yi[inside], xi[inside]]
        return vals

    v00 = fetch(x0, y0)
    v10 = fetch(x0 + 1, y0)
    v01 = fetch(x0, y0 + 1)
    v11 = fetch(x0 + 1, y0 + 1)
    top = v00 * (1 - fx) + v10 * fx
    bot = v01 * (1 - fx) + v11 * fx
    return top * (1 - fy) + bot * fy


def rotate(img: GrayImage, degrees: float) -> GrayImage:
    """Rotate about the image center with bilinear resampling; outside reads 0.

    Positive angles turn image content counter-clockwise on screen.
    """
    if degrees % 360 == 0:
        return GrayImage(img.pixels.copy())
    theta = np.deg2rad(degrees)
    c, s = np.cos(theta), np.sin(theta)
    cx = (img.width - 1) / 2.0
    cy = (img.height - 1) / 2.0
    ys, xs = np.mgrid[0:img.height, 0:img.width]
    dx = xs - cx
    dy = ys - cy
    # inverse map: where each output pixel reads from
    src_x = cx + c * dx - s * dy
    src_y = cy + s * dx + c * dy
    vals = _bilinear_sample(img.pixels.astype(np.float64), src_x, src_y)
    return GrayImage(np.clip(_round_half_up(vals), 0, 255).astype(np.uint8))


def rotate_point(x: float, y: float, degrees: float, width: int, height: int) -> tuple[float, float]:
    """Forward map of rotate(): new location of source point (x, y)."""
    theta = np.deg2rad(degrees)
    c, s = np.cos(theta), np.sin(theta)
    cx = (width - 1) / 2.0
    cy = (height - 1) / 2.0
    dx = x - cx
    dy = y - cy
    return (cx + c * dx + s * dy, cy - s * dx + c * dy)


def half_sample(img: GrayImage) -> GrayImage:
    """Downsample by 2 with a 2x2 box average (odd trailing row/col dropped)."""
    out_h = img.height // 2
    out_w = img.width // 2
    if out_h < 1 or out_w < 1:
        raise SizeError(f"half_sample of {img!r} would be empty")
    p = img.pixels[: 2 * out_h, : 2 * out_w].astype(np.float64)
    quads = p[0::2, 0::2] + p[1::2, 0::2] + p[0::2, 1::2] + p[1::2, 1::2]
    return GrayImage(np.clip(_round_half_up(quads / 4.0), 0, 255).astype(np.uint8))


def downsample_by(img: GrayImage, factor: float) -> GrayImage:
    """Downsample by an arbitrary factor > 1 with bilinear resampling."""
    if not factor > 1:
        raise ParameterError(f"downsample factor must be > 1, got {factor}")
    out_w = int(img.width / factor)
    out_h = int(img.height / factor)
    if out_w < 1 or out_h < 1:
        raise SizeError(f"downsample of {img!r} by {factor} would be empty")
    ys, xs = np.mgrid[0:out_h, 0:out_w]
    src_x = (xs + 0.5) * factor - 0.5
    src_y = (ys + 0.5) * factor - 0.5
    # clamp so border samples do not blend with the zero exterior
    src_x = np.clip(src_x, 0, img.width - 1)
    src_y = np.clip(src_y, 0, img.height - 1)
    vals = _bilinear_sample(img.pixels.astype(np.float64), src_x, src_y)
    return GrayImage(np.clip(_round_half_up(vals), 0, 255).astype(np.uint8))

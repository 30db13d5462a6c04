"""Local critical-point extraction.

Harris corners drive scenario 1; the BRISK half (FAST ring test over a
scale pyramid, oriented 512-bit binary descriptor, Hamming matching)
drives scenario 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BoundsError, ParameterError, SizeError
from .image import GrayImage, Point2D, Rect, downsample_by, half_sample

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
SOBEL_Y = SOBEL_X.T


@dataclass(frozen=True)
class HarrisParams:
    sigma: float = 1.5
    k: float = 0.04
    response_threshold: float = 50_000.0
    nms_radius: int = 3

    def __post_init__(self):
        if not 0.04 <= self.k <= 0.06:
            raise ParameterError(f"harris k must lie in [0.04, 0.06], got {self.k}")
        if self.sigma <= 0:
            raise ParameterError("harris sigma must be > 0")
        if self.nms_radius < 1:
            raise ParameterError("nms radius must be >= 1")


@dataclass(frozen=True)
class KeyPoint:
    x: float
    y: float
    score: float
    scale: float = 1.0
    orientation: float = 0.0

    @property
    def location(self) -> Point2D:
        return Point2D(self.x, self.y)


def gradients(img: GrayImage) -> tuple[np.ndarray, np.ndarray]:
    """Sobel derivatives (raw 0..255 units) with replicated borders."""
    if img.width < 3 or img.height < 3:
        raise SizeError(f"gradients need at least 3x3, got {img!r}")
    padded = np.pad(img.pixels.astype(np.float64), 1, mode="edge")
    ix = np.zeros((img.height, img.width), dtype=np.float64)
    iy = np.zeros_like(ix)
    for dy in range(3):
        for dx in range(3):
            window = padded[dy:dy + img.height, dx:dx + img.width]
            if SOBEL_X[dy, dx] != 0:
                ix += SOBEL_X[dy, dx] * window
            if SOBEL_Y[dy, dx] != 0:
                iy += SOBEL_Y[dy, dx] * window
    return ix, iy


def gaussian_window_weights(sigma: float) -> np.ndarray:
    """Unnormalized window exp(-(x^2+y^2)/(2 sigma^2)), truncated at ceil(3 sigma)."""
    radius = math.ceil(3 * sigma)
    coords = np.arange(-radius, radius + 1, dtype=np.float64)
    one_d = np.exp(-(coords ** 2) / (2.0 * sigma * sigma))
    return np.outer(one_d, one_d)


def _windowed_sum(values: np.ndarray, one_d: np.ndarray) -> np.ndarray:
    """Separable weighted sum with zero padding outside the frame."""
    radius = len(one_d) // 2
    h, w = values.shape
    padded = np.pad(values, radius, mode="constant")
    tmp = np.zeros((h + 2 * radius, w), dtype=np.float64)
    for i, weight in enumerate(one_d):
        tmp += weight * padded[:, i:i + w]
    out = np.zeros((h, w), dtype=np.float64)
    for i, weight in enumerate(one_d):
        out += weight * tmp[i:i + h, :]
    return out


def structure_tensor(ix: np.ndarray, iy: np.ndarray, sigma: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gaussian-weighted sums of Ix^2, Iy^2, IxIy around every pixel."""
    radius = math.ceil(3 * sigma)
    coords = np.arange(-radius, radius + 1, dtype=np.float64)
    one_d = np.exp(-(coords ** 2) / (2.0 * sigma * sigma))
    sxx = _windowed_sum(ix * ix, one_d)
    syy = _windowed_sum(iy * iy, one_d)
    sxy = _windowed_sum(ix * iy, one_d)
    return sxx, syy, sxy


def harris_response(sxx: np.ndarray, syy: np.ndarray, sxy: np.ndarray, k: float) -> np.ndarray:
    """det(D) - k tr(D)^2 per pixel; corners positive, edges negative."""
    if not 0.04 <= k <= 0.06:
        raise ParameterError(f"harris k must lie in [0.04, 0.06], got {k}")
    det = sxx * syy - sxy * sxy
    tr = sxx + syy
    return det - k * tr * tr


def _sliding_max(values: np.ndarray, radius: int) -> np.ndarray:
    h, w = values.shape
    padded = np.pad(values, radius, mode="constant", constant_values=-np.inf)
    out = np.full((h, w), -np.inf)
    for dy in range(2 * radius + 1):
        for dx in range(2 * radius + 1):
            np.maximum(out, padded[dy:dy + h, dx:dx + w], out=out)
    return out


def _greedy_peaks(response: np.ndarray, candidates: np.ndarray, radius: int) -> list[tuple[float, float, float]]:
    """Deterministic NMS: visit candidates by (-score, y, x); merge equal-score
    plateau neighbors into their centroid; suppress everything else in range."""
    ys, xs = np.nonzero(candidates)
    if len(ys) == 0:
        return []
    scores = response[ys, xs]
    order = np.lexsort((xs, ys, -scores))
    ys, xs, scores = ys[order], xs[order], scores[order]
    alive = np.ones(len(ys), dtype=bool)
    peaks: list[tuple[float, float, float]] = []
    for i in range(len(ys)):
        if not alive[i]:
            continue
        near = alive & (np.abs(ys - ys[i]) <= radius) & (np.abs(xs - xs[i]) <= radius)
        ties = near & (scores == scores[i])
        peaks.append((float(xs[ties].mean()), float(ys[ties].mean()), float(scores[i])))
        alive[near] = False
    return peaks


def harris_detect(img: GrayImage, params: HarrisParams, roi: Rect) -> list[KeyPoint]:
    """Corner keypoints inside roi: response above threshold and locally maximal.

    Returned sorted by descending score, then row-major position.
    """
    if roi.x < 0 or roi.y < 0 or roi.x2 > img.width or roi.y2 > img.height:
        raise BoundsError(f"roi {roi} outside {img!r}")
    ix, iy = gradients(img)
    sxx, syy, sxy = structure_tensor(ix, iy, params.sigma)
    response = harris_response(sxx, syy, sxy, params.k)
    local_max = response >= _sliding_max(response, params.nms_radius)
    candidates = (response > params.response_threshold) & local_max
    mask = np.zeros_like(candidates)
    mask[roi.y:roi.y2, roi.x:roi.x2] = True
    peaks = _greedy_peaks(response, candidates & mask, params.nms_radius)
    return [KeyPoint(x=x, y=y, score=s) for x, y, s in peaks]


# 16-pixel Bresenham circle of radius 3, clockwise from the top
FAST_RING = (
    (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)
FAST_ARC = 9


def _fast_score_map(pixels: np.ndarray, threshold_rel: float) -> np.ndarray:
    """Segment-test score per pixel (0 where the test fails); 3 px border is 0."""
    h, w = pixels.shape
    scores = np.zeros((h, w), dtype=np.float64)
    if h < 7 or w < 7:
        return scores
    t = threshold_rel * 255.0
    center = pixels[3:h - 3, 3:w - 3].astype(np.float64)
    ring = np.empty((16,) + center.shape, dtype=np.float64)
    for idx, (dx, dy) in enumerate(FAST_RING):
        ring[idx] = pixels[3 + dy:h - 3 + dy, 3 + dx:w - 3 + dx]
    brighter = ring > center + t
    darker = ring < center - t
    passes = np.zeros(center.shape, dtype=bool)
    for start in range(16):
        arc = [(start + j) % 16 for j in range(FAST_ARC)]
        passes |= np.logical_and.reduce(brighter[arc])
        passes |= np.logical_and.reduce(darker[arc])
    margin = np.maximum(np.abs(ring - center) - t, 0.0).sum(axis=0)
    scores[3:h - 3, 3:w - 3] = np.where(passes, margin, 0.0)
    return scores


def fast_ring_test(img: GrayImage, x: int, y: int, threshold_rel: float) -> bool:
    """True iff >= 9 contiguous ring pixels are all brighter than center + t
    or all darker than center - t, with t = threshold_rel * 255."""
    if not (3 <= x < img.width - 3 and 3 <= y < img.height - 3):
        raise BoundsError(f"ring around ({x}, {y}) leaves {img!r}")
    t = threshold_rel * 255.0
    center = float(img.pixels[y, x])
    diffs = [float(img.pixels[y + dy, x + dx]) - center for dx, dy in FAST_RING]
    for start in range(16):
        arc = [diffs[(start + j) % 16] for j in range(FAST_ARC)]
        if all(d > t for d in arc) or all(d < -t for d in arc):
            return True
    return False


@dataclass(frozen=True)
class ScalePyramid:
    """4 octaves at scales 2^i plus intra-octaves at 1.5 * 2^i."""

    octaves: tuple[GrayImage, ...]
    intra: tuple[GrayImage, ...]

    def levels(self) -> list[tuple[GrayImage, float]]:
        """All levels with their scale t, ascending."""
        out = [(img, float(2 ** i)) for i, img in enumerate(self.octaves)]
        out += [(img, 1.5 * 2 ** i) for i, img in enumerate(self.intra)]
        out.sort(key=lambda pair: pair[1])
        return out


def build_pyramid(img: GrayImage, octaves: int = 4) -> ScalePyramid:
    if octaves < 1:
        raise ParameterError(f"octaves must be >= 1, got {octaves}")
    coarsest = min(img.width, img.height) // (2 ** (octaves - 1))
    if coarsest < 24:
        raise SizeError(
            f"{img!r} too small for {octaves} octaves (coarsest side {coarsest} < 24)"
        )
    c_levels = [img]
    for _ in range(1, octaves):
        c_levels.append(half_sample(c_levels[-1]))
    d_levels = [downsample_by(c, 1.5) for c in c_levels[:-1]]
    return ScalePyramid(octaves=tuple(c_levels), intra=tuple(d_levels))


@dataclass(frozen=True)
class BriskParams:
    octaves: int = 4
    threshold_rel: float = 0.01


def _to_c0(coord: float, t: float) -> float:
    return (coord + 0.5) * t - 0.5


def _from_c0(coord: float, t: float) -> float:
    return (coord + 0.5) / t - 0.5


def _neighbor_max(score_map: np.ndarray, x: float, y: float) -> float:
    h, w = score_map.shape
    xi = int(round(x))
    yi = int(round(y))
    x0, x1 = max(0, xi - 1), min(w, xi + 2)
    y0, y1 = max(0, yi - 1), min(h, yi + 2)
    if x0 >= x1 or y0 >= y1:
        return 0.0
    return float(score_map[y0:y1, x0:x1].max())


def brisk_detect(pyr: ScalePyramid, params: BriskParams = BriskParams()) -> list[KeyPoint]:
    """FAST segment test across all pyramid levels with in-level 3x3 NMS and a
    score check against the neighboring scales; coordinates in the c0 frame."""
    levels = pyr.levels()
    score_maps = [_fast_score_map(img.pixels, params.threshold_rel) for img, _ in levels]
    keypoints: list[KeyPoint] = []
    for li, (img, t) in enumerate(levels):
        smap = score_maps[li]
        if not smap.any():
            continue
        local_max = smap >= _sliding_max(smap, 1)
        peaks = _greedy_peaks(smap, (smap > 0) & local_max, 1)
        for x, y, score in peaks:
            cx = _to_c0(x, t)
            cy = _to_c0(y, t)
            ok = True
            for ni in (li - 1, li + 1):
                if 0 <= ni < len(levels):
                    nt = levels[ni][1]
                    if score < _neighbor_max(score_maps[ni], _from_c0(cx, nt), _from_c0(cy, nt)):
                        ok = False
                        break
            if ok:
                keypoints.append(KeyPoint(x=cx, y=cy, score=score, scale=t))
    keypoints.sort(key=lambda kp: (-kp.score, kp.scale, kp.y, kp.x))
    return keypoints


# --- BRISK sampling pattern and descriptor ---------------------------------

SHORT_PAIR_COUNT = 512
SHORT_MAX_DIST = 9.75
LONG_MIN_DIST = 13.67
PATTERN_RING_RADII = (0.0, 2.9, 4.9, 7.4)
PATTERN_RING_COUNTS = (1, 14, 20, 25)


@dataclass(frozen=True)
class BriskPattern:
    points: np.ndarray      # (60, 2) offsets at unit scale
    sigmas: np.ndarray      # (60,) per-point smoothing
    short_pairs: np.ndarray  # (512, 2) indices, second point compared against first
    long_pairs: np.ndarray   # (M, 2) indices for orientation
    reach: float             # radius (pattern + smoothing support) at unit scale


@lru_cache(maxsize=1)
def build_pattern() -> BriskPattern:
    """Deterministic sampling pattern: 60 points on concentric rings.

    Point pairs are enumerated in fixed lexicographic order; the short set is
    the 512 closest pairs (distance < SHORT_MAX_DIST), the long set keeps
    pairs farther than LONG_MIN_DIST.
    """
    points = []
    sigmas = []
    for radius, count in zip(PATTERN_RING_RADII, PATTERN_RING_COUNTS):
        if radius == 0.0:
            points.append((0.0, 0.0))
            sigmas.append(0.5)
            continue
        spacing = 2.0 * math.pi * radius / count
        for j in range(count):
            angle = 2.0 * math.pi * j / count
            points.append((radius * math.cos(angle), radius * math.sin(angle)))
            sigmas.append(0.45 * spacing)
    pts = np.array(points, dtype=np.float64)
    sig = np.array(sigmas, dtype=np.float64)

    n = len(pts)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    dists = {p: float(np.hypot(*(pts[p[1]] - pts[p[0]]))) for p in pairs}
    short = [p for p in pairs if dists[p] < SHORT_MAX_DIST]
    short.sort(key=lambda p: (dists[p], p))
    if len(short) < SHORT_PAIR_COUNT:
        raise RuntimeError(f"pattern yields only {len(short)} short pairs")
    long = [p for p in pairs if dists[p] > LONG_MIN_DIST]
    reach = float(np.max(np.hypot(pts[:, 0], pts[:, 1]) + 2.0 * sig + 1.0))
    return BriskPattern(
        points=pts,
        sigmas=sig,
        short_pairs=np.array(short[:SHORT_PAIR_COUNT], dtype=np.int64),
        long_pairs=np.array(long, dtype=np.int64),
        reach=reach,
    )


class BriskDescriptor:
    """512-bit binary descriptor, stored packed (64 bytes, MSB-first)."""

    __slots__ = ("packed",)

    BITS = 512

    def __init__(self, packed: np.ndarray):
        arr = np.asarray(packed, dtype=np.uint8)
        if arr.shape != (self.BITS // 8,):
            raise ParameterError(f"descriptor must pack {self.BITS} bits")
        self.packed = arr
        self.packed.setflags(write=False)

    @classmethod
    def from_bits(cls, bits: np.ndarray) -> "BriskDescriptor":
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.shape != (cls.BITS,):
            raise ParameterError(f"expected {cls.BITS} bits, got shape {bits.shape}")
        return cls(np.packbits(bits))

    @classmethod
    def from_hex(cls, text: str) -> "BriskDescriptor":
        raw = bytes.fromhex(text)
        return cls(np.frombuffer(raw, dtype=np.uint8).copy())

    @property
    def bits(self) -> np.ndarray:
        return np.unpackbits(self.packed)

    def hex(self) -> str:
        return self.packed.tobytes().hex()

    def __len__(self) -> int:
        return self.BITS

    def __eq__(self, other) -> bool:
        return isinstance(other, BriskDescriptor) and np.array_equal(self.packed, other.packed)


def hamming(a: BriskDescriptor, b: BriskDescriptor) -> int:
    if len(a) != len(b):
        raise ParameterError("descriptor lengths differ")
    return int(np.unpackbits(a.packed ^ b.packed).sum())


def _pattern_reach(scale: float) -> float:
    return build_pattern().reach * scale


def _smoothed_samples(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
    """Gaussian-smoothed intensity at real-valued positions.

    Each sample averages the integer grid inside radius ceil(2 sigma) with
    weights exp(-d^2 / (2 sigma^2)); caller guarantees in-bounds support.
    """
    out = np.empty(len(xs), dtype=np.float64)
    for i in range(len(xs)):
        sigma = sigmas[i]
        r = max(1, math.ceil(2.0 * sigma))
        gx0 = int(math.floor(xs[i])) - r
        gy0 = int(math.floor(ys[i])) - r
        gx = np.arange(gx0, gx0 + 2 * r + 2, dtype=np.float64)
        gy = np.arange(gy0, gy0 + 2 * r + 2, dtype=np.float64)
        wx = np.exp(-((gx - xs[i]) ** 2) / (2.0 * sigma * sigma))
        wy = np.exp(-((gy - ys[i]) ** 2) / (2.0 * sigma * sigma))
        block = pixels[gy0:gy0 + 2 * r + 2, gx0:gx0 + 2 * r + 2]
        weights = np.outer(wy, wx)
        out[i] = float((block * weights).sum() / weights.sum())
    return out


def _check_coverage(pixels: np.ndarray, cx: float, cy: float, scale: float) -> None:
    reach = _pattern_reach(scale) + 2.0
    h, w = pixels.shape
    if cx - reach < 0 or cy - reach < 0 or cx + reach > w - 1 or cy + reach > h - 1:
        raise BoundsError(
            f"pattern of reach {reach:.1f} around ({cx:.1f}, {cy:.1f}) exceeds {w}x{h} image"
        )


def _sample_pattern(pixels: np.ndarray, cx: float, cy: float, scale: float, angle: float) -> np.ndarray:
    pattern = build_pattern()
    c, s = math.cos(angle), math.sin(angle)
    px = pattern.points[:, 0] * scale
    py = pattern.points[:, 1] * scale
    xs = cx + c * px - s * py
    ys = cy + s * px + c * py
    return _smoothed_samples(pixels.astype(np.float64), xs, ys, pattern.sigmas * scale)


# below this mean-gradient magnitude (intensity per pixel) the direction is
# sampling-grid noise, not structure; oriented patches measure >= 0.1
_GRADIENT_FLOOR = 0.01


def orientation_at(img: GrayImage, cx: float, cy: float, scale: float = 1.0) -> float:
    """Dominant direction from the mean long-pair local gradient;
    directionless patches report 0 by convention."""
    _check_coverage(img.pixels, cx, cy, scale)
    pattern = build_pattern()
    values = _sample_pattern(img.pixels, cx, cy, scale, 0.0)
    i = pattern.long_pairs[:, 0]
    j = pattern.long_pairs[:, 1]
    disp = (pattern.points[j] - pattern.points[i]) * scale
    sq = (disp ** 2).sum(axis=1)
    coeff = (values[j] - values[i]) / sq
    g = (disp * coeff[:, None]).mean(axis=0)
    if math.hypot(g[0], g[1]) < _GRADIENT_FLOOR * scale:
        return 0.0
    return float(math.atan2(g[1], g[0]))


def describe_at(img: GrayImage, cx: float, cy: float, orientation: float, scale: float = 1.0) -> BriskDescriptor:
    """512-bit descriptor: short-pair comparisons of the rotated pattern."""
    _check_coverage(img.pixels, cx, cy, scale)
    pattern = build_pattern()
    values = _sample_pattern(img.pixels, cx, cy, scale, orientation)
    i = pattern.short_pairs[:, 0]
    j = pattern.short_pairs[:, 1]
    bits = (values[j] > values[i]).astype(np.uint8)
    return BriskDescriptor.from_bits(bits)


def brisk_orientation(patch: GrayImage, scale: float = 1.0) -> float:
    """Patch-centered convenience wrapper around orientation_at()."""
    return orientation_at(patch, (patch.width - 1) / 2.0, (patch.height - 1) / 2.0, scale)


def brisk_describe(patch: GrayImage, orientation: float, scale: float = 1.0) -> BriskDescriptor:
    """Patch-centered convenience wrapper around describe_at()."""
    return describe_at(patch, (patch.width - 1) / 2.0, (patch.height - 1) / 2.0, orientation, scale)


def keypoints_to_csv(kps: list[KeyPoint]) -> str:
    lines = ["x,y,score,scale,orientation"]
    for kp in kps:
        lines.append(
            f"{kp.x:.6g},{kp.y:.6g},{kp.score:.6g},{kp.scale:.6g},{kp.orientation:.6g}"
        )
    return "\n".join(lines) + "\n"

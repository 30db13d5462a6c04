"""Face and mouth localization: LBP texture codes plus a Viola-Jones-style
Haar/AdaBoost cascade over sliding 24x24 windows.

Full-fidelity cascade training needs a face corpus the repo does not
ship; training here is exercised at desk scale and evaluation manifests
may carry annotated mouth rectangles instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BoundsError,
    DetectionMissError,
    LipkeyError,
    ParameterError,
    SizeError,
    TrainingError,
)
from .image import GrayImage, IntegralImage, Rect, downsample_by, integral_image, rect_sum

WINDOW = 24

# 8 neighbors, clockwise from the top-left, as (dx, dy)
LBP_NEIGHBORS = ((-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0))


def lbp_code(img: GrayImage, x: int, y: int) -> int:
    """8-bit code: bit k set iff the k-th neighbor >= center."""
    if not (1 <= x < img.width - 1 and 1 <= y < img.height - 1):
        raise BoundsError(f"({x}, {y}) has off-image neighbors in {img!r}")
    center = img.pixels[y, x]
    code = 0
    for k, (dx, dy) in enumerate(LBP_NEIGHBORS):
        if img.pixels[y + dy, x + dx] >= center:
            code |= 1 << k
    return code


def lbp_histogram(img: GrayImage, region: Rect) -> np.ndarray:
    """256-bin code counts over the interior pixels of region."""
    if region.w < 3 or region.h < 3:
        raise SizeError(f"region {region} has no interior")
    if region.x < 0 or region.y < 0 or region.x2 > img.width or region.y2 > img.height:
        raise BoundsError(f"region {region} outside {img!r}")
    patch = img.pixels[region.y:region.y2, region.x:region.x2].astype(np.int16)
    center = patch[1:-1, 1:-1]
    codes = np.zeros(center.shape, dtype=np.int64)
    for k, (dx, dy) in enumerate(LBP_NEIGHBORS):
        neighbor = patch[1 + dy:patch.shape[0] - 1 + dy, 1 + dx:patch.shape[1] - 1 + dx]
        codes |= (neighbor >= center).astype(np.int64) << k
    return np.bincount(codes.reshape(-1), minlength=256)


HAAR_KINDS = ("two-rect-horizontal", "two-rect-vertical", "three-rect", "four-rect")


@dataclass(frozen=True)
class HaarFeature:
    """White-minus-black rectangle difference inside a 24x24 window."""

    kind: str
    rect: Rect

    def __post_init__(self):
        if self.kind not in HAAR_KINDS:
            raise ParameterError(f"unknown haar kind {self.kind!r}")
        r = self.rect
        if r.x < 0 or r.y < 0 or r.x2 > WINDOW or r.y2 > WINDOW:
            raise BoundsError(f"feature rect {r} leaves the {WINDOW}x{WINDOW} window")
        if self.kind == "two-rect-horizontal" and r.w % 2:
            raise ParameterError("two-rect-horizontal needs even width")
        if self.kind == "two-rect-vertical" and r.h % 2:
            raise ParameterError("two-rect-vertical needs even height")
        if self.kind == "three-rect" and r.w % 3:
            raise ParameterError("three-rect needs width divisible by 3")
        if self.kind == "four-rect" and (r.w % 2 or r.h % 2):
            raise ParameterError("four-rect needs even width and height")


def haar_value(ii: IntegralImage, feature: HaarFeature, origin: tuple[int, int] = (0, 0)) -> float:
    """Evaluate a feature with its window anchored at origin."""
    ox, oy = origin
    r = Rect(feature.rect.x + ox, feature.rect.y + oy, feature.rect.w, feature.rect.h)
    kind = feature.kind
    if kind == "two-rect-horizontal":
        half = r.w // 2
        white = rect_sum(ii, Rect(r.x, r.y, half, r.h))
        black = rect_sum(ii, Rect(r.x + half, r.y, half, r.h))
        return float(white - black)
    if kind == "two-rect-vertical":
        half = r.h // 2
        white = rect_sum(ii, Rect(r.x, r.y, r.w, half))
        black = rect_sum(ii, Rect(r.x, r.y + half, r.w, half))
        return float(white - black)
    if kind == "three-rect":
        # middle weighted twice so the white and black masses balance
        third = r.w // 3
        left = rect_sum(ii, Rect(r.x, r.y, third, r.h))
        mid = rect_sum(ii, Rect(r.x + third, r.y, third, r.h))
        right = rect_sum(ii, Rect(r.x + 2 * third, r.y, third, r.h))
        return float(left + right - 2 * mid)
    hw, hh = r.w // 2, r.h // 2
    tl = rect_sum(ii, Rect(r.x, r.y, hw, hh))
    tr = rect_sum(ii, Rect(r.x + hw, r.y, hw, hh))
    bl = rect_sum(ii, Rect(r.x, r.y + hh, hw, hh))
    br = rect_sum(ii, Rect(r.x + hw, r.y + hh, hw, hh))
    return float(tl + br - tr - bl)


@dataclass(frozen=True)
class WeakClassifier:
    feature: HaarFeature
    threshold: float
    polarity: int  # +1 or -1
    alpha: float

    def predict(self, ii: IntegralImage, origin: tuple[int, int] = (0, 0)) -> int:
        value = haar_value(ii, self.feature, origin)
        return 1 if self.polarity * value < self.polarity * self.threshold else -1


@dataclass(frozen=True)
class CascadeStage:
    classifiers: tuple[WeakClassifier, ...]
    threshold: float

    def score(self, ii: IntegralImage, origin: tuple[int, int] = (0, 0)) -> float:
        return sum(w.alpha * w.predict(ii, origin) for w in self.classifiers)


@dataclass(frozen=True)
class Cascade:
    stages: tuple[CascadeStage, ...]

    def __post_init__(self):
        if not self.stages:
            raise ParameterError("cascade needs at least one stage")


def cascade_classify(ii: IntegralImage, window: Rect, cascade: Cascade) -> bool:
    """Accept iff every stage's weighted vote clears its threshold."""
    origin = (window.x, window.y)
    return all(stage.score(ii, origin) >= stage.threshold for stage in cascade.stages)


def _best_split(values: np.ndarray, labels: np.ndarray, weights: np.ndarray) -> tuple[float, float, int]:
    """Minimal weighted error over thresholds/polarities for one feature.

    Predicting +1 when polarity*value < polarity*threshold; returns
    (error, threshold, polarity), preferring smaller thresholds then +1.
    """
    order = np.argsort(values, kind="stable")
    v = values[order]
    y = labels[order]
    w = weights[order]
    pos_w = np.where(y > 0, w, 0.0)
    neg_w = np.where(y < 0, w, 0.0)
    total_pos = pos_w.sum()
    total_neg = neg_w.sum()
    # candidates: below the minimum, between distinct values, above the maximum
    cuts = [v[0] - 1.0]
    for i in range(len(v) - 1):
        if v[i] != v[i + 1]:
            cuts.append((v[i] + v[i + 1]) / 2.0)
    cuts.append(v[-1] + 1.0)

    neg_below = np.concatenate([[0.0], np.cumsum(neg_w)])
    pos_below = np.concatenate([[0.0], np.cumsum(pos_w)])
    idx = np.searchsorted(v, cuts)
    best = (math.inf, 0.0, 1)
    for cut, i in zip(cuts, idx):
        # polarity +1: predict positive below the cut
        err_plus = neg_below[i] + (total_pos - pos_below[i])
        # polarity -1: predict positive above the cut
        err_minus = pos_below[i] + (total_neg - neg_below[i])
        if err_plus < best[0] - 1e-15:
            best = (err_plus, cut, 1)
        if err_minus < best[0] - 1e-15:
            best = (err_minus, cut, -1)
    return best


def adaboost_train(
    samples: list[tuple[GrayImage, bool]],
    features: list[HaarFeature],
    rounds: int,
) -> Cascade:
    """Discrete AdaBoost round-robin over the candidate features.

    Deterministic given input order: feature ties resolve to the lowest
    index. Stops early on a zero-error round; raises TrainingError when
    no feature beats chance.
    """
    if rounds < 1:
        raise ParameterError(f"rounds must be >= 1, got {rounds}")
    if not features:
        raise ParameterError("need at least one candidate feature")
    labels = np.array([1.0 if positive else -1.0 for _, positive in samples])
    if not ((labels > 0).any() and (labels < 0).any()):
        raise TrainingError("need at least one positive and one negative sample")
    for img, _ in samples:
        if img.width != WINDOW or img.height != WINDOW:
            raise SizeError(f"training windows must be {WINDOW}x{WINDOW}, got {img!r}")

    tables = [integral_image(img) for img, _ in samples]
    value_matrix = np.array(
        [[haar_value(ii, f) for ii in tables] for f in features], dtype=np.float64
    )

    n = len(samples)
    weights = np.full(n, 1.0 / n)
    chosen: list[WeakClassifier] = []
    for _ in range(rounds):
        best_err = math.inf
        best = None
        for fi, feature in enumerate(features):
            err, threshold, polarity = _best_split(value_matrix[fi], labels, weights)
            if err < best_err - 1e-15:
                best_err = err
                best = (feature, threshold, polarity, value_matrix[fi])
        if best is None or best_err >= 0.5:
            raise TrainingError(f"no weak classifier beats chance (best error {best_err:.3f})")
        feature, threshold, polarity, values = best
        eps = min(max(best_err, 1e-10), 1.0 - 1e-10)
        alpha = 0.5 * math.log((1.0 - eps) / eps)
        chosen.append(WeakClassifier(feature, float(threshold), polarity, alpha))

        preds = np.where(polarity * values < polarity * threshold, 1.0, -1.0)
        weights = weights * np.exp(-alpha * labels * preds)
        weights /= weights.sum()
        if best_err <= 0.0:
            break
    return Cascade(stages=(CascadeStage(tuple(chosen), threshold=0.0),))


def _scan(img: GrayImage, cascade: Cascade, step: int = 2, scale_step: float = 1.25,
          prefer_large: bool = False):
    """Best accepted 24x24 window over a coarse scale pyramid.

    Returns (score, rect in img coordinates) or None. Ties prefer the
    finest scale (largest with prefer_large), then the top-left-most
    window.
    """
    best: tuple[float, float, int, int] | None = None  # (-score, +/-scale, y, x)
    best_rect: Rect | None = None
    scale = 1.0
    while min(img.width, img.height) / scale >= WINDOW:
        level = img if scale == 1.0 else downsample_by(img, scale)
        ii = integral_image(level)
        for y in range(0, level.height - WINDOW + 1, step):
            for x in range(0, level.width - WINDOW + 1, step):
                window = Rect(x, y, WINDOW, WINDOW)
                if not cascade_classify(ii, window, cascade):
                    continue
                score = sum(
                    stage.score(ii, (x, y)) - stage.threshold for stage in cascade.stages
                )
                key = (-score, -scale if prefer_large else scale, y, x)
                if best is None or key < best:
                    best = key
                    side = min(int(round(WINDOW * scale)), img.width, img.height)
                    bx = min(int(round(x * scale)), img.width - side)
                    by = min(int(round(y * scale)), img.height - side)
                    best_rect = Rect(bx, by, side, side)
        scale *= scale_step
    if best_rect is None:
        return None
    return (-best[0], best_rect)


def detect_roi(img: GrayImage, face_cascade: Cascade, mouth_cascade: Cascade) -> Rect:
    """Locate the best face window, then the best mouth window inside the
    lower half of the face; returns the mouth rect in image coordinates."""
    if img.width < WINDOW or img.height < WINDOW:
        raise SizeError(f"{img!r} smaller than the {WINDOW}x{WINDOW} scan window")
    face = _scan(img, face_cascade, prefer_large=True)
    if face is None:
        raise DetectionMissError("no face window accepted")
    face_rect = face[1]
    lower = Rect(
        face_rect.x,
        face_rect.y + face_rect.h // 2,
        face_rect.w,
        face_rect.h - face_rect.h // 2,
    )
    if lower.w < WINDOW or lower.h < WINDOW:
        raise DetectionMissError("face lower half smaller than the scan window")
    mouth = _scan(img.crop(lower), mouth_cascade)
    if mouth is None:
        raise DetectionMissError("no mouth window accepted")
    m = mouth[1]
    return Rect(lower.x + m.x, lower.y + m.y, m.w, m.h)


def save_cascade(cascade: Cascade) -> str:
    """Line-oriented text form, lossless at 17 significant digits."""
    lines = []
    for stage in cascade.stages:
        lines.append(f"stage {stage.threshold:.17g}")
        for w in stage.classifiers:
            r = w.feature.rect
            lines.append(
                f"weak {w.feature.kind} {r.x} {r.y} {r.w} {r.h} "
                f"{w.polarity} {w.threshold:.17g} {w.alpha:.17g}"
            )
    return "\n".join(lines) + "\n"


def load_cascade(text: str) -> Cascade:
    stages: list[CascadeStage] = []
    current: list[WeakClassifier] | None = None
    threshold = 0.0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "stage":
            if current is not None:
                stages.append(CascadeStage(tuple(current), threshold))
            if len(parts) != 2:
                raise LipkeyError(f"line {lineno}: malformed stage line")
            threshold = float(parts[1])
            current = []
        elif parts[0] == "weak":
            if current is None:
                raise LipkeyError(f"line {lineno}: weak before any stage")
            if len(parts) != 9:
                raise LipkeyError(f"line {lineno}: malformed weak line")
            kind = parts[1]
            x, y, w, h = (int(p) for p in parts[2:6])
            polarity = int(parts[6])
            if polarity not in (1, -1):
                raise LipkeyError(f"line {lineno}: polarity must be +/-1")
            current.append(
                WeakClassifier(
                    feature=HaarFeature(kind, Rect(x, y, w, h)),
                    threshold=float(parts[7]),
                    polarity=polarity,
                    alpha=float(parts[8]),
                )
            )
        else:
            raise LipkeyError(f"line {lineno}: unknown record {parts[0]!r}")
    if current is not None:
        stages.append(CascadeStage(tuple(current), threshold))
    return Cascade(tuple(stages))

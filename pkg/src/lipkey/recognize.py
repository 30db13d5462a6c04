"""Training-free expression decisions.

Scenarios 1-2 run a Bezier curvature test over the (possibly reduced)
Harris points. Scenario 3 fits one parabola to the Harris points and one
to the scaled-and-splined BRISK points, then classifies from the two
leading coefficients' signs and the Euclidean distance of the vertices.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .config import Config
from .errors import (
    BoundsError,
    DegenerateQuadraticError,
    DetectionMissError,
    FitError,
    LipkeyError,
    SizeError,
)
from .image import GrayImage, Rect
from .keypoints import KeyPoint, brisk_detect, build_pyramid, harris_detect
from .pca import reduce_points
from .preprocess import enhance

LABELS = ("neutral", "smile", "laugh")
UNRECOGNIZED = "unrecognized"
STATES = ("state1", "state2", "state3", "state4")


@dataclass(frozen=True)
class Quadratic:
    a: float
    b: float
    c: float

    def __call__(self, x: float) -> float:
        return self.a * x * x + self.b * x + self.c


@dataclass(frozen=True)
class Vertex:
    x: float
    y: float
    discriminant: float


@dataclass(frozen=True)
class Thresholds:
    d1: float = 2500.0
    d2: float = 3000.0
    d3: float = 2000.0
    d4_low: float = 5000.0
    d4_high: float = 7000.0

    def __post_init__(self):
        for name in ("d1", "d2", "d3", "d4_low", "d4_high"):
            if getattr(self, name) <= 0:
                raise FitError(f"threshold {name} must be positive")

    @classmethod
    def from_config(cls, config: Config) -> "Thresholds":
        return cls(
            d1=float(config.get("recognize.d1")),
            d2=float(config.get("recognize.d2")),
            d3=float(config.get("recognize.d3")),
            d4_low=float(config.get("recognize.d4_low")),
            d4_high=float(config.get("recognize.d4_high")),
        )


def bernstein_matrix(n: int) -> np.ndarray:
    """n x n Bezier evaluation matrix at n evenly spaced parameters.

    Row i holds the degree n-1 Bernstein basis at t_i; rows sum to 1 and
    the first/last rows are unit vectors.
    """
    if n < 2:
        raise SizeError(f"bernstein matrix needs n >= 2, got {n}")
    t = np.linspace(0.0, 1.0, n).reshape(-1, 1)
    j = np.arange(n, dtype=np.float64)
    binom = np.array([math.comb(n - 1, int(jj)) for jj in range(n)], dtype=np.float64)
    return binom * np.power(t, j) * np.power(1.0 - t, n - 1 - j)


def algo1_classify(points, epsilon_y: float = 2.0) -> bool:
    """Bezier shape test over x-ordered control points.

    True iff the curve's interior samples sit lower on screen (larger y)
    than the two endpoint control points by more than epsilon_y, i.e. the
    mouth curves upward.
    """
    cloud = np.asarray(points, dtype=np.float64)
    if cloud.ndim != 2 or cloud.shape[1] != 2 or len(cloud) < 3:
        raise SizeError("curvature test needs >= 3 (x, y) points")
    curve = bernstein_matrix(len(cloud)) @ cloud
    interior_y = curve[1:-1, 1].mean()
    endpoint_y = (cloud[0, 1] + cloud[-1, 1]) / 2.0
    return bool(interior_y - endpoint_y > epsilon_y)


def _dedupe_sorted_by_x(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(points[:, 0], kind="stable")
    xs = points[order, 0]
    ys = points[order, 1]
    ux, start = np.unique(xs, return_index=True)
    uy = np.add.reduceat(ys, start) / np.diff(np.append(start, len(ys)))
    return ux, uy


def spline_resample(points, count: int = 50) -> np.ndarray:
    """Natural cubic spline through points sorted by x (same-x duplicates
    averaged), sampled at `count` uniform x positions."""
    cloud = np.asarray(points, dtype=np.float64)
    if cloud.ndim != 2 or cloud.shape[1] != 2:
        raise SizeError("expected an (n, 2) point cloud")
    xs, ys = _dedupe_sorted_by_x(cloud)
    n = len(xs)
    if n < 3:
        raise SizeError(f"spline needs >= 3 distinct x values, got {n}")

    h = np.diff(xs)
    # second derivatives from the natural boundary tridiagonal system
    system = np.zeros((n, n))
    rhs = np.zeros(n)
    system[0, 0] = 1.0
    system[n - 1, n - 1] = 1.0
    for i in range(1, n - 1):
        system[i, i - 1] = h[i - 1]
        system[i, i] = 2.0 * (h[i - 1] + h[i])
        system[i, i + 1] = h[i]
        rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1])
    second = np.linalg.solve(system, rhs)

    sample_x = np.linspace(xs[0], xs[-1], count)
    seg = np.clip(np.searchsorted(xs, sample_x, side="right") - 1, 0, n - 2)
    x0 = xs[seg]
    dx = sample_x - x0
    hseg = h[seg]
    a = (second[seg + 1] - second[seg]) / (6.0 * hseg)
    b = second[seg] / 2.0
    c = (ys[seg + 1] - ys[seg]) / hseg - hseg * (second[seg + 1] + 2.0 * second[seg]) / 6.0
    sample_y = ys[seg] + dx * (c + dx * (b + dx * a))
    return np.column_stack([sample_x, sample_y])


def fit_quadratic(points) -> Quadratic:
    """Least-squares parabola y = Ax^2 + Bx + C via normal equations.

    Solved on a centered/scaled abscissa for conditioning, then mapped
    back exactly; exact on noise-free parabolas.
    """
    cloud = np.asarray(points, dtype=np.float64)
    if cloud.ndim != 2 or cloud.shape[1] != 2 or len(cloud) < 3:
        raise FitError("quadratic fit needs >= 3 (x, y) points")
    xs = cloud[:, 0]
    ys = cloud[:, 1]
    if len(np.unique(xs)) < 3:
        raise FitError("quadratic fit needs >= 3 distinct x values")
    shift = xs.mean()
    scale = xs.std()
    if scale == 0.0:
        raise FitError("quadratic fit needs >= 3 distinct x values")
    t = (xs - shift) / scale
    v = np.column_stack([t * t, t, np.ones_like(t)])
    coeffs = np.linalg.solve(v.T @ v, v.T @ ys)
    a = coeffs[0] / (scale * scale)
    b = coeffs[1] / scale - 2.0 * coeffs[0] * shift / (scale * scale)
    c = coeffs[2] - coeffs[1] * shift / scale + coeffs[0] * shift * shift / (scale * scale)
    return Quadratic(float(a), float(b), float(c))


def vertex(q: Quadratic) -> Vertex:
    """Parabola extremum (-B/2A, -(B^2-4AC)/4A); minimum iff A > 0."""
    if abs(q.a) <= 1e-12:
        raise DegenerateQuadraticError(f"|A| = {abs(q.a):g} has no vertex")
    disc = q.b * q.b - 4.0 * q.a * q.c
    return Vertex(x=-q.b / (2.0 * q.a), y=-disc / (4.0 * q.a), discriminant=disc)


def vertex_distance(v1, v2) -> float:
    return math.hypot(v1.x - v2.x, v1.y - v2.y)


def table2_classify(a1: float, a2: float, dist: float, th: Thresholds = Thresholds()) -> str:
    """Decision table over (sign A1, sign A2, vertex distance).

    Distances compare strictly; boundary values and unmatched cells fall
    to `unrecognized`.
    """
    s1 = a1 < 0.0
    s2 = a2 < 0.0
    if not s1 and not s2:
        return "state1" if dist > th.d1 else UNRECOGNIZED
    if not s1 and s2:
        return "state2" if dist > th.d2 else UNRECOGNIZED
    if s1 and not s2:
        return "state3" if dist > th.d3 else UNRECOGNIZED
    return "state4" if (dist < th.d4_low or dist > th.d4_high) else UNRECOGNIZED


def _keypoint_cloud(kps: list[KeyPoint]) -> np.ndarray:
    return np.array([[kp.x, kp.y] for kp in kps], dtype=np.float64).reshape(-1, 2)


def _sorted_by_x(cloud: np.ndarray) -> np.ndarray:
    return cloud[np.lexsort((cloud[:, 1], cloud[:, 0]))]


@dataclass
class ScenarioResult:
    label: str
    diagnostics: dict


def run_scenario(
    img: GrayImage,
    scenario: int,
    config: Config | None = None,
    roi: Rect | None = None,
    face_cascade=None,
    mouth_cascade=None,
) -> ScenarioResult:
    """Full pipeline for one image: preprocess, locate the mouth, extract
    keypoints and decide neutral/smile/laugh/unrecognized.

    Upstream failures downgrade to `unrecognized` with a reason code in
    the diagnostics instead of raising.
    """
    if scenario not in (1, 2, 3):
        raise LipkeyError(f"unknown scenario {scenario}")
    config = config or Config()
    started = time.perf_counter()
    diag: dict = {"scenario": scenario}

    try:
        enhanced = enhance(img, config.enhance_params())
        if roi is None:
            if face_cascade is not None and mouth_cascade is not None:
                from .roi import detect_roi

                roi = detect_roi(enhanced, face_cascade, mouth_cascade)
            else:
                roi = Rect(0, 0, img.width, img.height)
        diag["roi"] = f"{roi.x},{roi.y},{roi.w},{roi.h}"

        harris_kps = harris_detect(enhanced, config.harris_params(), roi)
        diag["n_harris"] = len(harris_kps)
        if len(harris_kps) < 3:
            return _unrecognized(diag, "no-keypoints", started)
        cloud = _keypoint_cloud(harris_kps)

        if scenario in (1, 2):
            if scenario == 2:
                cloud = reduce_points(cloud, float(config.get("pca.keep_fraction")))
                diag["n_reduced"] = len(cloud)
                if len(cloud) < 3:
                    return _unrecognized(diag, "no-keypoints", started)
            diag["n_points"] = len(cloud)
            smile_curved = algo1_classify(
                _sorted_by_x(cloud), float(config.get("recognize.epsilon_y"))
            )
            diag["smile_curved"] = smile_curved
            label = str(
                config.get("recognize.algo1_true_label")
                if smile_curved
                else config.get("recognize.algo1_false_label")
            )
            return _finish(diag, label, started)

        # scenario 3
        q1 = fit_quadratic(cloud)
        diag.update(a1=q1.a, b1=q1.b, c1=q1.c)

        pyramid = build_pyramid(enhanced, int(config.get("brisk.octaves")))
        brisk_kps = [kp for kp in brisk_detect(pyramid, config.brisk_params())
                     if roi.contains_point(kp.x, kp.y)]
        diag["n_brisk"] = len(brisk_kps)
        if len(brisk_kps) < 3:
            return _unrecognized(diag, "no-keypoints", started)
        p2 = _keypoint_cloud(brisk_kps)

        # average scaling: coordinates multiplied by the bounding-box center
        average = (p2.max(axis=0) + p2.min(axis=0)) / 2.0
        scaled = p2 * average
        resampled = spline_resample(scaled, int(config.get("recognize.spline_count")))
        q2 = fit_quadratic(resampled)
        diag.update(a2=q2.a, b2=q2.b, c2=q2.c)

        v1 = vertex(q1)
        v2 = vertex(q2)
        diag.update(v1x=v1.x, v1y=v1.y, v2x=v2.x, v2y=v2.y)
        v_max = float(config.get("recognize.v_max"))
        if max(abs(v1.x), abs(v1.y), abs(v2.x), abs(v2.y)) > v_max:
            return _unrecognized(diag, "vertex-overflow", started)

        dist = vertex_distance(v1, v2)
        diag["dist"] = dist
        state = table2_classify(q1.a, q2.a, dist, Thresholds.from_config(config))
        diag["state"] = state
        if state == UNRECOGNIZED:
            return _unrecognized(diag, "unmatched-state", started)
        return _finish(diag, config.state_map()[state], started)

    except DetectionMissError:
        return _unrecognized(diag, "no-roi", started)
    except (SizeError, BoundsError) as exc:
        diag["error"] = str(exc)
        return _unrecognized(diag, "too-small", started)
    except DegenerateQuadraticError:
        return _unrecognized(diag, "degenerate-fit", started)
    except FitError:
        return _unrecognized(diag, "no-keypoints", started)


def extract_keypoints(
    img: GrayImage,
    scenario: int,
    config: Config | None = None,
    roi: Rect | None = None,
) -> list[KeyPoint]:
    """Keypoint set a scenario feeds its recognizer: Harris points (1),
    the PCA-reduced subset (2), or the in-ROI BRISK detections (3)."""
    if scenario not in (1, 2, 3):
        raise LipkeyError(f"unknown scenario {scenario}")
    config = config or Config()
    enhanced = enhance(img, config.enhance_params())
    roi = roi or Rect(0, 0, img.width, img.height)
    if scenario == 3:
        pyramid = build_pyramid(enhanced, int(config.get("brisk.octaves")))
        return [kp for kp in brisk_detect(pyramid, config.brisk_params())
                if roi.contains_point(kp.x, kp.y)]
    kps = harris_detect(enhanced, config.harris_params(), roi)
    if scenario == 1 or len(kps) < 2:
        return kps
    kept = reduce_points(_keypoint_cloud(kps), float(config.get("pca.keep_fraction")))
    selected: list[KeyPoint] = []
    cursor = 0
    for kp in kps:
        if cursor < len(kept) and kp.x == kept[cursor, 0] and kp.y == kept[cursor, 1]:
            selected.append(kp)
            cursor += 1
    return selected


def _finish(diag: dict, label: str, started: float) -> ScenarioResult:
    diag["label"] = label
    diag["elapsed_s"] = time.perf_counter() - started
    return ScenarioResult(label=label, diagnostics=diag)


def _unrecognized(diag: dict, reason: str, started: float) -> ScenarioResult:
    diag["reason"] = reason
    return _finish(diag, UNRECOGNIZED, started)

"""Seeded synthetic mouth corpus.

Renders anti-aliased parabolic lip curves on a textured background;
the curvature band fixes the ground-truth label. Neutral mouths droop
slightly (positive leading coefficient in image coordinates), smiles
arc upward, laughs open into a second, weaker upper curve so the two
keypoint pipelines see differently signed shapes. Distractor freckles
near the lip axis stress the unreduced scenario-1 point cloud.

All randomness flows from one SeedSequence, so a (seed, n) pair
reproduces the corpus byte for byte.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .image import GrayImage, Rect, _round_half_up, save_pgm

LABEL_CYCLE = ("neutral", "smile", "laugh")

WIDTH = 320
HEIGHT = 243

# curvature bands (leading coefficient of y(x) in image coordinates)
NEUTRAL_A = (0.0045, 0.0065)
SMILE_A = (-0.0085, -0.0055)
LAUGH_LOWER_A = (-0.014, -0.010)
LAUGH_UPPER_A = (0.012, 0.016)
LAUGH_UPPER_SPAN = 0.50  # fraction of the lower half-width
LAUGH_GAP = 8.0
INNER_BEAD_SPACING = 7.0
INNER_BEAD_RADIUS = 1.5
CREASE_BEADS = 3          # clearance between the inner arc ends and the lower arc's depth

STRONG_BEAD_AMP = 90.0
STRONG_BEAD_SPACING = 6.0
STRONG_BEAD_RADIUS = 1.8
SOFT_BEAD_AMP = 40.0
SOFT_BEAD_SPACING = 6.0
SOFT_BEAD_RADIUS = 2.6
LINE_AMP = 35.0
DOT_AMP = 110.0
DOT_RADIUS = 1.7


@dataclass(frozen=True)
class MouthScene:
    label: str
    image: GrayImage
    roi: Rect


def _smooth_noise(rng: np.random.Generator, amplitude: float) -> np.ndarray:
    field = rng.normal(0.0, 1.0, (HEIGHT, WIDTH))
    for _ in range(2):
        padded = np.pad(field, 2, mode="edge")
        acc = np.zeros_like(field)
        for dy in range(5):
            for dx in range(5):
                acc += padded[dy:dy + HEIGHT, dx:dx + WIDTH]
        field = acc / 25.0
    peak = np.abs(field).max()
    if peak > 0:
        field *= amplitude / peak
    return field


def _stamp_blob(canvas: np.ndarray, bx: float, by: float, amplitude: float, radius: float) -> None:
    reach = int(np.ceil(3 * radius))
    x0 = max(0, int(np.floor(bx)) - reach)
    x1 = min(WIDTH, int(np.ceil(bx)) + reach + 1)
    y0 = max(0, int(np.floor(by)) - reach)
    y1 = min(HEIGHT, int(np.ceil(by)) + reach + 1)
    if x0 >= x1 or y0 >= y1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    canvas[y0:y1, x0:x1] -= amplitude * np.exp(
        -((xs - bx) ** 2 + (ys - by) ** 2) / (2.0 * radius * radius)
    )


def _stamp_curve_line(canvas: np.ndarray, cx: float, a: float, base_y: float, half_width: float,
                      amplitude: float, thickness: float, taper: float = 0.0) -> None:
    x0 = int(np.ceil(cx - half_width))
    x1 = int(np.floor(cx + half_width))
    xs = np.arange(x0, x1 + 1, dtype=np.float64)
    ys_curve = base_y + a * ((xs - cx) ** 2 - half_width ** 2)
    envelope = np.ones_like(xs)
    if taper > 0:
        # fade the ends so the line terminates without a corner response
        edge = half_width - np.abs(xs - cx)
        envelope = np.clip(edge / taper, 0.0, 1.0)
    rows = np.arange(HEIGHT, dtype=np.float64).reshape(-1, 1)
    profile = amplitude * envelope * np.exp(
        -((rows - ys_curve) ** 2) / (2.0 * thickness * thickness)
    )
    canvas[:, x0:x1 + 1] -= profile


def _bead_offsets(half_width: float, spacing: float) -> np.ndarray:
    k = int(half_width // spacing)
    return np.arange(-k, k + 1, dtype=np.float64) * spacing


def _stamp_beads(canvas: np.ndarray, rng: np.random.Generator, cx: float, a: float, base_y: float,
                 half_width: float, spacing: float, amplitude: float, radius: float,
                 symmetric: bool) -> None:
    offsets = _bead_offsets(half_width, spacing)
    half = offsets[offsets >= 0]
    jitter_half = 1.0 + rng.uniform(-0.1, 0.1, len(half))
    jitter = {}
    for off, j in zip(half, jitter_half):
        jitter[off] = j
        jitter[-off] = j if symmetric else None
    for off in offsets:
        j = jitter.get(off)
        if j is None:
            j = 1.0 + rng.uniform(-0.1, 0.1)
        y = base_y + a * (off * off - half_width ** 2)
        _stamp_blob(canvas, cx + off, y, amplitude * j, radius)


def render_scene(label: str, seed_seq: np.random.SeedSequence, symmetric: bool = False) -> MouthScene:
    """Render one labeled mouth image plus its annotation rectangle."""
    if label not in LABEL_CYCLE:
        raise ValueError(f"unknown label {label!r}")
    rng = np.random.default_rng(seed_seq)

    base = 158.0 + 16.0 * (np.arange(HEIGHT, dtype=np.float64) / HEIGHT).reshape(-1, 1)
    canvas = np.broadcast_to(base, (HEIGHT, WIDTH)).copy()
    noise = _smooth_noise(rng, 2.0)
    if symmetric:
        noise = (noise + noise[:, ::-1]) / 2.0
    canvas += noise

    cx = (WIDTH - 1) / 2.0
    if not symmetric:
        cx += rng.uniform(-4.0, 4.0)
    corner_y = 148.0 + rng.uniform(-5.0, 5.0)
    half_width = 40.0 + rng.uniform(-4.0, 4.0)

    top_reach = corner_y
    bottom_reach = corner_y
    if label == "neutral":
        curve_a = rng.uniform(*NEUTRAL_A)
        _stamp_curve_line(canvas, cx, curve_a, corner_y, half_width, LINE_AMP, 1.1)
        _stamp_beads(canvas, rng, cx, curve_a, corner_y, half_width,
                     STRONG_BEAD_SPACING, STRONG_BEAD_AMP, STRONG_BEAD_RADIUS, symmetric)
        top_reach = corner_y - curve_a * half_width ** 2
    elif label == "smile":
        curve_a = rng.uniform(*SMILE_A)
        _stamp_curve_line(canvas, cx, curve_a, corner_y, half_width, LINE_AMP, 1.1)
        _stamp_beads(canvas, rng, cx, curve_a, corner_y, half_width,
                     STRONG_BEAD_SPACING, STRONG_BEAD_AMP, STRONG_BEAD_RADIUS, symmetric)
        bottom_reach = corner_y - curve_a * half_width ** 2
    else:
        # wide deep lower arc rendered soft (only the segment test sees it)
        # plus a short inverted teeth-shadow arc inside the opening whose
        # strong beads are all the corner detector gets
        curve_a = rng.uniform(*LAUGH_LOWER_A)
        a_up = rng.uniform(*LAUGH_UPPER_A)
        upper_hw = LAUGH_UPPER_SPAN * half_width
        _stamp_beads(canvas, rng, cx, curve_a, corner_y, half_width,
                     SOFT_BEAD_SPACING, SOFT_BEAD_AMP, SOFT_BEAD_RADIUS, symmetric)
        depth_y = corner_y - curve_a * half_width ** 2
        inner_base = depth_y - LAUGH_GAP
        _stamp_beads(canvas, rng, cx, a_up, inner_base, upper_hw,
                     INNER_BEAD_SPACING, STRONG_BEAD_AMP, INNER_BEAD_RADIUS, symmetric)
        # soft crease arcs beyond the corners give the full point cloud
        # high outer wings the strong inner arc cannot out-leverage
        for k in range(1, CREASE_BEADS + 1):
            for side in (-1.0, 1.0):
                _stamp_blob(canvas, cx + side * (half_width + 5.0 * k),
                            corner_y - 5.0 * k, SOFT_BEAD_AMP, SOFT_BEAD_RADIUS)
        bottom_reach = depth_y
        top_reach = min(inner_base - a_up * upper_hw ** 2,
                        corner_y - 5.0 * CREASE_BEADS)

    if label != "laugh":
        # freckles near the lip axis: strong off-curve corners for PCA to drop
        dot_off = rng.uniform(0.10, 0.30) * half_width
        dot_dy = rng.uniform(3.0, 6.0)
        for side in (-1.0, 1.0):
            dx = side * dot_off
            dy = dot_dy if symmetric else rng.uniform(3.0, 6.0)
            y = corner_y - dy  # above the whole arc: clearly off-axis
            _stamp_blob(canvas, cx + dx, y, DOT_AMP, DOT_RADIUS)
            bottom_reach = max(bottom_reach, y)
            top_reach = min(top_reach, y)

    pixels = np.clip(_round_half_up(canvas), 0, 255).astype(np.uint8)

    margin = 14 if label != "laugh" else 5.0 * CREASE_BEADS + 10
    x0 = max(0, int(np.floor(cx - half_width - margin)))
    x1 = min(WIDTH, int(np.ceil(cx + half_width + margin)))
    y0 = max(0, int(np.floor(top_reach - 16)))
    y1 = min(HEIGHT, int(np.ceil(bottom_reach + 16)))
    return MouthScene(label=label, image=GrayImage(pixels), roi=Rect(x0, y0, x1 - x0, y1 - y0))


def generate_corpus(out_dir: str, n: int, seed: int, symmetric: bool = False) -> str:
    """Write n labeled PGM images plus manifest.csv; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    children = np.random.SeedSequence(seed).spawn(n)
    manifest_path = os.path.join(out_dir, "manifest.csv")
    with open(manifest_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path", "label", "x", "y", "w", "h", "category"])
        for i in range(n):
            label = LABEL_CYCLE[i % len(LABEL_CYCLE)]
            scene = render_scene(label, children[i], symmetric=symmetric)
            name = f"img_{i:04d}.pgm"
            with open(os.path.join(out_dir, name), "wb") as img_fh:
                img_fh.write(save_pgm(scene.image))
            writer.writerow([
                name, label, scene.roi.x, scene.roi.y, scene.roi.w, scene.roi.h, "none",
            ])
    return manifest_path

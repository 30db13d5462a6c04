import numpy as np
import pytest

from lipkey.errors import BoundsError, ParameterError
from lipkey.image import GrayImage, rotate
from lipkey.keypoints import (
    BriskDescriptor,
    brisk_describe,
    brisk_orientation,
    build_pattern,
    hamming,
)


def smooth_patch(n=65, seed=0):
    """Smooth asymmetric patch: ramp plus an off-center blob, no ties."""
    ys, xs = np.mgrid[0:n, 0:n]
    c = (n - 1) / 2
    values = 120 + 1.2 * (xs - c) + 60 * np.exp(
        -(((xs - c - 6) ** 2) + (ys - c + 4) ** 2) / 90.0
    )
    return GrayImage(np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8))


class TestPattern:
    def test_shape_and_sizes(self):
        pattern = build_pattern()
        assert len(pattern.points) == 60
        assert pattern.short_pairs.shape == (512, 2)
        assert len(pattern.long_pairs) >= 1

    def test_short_long_disjoint(self):
        pattern = build_pattern()
        short = {tuple(p) for p in pattern.short_pairs}
        long = {tuple(p) for p in pattern.long_pairs}
        assert not short & long

    def test_short_pairs_are_close_long_are_far(self):
        pattern = build_pattern()
        pts = pattern.points
        for i, j in pattern.short_pairs:
            assert np.hypot(*(pts[j] - pts[i])) < 9.75
        for i, j in pattern.long_pairs:
            assert np.hypot(*(pts[j] - pts[i])) > 13.67

    def test_deterministic_across_calls(self):
        a = build_pattern()
        b = build_pattern()
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.short_pairs, b.short_pairs)


class TestDescriptor:
    def test_length_is_512(self):
        d = brisk_describe(smooth_patch(), 0.0)
        assert len(d) == 512
        assert len(d.bits) == 512

    def test_identical_patches_identical_descriptors(self):
        a = brisk_describe(smooth_patch(), 0.3)
        b = brisk_describe(smooth_patch(), 0.3)
        assert a == b and hamming(a, b) == 0

    def test_inverted_contrast_complements(self):
        patch = smooth_patch()
        inverted = GrayImage(255 - patch.pixels)
        d = brisk_describe(patch, 0.1)
        di = brisk_describe(inverted, 0.1)
        assert hamming(d, di) == 512

    def test_pattern_exceeding_patch_rejected(self):
        small = GrayImage(np.full((16, 16), 100, dtype=np.uint8))
        with pytest.raises(BoundsError):
            brisk_describe(small, 0.0)

    def test_hex_round_trip(self):
        d = brisk_describe(smooth_patch(), 0.7)
        text = d.hex()
        assert len(text) == 128
        assert BriskDescriptor.from_hex(text) == d


class TestOrientation:
    def test_radially_symmetric_is_zero(self):
        n = 65
        ys, xs = np.mgrid[0:n, 0:n]
        c = (n - 1) / 2
        blob = 110 + 80 * np.exp(-((xs - c) ** 2 + (ys - c) ** 2) / 160.0)
        angle = brisk_orientation(GrayImage(np.floor(blob + 0.5).astype(np.uint8)))
        assert abs(angle) <= 0.05

    def test_horizontal_ramp_points_along_x(self):
        n = 65
        ramp = np.tile(np.linspace(40, 215, n), (n, 1))
        angle = brisk_orientation(GrayImage(np.floor(ramp + 0.5).astype(np.uint8)))
        assert min(abs(angle), abs(abs(angle) - np.pi)) <= 1e-6

    def test_tracks_patch_rotation(self):
        patch = smooth_patch()
        base = brisk_orientation(patch)
        for theta in (10.0, 20.0, 30.0):
            turned = brisk_orientation(rotate(patch, theta))
            delta = np.rad2deg(abs((turned - base + np.pi) % (2 * np.pi) - np.pi))
            assert abs(delta - theta) <= np.rad2deg(0.1)


class TestRotationInvariance:
    def test_compensated_self_match_under_15_percent(self):
        patch = smooth_patch()
        base = brisk_describe(patch, brisk_orientation(patch))
        for theta in (10.0, 20.0, 30.0):
            turned = rotate(patch, theta)
            d = brisk_describe(turned, brisk_orientation(turned))
            assert hamming(base, d) < 77  # 15% of 512


class TestHamming:
    def test_identity(self):
        d = brisk_describe(smooth_patch(), 0.0)
        assert hamming(d, d) == 0

    def test_complement_distance(self):
        d = brisk_describe(smooth_patch(), 0.0)
        inverted = BriskDescriptor(np.frombuffer(
            bytes(255 ^ b for b in d.packed.tobytes()), dtype=np.uint8).copy())
        assert hamming(d, inverted) == 512

    def test_single_flipped_bit(self):
        d = brisk_describe(smooth_patch(), 0.0)
        packed = d.packed.copy()
        packed[17] ^= 0b00100000
        assert hamming(d, BriskDescriptor(packed)) == 1

    def test_metric_properties_on_random_triples(self):
        rng = np.random.default_rng(8)
        for _ in range(1000):
            a, b, c = (BriskDescriptor(rng.integers(0, 256, 64).astype(np.uint8))
                       for _ in range(3))
            dab = hamming(a, b)
            assert dab == hamming(b, a)
            assert (dab == 0) == (a == b)
            assert hamming(a, c) <= dab + hamming(b, c)

    def test_length_guard(self):
        with pytest.raises(ParameterError):
            BriskDescriptor(np.zeros(32, dtype=np.uint8))

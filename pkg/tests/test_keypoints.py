import numpy as np
import pytest

from lipkey.errors import BoundsError, ParameterError, SizeError
from lipkey.image import GrayImage, Rect, rotate, rotate_point
from lipkey.keypoints import (
    BriskParams,
    HarrisParams,
    brisk_detect,
    build_pyramid,
    fast_ring_test,
    gaussian_window_weights,
    gradients,
    harris_detect,
    harris_response,
    keypoints_to_csv,
    structure_tensor,
)


def bright_square(size=40, lo=12, hi=28):
    pixels = np.zeros((size, size), dtype=np.uint8)
    pixels[lo:hi, lo:hi] = 255
    return GrayImage(pixels)


class TestGradients:
    def test_flat_zero(self):
        ix, iy = gradients(GrayImage(np.full((8, 8), 77, dtype=np.uint8)))
        assert not ix.any() and not iy.any()

    def test_ramp_sobel_gain(self):
        ramp = np.tile(np.arange(12, dtype=np.uint8), (8, 1))
        ix, iy = gradients(GrayImage(ramp))
        assert np.allclose(ix[1:-1, 1:-1], 8.0)
        assert np.allclose(iy[1:-1, 1:-1], 0.0)

    def test_transpose_swaps_axes(self):
        rng = np.random.default_rng(0)
        pixels = rng.integers(0, 256, (9, 13)).astype(np.uint8)
        ix, iy = gradients(GrayImage(pixels))
        tx, ty = gradients(GrayImage(pixels.T.copy()))
        assert np.allclose(tx, iy.T)
        assert np.allclose(ty, ix.T)

    def test_too_small(self):
        with pytest.raises(SizeError):
            gradients(GrayImage(np.zeros((2, 5), dtype=np.uint8)))


class TestStructureTensor:
    def test_flat_zero(self):
        img = GrayImage(np.full((10, 10), 9, dtype=np.uint8))
        ix, iy = gradients(img)
        sxx, syy, sxy = structure_tensor(ix, iy, 1.5)
        assert not sxx.any() and not syy.any() and not sxy.any()

    def test_positive_semidefinite(self):
        rng = np.random.default_rng(1)
        img = GrayImage(rng.integers(0, 256, (16, 16)).astype(np.uint8))
        ix, iy = gradients(img)
        sxx, syy, sxy = structure_tensor(ix, iy, 1.5)
        assert (sxx >= -1e-9).all() and (syy >= -1e-9).all()
        assert (sxx * syy - sxy * sxy >= -1e-6 * np.maximum(sxx * syy, 1)).all()

    def test_window_matches_gaussian_formula(self):
        weights = gaussian_window_weights(1.5)
        radius = weights.shape[0] // 2
        assert radius == 5  # ceil(3 * 1.5)
        for dy in range(-radius, radius + 1):
            for dx in range(-radius, radius + 1):
                expected = np.exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5))
                assert abs(weights[dy + radius, dx + radius] - expected) <= 1e-12

    def test_matches_direct_weighted_sum(self):
        rng = np.random.default_rng(2)
        img = GrayImage(rng.integers(0, 256, (14, 14)).astype(np.uint8))
        ix, iy = gradients(img)
        sxx, _, _ = structure_tensor(ix, iy, 1.0)
        weights = gaussian_window_weights(1.0)
        radius = weights.shape[0] // 2
        padded = np.pad(ix * ix, radius, mode="constant")
        y, x = 7, 6
        window = padded[y:y + 2 * radius + 1, x:x + 2 * radius + 1]
        assert abs(sxx[y, x] - (window * weights).sum()) <= 1e-6


class TestHarrisResponse:
    def test_zero_tensor(self):
        z = np.zeros((4, 4))
        assert not harris_response(z, z, z, 0.04).any()

    def test_isotropic_closed_form(self):
        a = np.full((3, 3), 5.0)
        r = harris_response(a, a, np.zeros((3, 3)), 0.04)
        assert np.allclose(r, 25.0 - 0.04 * 100.0)

    def test_rank_one_non_positive(self):
        # pure edge: Iy = 0
        sxx = np.full((3, 3), 9.0)
        r = harris_response(sxx, np.zeros((3, 3)), np.zeros((3, 3)), 0.04)
        assert (r <= 0).all()

    def test_independent_recomputation(self):
        rng = np.random.default_rng(3)
        img = GrayImage(rng.integers(0, 256, (20, 20)).astype(np.uint8))
        ix, iy = gradients(img)
        sxx, syy, sxy = structure_tensor(ix, iy, 1.5)
        r = harris_response(sxx, syy, sxy, 0.05)
        for y, x in ((0, 0), (7, 11), (19, 19)):
            det = sxx[y, x] * syy[y, x] - sxy[y, x] ** 2
            tr = sxx[y, x] + syy[y, x]
            assert abs(r[y, x] - (det - 0.05 * tr * tr)) <= 1e-9 * max(1.0, abs(r[y, x]))

    def test_k_validated(self):
        z = np.zeros((2, 2))
        with pytest.raises(ParameterError):
            harris_response(z, z, z, 0.1)


class TestHarrisDetect:
    def test_flat_empty(self):
        img = GrayImage(np.full((30, 30), 128, dtype=np.uint8))
        assert harris_detect(img, HarrisParams(), Rect(0, 0, 30, 30)) == []

    def test_square_has_exactly_four_corners(self):
        img = bright_square()
        kps = harris_detect(img, HarrisParams(), Rect(0, 0, 40, 40))
        assert len(kps) == 4
        found = sorted((round(kp.x), round(kp.y)) for kp in kps)
        assert found == [(12, 12), (12, 27), (27, 12), (27, 27)]

    def test_rotation_equivariance_quarter_turn(self):
        img = bright_square()
        base = harris_detect(img, HarrisParams(), Rect(0, 0, 40, 40))
        turned = harris_detect(rotate(img, 90), HarrisParams(), Rect(0, 0, 40, 40))
        expected = sorted(rotate_point(kp.x, kp.y, 90, 40, 40) for kp in base)
        got = sorted((kp.x, kp.y) for kp in turned)
        assert np.allclose(np.array(expected), np.array(got))

    def test_roi_restricts_output(self):
        img = bright_square()
        kps = harris_detect(img, HarrisParams(), Rect(0, 0, 20, 20))
        assert [(round(kp.x), round(kp.y)) for kp in kps] == [(12, 12)]

    def test_sorted_by_score_then_position(self):
        rng = np.random.default_rng(4)
        img = GrayImage(rng.integers(0, 256, (50, 50)).astype(np.uint8))
        kps = harris_detect(img, HarrisParams(response_threshold=1e5), Rect(0, 0, 50, 50))
        keys = [(-kp.score, kp.y, kp.x) for kp in kps]
        assert keys == sorted(keys)

    def test_scores_exceed_threshold(self):
        img = bright_square()
        params = HarrisParams()
        for kp in harris_detect(img, params, Rect(0, 0, 40, 40)):
            assert kp.score > params.response_threshold

    def test_roi_outside_image(self):
        img = bright_square()
        with pytest.raises(BoundsError):
            harris_detect(img, HarrisParams(), Rect(30, 30, 20, 20))

    def test_params_validated(self):
        with pytest.raises(ParameterError):
            HarrisParams(k=0.2)
        with pytest.raises(ParameterError):
            HarrisParams(sigma=0.0)


class TestFast:
    def test_flat_false(self):
        img = GrayImage(np.full((9, 9), 100, dtype=np.uint8))
        assert fast_ring_test(img, 4, 4, 0.01) is False

    def test_bright_dot_true(self):
        pixels = np.zeros((9, 9), dtype=np.uint8)
        pixels[4, 4] = 255
        assert fast_ring_test(GrayImage(pixels), 4, 4, 0.01) is True

    def test_step_edge_false(self):
        pixels = np.zeros((9, 9), dtype=np.uint8)
        pixels[:, 4:] = 200
        assert fast_ring_test(GrayImage(pixels), 4, 4, 0.01) is False

    def test_offset_invariance(self):
        rng = np.random.default_rng(5)
        base = rng.integers(60, 120, (11, 11)).astype(np.uint8)
        shifted = (base + 40).astype(np.uint8)
        for x in range(3, 8):
            for y in range(3, 8):
                assert fast_ring_test(GrayImage(base), x, y, 0.02) == fast_ring_test(
                    GrayImage(shifted), x, y, 0.02
                )

    def test_border_rejected(self):
        img = GrayImage(np.zeros((9, 9), dtype=np.uint8))
        with pytest.raises(BoundsError):
            fast_ring_test(img, 2, 4, 0.01)


class TestPyramid:
    def test_sizes_and_scales(self):
        img = GrayImage(np.zeros((243, 320), dtype=np.uint8))
        pyr = build_pyramid(img, 4)
        assert [(o.width, o.height) for o in pyr.octaves] == [
            (320, 243), (160, 121), (80, 60), (40, 30)]
        assert [(d.width, d.height) for d in pyr.intra] == [
            (213, 162), (106, 80), (53, 40)]
        assert [t for _, t in pyr.levels()] == [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0]

    def test_octave_scale_formulas(self):
        img = GrayImage(np.zeros((192, 192), dtype=np.uint8))
        pyr = build_pyramid(img, 4)
        levels = dict((t, im) for im, t in pyr.levels())
        assert 4.0 in levels       # t(c_2) = 4
        assert 3.0 in levels       # t(d_1) = 3

    def test_constant_stays_constant(self):
        img = GrayImage(np.full((192, 200), 55, dtype=np.uint8))
        for level, _ in build_pyramid(img, 4).levels():
            assert (level.pixels == 55).all()

    def test_too_small(self):
        with pytest.raises(SizeError):
            build_pyramid(GrayImage(np.zeros((100, 100), dtype=np.uint8)), 4)


class TestBriskDetect:
    def test_flat_empty(self):
        img = GrayImage(np.full((200, 200), 90, dtype=np.uint8))
        assert brisk_detect(build_pyramid(img, 4)) == []

    def test_blob_found_near_center(self):
        pixels = np.full((200, 200), 180, dtype=np.uint8)
        ys, xs = np.mgrid[0:200, 0:200]
        blob = 140 * np.exp(-((xs - 100.0) ** 2 + (ys - 100.0) ** 2) / 18.0)
        img = GrayImage((pixels - blob).astype(np.uint8))
        kps = brisk_detect(build_pyramid(img, 4))
        assert kps
        best = max(kps, key=lambda kp: kp.score)
        assert abs(best.x - 100) <= 2 and abs(best.y - 100) <= 2

    def test_scales_come_from_pyramid(self):
        rng = np.random.default_rng(6)
        img = GrayImage(rng.integers(0, 256, (200, 200)).astype(np.uint8))
        kps = brisk_detect(build_pyramid(img, 4))
        allowed = {1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0}
        assert kps and {kp.scale for kp in kps} <= allowed


class TestCsv:
    def test_header_and_precision(self):
        from lipkey.keypoints import KeyPoint

        text = keypoints_to_csv([KeyPoint(1.23456789, 2.0, 345678.9, 1.5, 0.123456789)])
        lines = text.strip().splitlines()
        assert lines[0] == "x,y,score,scale,orientation"
        assert lines[1] == "1.23457,2,345679,1.5,0.123457"

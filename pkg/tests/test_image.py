import numpy as np
import pytest

from lipkey.errors import BoundsError, ParameterError, PgmFormatError, SizeError
from lipkey.image import (
    GrayImage,
    Rect,
    downsample_by,
    half_sample,
    integral_image,
    load_pgm,
    rect_sum,
    rotate,
    rotate_point,
    save_pgm,
    to_gray,
)


def make(arr):
    return GrayImage(np.asarray(arr, dtype=np.uint8))


class TestPgm:
    def test_round_trip_identity(self):
        img = make([[1, 2], [3, 4]])
        again = load_pgm(save_pgm(img))
        assert again == img
        assert again.width == 2 and again.height == 2

    def test_single_pixel(self):
        img = load_pgm(b"P5\n1 1\n255\n\x00")
        assert img.width == 1 and img.height == 1 and img.data[0] == 0

    def test_comment_and_whitespace_header(self):
        data = b"P5 # comment\n# another\n 2\t2\n255\n" + bytes([1, 2, 3, 4])
        img = load_pgm(data)
        assert list(img.data) == [1, 2, 3, 4]

    def test_color_magic_rejected(self):
        with pytest.raises(PgmFormatError):
            load_pgm(b"P6\n1 1\n255\n\x00\x00\x00")

    def test_truncated_payload(self):
        with pytest.raises(PgmFormatError):
            load_pgm(b"P5\n2 2\n255\n\x00\x01")

    def test_maxval_over_255(self):
        with pytest.raises(PgmFormatError):
            load_pgm(b"P5\n1 1\n65535\n\x00\x00")

    def test_byte_identical_save(self):
        rng = np.random.default_rng(0)
        img = GrayImage(rng.integers(0, 256, (13, 7)).astype(np.uint8))
        assert save_pgm(load_pgm(save_pgm(img))) == save_pgm(img)


class TestToGray:
    def test_equal_channels_pass_through(self):
        assert to_gray(100, 100, 100) == 100

    def test_pure_red_rounds_half_up(self):
        # 0.30 * 255 = 76.5
        assert to_gray(255, 0, 0) == 77

    def test_pure_green(self):
        # 0.59 * 255 = 150.45
        assert to_gray(0, 255, 0) == 150

    def test_array_input(self):
        out = to_gray([255, 0], [0, 255], [0, 0])
        assert list(out) == [77, 150]


class TestIntegral:
    def test_two_by_two(self):
        ii = integral_image(make([[1, 2], [3, 4]]))
        assert ii.sums.tolist() == [[1, 3], [4, 10]]

    def test_all_zero(self):
        ii = integral_image(make(np.zeros((4, 5))))
        assert not ii.sums.any()

    def test_row_prefix_sums(self):
        row = np.arange(1, 9, dtype=np.uint8).reshape(1, -1)
        ii = integral_image(GrayImage(row))
        assert ii.sums[0].tolist() == np.cumsum(row[0]).tolist()

    def test_monotone_axes(self):
        rng = np.random.default_rng(3)
        ii = integral_image(GrayImage(rng.integers(0, 256, (20, 30)).astype(np.uint8)))
        assert (np.diff(ii.sums, axis=0) >= 0).all()
        assert (np.diff(ii.sums, axis=1) >= 0).all()

    def test_rect_sum_examples(self):
        ii = integral_image(make([[1, 2], [3, 4]]))
        assert rect_sum(ii, Rect(0, 0, 2, 2)) == 10
        assert rect_sum(ii, Rect(0, 0, 1, 1)) == 1
        assert rect_sum(ii, Rect(1, 1, 1, 1)) == 4

    def test_rect_sum_out_of_bounds(self):
        ii = integral_image(make([[1, 2], [3, 4]]))
        with pytest.raises(BoundsError):
            rect_sum(ii, Rect(1, 1, 2, 2))

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            h = int(rng.integers(1, 65))
            w = int(rng.integers(1, 65))
            pixels = rng.integers(0, 256, (h, w)).astype(np.uint8)
            ii = integral_image(GrayImage(pixels))
            x = int(rng.integers(0, w))
            y = int(rng.integers(0, h))
            rw = int(rng.integers(1, w - x + 1))
            rh = int(rng.integers(1, h - y + 1))
            expected = int(pixels[y:y + rh, x:x + rw].astype(np.int64).sum())
            assert rect_sum(ii, Rect(x, y, rw, rh)) == expected


class TestRotate:
    def test_zero_degrees_identity(self):
        rng = np.random.default_rng(5)
        img = GrayImage(rng.integers(0, 256, (9, 11)).astype(np.uint8))
        assert rotate(img, 0) == img

    def test_inverse_pair_interior(self):
        rng = np.random.default_rng(6)
        img = GrayImage(rng.integers(0, 256, (32, 32)).astype(np.uint8))
        back = rotate(rotate(img, 90), -90)
        delta = np.abs(back.pixels[4:-4, 4:-4].astype(int) - img.pixels[4:-4, 4:-4].astype(int))
        assert delta.max() <= 2

    def test_center_pixel_fixed_point(self):
        pixels = np.zeros((21, 21), dtype=np.uint8)
        pixels[10, 10] = 255
        for degrees in (15.0, 37.0, 90.0, 180.0):
            turned = rotate(GrayImage(pixels), degrees)
            assert turned.pixels[10, 10] == 255

    def test_rotate_point_round_trips_rotate(self):
        pixels = np.zeros((40, 40), dtype=np.uint8)
        pixels[12, 28] = 255
        turned = rotate(GrayImage(pixels), 90)
        fx, fy = rotate_point(28, 12, 90, 40, 40)
        assert turned.pixels[int(round(fy)), int(round(fx))] == 255

    def test_outside_reads_zero(self):
        img = GrayImage(np.full((10, 10), 200, dtype=np.uint8))
        turned = rotate(img, 45)
        assert turned.pixels[0, 0] == 0


class TestResample:
    def test_half_constant(self):
        img = GrayImage(np.full((64, 64), 7, dtype=np.uint8))
        out = half_sample(img)
        assert out.width == 32 and out.height == 32
        assert (out.pixels == 7).all()

    def test_half_rounds_half_up(self):
        out = half_sample(make([[0, 255], [255, 0]]))
        assert out.pixels.tolist() == [[128]]

    def test_half_odd_dims_floor(self):
        out = half_sample(GrayImage(np.zeros((5, 7), dtype=np.uint8)))
        assert (out.height, out.width) == (2, 3)

    def test_half_too_small(self):
        with pytest.raises(SizeError):
            half_sample(GrayImage(np.zeros((1, 4), dtype=np.uint8)))

    def test_downsample_dims(self):
        img = GrayImage(np.full((64, 64), 7, dtype=np.uint8))
        out = downsample_by(img, 1.5)
        assert out.width == 42 and out.height == 42
        assert (out.pixels == 7).all()

    def test_downsample_requires_factor_over_one(self):
        img = GrayImage(np.zeros((8, 8), dtype=np.uint8))
        with pytest.raises(ParameterError):
            downsample_by(img, 1.0)

    def test_downsample_empty_result(self):
        img = GrayImage(np.zeros((2, 2), dtype=np.uint8))
        with pytest.raises(SizeError):
            downsample_by(img, 3.0)


class TestTypes:
    def test_rect_validates_extent(self):
        with pytest.raises(ParameterError):
            Rect(0, 0, 0, 3)

    def test_gray_image_range_check(self):
        with pytest.raises(ParameterError):
            GrayImage(np.array([[300]]))

    def test_crop(self):
        img = make([[1, 2, 3], [4, 5, 6]])
        assert img.crop(Rect(1, 0, 2, 2)).pixels.tolist() == [[2, 3], [5, 6]]
        with pytest.raises(BoundsError):
            img.crop(Rect(2, 0, 2, 2))

import numpy as np
import pytest

from lipkey.errors import ParameterError
from lipkey.image import GrayImage
from lipkey.preprocess import EnhanceParams, bias, enhance, gain, image_mean


def constant(value, shape=(8, 8)):
    return GrayImage(np.full(shape, value, dtype=np.uint8))


def checker():
    return GrayImage(np.array([[0, 255], [255, 0]], dtype=np.uint8))


class TestScalars:
    def test_mean_extremes(self):
        assert image_mean(constant(255)) == 1.0
        assert image_mean(constant(0)) == 0.0

    def test_mean_checker(self):
        assert image_mean(checker()) == 0.5

    def test_bias_saturated(self):
        assert bias(constant(255), EnhanceParams()) == 1.0

    def test_bias_mid_gray(self):
        value = bias(constant(128), EnhanceParams())
        assert abs(value - 0.8417) <= 1e-3
        assert abs(value - (128.0 / 255.0) ** 0.25) <= 1e-12

    def test_bias_black(self):
        assert bias(constant(0), EnhanceParams()) == 0.0

    def test_gain_constant_is_zero(self):
        assert gain(constant(90), EnhanceParams()) == 0.0

    def test_gain_checker(self):
        # variance 0.25, rho * sqrt -> 0.05
        assert abs(gain(checker(), EnhanceParams()) - 0.05) <= 1e-12

    def test_gain_zero_rho(self):
        p = EnhanceParams(rho=0.0)
        rng = np.random.default_rng(0)
        img = GrayImage(rng.integers(0, 256, (6, 6)).astype(np.uint8))
        assert gain(img, p) == 0.0

    def test_scalar_oracle_random_images(self):
        rng = np.random.default_rng(1)
        p = EnhanceParams()
        for _ in range(50):
            pixels = rng.integers(0, 256, (12, 9)).astype(np.uint8)
            u = pixels.astype(np.float64) / 255.0
            img = GrayImage(pixels)
            assert abs(image_mean(img) - u.mean()) <= 1e-12
            assert abs(bias(img, p) - u.mean() ** p.beta) <= 1e-12
            assert abs(gain(img, p) - p.rho * (((u - u.mean()) ** 2).mean()) ** p.gamma) <= 1e-12

    def test_param_validation(self):
        with pytest.raises(ParameterError):
            EnhanceParams(beta=0.0)
        with pytest.raises(ParameterError):
            EnhanceParams(rho=-0.1)


class TestEnhance:
    def test_constant_pass_through(self):
        img = constant(131)
        assert enhance(img) == img

    def test_two_level_maps_to_extremes(self):
        out = enhance(checker())
        assert sorted(set(out.data.tolist())) == [0, 255]

    def test_monotone_and_range(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            pixels = rng.integers(0, 256, (16, 16)).astype(np.uint8)
            img = GrayImage(pixels)
            out = enhance(img)
            assert out.pixels.min() >= 0 and out.pixels.max() <= 255
            level_map = {}
            for src, dst in zip(img.data, out.data):
                level_map.setdefault(int(src), int(dst))
                assert level_map[int(src)] == int(dst)
            levels = sorted(level_map)
            assert all(level_map[a] <= level_map[b] for a, b in zip(levels, levels[1:]))

    def test_full_range_anchoring(self):
        rng = np.random.default_rng(4)
        pixels = rng.integers(40, 200, (10, 10)).astype(np.uint8)
        out = enhance(GrayImage(pixels))
        assert out.pixels.min() == 0
        assert out.pixels.max() == 255

    def test_zero_rho_pass_through(self):
        rng = np.random.default_rng(5)
        img = GrayImage(rng.integers(0, 256, (8, 8)).astype(np.uint8))
        assert enhance(img, EnhanceParams(rho=0.0)) == img

"""Illumination normalization via mean/variance-driven tone mapping (E-AIHT).

Per-image statistics feed two scalar controls:

* bias  = mean(u)^beta      with u = intensity / 255
* gain  = rho * var(u)^gamma

and each pixel is mapped through t(u) = gain * (bias^(2u) - 1), then the
map is rescaled affinely so the image min lands on 0 and the max on 255.
Constant images (or gain == 0) pass through unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .image import GrayImage, _round_half_up

_VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class EnhanceParams:
    alpha: float = 0.125
    beta: float = 0.25
    rho: float = 0.1
    gamma: float = 0.5

    def __post_init__(self):
        if self.beta <= 0 or self.gamma <= 0:
            raise ParameterError("beta and gamma must be > 0")
        if self.rho < 0:
            raise ParameterError("rho must be >= 0")


def image_mean(img: GrayImage) -> float:
    """Mean intensity normalized to [0, 1]."""
    return float(np.mean(img.pixels)) / 255.0


def _normalized_variance(img: GrayImage) -> float:
    u = img.pixels.astype(np.float64) / 255.0
    return float(np.mean((u - np.mean(u)) ** 2))


def bias(img: GrayImage, p: EnhanceParams) -> float:
    return image_mean(img) ** p.beta


def gain(img: GrayImage, p: EnhanceParams) -> float:
    return p.rho * _normalized_variance(img) ** p.gamma


def enhance(img: GrayImage, p: EnhanceParams = EnhanceParams()) -> GrayImage:
    """Tone-map an image; monotone in intensity, full [0, 255] output range."""
    if _normalized_variance(img) < _VARIANCE_FLOOR:
        return GrayImage(img.pixels.copy())
    g = gain(img, p)
    b = bias(img, p)
    if g == 0.0:
        return GrayImage(img.pixels.copy())

    # one table entry per possible intensity keeps the map exactly monotone
    u = np.arange(256, dtype=np.float64) / 255.0
    t = g * (np.power(b, 2.0 * u) - 1.0)

    lo = int(img.pixels.min())
    hi = int(img.pixels.max())
    t_lo, t_hi = t[lo], t[hi]
    if t_hi == t_lo:
        return GrayImage(img.pixels.copy())
    scaled = (t - t_lo) * (255.0 / (t_hi - t_lo))
    table = np.clip(_round_half_up(scaled), 0, 255).astype(np.uint8)
    return GrayImage(table[img.pixels])

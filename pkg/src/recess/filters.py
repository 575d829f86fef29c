"""The DCT low-pass feature filter and the baseline input transforms.

The feature filter keeps the axis-aligned top-left block of low-frequency DCT
coefficients per channel (the "dominant" content), zeroes the rest, inverts,
and clips back into the pixel range. The remaining transforms are the standard
squeezing baselines it is compared against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .imaging import Image
from .transform import dct2, idct2

# Guard against 0.95*20 = 18.999999999999996-style float droop before flooring.
_FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class FilterSpec:
    """Feature reservation ratio: the fraction of low-frequency rows/cols kept."""

    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")

    def kept_rows(self, height: int) -> int:
        return max(1, math.floor(self.alpha * height + _FLOOR_EPS))

    def kept_cols(self, width: int) -> int:
        return max(1, math.floor(self.alpha * width + _FLOOR_EPS))


def feature_filter(image: Image, spec: FilterSpec) -> Image:
    """Zero every DCT coefficient outside the kept low-frequency block, per channel.

    The DC coefficient is always kept, so constant images pass through
    unchanged. Output pixels are clipped to [0,1] (zeroing coefficients can
    overshoot the range).
    """
    kr = spec.kept_rows(image.height)
    kc = spec.kept_cols(image.width)
    out = np.empty_like(image.pixels)
    for c in range(image.channels):
        coef = dct2(image.pixels[:, :, c])
        coef[kr:, :] = 0.0
        coef[:, kc:] = 0.0
        out[:, :, c] = idct2(coef)
    np.clip(out, 0.0, 1.0, out=out)
    return Image.from_array(out)


def bit_depth_reduce(image: Image, bits: int) -> Image:
    """Quantize pixels to 2^bits levels (round half away from zero)."""
    if not isinstance(bits, int) or not 1 <= bits <= 7:
        raise ParameterError(f"bits must be an integer in [1, 7], got {bits}")
    levels = (1 << bits) - 1
    # Pixels are non-negative, so floor(x + 0.5) is round-half-away-from-zero.
    quantized = np.floor(image.pixels * levels + 0.5) / levels
    return Image.from_array(np.clip(quantized, 0.0, 1.0))


def median_smooth(image: Image, k: int) -> Image:
    """k x k median filter, window anchored top-left, edges replicated.

    For even k the median is the mean of the two middle order statistics
    (numpy's convention).
    """
    if not isinstance(k, int) or k < 2:
        raise ParameterError(f"window size must be an integer >= 2, got {k}")
    if k > min(image.height, image.width):
        raise ParameterError(
            f"window {k} exceeds image extent {image.height}x{image.width}"
        )
    padded = np.pad(image.pixels, ((0, k - 1), (0, k - 1), (0, 0)), mode="edge")
    h, w = image.height, image.width
    windows = np.empty((k * k, h, w, image.channels))
    for di in range(k):
        for dj in range(k):
            windows[di * k + dj] = padded[di : di + h, dj : dj + w, :]
    return Image.from_array(np.median(windows, axis=0))


def _box_sum(arr: np.ndarray, k: int) -> np.ndarray:
    """Sum over every k x k window (valid positions only), via cumulative sums."""
    c = np.cumsum(np.cumsum(arr, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)), mode="constant")
    return c[k:, k:] - c[k:, :-k] - c[:-k, k:] + c[:-k, :-k]


def non_local_mean(image: Image, search: int, patch: int, strength: float) -> Image:
    """Non-local means: each pixel becomes a patch-similarity-weighted average
    over its search window.

    Weight between pixels i and j is exp(-||P_i - P_j||^2 / (h^2 * patch_area))
    with patches edge-replicated; weights are normalized to sum to 1.
    """
    if search % 2 == 0 or patch % 2 == 0:
        raise ParameterError(f"search ({search}) and patch ({patch}) must be odd")
    if search <= patch:
        raise ParameterError(f"search ({search}) must exceed patch ({patch})")
    if patch < 1 or search > min(image.height, image.width):
        raise ParameterError(
            f"windows must fit within the {image.height}x{image.width} image"
        )
    if strength <= 0.0:
        raise ParameterError(f"strength must be positive, got {strength}")

    s_half = search // 2
    p_half = patch // 2
    pad = s_half + p_half
    h, w = image.height, image.width
    norm = strength * strength * patch * patch
    out = np.empty_like(image.pixels)
    for c in range(image.channels):
        chan = image.pixels[:, :, c]
        padded = np.pad(chan, pad, mode="edge")
        # base[i, j] is the patch-neighbourhood view around pixel (i, j)
        base = padded[s_half : s_half + h + 2 * p_half, s_half : s_half + w + 2 * p_half]
        num = np.zeros((h, w))
        den = np.zeros((h, w))
        for di in range(-s_half, s_half + 1):
            for dj in range(-s_half, s_half + 1):
                shifted = padded[
                    s_half + di : s_half + di + h + 2 * p_half,
                    s_half + dj : s_half + dj + w + 2 * p_half,
                ]
                sq = (base - shifted) ** 2
                dist = _box_sum(sq, patch)
                weight = np.exp(-dist / norm)
                center = padded[pad + di : pad + di + h, pad + dj : pad + dj + w]
                num += weight * center
                den += weight
        out[:, :, c] = num / den
    return Image.from_array(np.clip(out, 0.0, 1.0))


def rotate(image: Image, degrees: float) -> Image:
    """Rotate about the image center (counterclockwise), bilinear sampling.

    Source coordinates that fall outside the raster are edge-replicated; the
    output keeps the input shape.
    """
    theta = math.radians(degrees)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    h, w = image.height, image.width
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0

    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    xd = cols - cx
    yd = rows - cy
    # Inverse mapping; y grows downward, so this samples a visually CCW turn.
    xs = cos_t * xd - sin_t * yd + cx
    ys = sin_t * xd + cos_t * yd + cy

    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0

    px = image.pixels
    out = np.empty_like(px)
    for c in range(image.channels):
        chan = px[:, :, c]
        top = chan[y0, x0] * (1 - fx) + chan[y0, x1] * fx
        bottom = chan[y1, x0] * (1 - fx) + chan[y1, x1] * fx
        out[:, :, c] = top * (1 - fy) + bottom * fy
    return Image.from_array(np.clip(out, 0.0, 1.0))

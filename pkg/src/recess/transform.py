"""Orthonormal two-dimensional DCT pair, applied separably.

The forward transform of an M x N matrix s is

    S(u, v) = a_u a_v sum_x sum_y s(x, y) cos(pi u (2x+1) / 2M) cos(pi v (2y+1) / 2N)

with a_0 = 1/sqrt(M) and a_{u>0} = sqrt(2/M) along rows (likewise with N along
columns). With T_n[u, x] = a_u cos(pi u (2x+1) / 2n) this is S = T_M s T_N^T and
the inverse is s = T_M^T S T_N; T_n is orthonormal, so the pair is self-inverse
and energy-preserving (Parseval). Evaluating the two passes separately costs
O(MN(M+N)) instead of the literal O(M^2 N^2).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import NumericDomainError, ShapeError
from .imaging import Image


@dataclass(frozen=True)
class Spectrum:
    """Per-channel DCT coefficients of an image, same layout as its pixels."""

    height: int
    width: int
    channels: int
    coefficients: np.ndarray  # shape (height, width, channels), float64

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=np.float64)
        if coef.shape != (self.height, self.width, self.channels):
            raise ShapeError(
                f"coefficient array shape {coef.shape} does not match "
                f"({self.height}, {self.width}, {self.channels})"
            )
        coef = np.ascontiguousarray(coef)
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)


@functools.lru_cache(maxsize=None)
def basis_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT basis T_n[u, x] = a_u cos(pi u (2x+1) / 2n), cached per size.

    The cache is populate-once: entries are read-only and safe for concurrent
    readers.
    """
    u = np.arange(n)[:, None]
    x = np.arange(n)[None, :]
    t = np.cos(np.pi * u * (2 * x + 1) / (2 * n))
    t[0, :] *= 1.0 / np.sqrt(n)
    t[1:, :] *= np.sqrt(2.0 / n)
    t = np.ascontiguousarray(t)
    t.setflags(write=False)
    return t


@functools.lru_cache(maxsize=None)
def _basis_matrix_t(n: int) -> np.ndarray:
    t = np.ascontiguousarray(basis_matrix(n).T)
    t.setflags(write=False)
    return t


def _check_matrix(mat: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(mat, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"expected a non-empty 2-D matrix, got shape {np.shape(mat)}")
    if not np.isfinite(arr).all():
        raise NumericDomainError("matrix entries must be finite")
    return arr


def dct2(channel: np.ndarray) -> np.ndarray:
    """Forward orthonormal 2-D DCT of one channel."""
    x = _check_matrix(channel)
    m, n = x.shape
    return backend.sandwich(basis_matrix(m), x, _basis_matrix_t(n))


def idct2(spectrum: np.ndarray) -> np.ndarray:
    """Inverse orthonormal 2-D DCT; exact inverse of dct2 up to float error."""
    s = _check_matrix(spectrum)
    m, n = s.shape
    return backend.sandwich(_basis_matrix_t(m), s, basis_matrix(n))


def dct_image(image: Image) -> Spectrum:
    """Channel-wise forward transform of an image."""
    coef = np.empty_like(image.pixels)
    for c in range(image.channels):
        coef[:, :, c] = dct2(image.pixels[:, :, c])
    return Spectrum(image.height, image.width, image.channels, coef)


def idct_image(spectrum: Spectrum) -> np.ndarray:
    """Channel-wise inverse transform. Output is a raw raster, NOT clipped to [0,1]."""
    out = np.empty_like(spectrum.coefficients)
    for c in range(spectrum.channels):
        out[:, :, c] = idct2(spectrum.coefficients[:, :, c])
    return out

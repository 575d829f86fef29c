"""Image data model, 8-bit PNG I/O, and CIFAR-10 binary batch ingestion.

Pixels are real-valued in [0,1] everywhere inside the package; conversion to
and from 8-bit bytes happens only here, with one fixed rounding rule
(round half away from zero, then clamp).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from .errors import FormatError, ParameterError, ShapeError

CIFAR_RECORD_BYTES = 3073  # 1 label byte + 3*1024 planar pixel bytes
CIFAR_SIDE = 32
CIFAR_CLASSES = 10


@dataclass(frozen=True)
class Image:
    """An H x W x C raster of floats in [0,1], immutable after construction."""

    height: int
    width: int
    channels: int
    pixels: np.ndarray  # shape (height, width, channels), float64, read-only

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ShapeError(f"image dimensions must be positive, got {self.height}x{self.width}")
        if self.channels not in (1, 3):
            raise ShapeError(f"channels must be 1 or 3, got {self.channels}")
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.shape != (self.height, self.width, self.channels):
            raise ShapeError(
                f"pixel array shape {px.shape} does not match "
                f"({self.height}, {self.width}, {self.channels})"
            )
        if not np.isfinite(px).all():
            raise ParameterError("pixel values must be finite")
        if px.size and (px.min() < 0.0 or px.max() > 1.0):
            raise ParameterError("pixel values must lie in [0,1]")
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.height, self.width, self.channels)

    @classmethod
    def from_array(cls, pixels: np.ndarray) -> "Image":
        """Build an Image from an (H, W) or (H, W, C) float array."""
        arr = np.asarray(pixels, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ShapeError(f"expected a 2-D or 3-D array, got ndim={arr.ndim}")
        h, w, c = arr.shape
        return cls(height=h, width=w, channels=c, pixels=arr)


@dataclass(frozen=True)
class LabeledDataset:
    """Images of one uniform shape with class labels in [0, num_classes)."""

    images: list[Image]
    labels: list[int]
    num_classes: int

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise ShapeError(
                f"{len(self.images)} images but {len(self.labels)} labels"
            )
        if self.num_classes < 1:
            raise ParameterError("num_classes must be positive")
        shapes = {img.shape for img in self.images}
        if len(shapes) > 1:
            raise ShapeError(f"images have mixed shapes: {sorted(shapes)}")
        for i, lbl in enumerate(self.labels):
            if not 0 <= lbl < self.num_classes:
                raise ParameterError(f"label {lbl} at index {i} outside [0, {self.num_classes})")

    def __len__(self) -> int:
        return len(self.images)

    def stack(self) -> np.ndarray:
        """All images as one (N, H, W, C) array."""
        return np.stack([img.pixels for img in self.images])


def quantize_u8(values: np.ndarray) -> np.ndarray:
    """Map [0,1]-scale floats to bytes: round half away from zero, clamp to [0,255]."""
    v = np.asarray(values, dtype=np.float64) * 255.0
    rounded = np.where(v >= 0.0, np.floor(v + 0.5), np.ceil(v - 0.5))
    return np.clip(rounded, 0.0, 255.0).astype(np.uint8)


def load_png(path: str | os.PathLike) -> Image:
    """Load an 8-bit grayscale or RGB PNG, scaling bytes by 1/255 exactly."""
    try:
        with PILImage.open(path) as img:
            img.load()
            mode = img.mode
            if mode not in ("L", "RGB"):
                raise FormatError(
                    f"unsupported PNG pixel layout {mode!r} in {path}: "
                    "only 8-bit grayscale (L) and 8-bit RGB are accepted"
                )
            arr = np.asarray(img, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise FormatError(f"not a decodable image file: {path}") from exc
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return Image.from_array(arr.astype(np.float64) / 255.0)


def save_png(image: Image, path: str | os.PathLike) -> None:
    """Write an Image as an 8-bit PNG (grayscale for 1 channel, RGB for 3)."""
    data = quantize_u8(image.pixels)
    if image.channels == 1:
        pil = PILImage.fromarray(data[:, :, 0], mode="L")
    else:
        pil = PILImage.fromarray(data, mode="RGB")
    pil.save(path, format="PNG")


def load_cifar10(paths: list[str | os.PathLike], limit: int | None = None) -> LabeledDataset:
    """Read CIFAR-10 binary batches (3073-byte records, planar RGB) into a dataset.

    Records are consumed in file order and truncated to `limit` when given.
    """
    if limit is not None and limit < 0:
        raise ParameterError(f"limit must be non-negative, got {limit}")
    images: list[Image] = []
    labels: list[int] = []
    for path in paths:
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) % CIFAR_RECORD_BYTES != 0:
            raise FormatError(
                f"{path}: size {len(raw)} is not a multiple of {CIFAR_RECORD_BYTES}"
            )
        records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
        for rec_idx in range(records.shape[0]):
            if limit is not None and len(images) >= limit:
                break
            record = records[rec_idx]
            label = int(record[0])
            if label >= CIFAR_CLASSES:
                raise FormatError(
                    f"{path}: record {rec_idx} has label byte {label} >= {CIFAR_CLASSES}"
                )
            planes = record[1:].reshape(3, CIFAR_SIDE, CIFAR_SIDE)
            interleaved = np.transpose(planes, (1, 2, 0)).astype(np.float64) / 255.0
            images.append(Image.from_array(interleaved))
            labels.append(label)
        if limit is not None and len(images) >= limit:
            break
    return LabeledDataset(images=images, labels=labels, num_classes=CIFAR_CLASSES)

"""Deterministic CIFAR-10-format demo data for desk-scale experiments.

The official CIFAR-10 download is large and not always available, so this
module synthesizes labeled 32x32x3 batches in the exact binary format the
loader expects, with statistics tuned so attack-and-detect experiments behave
the way they do on natural data:

* every class shares a common base pattern, so images look alike and energy
  concentrates at low frequencies;
* a few low-frequency coefficients carry strong class evidence per image --
  content a low-pass filter preserves;
* a near-Nyquist band carries class evidence that is individually faint but
  spread over hundreds of coefficients. Because those coefficients are nearly
  noise-free, a classifier trained to convergence weights them far beyond
  their amplitude, which is what hands sign attacks their flipping power --
  yet the band contributes little clean margin, so removing it reverts
  attacked predictions without disturbing clean ones;
* a small fraction of images have almost no low-frequency evidence (they are
  classifiable only from the faint band), which keeps training pressure on
  that band the way hard examples do in natural datasets.

Run ``python -m recess.synthetic --out-dir DIR`` to materialize batches.
"""

from __future__ import annotations

import os

import numpy as np

from .imaging import CIFAR_CLASSES, CIFAR_SIDE, quantize_u8
from .transform import idct2

# Low block: kept by the feature filter at every alpha >= 0.5. High band:
# removed at every alpha <= 0.95 in the standard sweep.
_LOW_BLOCK = [(u, v) for u in range(5) for v in range(5) if (u, v) != (0, 0)]
_HIGH_BAND = [
    (u, v)
    for u in range(CIFAR_SIDE)
    for v in range(CIFAR_SIDE)
    if u >= 28 or v >= 28
]

LOW_BASE_AMP = 0.6        # shared low-frequency structure
HIGH_BASE_AMP = 0.2       # shared high-frequency texture
LOW_DEV_AMP = 0.25        # strong, sparse class evidence (survives filtering)
HIGH_DEV_AMP = 0.012      # faint, dense class evidence (what attacks exploit)
NUISANCE_AMP = 0.15       # per-image low-band clutter
BROADBAND_NOISE_AMP = 0.01
TEMPLATE_SCALE_RANGE = (0.7, 1.3)
WEAK_EVIDENCE_FRACTION = 0.12          # images nearly without low-band evidence
WEAK_EVIDENCE_SCALE_RANGE = (0.05, 0.25)

TRAIN_FILE = "data_batch_1.bin"
TEST_FILE = "test_batch.bin"


def _rng(*entropy) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(entropy))))


def class_templates(seed: int):
    """Fixed coefficient templates: shared (channel, position) bases plus
    per-class deviations, for the low and high bands."""
    rng = _rng(seed, 777)
    base_low = rng.normal(0.0, LOW_BASE_AMP, size=(3, len(_LOW_BLOCK)))
    base_high = rng.normal(0.0, HIGH_BASE_AMP, size=(3, len(_HIGH_BAND)))
    dev_low = rng.normal(0.0, LOW_DEV_AMP, size=(CIFAR_CLASSES, 3, len(_LOW_BLOCK)))
    dev_high = rng.normal(0.0, HIGH_DEV_AMP, size=(CIFAR_CLASSES, 3, len(_HIGH_BAND)))
    return base_low, base_high, dev_low, dev_high


def synthesize_image(label: int, rng: np.random.Generator, templates) -> np.ndarray:
    """One 32x32x3 float image for the given class."""
    base_low, base_high, dev_low, dev_high = templates
    weak = rng.random() < WEAK_EVIDENCE_FRACTION
    low_range = WEAK_EVIDENCE_SCALE_RANGE if weak else TEMPLATE_SCALE_RANGE
    low_scale = rng.uniform(*low_range)
    high_scale = rng.uniform(*TEMPLATE_SCALE_RANGE)
    low_rows = [p[0] for p in _LOW_BLOCK]
    low_cols = [p[1] for p in _LOW_BLOCK]
    high_rows = [p[0] for p in _HIGH_BAND]
    high_cols = [p[1] for p in _HIGH_BAND]
    pixels = np.empty((CIFAR_SIDE, CIFAR_SIDE, 3))
    for ch in range(3):
        coef = rng.normal(0.0, BROADBAND_NOISE_AMP, size=(CIFAR_SIDE, CIFAR_SIDE))
        coef[0, 0] += rng.uniform(0.4, 0.6) * CIFAR_SIDE
        coef[low_rows, low_cols] += (
            base_low[ch]
            + low_scale * dev_low[label, ch]
            + rng.normal(0.0, NUISANCE_AMP, size=len(_LOW_BLOCK))
        )
        coef[high_rows, high_cols] += base_high[ch] + high_scale * dev_high[label, ch]
        pixels[:, :, ch] = idct2(coef)
    return _fit_into_range(pixels)


_FIT_KEPT_SIZES = (16, 19, 22, 25, 28, 30)  # kept blocks over the 0.5..0.95 sweep
_FIT_MARGIN = 3.5 / 255.0


def _fit_into_range(pixels: np.ndarray) -> np.ndarray:
    """Compress toward mid-gray so the image and all its sweep-filtered
    versions stay strictly inside (0, 1).

    Hard clipping would truncate waveforms (spurious high-frequency content,
    saturated pixels), and an image whose low-pass version overshoots the
    pixel range would make the feature filter's own clipping active, costing
    its near-exact idempotence. Compressing about mid-gray commutes with the
    band projections (the DC coefficient is always kept), so one scale factor
    fixes every version at once.
    """
    from .transform import dct2 as _dct2  # local import to avoid cycles at module load

    excursion = float(np.abs(pixels - 0.5).max())
    for ch in range(pixels.shape[2]):
        coef = _dct2(pixels[:, :, ch])
        for kept in _FIT_KEPT_SIZES:
            masked = np.zeros_like(coef)
            masked[:kept, :kept] = coef[:kept, :kept]
            low = idct2(masked)
            excursion = max(excursion, float(np.abs(low - 0.5).max()))
    limit = 0.5 - _FIT_MARGIN
    if excursion > limit:
        pixels = 0.5 + (pixels - 0.5) * (limit / excursion)
    return pixels


def synthesize_records(num_records: int, seed: int, split: int) -> bytes:
    """CIFAR-format records with round-robin labels (balanced classes)."""
    templates = class_templates(seed)
    rng = _rng(seed, split)
    chunks = []
    for index in range(num_records):
        label = index % CIFAR_CLASSES
        pixels = synthesize_image(label, rng, templates)
        planes = quantize_u8(pixels).transpose(2, 0, 1)  # planar R, G, B
        chunks.append(bytes([label]) + planes.tobytes())
    return b"".join(chunks)


def write_dataset(
    out_dir: str | os.PathLike,
    train_records: int = 10000,
    test_records: int = 2000,
    seed: int = 42,
) -> dict:
    """Write one training batch and one test batch; returns the file paths."""
    os.makedirs(out_dir, exist_ok=True)
    train_path = os.path.join(out_dir, TRAIN_FILE)
    test_path = os.path.join(out_dir, TEST_FILE)
    with open(train_path, "wb") as fh:
        fh.write(synthesize_records(train_records, seed, split=0))
    with open(test_path, "wb") as fh:
        fh.write(synthesize_records(test_records, seed, split=1))
    return {"train": train_path, "test": test_path}


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(
        prog="python -m recess.synthetic",
        description="Generate deterministic CIFAR-format demo batches.",
    )
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--train-records", type=int, default=10000)
    parser.add_argument("--test-records", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args(argv)
    paths = write_dataset(args.out_dir, args.train_records, args.test_records, args.seed)
    print(f"wrote {paths['train']} and {paths['test']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

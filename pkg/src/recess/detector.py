"""The detection pipeline: filter the input, predict twice, compare labels."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ContractError, TransportError
from .filters import FilterSpec, feature_filter
from .imaging import Image
from .predictor import predict

BENIGN = "benign"
ADVERSARIAL = "adversarial"


@dataclass(frozen=True)
class Verdict:
    decision: str
    original_label: int
    filtered_label: int
    alpha: float

    def __post_init__(self):
        expected = ADVERSARIAL if self.original_label != self.filtered_label else BENIGN
        if self.decision != expected:
            raise ContractError(
                f"decision {self.decision!r} inconsistent with labels "
                f"{self.original_label} vs {self.filtered_label}"
            )


def detect(image: Image, predictor, spec: FilterSpec) -> Verdict:
    """Flag the image as adversarial iff filtering changes the predicted label.

    Makes exactly two predictor calls and reads only the labels, never the
    scores. Predictor transport errors propagate; they are not verdicts.
    """
    filtered = feature_filter(image, spec)
    original_label = predict(predictor, image).label
    filtered_label = predict(predictor, filtered).label
    decision = ADVERSARIAL if original_label != filtered_label else BENIGN
    return Verdict(
        decision=decision,
        original_label=original_label,
        filtered_label=filtered_label,
        alpha=spec.alpha,
    )


def batch_detect(images: list[Image], predictor, spec: FilterSpec) -> list[Verdict]:
    """Order-preserving detect over a batch; aborts on the first transport error."""
    verdicts = []
    for index, image in enumerate(images):
        try:
            verdicts.append(detect(image, predictor, spec))
        except TransportError as exc:
            raise TransportError(f"batch aborted at image {index}: {exc}") from exc
    return verdicts

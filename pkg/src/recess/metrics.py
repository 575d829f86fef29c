"""Detection-quality metrics: TPR/TNR, ROC over an alpha sweep, AUC, top-k
agreement, and filter latency measurement.

Reports are emitted both as human-readable tables and as line-delimited JSON
(one self-describing record per row).
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass

import numpy as np

from .detector import ADVERSARIAL, BENIGN, Verdict, batch_detect
from .errors import ContractError, ParameterError
from .filters import FilterSpec, feature_filter
from .imaging import Image


@dataclass(frozen=True)
class ConfusionCounts:
    """Positive class is adversarial."""

    tp: int
    fn: int
    tn: int
    fp: int

    @property
    def tpr(self) -> float:
        return self.tp / (self.tp + self.fn)

    @property
    def tnr(self) -> float:
        return self.tn / (self.tn + self.fp)


@dataclass(frozen=True)
class DetectionRates:
    tpr: float
    tnr: float
    counts: ConfusionCounts


def tpr_tnr(
    verdicts_on_adversarial: list[Verdict], verdicts_on_benign: list[Verdict]
) -> DetectionRates:
    """True-positive and true-negative rates from verdicts on labeled pools."""
    if not verdicts_on_adversarial or not verdicts_on_benign:
        raise ParameterError("both verdict lists must be non-empty (rates undefined)")
    tp = sum(1 for v in verdicts_on_adversarial if v.decision == ADVERSARIAL)
    tn = sum(1 for v in verdicts_on_benign if v.decision == BENIGN)
    counts = ConfusionCounts(
        tp=tp,
        fn=len(verdicts_on_adversarial) - tp,
        tn=tn,
        fp=len(verdicts_on_benign) - tn,
    )
    return DetectionRates(tpr=counts.tpr, tnr=counts.tnr, counts=counts)


@dataclass(frozen=True)
class RocPoint:
    fpr: float
    tpr: float
    alpha: float | None = None  # None on the (0,0) / (1,1) anchors


@dataclass(frozen=True)
class RocCurve:
    """(fpr, tpr) points sorted by fpr ascending, deduplicated by fpr keeping
    the max tpr; anchors are inserted before deduplication."""

    points: list[RocPoint]

    def __post_init__(self):
        for p in self.points:
            if not (0.0 <= p.fpr <= 1.0 and 0.0 <= p.tpr <= 1.0):
                raise ContractError(f"ROC point outside the unit square: {p}")
        fprs = [p.fpr for p in self.points]
        if fprs != sorted(fprs):
            raise ContractError("ROC points must be sorted by fpr ascending")
        if len(fprs) != len(set(fprs)):
            raise ContractError("ROC points must be deduplicated by fpr")


def build_roc(points: list[RocPoint]) -> RocCurve:
    """Anchor, sort, and dedup raw sweep points into a valid curve."""
    anchored = list(points) + [RocPoint(0.0, 0.0), RocPoint(1.0, 1.0)]
    best: dict[float, RocPoint] = {}
    for p in anchored:
        kept = best.get(p.fpr)
        if kept is None or p.tpr > kept.tpr:
            best[p.fpr] = p
    return RocCurve(points=sorted(best.values(), key=lambda p: p.fpr))


def roc_over_alpha(
    adversarial_images: list[Image],
    benign_images: list[Image],
    predictor,
    alphas: list[float],
) -> RocCurve:
    """One ROC point per feature reservation ratio, swept over `alphas`."""
    if not adversarial_images or not benign_images:
        raise ParameterError("need non-empty adversarial and benign image sets")
    if not alphas:
        raise ParameterError("need at least one alpha")
    if list(alphas) != sorted(alphas, reverse=True):
        raise ParameterError("alphas must be in descending order")
    points = []
    for alpha in alphas:
        spec = FilterSpec(alpha)
        rates = tpr_tnr(
            batch_detect(adversarial_images, predictor, spec),
            batch_detect(benign_images, predictor, spec),
        )
        points.append(RocPoint(fpr=1.0 - rates.tnr, tpr=rates.tpr, alpha=alpha))
    return build_roc(points)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the ROC curve."""
    pts = curve.points
    if len(pts) < 2:
        raise ParameterError("AUC needs at least two points")
    fprs = [p.fpr for p in pts]
    if fprs != sorted(fprs):
        raise ContractError("ROC points must be sorted by fpr ascending")
    total = 0.0
    for left, right in zip(pts, pts[1:]):
        total += (right.fpr - left.fpr) * (left.tpr + right.tpr) / 2.0
    return total


def topk_agreement(
    predictor_scores_clean: np.ndarray, predictor_scores_noisy: np.ndarray, k: int
) -> bool:
    """True iff the noisy top-1 label lands in the clean top-k set (ties break low)."""
    clean = np.asarray(predictor_scores_clean, dtype=np.float64)
    noisy = np.asarray(predictor_scores_noisy, dtype=np.float64)
    if clean.ndim != 1 or noisy.ndim != 1 or clean.size != noisy.size:
        raise ParameterError("score vectors must be 1-D and of equal length")
    if not 1 <= k <= clean.size:
        raise ParameterError(f"k must lie in [1, {clean.size}], got {k}")
    top_k = np.argsort(-clean, kind="stable")[:k]
    return int(np.argmax(noisy)) in set(int(i) for i in top_k)


@dataclass(frozen=True)
class BenchResult:
    mean_seconds: float
    p95_seconds: float
    repetitions: int
    backend: str
    input_digest: str  # sha256 of the generated workload, for determinism checks


def bench_filter(
    shape: tuple[int, int, int],
    repetitions: int,
    alpha: float = 0.5,
    seed: int = 0,
) -> BenchResult:
    """Wall-clock statistics for feature_filter on seeded random images.

    Measures the filter alone; predictor latency is excluded by construction.
    """
    if repetitions < 10:
        raise ParameterError(f"repetitions must be >= 10, got {repetitions}")
    height, width, channels = shape
    rng = np.random.Generator(np.random.PCG64(seed))
    images = [
        Image.from_array(rng.random((height, width, channels)))
        for _ in range(repetitions)
    ]
    digest = hashlib.sha256()
    for img in images:
        digest.update(img.pixels.tobytes())
    spec = FilterSpec(alpha)
    feature_filter(images[0], spec)  # warm the basis-matrix cache
    times = []
    for img in images:
        start = time.perf_counter()
        feature_filter(img, spec)
        times.append(time.perf_counter() - start)
    from . import backend  # late import to report the active kernel set

    return BenchResult(
        mean_seconds=float(np.mean(times)),
        p95_seconds=float(np.percentile(times, 95)),
        repetitions=repetitions,
        backend=backend.active_backend(),
        input_digest=digest.hexdigest(),
    )


def format_percent(value: float) -> str:
    """Two-decimal percent, the presentation used by the report tables."""
    return f"{value * 100:.2f}%"


def render_table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(cells):
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(cells)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines)


def jsonl_record(record: dict) -> str:
    """One report line: stable key order so equal runs serialize identically."""
    return json.dumps(record, sort_keys=True)

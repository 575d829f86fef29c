"""Label-only adversarial example detection via DCT low-pass feature filtering."""

from .attacks import AttackResult, cw_l2, fgsm, gaussian_noise, poisson_noise, salt_pepper
from .backend import active_backend, available_backends, set_backend
from .detector import ADVERSARIAL, BENIGN, Verdict, batch_detect, detect
from .filters import (
    FilterSpec,
    bit_depth_reduce,
    feature_filter,
    median_smooth,
    non_local_mean,
    rotate,
)
from .imaging import Image, LabeledDataset, load_cifar10, load_png, save_png
from .metrics import (
    BenchResult,
    ConfusionCounts,
    DetectionRates,
    RocCurve,
    RocPoint,
    auc,
    bench_filter,
    roc_over_alpha,
    topk_agreement,
    tpr_tnr,
)
from .predictor import (
    BuiltinModel,
    CrossEntropyLoss,
    MarginLoss,
    Prediction,
    TrainConfig,
    external_predictor,
    input_gradient,
    load_model,
    logits,
    predict,
    save_model,
    train_builtin,
)
from .transform import Spectrum, dct2, dct_image, idct2, idct_image

__version__ = "0.1.0"

__all__ = [
    "ADVERSARIAL",
    "AttackResult",
    "BENIGN",
    "BenchResult",
    "BuiltinModel",
    "ConfusionCounts",
    "CrossEntropyLoss",
    "DetectionRates",
    "FilterSpec",
    "Image",
    "LabeledDataset",
    "MarginLoss",
    "Prediction",
    "RocCurve",
    "RocPoint",
    "Spectrum",
    "TrainConfig",
    "Verdict",
    "active_backend",
    "auc",
    "available_backends",
    "batch_detect",
    "bench_filter",
    "bit_depth_reduce",
    "cw_l2",
    "dct2",
    "dct_image",
    "detect",
    "external_predictor",
    "feature_filter",
    "fgsm",
    "gaussian_noise",
    "idct2",
    "idct_image",
    "input_gradient",
    "load_cifar10",
    "load_model",
    "load_png",
    "logits",
    "median_smooth",
    "non_local_mean",
    "poisson_noise",
    "predict",
    "roc_over_alpha",
    "rotate",
    "salt_pepper",
    "save_model",
    "save_png",
    "set_backend",
    "topk_agreement",
    "tpr_tnr",
    "train_builtin",
]

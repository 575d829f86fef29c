"""Classifiers: a small built-in dense network and a subprocess client.

The built-in model is flatten -> dense(hidden, ReLU) -> dense(classes), with
hand-written forward, loss, and input-gradient passes so attacks can verify
their gradients against finite differences. External classifiers plug in over
a line-delimited JSON protocol on a child process's stdin/stdout.
"""

from __future__ import annotations

import base64
import json
import logging
import struct
import subprocess
import threading
from dataclasses import dataclass

import numpy as np

from .errors import (
    FormatError,
    ParameterError,
    ShapeError,
    TrainingDivergenceError,
    TransportError,
)
from .imaging import Image, LabeledDataset

log = logging.getLogger(__name__)

MODEL_MAGIC = b"RFF1"


@dataclass(frozen=True)
class Prediction:
    """A class label plus the optional score vector that produced it."""

    label: int
    scores: np.ndarray | None = None

    def __post_init__(self):
        if self.scores is not None:
            scores = np.asarray(self.scores, dtype=np.float64)
            scores.setflags(write=False)
            object.__setattr__(self, "scores", scores)
            if self.label != int(np.argmax(scores)):
                raise ParameterError(
                    f"label {self.label} is not the argmax of the scores "
                    f"(ties break to the lowest index)"
                )


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - np.max(z, axis=-1, keepdims=True))
    return e / np.sum(e, axis=-1, keepdims=True)


@dataclass(frozen=True)
class CrossEntropyLoss:
    """Softmax cross-entropy against a fixed label."""

    label: int


@dataclass(frozen=True)
class MarginLoss:
    """Hinge on the logit margin: max(max_{i != t} Z_i - Z_t, -confidence).

    Floors at -confidence once the target leads every other class by at least
    that margin; the attack objective uses it to drive inputs toward `target`.
    """

    target: int
    confidence: float = 0.0

    def __post_init__(self):
        if self.confidence < 0.0:
            raise ParameterError(f"confidence must be >= 0, got {self.confidence}")


def margin_loss_value(logits_vec: np.ndarray, target: int, confidence: float) -> float:
    """Evaluate the margin loss on a raw logit vector."""
    z = np.asarray(logits_vec, dtype=np.float64)
    if z.ndim != 1 or z.size < 2:
        raise ParameterError("margin loss needs a logit vector of length >= 2")
    if not 0 <= target < z.size:
        raise ParameterError(f"target {target} outside [0, {z.size})")
    others = np.delete(z, target)
    return float(max(others.max() - z[target], -confidence))


@dataclass(frozen=True)
class BuiltinModel:
    """Dense two-layer classifier; immutable and shareable across threads."""

    input_shape: tuple[int, int, int]  # (height, width, channels)
    hidden_size: int
    num_classes: int
    w1: np.ndarray  # (input_dim, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden, classes)
    b2: np.ndarray  # (classes,)

    def __post_init__(self):
        d = int(np.prod(self.input_shape))
        expected = {
            "w1": (d, self.hidden_size),
            "b1": (self.hidden_size,),
            "w2": (self.hidden_size, self.num_classes),
            "b2": (self.num_classes,),
        }
        for name, shape in expected.items():
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ShapeError(f"{name} has shape {arr.shape}, expected {shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def input_dim(self) -> int:
        return int(np.prod(self.input_shape))

    def predict(self, image: Image) -> Prediction:
        z = logits(self, image)
        return Prediction(label=int(np.argmax(z)), scores=softmax(z))


def _check_input(model: BuiltinModel, image: Image) -> np.ndarray:
    if image.shape != model.input_shape:
        raise ShapeError(
            f"image shape {image.shape} does not match model input {model.input_shape}"
        )
    return image.pixels.reshape(-1)


def forward_flat(model: BuiltinModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward pass on a flat pixel vector; returns (hidden pre-activation, logits)."""
    z1 = x @ model.w1 + model.b1
    z2 = np.maximum(z1, 0.0) @ model.w2 + model.b2
    return z1, z2


def backward_to_input(model: BuiltinModel, z1: np.ndarray, dz2: np.ndarray) -> np.ndarray:
    """Backpropagate a logit-space gradient to the flat input."""
    da1 = dz2 @ model.w2.T
    dz1 = da1 * (z1 > 0.0)
    return dz1 @ model.w1.T


def logits(model: BuiltinModel, image: Image) -> np.ndarray:
    """Pre-softmax output vector of the built-in model."""
    x = _check_input(model, image)
    return forward_flat(model, x)[1]


def predict(predictor, image: Image) -> Prediction:
    """Classify an image with anything exposing `.predict(image) -> Prediction`."""
    return predictor.predict(image)


def loss_logit_gradient(model: BuiltinModel, z2: np.ndarray, loss_spec) -> np.ndarray:
    """Gradient of the loss with respect to the logits."""
    if isinstance(loss_spec, CrossEntropyLoss):
        if not 0 <= loss_spec.label < model.num_classes:
            raise ParameterError(
                f"label {loss_spec.label} outside [0, {model.num_classes})"
            )
        dz2 = softmax(z2)
        dz2[loss_spec.label] -= 1.0
        return dz2
    if isinstance(loss_spec, MarginLoss):
        if model.num_classes < 2:
            raise ParameterError("margin loss needs at least two classes")
        if not 0 <= loss_spec.target < model.num_classes:
            raise ParameterError(
                f"target {loss_spec.target} outside [0, {model.num_classes})"
            )
        t = loss_spec.target
        masked = z2.copy()
        masked[t] = -np.inf
        runner = int(np.argmax(masked))
        dz2 = np.zeros_like(z2)
        if z2[runner] - z2[t] > -loss_spec.confidence:
            dz2[runner] = 1.0
            dz2[t] = -1.0
        # else: the loss sits on its -confidence floor, gradient is zero
        return dz2
    raise ParameterError(f"unsupported loss spec {loss_spec!r}")


def input_gradient(model: BuiltinModel, image: Image, loss_spec) -> np.ndarray:
    """Analytic gradient of the given loss with respect to the input pixels."""
    x = _check_input(model, image)
    z1, z2 = forward_flat(model, x)
    dz2 = loss_logit_gradient(model, z2, loss_spec)
    return backward_to_input(model, z1, dz2).reshape(image.shape)


def loss_value(model: BuiltinModel, image: Image, loss_spec) -> float:
    """Evaluate the loss itself (used by attacks and the finite-difference oracle)."""
    z = logits(model, image)
    if isinstance(loss_spec, CrossEntropyLoss):
        p = softmax(z)
        return float(-np.log(max(p[loss_spec.label], 1e-300)))
    if isinstance(loss_spec, MarginLoss):
        return margin_loss_value(z, loss_spec.target, loss_spec.confidence)
    raise ParameterError(f"unsupported loss spec {loss_spec!r}")


@dataclass(frozen=True)
class TrainConfig:
    hidden_size: int = 256
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 0.01
    seed: int = 42


def train_builtin(dataset: LabeledDataset, config: TrainConfig) -> BuiltinModel:
    """Mini-batch SGD on softmax cross-entropy, fully deterministic given the seed."""
    if len(dataset) == 0:
        raise ParameterError("cannot train on an empty dataset")
    if config.hidden_size < 1 or config.epochs < 0 or config.batch_size < 1:
        raise ParameterError("hidden_size and batch_size must be >= 1, epochs >= 0")

    x = dataset.stack().reshape(len(dataset), -1)
    y = np.asarray(dataset.labels, dtype=np.intp)
    n, d = x.shape
    h, classes = config.hidden_size, dataset.num_classes

    rng = np.random.Generator(np.random.PCG64(config.seed))
    lim1, lim2 = 1.0 / np.sqrt(d), 1.0 / np.sqrt(h)
    w1 = rng.uniform(-lim1, lim1, size=(d, h))
    w2 = rng.uniform(-lim2, lim2, size=(h, classes))
    b1 = np.zeros(h)
    b2 = np.zeros(classes)

    onehot = np.zeros((n, classes))
    onehot[np.arange(n), y] = 1.0

    lr = config.learning_rate
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = x[idx], onehot[idx]
            z1 = xb @ w1 + b1
            a1 = np.maximum(z1, 0.0)
            z2 = a1 @ w2 + b2
            p = softmax(z2)
            loss = -np.mean(np.log(np.maximum(p[np.arange(len(idx)), y[idx]], 1e-300)))
            if not np.isfinite(loss):
                raise TrainingDivergenceError(
                    f"non-finite training loss at epoch {epoch}"
                )
            dz2 = (p - yb) / len(idx)
            dw2 = a1.T @ dz2
            db2 = dz2.sum(axis=0)
            da1 = dz2 @ w2.T
            dz1 = da1 * (z1 > 0.0)
            dw1 = xb.T @ dz1
            db1 = dz1.sum(axis=0)
            w1 -= lr * dw1
            b1 -= lr * db1
            w2 -= lr * dw2
            b2 -= lr * db2

    height, width, channels = dataset.images[0].shape
    return BuiltinModel(
        input_shape=(height, width, channels),
        hidden_size=h,
        num_classes=classes,
        w1=w1,
        b1=b1,
        w2=w2,
        b2=b2,
    )


def save_model(model: BuiltinModel, path) -> None:
    """Binary model file: magic RFF1, five LE u32 dims, tensors as LE float64."""
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        h, w, c = model.input_shape
        fh.write(struct.pack("<5I", h, w, c, model.hidden_size, model.num_classes))
        for tensor in (model.w1, model.b1, model.w2, model.b2):
            fh.write(np.ascontiguousarray(tensor, dtype="<f8").tobytes())


def load_model(path) -> BuiltinModel:
    """Read a model file written by save_model; weights come back bit-identical."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MODEL_MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}, expected {MODEL_MAGIC!r}")
    if len(raw) < 24:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    height, width, channels, hidden, classes = struct.unpack("<5I", raw[4:24])
    d = height * width * channels
    counts = [d * hidden, hidden, hidden * classes, classes]
    expected = 24 + 8 * sum(counts)
    if len(raw) != expected:
        raise FormatError(
            f"{path}: expected {expected} bytes for declared dimensions, got {len(raw)}"
        )
    offset = 24
    tensors = []
    for count in counts:
        tensors.append(np.frombuffer(raw, dtype="<f8", count=count, offset=offset))
        offset += 8 * count
    return BuiltinModel(
        input_shape=(height, width, channels),
        hidden_size=hidden,
        num_classes=classes,
        w1=tensors[0].reshape(d, hidden),
        b1=tensors[1],
        w2=tensors[2].reshape(hidden, classes),
        b2=tensors[3],
    )


def encode_request(request_id: int, image: Image) -> str:
    """Serialize one wire-protocol request line (no trailing newline)."""
    pixels = np.ascontiguousarray(image.pixels, dtype="<f4").tobytes()
    return json.dumps(
        {
            "id": request_id,
            "height": image.height,
            "width": image.width,
            "channels": image.channels,
            "pixels": base64.b64encode(pixels).decode("ascii"),
        }
    )


class ExternalPredictor:
    """Client for a child-process classifier speaking the JSON line protocol.

    One request is in flight at a time (calls are serialized with a lock).
    A malformed response kills the child and surfaces a TransportError; an
    explicit ``{"id", "error"}`` object from the child raises TransportError
    but leaves the process running.
    """

    def __init__(self, command: list[str]):
        if not command:
            raise ParameterError("external predictor command must be non-empty")
        try:
            self._proc = subprocess.Popen(
                command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise TransportError(f"failed to spawn {command[0]!r}: {exc}") from exc
        self._command = command
        self._lock = threading.Lock()
        self._next_id = 1
        self._stderr_thread = threading.Thread(
            target=self._drain_stderr, daemon=True
        )
        self._stderr_thread.start()

    def _drain_stderr(self):
        for line in self._proc.stderr:
            log.info("predictor[%s] stderr: %s", self._command[0], line.rstrip())

    def _fail(self, message: str) -> TransportError:
        self.close()
        return TransportError(message)

    def predict(self, image: Image) -> Prediction:
        with self._lock:
            if self._proc.poll() is not None:
                raise TransportError(
                    f"predictor process already exited with code {self._proc.returncode}"
                )
            request_id = self._next_id
            self._next_id += 1
            try:
                self._proc.stdin.write(encode_request(request_id, image) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise self._fail(f"predictor pipe closed while writing: {exc}") from exc
            line = self._proc.stdout.readline()
            if not line:
                code = self._proc.poll()
                raise self._fail(f"predictor exited (code {code}) without answering")
            try:
                response = json.loads(line)
            except json.JSONDecodeError as exc:
                raise self._fail(f"malformed predictor response: {line!r}") from exc
            if not isinstance(response, dict) or response.get("id") != request_id:
                raise self._fail(
                    f"response id {response.get('id')!r} does not match request {request_id}"
                )
            if "error" in response:
                raise TransportError(f"predictor error: {response['error']}")
            if not isinstance(response.get("label"), int):
                raise self._fail(f"response lacks an integer label: {line!r}")
            scores = response.get("scores")
            try:
                return Prediction(
                    label=response["label"],
                    scores=None if scores is None else np.asarray(scores, dtype=np.float64),
                )
            except ParameterError as exc:
                raise self._fail(f"protocol violation: {exc}") from exc

    def close(self):
        if self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def external_predictor(command: list[str]) -> ExternalPredictor:
    """Spawn `command` and return a predictor handle speaking the wire protocol."""
    return ExternalPredictor(command)

"""Adversarial example generation (one-step sign attack, L2 margin attack)
and seeded natural-noise generators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, ParameterError
from .imaging import Image
from .predictor import (
    BuiltinModel,
    CrossEntropyLoss,
    MarginLoss,
    backward_to_input,
    forward_flat,
    input_gradient,
    loss_logit_gradient,
    margin_loss_value,
)


@dataclass(frozen=True)
class AttackResult:
    adversarial: Image
    success: bool
    original_label: int
    adversarial_label: int
    perturbation_l2: float
    iterations_used: int


def fgsm(model: BuiltinModel, image: Image, true_label: int, epsilon: float) -> AttackResult:
    """One gradient-sign step of size epsilon, clamped back into [0,1].

    Untargeted: success means the prediction moved off the clean prediction.
    """
    if epsilon < 0.0:
        raise ParameterError(f"epsilon must be >= 0, got {epsilon}")
    grad = input_gradient(model, image, CrossEntropyLoss(true_label))
    perturbed = np.clip(image.pixels + epsilon * np.sign(grad), 0.0, 1.0)
    adversarial = Image.from_array(perturbed)
    original_label = model.predict(image).label
    adversarial_label = model.predict(adversarial).label
    return AttackResult(
        adversarial=adversarial,
        success=adversarial_label != original_label,
        original_label=original_label,
        adversarial_label=adversarial_label,
        perturbation_l2=float(np.linalg.norm(perturbed - image.pixels)),
        iterations_used=1,
    )


def cw_l2(
    model: BuiltinModel,
    image: Image,
    target: int,
    c: float = 1.0,
    k: float = 0.0,
    steps: int = 1000,
    step_size: float = 0.01,
    objective_trace: list | None = None,
) -> AttackResult:
    """Targeted L2 attack: descend ||delta||^2 + c * margin_loss(x + delta).

    Iterates are projected into [0,1] by clamping. The step size is halved
    whenever a step would increase the objective (the step is rejected), up
    to 10 halvings; after that the search stops. Among iterates classified as
    the target, the one with the smallest perturbation norm is returned.

    `objective_trace`, when given, collects the objective at every accepted
    iterate (a non-increasing sequence by construction).
    """
    if c <= 0.0:
        raise ParameterError(f"c must be positive, got {c}")
    if k < 0.0:
        raise ParameterError(f"k must be >= 0, got {k}")
    if steps < 1 or step_size <= 0.0:
        raise ParameterError("steps must be >= 1 and step_size positive")
    if not 0 <= target < model.num_classes:
        raise ParameterError(f"target {target} outside [0, {model.num_classes})")

    loss_spec = MarginLoss(target=target, confidence=k)
    x0 = image.pixels.reshape(-1)
    shape = image.shape
    delta = np.zeros_like(x0)
    z1, z2 = forward_flat(model, x0)
    objective = c * margin_loss_value(z2, target, k)

    best_delta = None
    best_l2 = np.inf
    halvings = 0
    iterations = 0

    for step in range(steps):
        iterations += 1
        dz2 = loss_logit_gradient(model, z2, loss_spec)
        grad = 2.0 * delta + c * backward_to_input(model, z1, dz2)
        candidate = np.clip(x0 + delta - step_size * grad, 0.0, 1.0)
        new_delta = candidate - x0
        cand_z1, cand_z2 = forward_flat(model, candidate)
        new_objective = float(new_delta @ new_delta) + c * margin_loss_value(
            cand_z2, target, k
        )
        if not np.isfinite(new_objective):
            raise DivergenceError("non-finite attack objective", step=step)
        if new_objective > objective:
            step_size *= 0.5
            halvings += 1
            if halvings > 10:
                break
            continue
        delta, objective, z1, z2 = new_delta, new_objective, cand_z1, cand_z2
        if objective_trace is not None:
            objective_trace.append(objective)
        if int(np.argmax(z2)) == target:
            l2 = float(np.linalg.norm(delta))
            if l2 < best_l2:
                best_l2 = l2
                best_delta = delta.copy()

    final_delta = best_delta if best_delta is not None else delta
    adversarial = Image.from_array(np.clip(x0 + final_delta, 0.0, 1.0).reshape(shape))
    original_label = model.predict(image).label
    adversarial_label = model.predict(adversarial).label
    return AttackResult(
        adversarial=adversarial,
        success=adversarial_label == target,
        original_label=original_label,
        adversarial_label=adversarial_label,
        perturbation_l2=float(np.linalg.norm(adversarial.pixels - image.pixels)),
        iterations_used=iterations,
    )


def gaussian_noise(image: Image, sigma: float, seed: int) -> Image:
    """Additive zero-mean Gaussian noise, clamped to the pixel range."""
    if sigma < 0.0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    rng = np.random.Generator(np.random.PCG64(seed))
    noisy = image.pixels + rng.normal(0.0, sigma, size=image.pixels.shape)
    return Image.from_array(np.clip(noisy, 0.0, 1.0))


def poisson_noise(image: Image, scale: float, seed: int) -> Image:
    """Shot noise: resample each value from Poisson(pixel * scale) / scale."""
    if scale <= 0.0:
        raise ParameterError(f"scale must be positive, got {scale}")
    rng = np.random.Generator(np.random.PCG64(seed))
    noisy = rng.poisson(image.pixels * scale).astype(np.float64) / scale
    return Image.from_array(np.clip(noisy, 0.0, 1.0))


def salt_pepper(image: Image, p: float, seed: int) -> Image:
    """Replace each value, with probability p, by 0 or 1 (equal odds)."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    rng = np.random.Generator(np.random.PCG64(seed))
    hit = rng.random(image.pixels.shape) < p
    extremes = rng.integers(0, 2, size=image.pixels.shape).astype(np.float64)
    return Image.from_array(np.where(hit, extremes, image.pixels))

import numpy as np
import pytest

from recess.detector import ADVERSARIAL, BENIGN, Verdict, batch_detect, detect
from recess.errors import ContractError, TransportError
from recess.filters import FilterSpec, feature_filter
from recess.imaging import Image
from recess.predictor import Prediction

from helpers import THRESHOLD_CROSSER, MeanThresholdPredictor, natural_image


class FixedPredictor:
    def __init__(self, label):
        self.label = label

    def predict(self, image):
        return Prediction(label=self.label)


class FailingPredictor:
    def __init__(self, fail_at):
        self.fail_at = fail_at
        self.calls = 0

    def predict(self, image):
        self.calls += 1
        if self.calls >= self.fail_at:
            raise TransportError("child died")
        return Prediction(label=0)


def rng_for(seed):
    return np.random.Generator(np.random.PCG64(seed))


def high_frequency_mean_shift_image():
    img = Image.from_array(THRESHOLD_CROSSER[:, :, None])
    filtered = feature_filter(img, FilterSpec(0.5))
    assert img.pixels.mean() > 0.5
    assert filtered.pixels.mean() <= 0.5, "construction must cross the threshold"
    return img


class TestVerdict:
    def test_invariant_enforced(self):
        with pytest.raises(ContractError):
            Verdict(decision=BENIGN, original_label=0, filtered_label=1, alpha=0.9)
        with pytest.raises(ContractError):
            Verdict(decision=ADVERSARIAL, original_label=2, filtered_label=2, alpha=0.9)


class TestDetect:
    def test_constant_image_is_benign(self):
        img = Image.from_array(np.full((8, 8, 3), 0.7))
        verdict = detect(img, MeanThresholdPredictor(), FilterSpec(0.4))
        assert verdict.decision == BENIGN
        assert verdict.original_label == verdict.filtered_label == 1

    def test_filter_induced_label_flip_is_adversarial(self):
        img = high_frequency_mean_shift_image()
        verdict = detect(img, MeanThresholdPredictor(), FilterSpec(0.5))
        assert verdict.decision == ADVERSARIAL
        assert verdict.original_label == 1
        assert verdict.filtered_label == 0

    def test_alpha_one_always_benign(self):
        rng = rng_for(50)
        predictor = MeanThresholdPredictor()
        for _ in range(10):
            img = natural_image(rng, 12, 12, 3)
            assert detect(img, predictor, FilterSpec(1.0)).decision == BENIGN

    def test_exactly_two_predictor_calls(self):
        predictor = MeanThresholdPredictor()
        img = Image.from_array(np.full((6, 6, 1), 0.2))
        detect(img, predictor, FilterSpec(0.5))
        assert predictor.calls == 2

    def test_score_free_predictor_suffices(self):
        # the label-only contract: scores are never read
        img = Image.from_array(np.full((6, 6, 1), 0.9))
        verdict = detect(img, FixedPredictor(4), FilterSpec(0.5))
        assert verdict.decision == BENIGN

    def test_transport_error_propagates(self):
        img = Image.from_array(np.full((6, 6, 1), 0.9))
        with pytest.raises(TransportError):
            detect(img, FailingPredictor(fail_at=2), FilterSpec(0.5))

    def test_deterministic(self):
        img = high_frequency_mean_shift_image()
        v1 = detect(img, MeanThresholdPredictor(), FilterSpec(0.5))
        v2 = detect(img, MeanThresholdPredictor(), FilterSpec(0.5))
        assert v1 == v2


class TestBatchDetect:
    def test_empty_batch(self):
        assert batch_detect([], MeanThresholdPredictor(), FilterSpec(0.5)) == []

    def test_constant_batch_all_benign(self):
        imgs = [Image.from_array(np.full((6, 6, 1), 0.3)) for _ in range(5)]
        verdicts = batch_detect(imgs, MeanThresholdPredictor(), FilterSpec(0.5))
        assert len(verdicts) == 5
        assert all(v.decision == BENIGN for v in verdicts)

    def test_permutation_equivariance(self):
        rng = rng_for(51)
        images = [natural_image(rng, 8, 8, 1) for _ in range(6)]
        images.append(high_frequency_mean_shift_image())
        predictor = MeanThresholdPredictor()
        spec = FilterSpec(0.5)
        baseline = batch_detect(images, predictor, spec)
        perm = [3, 6, 0, 5, 2, 4, 1]
        permuted = batch_detect([images[i] for i in perm], predictor, spec)
        assert permuted == [baseline[i] for i in perm]

    def test_abort_carries_index_context(self):
        imgs = [Image.from_array(np.full((6, 6, 1), 0.3)) for _ in range(4)]
        with pytest.raises(TransportError, match="image 1"):
            batch_detect(imgs, FailingPredictor(fail_at=4), FilterSpec(0.5))

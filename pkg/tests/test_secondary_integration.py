"""Conformance of the reference adapter (frontend/) against the primary client.

These tests are skipped when node or the built adapter is absent; the rest of
the suite never depends on them.
"""

import base64
import json
import shutil
import struct
import subprocess
from pathlib import Path

import numpy as np
import pytest

from recess.errors import TransportError
from recess.imaging import Image
from recess.predictor import BuiltinModel, external_predictor, save_model

ADAPTER = Path(__file__).parent.parent / "frontend" / "dist" / "adapter.js"

pytestmark = pytest.mark.skipif(
    shutil.which("node") is None or not ADAPTER.exists(),
    reason="node or built adapter not available",
)


def adapter_cmd(*args):
    return ["node", str(ADAPTER), *args]


def small_image(value=0.5):
    return Image.from_array(np.full((2, 2, 1), value))


class TestFixtureMode:
    def test_hundred_sequential_requests(self):
        with external_predictor(adapter_cmd("--fixture-label", "3")) as handle:
            for _ in range(100):
                result = handle.predict(small_image())
                assert result.label == 3
                assert int(np.argmax(result.scores)) == 3

    def test_thousand_request_soak_with_injected_malformed_line(self):
        proc = subprocess.Popen(
            adapter_cmd("--fixture-label", "0"),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
        )
        try:
            pixels = base64.b64encode(struct.pack("<4f", 0.1, 0.2, 0.3, 0.4)).decode()
            total = 1000
            for request_id in range(1, total + 1):
                line = json.dumps({
                    "id": request_id, "height": 2, "width": 2, "channels": 1,
                    "pixels": pixels,
                })
                proc.stdin.write(line + "\n")
                if request_id == 500:
                    proc.stdin.write("definitely not json\n")
            proc.stdin.flush()
            replies = [json.loads(proc.stdout.readline()) for _ in range(total + 1)]
        finally:
            proc.kill()
            proc.wait()
        errors = [r for r in replies if "error" in r]
        assert len(errors) == 1
        answered = [r["id"] for r in replies if "error" not in r]
        assert answered == list(range(1, total + 1))


class TestModelMode:
    def tiny_model(self, tmp_path):
        model = BuiltinModel(
            input_shape=(1, 1, 1),
            hidden_size=2,
            num_classes=2,
            w1=np.array([[1.0, -1.0]]),
            b1=np.zeros(2),
            w2=np.array([[2.0, 0.0], [-2.0, 0.0]]).T,
            b2=np.array([0.5, 0.0]),
        )
        path = tmp_path / "model.rff"
        save_model(model, path)
        return model, path

    def test_agrees_with_builtin_forward_pass(self, tmp_path):
        rng = np.random.Generator(np.random.PCG64(70))
        model = BuiltinModel(
            input_shape=(4, 4, 3),
            hidden_size=8,
            num_classes=5,
            w1=rng.normal(size=(48, 8)),
            b1=rng.normal(size=8),
            w2=rng.normal(size=(8, 5)),
            b2=rng.normal(size=5),
        )
        path = tmp_path / "model.rff"
        save_model(model, path)
        with external_predictor(adapter_cmd("--model", str(path))) as handle:
            for _ in range(10):
                image = Image.from_array(rng.random((4, 4, 3)))
                # wire pixels are float32; labels agree because margins dwarf
                # the cast error
                assert handle.predict(image).label == model.predict(image).label

    def test_client_surfaces_shape_error_without_crashing(self, tmp_path):
        _, path = self.tiny_model(tmp_path)
        with external_predictor(adapter_cmd("--model", str(path))) as handle:
            with pytest.raises(TransportError, match="does not match model input"):
                handle.predict(small_image())  # 2x2x1 against a 1x1x1 model
            # the child is still alive and the handle still usable
            result = handle.predict(Image.from_array(np.full((1, 1, 1), 0.5)))
            assert result.label == 0

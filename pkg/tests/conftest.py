import json

import numpy as np
import pytest

from semshield import SynthConfig, generate, load_bundled_kb, load_kb


def tiny_kb_doc(n_classes: int = 4) -> dict:
    """2 groups sized (2, 3), k = 5; up to 6 distinct classes."""
    combos = [("round", "red"), ("round", "blue"), ("square", "red"),
              ("square", "green"), ("round", "green"), ("square", "blue")]
    return {
        "groups": [
            {"name": "shape", "values": ["round", "square"]},
            {"name": "color", "values": ["red", "blue", "green"]},
        ],
        "classes": [
            {"label": f"{shape} {color}",
             "attributes": {"shape": shape, "color": color}}
            for shape, color in combos[:n_classes]
        ],
    }


@pytest.fixture
def tiny_kb():
    return load_kb(json.dumps(tiny_kb_doc()))


@pytest.fixture(scope="session")
def bundled_kb():
    return load_bundled_kb()


@pytest.fixture(scope="session")
def default_synth(bundled_kb):
    """The default-config synthetic run shared by expensive tests."""
    return generate(SynthConfig(kb=bundled_kb))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)


def make_psd(n: int, rng, lo: float = 5e-4, hi: float = 3.0) -> np.ndarray:
    """Random symmetric PSD matrix with eigenvalues in [lo, hi]."""
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    vals = rng.uniform(lo, hi, n)
    return q @ np.diag(vals) @ q.T

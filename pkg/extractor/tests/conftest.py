import json
from collections import OrderedDict

import numpy as np
import pytest
import torch
from torch import nn

N_IMAGES = 30
N_CLASSES = 3
FEATURE_DIM = 16


def build_toy_model(with_dropout: bool = True) -> nn.Module:
    torch.manual_seed(1234)
    layers = OrderedDict()
    layers["conv"] = nn.Conv2d(3, 4, kernel_size=3)
    layers["relu1"] = nn.ReLU()
    layers["pool"] = nn.AdaptiveAvgPool2d((3, 3))
    layers["flatten"] = nn.Flatten()
    if with_dropout:
        layers["drop1"] = nn.Dropout(0.4)
    layers["hidden"] = nn.Linear(4 * 3 * 3, FEATURE_DIM)
    layers["relu2"] = nn.ReLU()
    if with_dropout:
        layers["drop2"] = nn.Dropout(0.4)
    layers["head"] = nn.Linear(FEATURE_DIM, N_CLASSES)
    return nn.Sequential(layers)


@pytest.fixture(scope="session")
def toy_dataset_path(tmp_path_factory):
    rng = np.random.default_rng(5)
    images = rng.normal(size=(N_IMAGES, 3, 8, 8)).astype(np.float32)
    labels = rng.integers(0, N_CLASSES, N_IMAGES).astype(np.int64)
    path = tmp_path_factory.mktemp("data") / "toy.npz"
    np.savez(path, images=images, labels=labels)
    return str(path)


@pytest.fixture(scope="session")
def toy_model_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "toy_model.pt"
    torch.save(build_toy_model(), str(path))
    return str(path)


@pytest.fixture(scope="session")
def plain_model_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "no_dropout.pt"
    torch.save(build_toy_model(with_dropout=False), str(path))
    return str(path)


@pytest.fixture(scope="session")
def toy_kb_path(tmp_path_factory):
    doc = {
        "groups": [
            {"name": "shape", "values": ["round", "square"]},
            {"name": "color", "values": ["red", "blue", "green"]},
        ],
        "classes": [
            {"label": "round red",
             "attributes": {"shape": "round", "color": "red"}},
            {"label": "round blue",
             "attributes": {"shape": "round", "color": "blue"}},
            {"label": "square green",
             "attributes": {"shape": "square", "color": "green"}},
        ],
    }
    path = tmp_path_factory.mktemp("kb") / "toy_kb.json"
    path.write_text(json.dumps(doc))
    return str(path)

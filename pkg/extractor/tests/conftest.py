import numpy as np
import pytest
import torch
from PIL import Image
from torchvision import transforms

from anacp_extractor import Backbone, register_backbone

STUB_DIM = 12


def _stub_factory() -> Backbone:
    torch.manual_seed(1234)  # same weights on every load: jobs stay reproducible
    model = torch.nn.Sequential(
        torch.nn.Flatten(),
        torch.nn.Linear(3 * 16 * 16, STUB_DIM),
        torch.nn.Tanh(),
    )
    preprocess = transforms.Compose([transforms.Resize((16, 16)), transforms.ToTensor()])
    return Backbone("stub", model, preprocess, STUB_DIM, "resize(16,16)+to_tensor")


register_backbone("stub", _stub_factory)


@pytest.fixture(scope="session")
def image_root(tmp_path_factory):
    """Two-class image folder: 5 train + 3 test PNGs per class."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(0)
    for split, count in (("train", 5), ("test", 3)):
        for cls in ("apples", "bolts"):
            d = root / split / cls
            d.mkdir(parents=True)
            for i in range(count):
                pixels = rng.integers(0, 256, size=(20, 20, 3), dtype=np.uint8)
                Image.fromarray(pixels).save(d / f"img_{i}.png")
    return root

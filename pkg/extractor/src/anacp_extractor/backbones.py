"""Backbone registry: frozen feature extractors with canonical preprocessing.

Built-in ids cover the self-supervised ViT family published on torch hub
(``dino_v2_vits14`` / ``vitb14`` / ``vitl14``) and any torchvision
classification model via ``torchvision:<name>`` (its classifier head is
dropped). Other checkpoints plug in through `register_backbone`, which is also
how tests install a tiny deterministic stub.

Every backbone carries a `preprocess_desc` string; its hash lands in the
output manifest so mixed-preprocessing feature files can be refused
downstream.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable

import torch
from torchvision import transforms

from .errors import DownloadFailure, UnknownBackbone

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass
class Backbone:
    """A frozen model in eval mode plus the transform images must go through."""

    name: str
    model: torch.nn.Module
    preprocess: Callable
    embed_dim: int
    preprocess_desc: str

    @property
    def preprocess_hash(self) -> str:
        return hashlib.sha256(self.preprocess_desc.encode()).hexdigest()[:16]

    @torch.no_grad()
    def embed(self, batch: torch.Tensor) -> torch.Tensor:
        return self.model(batch)


_REGISTRY: dict[str, Callable[[], Backbone]] = {}


def register_backbone(name: str, factory: Callable[[], Backbone]) -> None:
    _REGISTRY[name] = factory


def available_backbones() -> list[str]:
    return sorted(_REGISTRY) + ["torchvision:<model>"]


def load_backbone(name: str) -> Backbone:
    if name in _REGISTRY:
        backbone = _REGISTRY[name]()
    elif name.startswith("torchvision:"):
        backbone = _torchvision_backbone(name.split(":", 1)[1])
    else:
        raise UnknownBackbone(f"unknown backbone {name!r}; known: {available_backbones()}")
    backbone.model.eval()
    for p in backbone.model.parameters():
        p.requires_grad_(False)
    return backbone


def _standard_preprocess(resize: int, crop: int):
    desc = f"resize({resize})+center_crop({crop})+normalize{IMAGENET_MEAN}{IMAGENET_STD}"
    tf = transforms.Compose([
        transforms.Resize(resize, interpolation=transforms.InterpolationMode.BICUBIC),
        transforms.CenterCrop(crop),
        transforms.ToTensor(),
        transforms.Normalize(IMAGENET_MEAN, IMAGENET_STD),
    ])
    return tf, desc


def _dino_v2_factory(variant: str) -> Callable[[], Backbone]:
    def factory() -> Backbone:
        try:
            model = torch.hub.load("facebookresearch/dinov2", variant)
        except Exception as exc:
            raise DownloadFailure(
                f"could not fetch {variant} from torch hub ({exc}); "
                "check network access or pre-populate TORCH_HOME"
            ) from exc
        preprocess, desc = _standard_preprocess(256, 224)
        return Backbone(variant, model, preprocess, int(model.embed_dim), desc)

    return factory


def _torchvision_backbone(model_name: str) -> Backbone:
    import torchvision.models as tvm

    try:
        weights = tvm.get_model_weights(model_name).DEFAULT
        model = tvm.get_model(model_name, weights=weights)
    except Exception as exc:
        raise DownloadFailure(
            f"could not build torchvision model {model_name!r} ({exc})"
        ) from exc
    # drop the classification head; embed with the penultimate representation
    if hasattr(model, "fc"):
        dim = model.fc.in_features
        model.fc = torch.nn.Identity()
    elif hasattr(model, "classifier"):
        head = model.classifier
        dim = (head[-1] if isinstance(head, torch.nn.Sequential) else head).in_features
        model.classifier = torch.nn.Identity()
    elif hasattr(model, "heads"):
        dim = model.heads.head.in_features
        model.heads = torch.nn.Identity()
    else:
        raise UnknownBackbone(f"no known head layout on torchvision model {model_name!r}")
    preprocess, desc = _standard_preprocess(256, 224)
    return Backbone(f"torchvision:{model_name}", model, preprocess, int(dim), desc)


for _variant in ("dinov2_vits14", "dinov2_vitb14", "dinov2_vitl14"):
    register_backbone(f"dino_v2_{_variant.removeprefix('dinov2_')}", _dino_v2_factory(_variant))

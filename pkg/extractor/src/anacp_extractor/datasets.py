"""Image sources the extractor can walk: class folders and torchvision sets."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from PIL import Image

from .errors import DownloadFailure, UnknownDataset

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}


@dataclass
class ImageSource:
    """Ordered (loader, label) pairs plus the class vocabulary."""

    name: str
    samples: list  # (callable -> PIL.Image, int label)
    class_names: list[str]

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)


def _folder_source(root: Path, split: str) -> ImageSource:
    base = root / split if (root / split).is_dir() else root
    class_dirs = sorted(p for p in base.iterdir() if p.is_dir())
    if not class_dirs:
        raise UnknownDataset(f"{base} has no class subdirectories")
    samples = []
    names = []
    for label, class_dir in enumerate(class_dirs):
        names.append(class_dir.name)
        for img_path in sorted(class_dir.iterdir()):
            if img_path.suffix.lower() in _IMAGE_SUFFIXES:
                samples.append((_file_loader(img_path), label))
    if not samples:
        raise UnknownDataset(f"{base} contains no images")
    return ImageSource(f"folder:{root.name}/{split}", samples, names)


def _file_loader(path: Path) -> Callable:
    return lambda: Image.open(path).convert("RGB")


def _cifar100_source(split: str, root: str = "~/.cache/anacp-extractor") -> ImageSource:
    from torchvision.datasets import CIFAR100

    try:
        ds = CIFAR100(Path(root).expanduser(), train=(split == "train"), download=True)
    except Exception as exc:
        raise DownloadFailure(f"CIFAR-100 download failed ({exc})") from exc
    samples = [
        ((lambda img=ds.data[i]: Image.fromarray(img)), int(ds.targets[i]))
        for i in range(len(ds))
    ]
    return ImageSource(f"cifar100/{split}", samples, list(ds.classes))


def resolve_dataset(dataset_id: str, split: str) -> ImageSource:
    """`folder:<root>` walks class subdirectories; `cifar100` uses torchvision."""
    if dataset_id.startswith("folder:"):
        return _folder_source(Path(dataset_id.split(":", 1)[1]).expanduser(), split)
    if dataset_id == "cifar100":
        return _cifar100_source(split)
    raise UnknownDataset(f"unknown dataset id {dataset_id!r}; use 'folder:<root>' or 'cifar100'")

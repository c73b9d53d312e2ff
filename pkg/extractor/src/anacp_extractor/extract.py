"""Batch inference: images -> embeddings -> feature file + manifest."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .backbones import load_backbone
from .datasets import resolve_dataset
from .errors import ClassCountMismatch, ExtractorError
from .format import write_feature_file


@dataclass(frozen=True)
class ExtractionJob:
    """One extraction run: which backbone, which dataset/split, where to write."""

    backbone: str
    dataset: str
    split: str = "train"
    batch_size: int = 64
    device: str = "cpu"
    output: str = "features.feat"
    expected_classes: int | None = None


def extract(job: ExtractionJob) -> Path:
    """Embed every image once (eval mode, no augmentation) and write the file.

    Deterministic for a fixed job: the dataset walk is sorted and the model
    runs frozen under no_grad, so re-running produces identical bytes.
    """
    backbone = load_backbone(job.backbone)
    source = resolve_dataset(job.dataset, job.split)
    if job.expected_classes is not None and source.num_classes != job.expected_classes:
        raise ClassCountMismatch(
            f"{source.name} declares {source.num_classes} classes, "
            f"job expected {job.expected_classes}"
        )

    device = torch.device(job.device)
    model = backbone.model.to(device)
    features, labels = [], []
    for start in range(0, len(source), job.batch_size):
        chunk = source.samples[start : start + job.batch_size]
        batch = torch.stack([backbone.preprocess(loader()) for loader, _ in chunk]).to(device)
        try:
            with torch.no_grad():
                out = model(batch)
        except (torch.cuda.OutOfMemoryError, RuntimeError) as exc:
            if "out of memory" in str(exc).lower():
                raise ExtractorError(
                    f"ran out of memory on a batch of {job.batch_size}; "
                    "retry with a smaller --batch-size"
                ) from exc
            raise
        features.append(out.detach().cpu().numpy().astype(np.float32))
        labels.extend(label for _, label in chunk)

    feats = np.concatenate(features)
    if feats.shape[1] != backbone.embed_dim:
        raise ExtractorError(
            f"backbone {backbone.name} produced {feats.shape[1]}-dim embeddings, "
            f"registry says {backbone.embed_dim}"
        )
    manifest = {
        "class_names": source.class_names,
        "source_model": backbone.name,
        "dataset_name": source.name,
        "preprocess_hash": backbone.preprocess_hash,
        "preprocess": backbone.preprocess_desc,
    }
    return write_feature_file(
        job.output, feats, np.asarray(labels), source.num_classes, manifest
    )

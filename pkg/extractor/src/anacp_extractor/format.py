"""Writer for the anacp feature-file format.

Layout: magic ``FEAT``, version u8, u32 N, u32 d, u32 C, then N*d little-endian
float32 features row-major, then N u32 labels. A JSON sidecar at
``<path>.json`` records class names, provenance, and a checksum of the binary
payload. Files written here load through `anacp.load_feature_file` unchanged.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"FEAT"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sBIII")


def write_feature_file(
    path,
    features: np.ndarray,
    labels: np.ndarray,
    num_classes: int,
    manifest: dict | None = None,
) -> Path:
    features = np.ascontiguousarray(features, dtype="<f4")
    labels = np.ascontiguousarray(labels, dtype="<u4")
    if features.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise ValueError(f"features {features.shape} and labels {labels.shape} disagree")
    if labels.size and int(labels.max()) >= num_classes:
        raise ValueError(f"label {labels.max()} >= declared class count {num_classes}")

    n, d = features.shape
    payload = bytearray()
    payload += _HEADER.pack(MAGIC, FORMAT_VERSION, n, d, num_classes)
    payload += features.tobytes(order="C")
    payload += labels.tobytes()

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)

    meta = dict(manifest or {})
    meta["extraction_checksum"] = hashlib.sha256(bytes(payload)).hexdigest()
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return path

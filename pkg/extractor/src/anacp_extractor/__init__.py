"""Offline embedding extraction into the anacp feature-file format."""

from .backbones import Backbone, available_backbones, load_backbone, register_backbone
from .datasets import ImageSource, resolve_dataset
from .errors import (
    ClassCountMismatch,
    DownloadFailure,
    ExtractorError,
    UnknownBackbone,
    UnknownDataset,
)
from .extract import ExtractionJob, extract
from .format import write_feature_file

__version__ = "0.1.0"

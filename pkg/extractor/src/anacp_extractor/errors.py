"""Extractor error types."""


class ExtractorError(Exception):
    """Base class for extraction failures."""


class DownloadFailure(ExtractorError):
    """Backbone weights or dataset payload could not be retrieved."""


class ClassCountMismatch(ExtractorError):
    """Dataset class count differs from what the job declared."""


class UnknownBackbone(ExtractorError):
    """Backbone id not present in the registry."""


class UnknownDataset(ExtractorError):
    """Dataset id could not be resolved."""

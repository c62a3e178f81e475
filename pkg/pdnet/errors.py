#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#


class PdNetError(Exception):
    """All errors thrown explicitly by this package will be PdNetError's."""
    pass


class ConfigError(PdNetError, ValueError):
    pass


# diffmath

class ShapeMismatchError(PdNetError, ValueError):
    pass


class NonFiniteError(PdNetError, ValueError):
    """raised when a forward or backward pass produces NaN or Inf."""
    pass


class NotScalarError(PdNetError, ValueError):
    pass


class UnboundInputError(PdNetError, KeyError):
    pass


class GraphStateError(PdNetError, RuntimeError):
    """raised when backward is requested before evaluate."""
    pass


# embeddings

class EmbeddingFormatError(PdNetError, ValueError):
    pass


class UnknownTokenError(PdNetError, KeyError):
    pass


# clustering

class ClusteringError(PdNetError, ValueError):
    pass


class InvalidSchemeError(PdNetError, ValueError):
    pass


class MissingClusterError(PdNetError, KeyError):
    pass


class UnknownVerbError(PdNetError, KeyError):
    pass


class ManifestFormatError(PdNetError, ValueError):
    pass


# features

class InvalidBoxError(PdNetError, ValueError):
    pass


class FeatureLengthError(PdNetError, ValueError):
    pass


class DatasetValidationError(PdNetError, ValueError):
    """raised while loading a dataset; names the offending file and record index."""
    def __init__(self, message, record_index=None, path=None):
        prefix = ""
        if path is not None:
            prefix += "%s: " % path
        if record_index is not None:
            prefix += "record %d: " % record_index
        super(DatasetValidationError, self).__init__(prefix + message)
        self.record_index = record_index
        self.path = path


class SyntheticConfigError(PdNetError, ValueError):
    pass


# network

class InvalidCategoryError(PdNetError, ValueError):
    """raised when a (verb, object) pair is not a valid HOI category for the model."""
    pass


class SlotOutOfRangeError(PdNetError, IndexError):
    pass


class ScoreRangeError(PdNetError, ValueError):
    pass


class ModelConfigError(PdNetError, ValueError):
    pass


# training

class EmptyDatasetError(PdNetError, ValueError):
    pass


class CheckpointFormatError(PdNetError, ValueError):
    pass


class CheckpointMismatchError(PdNetError, ValueError):
    pass


# evaluation

class MatchingError(PdNetError, RuntimeError):
    """raised when matching reports more true positives than ground truths."""
    pass


class UnknownCategoryError(PdNetError, KeyError):
    pass

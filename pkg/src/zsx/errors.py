"""Typed errors raised across the engine."""


class EngineError(Exception):
    """Base class for all engine errors."""


class EmptyInputError(EngineError):
    """Input text or ranking has no usable content."""


class EmbeddingFormatError(EngineError):
    """Vector table file violates the embedding text format."""


class OutOfVocabularyError(EngineError):
    """No token of the input is present in the vector table."""


class DegenerateVectorError(EngineError):
    """Cosine similarity requested against a zero-norm vector."""


class DimensionMismatchError(EngineError):
    """Vector or matrix dimensions do not line up."""


class CatalogFormatError(EngineError):
    """Catalog file or construction violates the catalog contract."""


class EmptyCatalogError(EngineError):
    """Catalog or ranking source has no usable labels/descriptors."""


class EmptyIntersectionError(EngineError):
    """Source and target tables share no vocabulary."""


class SingularSystemError(EngineError):
    """Normal equations are singular; rerun with a positive ridge term."""


class ProviderError(EngineError):
    """A score provider failed to produce a score."""


class MissingScoreError(ProviderError):
    """Precomputed score file lacks a required (text_id, descriptor) pair."""


class ScoreRangeError(ProviderError):
    """A probability score fell outside [0, 1]."""


class RemoteProviderError(ProviderError):
    """Remote scoring endpoint unreachable or returned a malformed response."""


class TreeFormatError(EngineError):
    """Bracketed tree text is malformed."""


class LeafMismatchError(EngineError):
    """Tree leaves disagree with the tokenized text."""


class DatasetFormatError(EngineError):
    """Dataset file violates the row format."""


class SingleClassError(EngineError):
    """Binary training data contains only one class."""


class ConfigError(EngineError):
    """Run configuration is inconsistent or incomplete."""

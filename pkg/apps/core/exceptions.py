"""
Domain errors shared by every app.

Validation failures use Django's ``ValidationError``; the classes here cover
the numerical and file-format failures that have no Django counterpart.
"""
import numpy as np


class ClemsError(Exception):
    """Base class for all domain errors."""


class DimensionError(ClemsError, ValueError):
    """Shapes or lengths of the operands disagree."""


class CostDomainError(ClemsError, ValueError):
    """A cost or isotonic transform received a value outside its domain."""


class DecompositionError(ClemsError, np.linalg.LinAlgError):
    """A matrix could not be (pseudo-)inverted as required."""


class NotEmbeddableError(ClemsError, LookupError):
    """A label vector is not a member of the candidate set."""


class ArffParseError(ClemsError, ValueError):
    """Malformed ARFF input; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message)


class UnsupportedAttributeError(ClemsError, ValueError):
    """ARFF attribute type outside the numeric / binary-nominal subset."""


class SchemaError(ClemsError, ValueError):
    """Label header and data file disagree."""


class ModelFormatError(ClemsError, ValueError):
    """A model file is truncated, corrupt or structurally wrong."""


class IncompatibleModelError(ModelFormatError):
    """A model file was written by an unsupported format version."""


class UnreadableInputError(ClemsError, ValueError):
    """An input path exists but cannot be read as the expected kind of file."""

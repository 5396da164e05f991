"""Graphlet counting and sampling via colorful treelet tables."""

from .errors import (
    CapacityError,
    MismatchError,
    MotifkitError,
    NoCopiesError,
    ParseError,
)

__version__ = "0.1.0"

__all__ = [
    "MotifkitError",
    "ParseError",
    "CapacityError",
    "MismatchError",
    "NoCopiesError",
    "__version__",
]

"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes; library callers catch them
directly.
"""


class MotifkitError(Exception):
    """Base class for everything raised on purpose."""


class ParseError(MotifkitError):
    """Malformed graph input; message carries the line number."""


class CapacityError(MotifkitError):
    """A count or encoding exceeded its representable range."""


class MismatchError(MotifkitError):
    """Tables and graph (or their manifest) disagree."""


class NoCopiesError(MotifkitError):
    """A sampling pool is empty: the structure does not occur."""

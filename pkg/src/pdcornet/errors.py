"""Exception types shared across the package."""


class PdcornetError(Exception):
    """Base class for all package errors."""


class InvalidInputError(PdcornetError, ValueError):
    """Non-finite values, mismatched lengths or malformed arguments."""


class SampleTooSmallError(PdcornetError, ValueError):
    """The sample has fewer observations than the operation requires."""


class DegenerateInputError(PdcornetError, ValueError):
    """Constant variables or a rank-deficient design."""


class ContractError(PdcornetError, TypeError):
    """An argument of the wrong kind was passed (e.g. an already centered matrix)."""

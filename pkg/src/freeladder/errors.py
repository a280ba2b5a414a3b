"""Exception hierarchy shared by every layer of the package."""


class LadderError(Exception):
    """Base class for all errors raised by freeladder."""


class ParameterError(LadderError, ValueError):
    """An argument violates a documented precondition."""


class CalibrationError(LadderError):
    """A calibration target cannot be reached.

    ``achievable`` holds the (low, high) revenue range in cents that the
    search bracket could produce, when known.
    """

    def __init__(self, message, achievable=None):
        super().__init__(message)
        self.achievable = achievable


class ResourceLimitError(LadderError):
    """A computation would exceed a configured size cap."""


class NotFoundError(LadderError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "not found"


class OwnershipError(LadderError):
    """A gift was attempted by someone who does not own the good."""


class PersistenceError(LadderError):
    """The ledger log could not be written; the operation was not applied."""


class CorruptLedgerError(LadderError):
    def __init__(self, line_no, reason):
        super().__init__(f"ledger line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class ConflictError(LadderError):
    """The request clashes with existing state, e.g. a duplicate good id."""

"""Exception types raised across the pipeline.

Every anticipated failure maps to one of these so callers (and the CLI,
which turns them into exit code 1) can distinguish domain errors from bugs.
"""


class EmgAffectError(Exception):
    """Base class for all errors raised by this package."""


# --- signal ---------------------------------------------------------------

class DurationTooShort(EmgAffectError):
    """Recording shorter than the rest windows it should be trimmed by."""


class TooFewSamples(EmgAffectError):
    """Not enough samples for the requested segmentation or feature."""


# --- features -------------------------------------------------------------

class EmptySlot(EmgAffectError):
    """Feature requested on an empty slot."""


class RaggedRows(EmgAffectError):
    """Feature rows of differing lengths cannot form a matrix."""


# --- svm ------------------------------------------------------------------

class EmptyMatrix(EmgAffectError):
    """Operation requires at least one row / one nonzero count."""


class SingleClass(EmgAffectError):
    """Training data contains only one of the two labels."""


class NonFinite(EmgAffectError):
    """Feature values contain NaN or infinity."""


class DimensionMismatch(EmgAffectError):
    """Row length does not match the model's expected input width."""


class TooFewRows(EmgAffectError):
    """Not enough rows for the requested split or fold count."""


# --- selection ------------------------------------------------------------

class KOutOfRange(EmgAffectError):
    """Requested subset size is outside the granularity's bounds."""


class BudgetExceeded(EmgAffectError):
    """Exhaustive search requested but the combination count exceeds the budget."""


# --- eval -----------------------------------------------------------------

class UnknownUser(EmgAffectError):
    """Hold-out user id not present in the matrix."""


class TooFewUsers(EmgAffectError):
    """Leave-one-user-out needs at least two users."""


class IterationFailure(EmgAffectError):
    """An evaluation iteration failed; carries the iteration index."""

    def __init__(self, iteration: int, cause: Exception):
        super().__init__(f"iteration {iteration} failed: {cause}")
        self.iteration = iteration
        self.cause = cause


# --- dataio ---------------------------------------------------------------

class ParseError(EmgAffectError):
    """Malformed file content."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ValueOutOfRange(ParseError):
    """Sample value outside the sensor's 0..999 range."""


class NonMonotonicTimestamp(ParseError):
    """Body timestamps must strictly increase."""


class ManifestMismatch(EmgAffectError):
    """Recording header contradicts its manifest entry."""


class VersionMismatch(EmgAffectError):
    """File was written by an unknown format version."""


class IoError(EmgAffectError):
    """Filesystem failure (e.g. refusing to overwrite an existing file)."""


# --- service --------------------------------------------------------------

class SourceUnavailable(EmgAffectError):
    """Sample source could not be opened."""


class SourceLost(EmgAffectError):
    """Sample source died mid-session."""


class InvalidPhase(EmgAffectError):
    """Operation not legal in the session's current phase."""


class InvalidSessionConfig(EmgAffectError):
    """Session parameters are inconsistent (e.g. fixed script missing)."""


class FrameError(EmgAffectError):
    """Serial line did not parse as an in-range sample."""

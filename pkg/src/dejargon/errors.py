"""Exception types shared across the package."""


class DejargonError(Exception):
    """Base class for package errors."""


class PreconditionError(DejargonError, ValueError):
    """An operation was called with inputs that violate its contract."""


class FeedParseError(DejargonError):
    """An upstream Atom feed could not be parsed.

    Carries enough context (page / entry) to locate the offending record.
    """

    def __init__(self, message: str, entry: str | None = None):
        super().__init__(message if entry is None else f"{message} (entry: {entry})")
        self.entry = entry


class RetryableTransportError(DejargonError):
    """A transport failure that persisted past the retry budget."""


class GatewayError(DejargonError):
    """A non-retryable error from the model provider."""


class ReplayMissError(DejargonError):
    """A replay-mode request had no recorded fixture.

    Never silently falls back to a live call; the request hash is kept so
    the missing fixture can be recorded.
    """

    def __init__(self, request_hash: str, summary: str = ""):
        msg = f"no recorded response for request {request_hash}"
        if summary:
            msg += f" ({summary})"
        super().__init__(msg)
        self.request_hash = request_hash


class ReplyParseError(DejargonError):
    """A model reply could not be parsed; the raw reply is kept for audit."""

    def __init__(self, message: str, raw_reply: str):
        super().__init__(message)
        self.raw_reply = raw_reply


class DegenerateSampleError(DejargonError, ValueError):
    """A statistical sample became empty after filtering."""


class StoreError(DejargonError):
    """A persisted store is missing, inconsistent, or corrupt."""

"""Shared exception types."""


class DuplexError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DuplexError):
    """Invalid session configuration or configuration file."""


class UnknownComponentError(DuplexError):
    """A latency span was recorded under an unknown component name."""


class MissingSpanError(DuplexError):
    """A latency bound was requested with component spans absent."""

    def __init__(self, missing):
        self.missing = tuple(missing)
        super().__init__(f"missing latency spans: {', '.join(self.missing)}")


class BackendError(DuplexError):
    """A model backend failed; session state is left unchanged."""


class GapError(DuplexError):
    """An audio chunk was pushed that is not contiguous with the buffer."""


class TimelineError(DuplexError):
    """Words or units were supplied out of time order."""


class SnapshotMismatchError(DuplexError):
    """A speculative session no longer matches the conversation context."""


class ScheduleError(DuplexError):
    """A chunk schedule would move backwards (margin exceeds chunk span)."""


class ScenarioError(DuplexError):
    """A scenario document failed validation."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ProtocolError(DuplexError):
    """A wire message violated the protocol; the session must close."""


class WireDecodeError(DuplexError):
    """A single wire line could not be decoded; the connection survives."""


class JudgeParseError(DuplexError):
    """A judge reply did not contain three parseable ratings."""

    def __init__(self, message, raw_text):
        self.raw_text = raw_text
        super().__init__(f"{message}\n--- raw reply ---\n{raw_text}")

"""Transport error types."""


class BusError(RuntimeError):
    """Transport-level failure."""


class BusClosed(BusError):
    """The connection or broker is no longer usable."""


class BusTimeout(BusError):
    """A request saw no reply within its deadline."""

    def __init__(self, subject: str, timeout_ms: int) -> None:
        super().__init__(f"no reply on {subject!r} within {timeout_ms} ms")
        self.subject = subject
        self.timeout_ms = timeout_ms

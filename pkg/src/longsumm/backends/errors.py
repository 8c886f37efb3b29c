"""Backend error hierarchy."""

from __future__ import annotations


class BackendError(Exception):
    """Base class for model-service failures."""


class UnknownModelError(BackendError):
    """The service does not know the requested model."""

    def __init__(self, model_id: str, available: list[str] | None = None):
        self.model_id = model_id
        self.available = sorted(available or [])
        detail = f" (available: {', '.join(self.available)})" if self.available else ""
        super().__init__(f"unknown model {model_id!r}{detail}")


class TransportError(BackendError):
    """The service could not be reached after retries."""


class ProtocolError(BackendError):
    """The service replied outside the wire contract."""


class ContextOverflowError(BackendError):
    """A generation request would not fit the model's context window."""

"""Domain errors shared across the platform.

The HTTP layer maps these onto status codes; library callers catch them
directly.
"""

from __future__ import annotations


class EmistudyError(Exception):
    """Base class for all domain errors."""


class ConflictError(EmistudyError):
    """Resource already exists in an incompatible state."""


class NotFoundError(EmistudyError):
    """Referenced entity does not exist."""


class ForbiddenError(EmistudyError):
    """Caller is authenticated but not allowed (gating, expired window)."""


class UnauthorizedError(EmistudyError):
    """Missing, invalid or expired credentials."""


class PreconditionError(EmistudyError):
    """Operation invoked on an entity in the wrong state."""


class ContentCorruptedError(EmistudyError):
    """Stored bytes no longer match their recorded digest."""


class UnprocessableError(EmistudyError):
    """Payload is well-formed but violates domain rules.

    ``findings`` carries per-field diagnostics (question ids, messages).
    """

    def __init__(self, message: str, findings: list[dict] | None = None):
        super().__init__(message)
        self.findings = findings or []

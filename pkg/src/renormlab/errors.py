"""Error type shared by all modules.

Every failure mode documented in the public API carries a short machine
readable ``code`` (e.g. ``"domain-escape"``, ``"newton-failed"``) plus a human
readable message and optional context payload.
"""

from __future__ import annotations

from typing import Any


class RenormError(Exception):
    """Raised when an operation fails in one of its documented modes."""

    def __init__(self, code: str, message: str = "", **context: Any):
        self.code = code
        self.context = context
        text = code if not message else f"{code}: {message}"
        if context:
            items = ", ".join(f"{k}={v!r}" for k, v in context.items())
            text = f"{text} [{items}]"
        super().__init__(text)
